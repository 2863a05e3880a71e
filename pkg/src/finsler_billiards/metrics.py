"""Finsler metrics: Lagrangians, Legendre transforms and dual norms.

A metric is a positively 1-homogeneous Lagrangian ``L(x, v)`` that is positive
off the zero section.  The unit sphere ``{L(x, .) = 1}`` of a tangent space is
the indicatrix; the Legendre transform sends an indicatrix point ``u`` to the
unique covector that annihilates the indicatrix tangent plane at ``u`` and
pairs to 1 with ``u``.  The dual norm of a covector is its supremum over the
indicatrix, and the dual transform returns the maximizer.

Built-ins: Euclidean, constant Riemannian, constant-drift Minkowski, and a
planar constant magnetic field.  The two drift metrics have ellipsoidal
indicatrices, so their duals are evaluated in closed form; user-defined
Lagrangians fall back to finite-difference fiber derivatives and a projected
Newton maximization over a sphere chart.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    FieldTooStrong,
    InvalidParameters,
    NoConvergence,
    NotOnFiguratrix,
    NotOnIndicatrix,
    ZeroVector,
)
from .tables import orthonormal_complement
from .vectors import Covector, Vector, as_components

__all__ = [
    "FinslerMetric",
    "EuclideanMetric",
    "RiemannianMetric",
    "MinkowskiMetric",
    "MagneticMetric",
    "LagrangianMetric",
    "magnetic_indicatrix_params",
    "metric_from_spec",
    "validate_field_strength",
]

INDICATRIX_TOL = 1e-9
FIGURATRIX_TOL = 1e-9
_FD_H_REL = 1e-6


def magnetic_indicatrix_params(t: float) -> tuple[float, float, float]:
    """Ellipse parameters of the unit sphere of ``|v| + t*v_1``.

    For drift strength ``0 <= t < 1`` the indicatrix is the ellipse
    ``((v1 + c)/a)^2 + (v2/b)^2 = 1`` with

        a = 1/(1 - t^2),  b = 1/sqrt(1 - t^2),  c = t/(1 - t^2),

    so ``c^2 = a^2 - b^2`` exactly and the origin is a focus.
    """
    t = float(t)
    if t < 0.0:
        raise InvalidParameters("drift strength must be nonnegative")
    if t >= 1.0:
        raise FieldTooStrong(f"drift strength {t} >= 1 gives a nonpositive Lagrangian")
    one = 1.0 - t * t
    return 1.0 / one, 1.0 / np.sqrt(one), t / one


def _randers_dual_norm(alpha: np.ndarray, q: np.ndarray) -> float:
    """sup of q over the indicatrix of ``|v| + alpha.v`` (closed form)."""
    t = float(np.linalg.norm(alpha))
    if t == 0.0:
        return float(np.linalg.norm(q))
    if t >= 1.0:
        raise FieldTooStrong("drift covector has norm >= 1")
    one = 1.0 - t * t
    ahat = alpha / t
    qpar = float(q @ ahat)
    qperp2 = max(float(q @ q) - qpar * qpar, 0.0)
    return -(t / one) * qpar + np.sqrt(qpar * qpar / one**2 + qperp2 / one)


def _randers_dual_argmax(alpha: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Indicatrix point maximizing q for the metric ``|v| + alpha.v``."""
    t = float(np.linalg.norm(alpha))
    qn = float(np.linalg.norm(q))
    if qn == 0.0:
        raise InvalidParameters("cannot maximize the zero covector")
    if t == 0.0:
        return q / qn
    if t >= 1.0:
        raise FieldTooStrong("drift covector has norm >= 1")
    one = 1.0 - t * t
    ahat = alpha / t
    a2 = 1.0 / one**2
    b2 = 1.0 / one
    qpar = float(q @ ahat)
    qperp = q - qpar * ahat
    scaled = a2 * qpar * ahat + b2 * qperp
    denom = np.sqrt(a2 * qpar * qpar + b2 * float(qperp @ qperp))
    return -(t / one) * ahat + scaled / denom


class FinslerMetric:
    """Base class; subclasses provide ``_L`` and usually analytic overrides.

    Underscore methods operate on raw ndarrays and are the numerical API used
    by the geodesic, billiard and search modules.  The public methods accept
    Vector/Covector wrappers or array-likes and return wrapped values.
    """

    flat_geodesics = False
    reversible = False
    dim: int | None = None  # None means any ambient dimension
    kind = "custom"
    # accuracy of the dual-norm/maximizer path; built-ins override with
    # closed forms good to machine precision
    dual_accuracy = 1e-7

    # -- raw numerical surface -------------------------------------------

    def _L(self, x: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def _DL(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        # central differences in v; h scales with |v| to keep relative error flat
        h = _FD_H_REL * float(np.linalg.norm(v))
        if h == 0.0:
            raise ZeroVector("fiber derivative at the zero vector")
        d = v.size
        out = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            out[i] = (self._L(x, v + e) - self._L(x, v - e)) / (2.0 * h)
        return out

    def _unit(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if float(np.linalg.norm(v)) < 1e-14:
            raise ZeroVector("cannot normalize a zero direction")
        val = self._L(x, v)
        if not val > 0.0:
            raise InvalidParameters("Lagrangian is not positive on this direction")
        return v / val

    def _dual_norm(self, x: np.ndarray, q: np.ndarray) -> float:
        return self._dual_max(x, q)[0]

    def _dual_argmax(self, x: np.ndarray, q: np.ndarray) -> np.ndarray:
        return self._dual_max(x, q)[1]

    # -- generic dual maximization (used when no closed form exists) ------

    def _dual_max(self, x: np.ndarray, q: np.ndarray) -> tuple[float, np.ndarray]:
        """Maximize q over the indicatrix by projected Newton on a sphere chart.

        The objective ``q.u / L(x, u)`` is 0-homogeneous, so the chart needs
        no renormalization.  Eight deterministic restarts guard chart seams.
        """
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise InvalidParameters("cannot maximize the zero covector")
        d = q.size

        def value(u):
            return float(q @ u) / self._L(x, u)

        starts = [q / qn]
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            starts.append(e)
            starts.append(-e)
        starts.append(np.ones(d) / np.sqrt(d))
        starts = starts[:8]

        best_u, best_f = None, -np.inf
        for u0 in starts:
            u, f = self._sphere_newton_max(x, q, u0, value)
            if f > best_f:
                best_u, best_f = u, f
        if best_u is None:
            raise NoConvergence("dual maximization failed from all restarts")
        return best_f, self._unit(x, best_u)

    def _sphere_newton_max(self, x, q, u0, value, max_iter=60):
        u = u0 / np.linalg.norm(u0)
        f = value(u)
        qn = float(np.linalg.norm(q))
        gtol = 1e-11 * max(1.0, qn)
        h = 1e-6
        for _ in range(max_iter):
            W = orthonormal_complement(u)
            k = W.shape[0]

            def chart(s):
                return value(u + s @ W)

            g = np.empty(k)
            for i in range(k):
                s = np.zeros(k)
                s[i] = h
                g[i] = (chart(s) - chart(-s)) / (2.0 * h)
            if np.linalg.norm(g) <= gtol:
                break
            H = np.empty((k, k))
            f0 = f
            for i in range(k):
                si = np.zeros(k)
                si[i] = h
                H[i, i] = (chart(si) - 2.0 * f0 + chart(-si)) / h**2
                for j in range(i + 1, k):
                    sj = np.zeros(k)
                    sj[j] = h
                    H[i, j] = H[j, i] = (
                        chart(si + sj) - chart(si - sj) - chart(-si + sj) + chart(-si - sj)
                    ) / (4.0 * h**2)
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                step = g
            if float(step @ g) <= 0.0:
                step = g
            nstep = np.linalg.norm(step)
            if nstep > 0.5:
                step *= 0.5 / nstep
            t = 1.0
            improved = False
            while t > 1e-10:
                cand = u + t * (step @ W)
                cand /= np.linalg.norm(cand)
                fc = value(cand)
                if fc > f:
                    u, f = cand, fc
                    improved = True
                    break
                t *= 0.5
            if not improved:
                break
        return u, f

    # -- second-order data for the geodesic integrator --------------------

    def _Lvv(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        h = _FD_H_REL * float(np.linalg.norm(v))
        d = v.size
        out = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            out[:, j] = (self._DL(x, v + e) - self._DL(x, v - e)) / (2.0 * h)
        return 0.5 * (out + out.T)

    def _Ly(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        h = _FD_H_REL * (1.0 + float(np.linalg.norm(x)))
        d = x.size
        out = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            out[j] = (self._L(x + e, v) - self._L(x - e, v)) / (2.0 * h)
        return out

    def _Lvy(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        h = _FD_H_REL * (1.0 + float(np.linalg.norm(x)))
        d = x.size
        out = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            out[:, j] = (self._DL(x + e, v) - self._DL(x - e, v)) / (2.0 * h)
        return out

    # -- public typed surface ---------------------------------------------

    def _coerce(self, x) -> np.ndarray:
        return as_components(x, self.dim)

    def lagrangian(self, x, v) -> float:
        """Finsler length of the tangent vector v at the point x."""
        return self._L(self._coerce(x), self._coerce(v))

    def unit_vector(self, x, v) -> Vector:
        """Rescale v to the indicatrix: v / L(x, v)."""
        return Vector(self._unit(self._coerce(x), self._coerce(v)))

    def fiber_derivative(self, x, v) -> Covector:
        """Velocity gradient of the Lagrangian at (x, v)."""
        return Covector(self._DL(self._coerce(x), self._coerce(v)))

    def legendre(self, x, u) -> Covector:
        """Legendre transform of an indicatrix point u.

        By the Euler relation the fiber derivative at u pairs to 1 with u and
        annihilates the indicatrix tangent plane, so it is the unit covector
        supporting the indicatrix at u.
        """
        xa, ua = self._coerce(x), self._coerce(u)
        if abs(self._L(xa, ua) - 1.0) > INDICATRIX_TOL:
            raise NotOnIndicatrix("legendre requires unit Finsler length")
        return Covector(self._DL(xa, ua))

    def dual_norm(self, x, q) -> float:
        """Supremum of the covector q over the indicatrix at x."""
        return self._dual_norm(self._coerce(x), self._coerce(q))

    def legendre_dual(self, x, q) -> Vector:
        """Inverse Legendre transform: the indicatrix point maximizing q."""
        xa, qa = self._coerce(x), self._coerce(q)
        if abs(self._dual_norm(xa, qa) - 1.0) > FIGURATRIX_TOL:
            raise NotOnFiguratrix("legendre_dual requires unit dual norm")
        return Vector(self._dual_argmax(xa, qa))

    def spec(self) -> dict:
        return {"kind": self.kind}


class EuclideanMetric(FinslerMetric):
    """The standard norm; every Finsler formula reduces to Euclidean geometry."""

    flat_geodesics = True
    reversible = True
    kind = "euclidean"
    dual_accuracy = 1e-14

    def __init__(self, dim: int | None = None):
        self.dim = dim

    def _L(self, x, v):
        return float(np.linalg.norm(v))

    def _DL(self, x, v):
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ZeroVector("fiber derivative at the zero vector")
        return v / n

    def _dual_norm(self, x, q):
        return float(np.linalg.norm(q))

    def _dual_argmax(self, x, q):
        n = float(np.linalg.norm(q))
        if n == 0.0:
            raise InvalidParameters("cannot maximize the zero covector")
        return q / n

    def _Lvv(self, x, v):
        n = float(np.linalg.norm(v))
        vh = v / n
        return (np.eye(v.size) - np.outer(vh, vh)) / n

    def _Ly(self, x, v):
        return np.zeros(x.size)

    def _Lvy(self, x, v):
        return np.zeros((x.size, x.size))


class RiemannianMetric(FinslerMetric):
    """Constant positive-definite metric tensor G: L = sqrt(v.G.v)."""

    flat_geodesics = True
    reversible = True
    kind = "riemannian"
    dual_accuracy = 1e-14

    def __init__(self, tensor):
        G = np.asarray(tensor, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise InvalidParameters("metric tensor must be square")
        if not np.allclose(G, G.T, atol=1e-12):
            raise InvalidParameters("metric tensor must be symmetric")
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise InvalidParameters("metric tensor must be positive definite") from None
        self.G = G
        self.Ginv = np.linalg.inv(G)
        self.dim = G.shape[0]

    def _L(self, x, v):
        return float(np.sqrt(v @ self.G @ v))

    def _DL(self, x, v):
        L = self._L(x, v)
        if L == 0.0:
            raise ZeroVector("fiber derivative at the zero vector")
        return self.G @ v / L

    def _dual_norm(self, x, q):
        return float(np.sqrt(q @ self.Ginv @ q))

    def _dual_argmax(self, x, q):
        dn = self._dual_norm(x, q)
        if dn == 0.0:
            raise InvalidParameters("cannot maximize the zero covector")
        return self.Ginv @ q / dn

    def _Lvv(self, x, v):
        L = self._L(x, v)
        Gv = self.G @ v
        return self.G / L - np.outer(Gv, Gv) / L**3

    def _Ly(self, x, v):
        return np.zeros(x.size)

    def _Lvy(self, x, v):
        return np.zeros((x.size, x.size))

    def spec(self):
        return {"kind": "riemannian", "tensor": self.G.tolist()}


class MinkowskiMetric(FinslerMetric):
    """Constant-drift norm L(v) = |v| + alpha.v with |alpha| < 1.

    Translation invariant, so geodesics are straight chords; the metric is
    irreversible whenever alpha is nonzero.  The indicatrix is an ellipsoid
    of revolution about the drift axis with a focus at the origin, which
    gives closed-form duals.
    """

    flat_geodesics = True
    kind = "minkowski"
    dual_accuracy = 1e-14

    def __init__(self, alpha):
        a = as_components(alpha)
        t = float(np.linalg.norm(a))
        if t >= 1.0:
            raise FieldTooStrong(f"|alpha| = {t} >= 1 gives a nonpositive Lagrangian")
        self.alpha = a
        self.dim = a.size
        self.reversible = t == 0.0

    def _L(self, x, v):
        return float(np.linalg.norm(v) + self.alpha @ v)

    def _DL(self, x, v):
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ZeroVector("fiber derivative at the zero vector")
        return v / n + self.alpha

    def _dual_norm(self, x, q):
        return _randers_dual_norm(self.alpha, q)

    def _dual_argmax(self, x, q):
        return _randers_dual_argmax(self.alpha, q)

    def _Lvv(self, x, v):
        n = float(np.linalg.norm(v))
        vh = v / n
        return (np.eye(v.size) - np.outer(vh, vh)) / n

    def _Ly(self, x, v):
        return np.zeros(x.size)

    def _Lvy(self, x, v):
        return np.zeros((x.size, x.size))

    def spec(self):
        return {"kind": "minkowski", "alpha": self.alpha.tolist()}


class MagneticMetric(FinslerMetric):
    """Planar constant magnetic field B as a Finsler metric.

    L(x, v) = |v| + alpha(x).v with the rotationally symmetric primitive
    alpha = (B/2)(x dy - y dx), whose exterior derivative is B dx^dy.  Unit
    speed solutions of the Euler-Lagrange equations are circles of radius
    1/|B| traversed clockwise for B > 0.
    """

    flat_geodesics = False
    kind = "magnetic"
    dim = 2
    dual_accuracy = 1e-14

    def __init__(self, B: float):
        B = float(B)
        if B == 0.0:
            raise InvalidParameters("use EuclideanMetric for a zero field")
        self.B = B
        self.reversible = False
        # d(alpha_i)/d(x_j); constant for the symmetric gauge
        self._jac = np.array([[0.0, -B / 2.0], [B / 2.0, 0.0]])

    @property
    def larmor_radius(self) -> float:
        return 1.0 / abs(self.B)

    def alpha_at(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * self.B * np.array([-x[1], x[0]])

    def _check_field(self, x):
        t = 0.5 * abs(self.B) * float(np.linalg.norm(x))
        if t >= 1.0:
            raise FieldTooStrong(f"|alpha(x)| = {t} >= 1 at |x| = {np.linalg.norm(x)}")

    def _L(self, x, v):
        self._check_field(x)
        return float(np.linalg.norm(v) + self.alpha_at(x) @ v)

    def _DL(self, x, v):
        self._check_field(x)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ZeroVector("fiber derivative at the zero vector")
        return v / n + self.alpha_at(x)

    def _dual_norm(self, x, q):
        self._check_field(x)
        return _randers_dual_norm(self.alpha_at(x), q)

    def _dual_argmax(self, x, q):
        self._check_field(x)
        return _randers_dual_argmax(self.alpha_at(x), q)

    def _Lvv(self, x, v):
        n = float(np.linalg.norm(v))
        vh = v / n
        return (np.eye(2) - np.outer(vh, vh)) / n

    def _Ly(self, x, v):
        return self._jac.T @ v

    def _Lvy(self, x, v):
        return self._jac.copy()

    def spec(self):
        return {"kind": "magnetic", "B": self.B}


class LagrangianMetric(FinslerMetric):
    """User-defined metric from a positively 1-homogeneous Lagrangian.

    Fiber derivatives come from central finite differences and duals from the
    generic projected-Newton maximization, so expect roughly 1e-8 accuracy
    rather than the machine precision of the built-ins.
    """

    def __init__(self, lagrangian, dim: int, flat_geodesics: bool = False,
                 reversible: bool = False, kind: str = "custom"):
        self._func = lagrangian
        self.dim = int(dim)
        self.flat_geodesics = bool(flat_geodesics)
        self.reversible = bool(reversible)
        self.kind = kind

    def _L(self, x, v):
        return float(self._func(x, v))


def metric_from_spec(spec: dict) -> FinslerMetric:
    """Build a metric from its JSON description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidParameters("metric spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind == "euclidean":
        return EuclideanMetric(dim=spec.get("dim"))
    if kind == "riemannian":
        if "tensor" not in spec:
            raise InvalidParameters("riemannian spec requires 'tensor'")
        return RiemannianMetric(spec["tensor"])
    if kind == "minkowski":
        if "alpha" not in spec:
            raise InvalidParameters("minkowski spec requires 'alpha'")
        return MinkowskiMetric(spec["alpha"])
    if kind == "magnetic":
        if "B" not in spec:
            raise InvalidParameters("magnetic spec requires 'B'")
        return MagneticMetric(spec["B"])
    raise InvalidParameters(f"unknown metric kind {kind!r}")


def validate_field_strength(metric: MagneticMetric, table, n_samples: int = 10_000,
                            rng: np.random.Generator | None = None) -> float:
    """Sampled sup of the drift norm over the table; raises if it reaches 1."""
    if rng is None:
        rng = np.random.default_rng(0)
    bound = 0.0
    count = 0
    while count < n_samples:
        x = rng.uniform(-table.bounding_radius, table.bounding_radius, size=table.dim)
        if table.phi(x) >= 0.0:
            continue
        count += 1
        t = 0.5 * abs(metric.B) * float(np.linalg.norm(x))
        bound = max(bound, t)
    if bound >= 1.0:
        raise FieldTooStrong(f"sampled drift norm {bound} >= 1 inside the table")
    return bound
