"""Implicit convex billiard tables and boundary geometry.

A table is a smooth scalar field ``phi`` with interior ``{phi < 0}`` and
boundary ``{phi = 0}``, together with its spatial gradient and a bounding
radius.  All absolute tolerances in the package are stated relative to
``bounding_radius`` (the session scale).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameters, NoConvergence
from .vectors import Covector, Vector, as_components

__all__ = [
    "BoundaryPoint",
    "ConvexTable",
    "ellipsoid_table",
    "table_from_spec",
    "project_to_boundary",
    "tangent_basis",
    "conormal",
    "orthonormal_complement",
    "random_boundary_point",
    "convexity_defect",
]

BOUNDARY_TOL_REL = 1e-10
# drive projections to the float noise floor: chart Hessians divide the
# residual position error by h^2, so a loose projection pollutes spectra
_PROJECT_TARGET_REL = 5e-16
_PROJECT_MAX_ITER = 100


@dataclass(frozen=True)
class BoundaryPoint:
    """A point on the table boundary with its Euclidean-unit outward normal."""

    position: Vector
    outward_normal: Vector

    @property
    def dim(self) -> int:
        return self.position.dim


class ConvexTable:
    """Smooth strictly convex closed hypersurface given implicitly.

    Parameters
    ----------
    phi : callable
        Scalar field on ndarray coordinates; interior is ``phi < 0``.
    grad_phi : callable
        Spatial gradient of ``phi``, returning an ndarray.
    bounding_radius : float
        Radius of a ball around the origin enclosing the boundary.
    dim : int
        Ambient dimension (>= 2).
    spec : dict, optional
        JSON-ready description of the table, kept for serialization.
    """

    def __init__(self, phi: Callable, grad_phi: Callable, bounding_radius: float,
                 dim: int, spec: dict | None = None):
        if dim < 2:
            raise InvalidParameters("table dimension must be >= 2")
        if not bounding_radius > 0:
            raise InvalidParameters("bounding_radius must be positive")
        self._phi = phi
        self._grad = grad_phi
        self.bounding_radius = float(bounding_radius)
        self.dim = int(dim)
        self.spec = dict(spec) if spec else {"kind": "custom"}
        # centroid used by planar winding numbers; built-ins are centered
        self.centroid = np.zeros(dim)

    @property
    def scale(self) -> float:
        return self.bounding_radius

    def phi(self, x) -> float:
        return float(self._phi(as_components(x, self.dim)))

    def grad(self, x) -> np.ndarray:
        g = np.asarray(self._grad(as_components(x, self.dim)), dtype=float)
        if g.shape != (self.dim,):
            raise InvalidParameters("grad_phi returned a wrong shape")
        return g

    def contains(self, x) -> bool:
        return self.phi(x) < 0.0

    def boundary_point(self, x) -> BoundaryPoint:
        """Wrap coordinates known to lie on the boundary, validating them."""
        a = as_components(x, self.dim)
        if abs(self.phi(a)) > BOUNDARY_TOL_REL * self.scale:
            raise InvalidParameters("point is not on the boundary to tolerance")
        g = self.grad(a)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            raise InvalidParameters("gradient vanishes at a boundary point")
        return BoundaryPoint(Vector(a), Vector(g / gn))


def _ellipsoid_fields(semi_axes: np.ndarray, eps: float, coeffs: np.ndarray):
    inv2 = 1.0 / semi_axes**2

    if eps == 0.0:
        def phi(x):
            return float(x @ (inv2 * x) - 1.0)

        def grad(x):
            return 2.0 * inv2 * x

        return phi, grad

    def phi(x):
        s = float(x @ x)
        cubic = float(coeffs @ x**3)
        return float(x @ (inv2 * x) - 1.0 + eps * cubic / (1.0 + s))

    def grad(x):
        s = float(x @ x)
        cubic = float(coeffs @ x**3)
        quad = 2.0 * inv2 * x
        dpert = 3.0 * coeffs * x**2 / (1.0 + s) - cubic * 2.0 * x / (1.0 + s) ** 2
        return quad + eps * dpert

    return phi, grad


def ellipsoid_table(semi_axes: Sequence[float], eps: float = 0.0,
                    coeffs: Sequence[float] | None = None) -> ConvexTable:
    """Ellipsoid ``sum x_i^2/a_i^2 = 1`` with an optional smooth cubic bump.

    The perturbation is ``eps * sum(c_i x_i^3) / (1 + |x|^2)``; with small
    ``eps`` it breaks the coordinate reflection symmetries while keeping the
    sublevel set convex.
    """
    a = np.asarray(list(semi_axes), dtype=float)
    if a.ndim != 1 or a.size < 2 or np.any(a <= 0):
        raise InvalidParameters("semi_axes must be >= 2 positive numbers")
    d = a.size
    if coeffs is None:
        c = np.ones(d)
    else:
        c = np.asarray(list(coeffs), dtype=float)
        if c.shape != (d,):
            raise InvalidParameters("perturbation coeffs must match the dimension")
    eps = float(eps)
    phi, grad = _ellipsoid_fields(a, eps, c)
    spec = {"kind": "ellipsoid", "semi_axes": [float(v) for v in a]}
    if eps != 0.0:
        spec["perturbation"] = {"eps": eps, "coeffs": [float(v) for v in c]}
    # cubic bump moves the surface by O(eps); pad the bounding radius
    radius = float(np.max(a)) * (1.0 + 2.0 * abs(eps)) + 1e-9
    return ConvexTable(phi, grad, radius, d, spec)


def table_from_spec(spec: dict) -> ConvexTable:
    """Build a table from its JSON description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidParameters("table spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind != "ellipsoid":
        raise InvalidParameters(f"unknown table kind {kind!r}")
    if "semi_axes" not in spec:
        raise InvalidParameters("ellipsoid spec requires 'semi_axes'")
    pert = spec.get("perturbation") or {}
    eps = float(pert.get("eps", 0.0))
    coeffs = pert.get("coeffs")
    return ellipsoid_table(spec["semi_axes"], eps=eps, coeffs=coeffs)


def project_to_boundary(table: ConvexTable, x) -> BoundaryPoint:
    """Retract a nearby point onto the boundary.

    Damped Newton root-following of ``phi`` along the local gradient
    direction; raises NoConvergence after 100 iterations.
    """
    a = np.array(as_components(x, table.dim))
    target = _PROJECT_TARGET_REL * table.scale
    accept = BOUNDARY_TOL_REL * table.scale
    f = table.phi(a)
    for _ in range(_PROJECT_MAX_ITER):
        if abs(f) <= target:
            break
        g = table.grad(a)
        g2 = float(g @ g)
        if g2 == 0.0:
            raise NoConvergence("gradient vanished during projection")
        step = -f / g2 * g
        t = 1.0
        improved = False
        while t > 1e-6:
            cand = a + t * step
            fc = table.phi(cand)
            if abs(fc) < abs(f):
                a, f = cand, fc
                improved = True
                break
            t *= 0.5
        if not improved:
            break  # at the float noise floor
    if abs(f) > accept:
        raise NoConvergence("projection did not reach boundary tolerance")
    return table.boundary_point(a)


def orthonormal_complement(n: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane orthogonal to n.

    Rows of the returned (d-1, d) array are built by Gram-Schmidt from the
    coordinate axes, dropping the axis with the largest |n| component.
    """
    n = np.asarray(n, dtype=float)
    d = n.size
    nhat = n / np.linalg.norm(n)
    drop = int(np.argmax(np.abs(nhat)))
    rows = []
    for j in range(d):
        if j == drop:
            continue
        w = np.zeros(d)
        w[j] = 1.0
        w -= (w @ nhat) * nhat
        for prev in rows:
            w -= (w @ prev) * prev
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            raise InvalidParameters("degenerate normal direction")
        rows.append(w / nw)
    return np.array(rows)


def tangent_basis(y: BoundaryPoint) -> list[Vector]:
    """Euclidean-orthonormal basis of the boundary tangent space at y."""
    return [Vector(row) for row in orthonormal_complement(y.outward_normal.components)]


def conormal(table: ConvexTable, y: BoundaryPoint, metric) -> Covector:
    """Unit conormal at y: annihilates the tangent space, positive outward.

    The covector is the gradient of ``phi`` rescaled to unit dual norm in the
    given metric.
    """
    g = table.grad(y.position.components)
    dn = metric.dual_norm(y.position.components, g)
    if not dn > 0:
        raise InvalidParameters("dual norm of the boundary gradient is not positive")
    return Covector(g / dn)


def random_boundary_point(table: ConvexTable, rng: np.random.Generator) -> BoundaryPoint:
    """Draw a boundary point by projecting a random radial direction."""
    for _ in range(64):
        v = rng.standard_normal(table.dim)
        nv = np.linalg.norm(v)
        if nv > 1e-9:
            return project_to_boundary(table, v / nv * table.bounding_radius * 0.5)
    raise NoConvergence("could not draw a random boundary point")


def convexity_defect(table: ConvexTable, n_pairs: int, rng: np.random.Generator) -> float:
    """Largest phi value over midpoints of random boundary-point pairs.

    Nonpositive (up to tolerance) for a convex sublevel set.
    """
    worst = -np.inf
    for _ in range(n_pairs):
        a = random_boundary_point(table, rng).position.components
        b = random_boundary_point(table, rng).position.components
        worst = max(worst, table.phi(0.5 * (a + b)))
    return float(worst)
