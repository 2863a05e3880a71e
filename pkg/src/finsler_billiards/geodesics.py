"""Geodesic segments, the induced distance, and boundary intersection.

Flat metrics (Euclidean, Riemannian, Minkowski) connect points by straight
chords.  The planar constant magnetic field connects them by the minor arc of
a Larmor circle of radius 1/|B|, traversed clockwise for B > 0; its length is
the Euclidean arc length plus the line integral of the drift one-form.  A
general Euler-Lagrange integrator is provided for validation; boundary-value
solving for arbitrary curved metrics is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ChordTooLongForField,
    CoincidentPoints,
    GrazingDeparture,
    InvalidParameters,
    NoConvergence,
    NoExit,
    NotOnIndicatrix,
    SingularMass,
)
from .metrics import FinslerMetric, MagneticMetric
from .tables import BoundaryPoint, ConvexTable, conormal, orthonormal_complement
from .vectors import as_components

__all__ = ["GeodesicSegment", "connect", "integrate_geodesic", "intersect_forward"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)

_TMIN_REL = 1e-6
_EXIT_TOL_REL = 1e-12
_HORIZON_RADII = 8.0


@dataclass(frozen=True)
class GeodesicSegment:
    """Oriented geodesic between two points.

    ``start_tangent`` and ``end_tangent`` are indicatrix points (unit Finsler
    length) at the respective endpoints; ``length`` is the Finsler length, the
    value of the induced distance from start to end.
    """

    start: np.ndarray
    end: np.ndarray
    start_tangent: np.ndarray
    end_tangent: np.ndarray
    length: float
    kind: str


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _larmor_circle(metric: MagneticMetric, p: np.ndarray, direction: np.ndarray):
    """Center and signed angular rate of the flight circle through p.

    ``direction`` is the Euclidean-unit velocity at p.  Returns (center,
    radius, omega) with theta(s) = theta0 + omega * s / radius.
    """
    R = metric.larmor_radius
    if metric.B > 0:
        return p - R * _rot90(direction), R, -1.0
    return p + R * _rot90(direction), R, 1.0


def _arc_tangent(theta: float, omega: float) -> np.ndarray:
    if omega < 0:
        return np.array([np.sin(theta), -np.cos(theta)])
    return np.array([-np.sin(theta), np.cos(theta)])


def _drift_integral(metric: MagneticMetric, center: np.ndarray, radius: float,
                    theta0: float, omega: float, arclen: float) -> float:
    """Line integral of the drift one-form along the arc (32-node quadrature)."""
    s = 0.5 * arclen * (_GL_NODES + 1.0)
    w = 0.5 * arclen * _GL_WEIGHTS
    theta = theta0 + omega * s / radius
    px = center[0] + radius * np.cos(theta)
    py = center[1] + radius * np.sin(theta)
    if omega < 0:
        tx, ty = np.sin(theta), -np.cos(theta)
    else:
        tx, ty = -np.sin(theta), np.cos(theta)
    # alpha(x, y) = (B/2) (-y, x)
    integrand = 0.5 * metric.B * (-py * tx + px * ty)
    return float(w @ integrand)


def _connect_magnetic(metric: MagneticMetric, x: np.ndarray, y: np.ndarray) -> GeodesicSegment:
    R = metric.larmor_radius
    chord = y - x
    dist = float(np.linalg.norm(chord))
    h = 0.5 * dist
    if h > R * (1.0 + 1e-12):
        raise ChordTooLongForField(
            f"|y - x| = {dist} exceeds the Larmor diameter {2.0 * R}")
    chat = chord / dist
    q = np.sqrt(max(R * R - h * h, 0.0))
    mid = 0.5 * (x + y)
    # center side fixed by the turning direction so the traversed arc is minor
    if metric.B > 0:
        center = mid - q * _rot90(chat)
        omega = -1.0
    else:
        center = mid + q * _rot90(chat)
        omega = 1.0
    theta_x = float(np.arctan2(x[1] - center[1], x[0] - center[0]))
    theta_y = float(np.arctan2(y[1] - center[1], y[0] - center[0]))
    sweep = (omega * (theta_y - theta_x)) % (2.0 * np.pi)
    if sweep > np.pi * (1.0 + 1e-9):
        raise NoConvergence("magnetic arc construction produced a major arc")
    arclen = R * sweep
    length = arclen + _drift_integral(metric, center, R, theta_x, omega, arclen)
    t_start = _arc_tangent(theta_x, omega)
    t_end = _arc_tangent(theta_x + omega * sweep, omega)
    return GeodesicSegment(
        start=x, end=y,
        start_tangent=metric._unit(x, t_start),
        end_tangent=metric._unit(y, t_end),
        length=length, kind="arc",
    )


def connect(metric: FinslerMetric, x, y) -> GeodesicSegment:
    """Shortest oriented geodesic from x to y and its Finsler length.

    The distance is generally asymmetric: connect(m, x, y).length and
    connect(m, y, x).length differ for irreversible metrics.
    """
    xa = as_components(x, metric.dim)
    ya = as_components(y, metric.dim)
    scale = 1.0 + max(float(np.linalg.norm(xa)), float(np.linalg.norm(ya)))
    if float(np.linalg.norm(ya - xa)) <= 1e-12 * scale:
        raise CoincidentPoints("geodesic endpoints coincide")
    if metric.flat_geodesics:
        u = metric._unit(xa, ya - xa)
        return GeodesicSegment(
            start=xa, end=ya, start_tangent=u, end_tangent=u,
            length=metric._L(xa, ya - xa), kind="chord",
        )
    if isinstance(metric, MagneticMetric):
        return _connect_magnetic(metric, xa, ya)
    raise InvalidParameters(
        "connect supports straight-chord metrics and the planar magnetic field")


def _acceleration(metric: FinslerMetric, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Geodesic acceleration from the Euler-Lagrange equations.

    The velocity Hessian of a 1-homogeneous Lagrangian annihilates v, so the
    linear system is solved on the hyperplane where the fiber derivative
    vanishes and the acceleration is taken there (which preserves unit
    Finsler speed).
    """
    M = metric._Lvv(x, v)
    rhs = metric._Ly(x, v) - metric._Lvy(x, v) @ v
    D = metric._DL(x, v)
    W = orthonormal_complement(D)
    A = W @ M @ W.T
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        raise SingularMass("restricted velocity Hessian is singular") from None
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMass("restricted velocity Hessian is numerically singular")
    z = np.linalg.solve(A, W @ rhs)
    return W.T @ z


def integrate_geodesic(metric: FinslerMetric, x, v, t_max: float, dt: float):
    """Integrate the geodesic flow from (x, v) with classical RK4.

    ``v`` must be an indicatrix point; the parameter is Finsler arc length.
    Returns (positions, velocities) arrays of shape (n_steps + 1, d).
    """
    xa = np.array(as_components(x, metric.dim))
    va = np.array(as_components(v, metric.dim))
    if dt <= 0:
        raise InvalidParameters("dt must be positive")
    if abs(metric._L(xa, va) - 1.0) > 1e-9:
        raise NotOnIndicatrix("initial velocity must have unit Finsler length")
    n = max(int(round(t_max / dt)), 1)

    def rhs(state):
        xs, vs = state
        return vs, _acceleration(metric, xs, vs)

    pos = np.empty((n + 1, xa.size))
    vel = np.empty((n + 1, xa.size))
    pos[0], vel[0] = xa, va
    for i in range(n):
        x0, v0 = pos[i], vel[i]
        k1x, k1v = rhs((x0, v0))
        k2x, k2v = rhs((x0 + 0.5 * dt * k1x, v0 + 0.5 * dt * k1v))
        k3x, k3v = rhs((x0 + 0.5 * dt * k2x, v0 + 0.5 * dt * k2v))
        k4x, k4v = rhs((x0 + dt * k3x, v0 + dt * k3v))
        pos[i + 1] = x0 + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        vel[i + 1] = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return pos, vel


class _FlightPath:
    """Unit-Euclidean-speed flight from a point in a given direction."""

    def __init__(self, metric: FinslerMetric, start: np.ndarray, direction: np.ndarray):
        self.metric = metric
        self.start = start
        d = direction / np.linalg.norm(direction)
        self.direction = d
        if isinstance(metric, MagneticMetric):
            self.center, self.radius, self.omega = _larmor_circle(metric, start, d)
            self.theta0 = float(np.arctan2(start[1] - self.center[1],
                                           start[0] - self.center[0]))
        elif not metric.flat_geodesics:
            raise InvalidParameters("flight requires straight chords or a magnetic field")

    def point(self, s: float) -> np.ndarray:
        if self.metric.flat_geodesics:
            return self.start + s * self.direction
        theta = self.theta0 + self.omega * s / self.radius
        return self.center + self.radius * np.array([np.cos(theta), np.sin(theta)])

    def tangent(self, s: float) -> np.ndarray:
        if self.metric.flat_geodesics:
            return self.direction
        theta = self.theta0 + self.omega * s / self.radius
        return _arc_tangent(theta, self.omega)


def _march_to_boundary(metric: FinslerMetric, table: ConvexTable,
                       start: np.ndarray, direction: np.ndarray):
    """First boundary crossing of the forward flight; returns (point, tangent).

    Steps along the flight path, brackets the sign change of phi, bisects and
    polishes with Newton to |phi| <= 1e-12 * scale.
    """
    path = _FlightPath(metric, start, direction)
    scale = table.scale
    s_min = _TMIN_REL * scale
    step = scale / 64.0
    horizon = _HORIZON_RADII * scale

    f_prev = table.phi(path.point(s_min))
    if f_prev >= 0.0:
        raise GrazingDeparture("flight starts on or outside the boundary")
    s_prev = s_min
    bracket = None
    s = s_prev
    while s < horizon:
        # half-step probe guards against an arc exiting and re-entering
        for s_next in (s + 0.5 * step, s + step):
            f_next = table.phi(path.point(s_next))
            if f_next >= 0.0:
                bracket = (s_prev, s_next)
                break
            s_prev, f_prev = s_next, f_next
        if bracket is not None:
            break
        s += step
    if bracket is None:
        raise NoExit("no boundary crossing within the search horizon")

    lo, hi = bracket
    for _ in range(200):
        if hi - lo <= 1e-14 * scale:
            break
        mid = 0.5 * (lo + hi)
        if table.phi(path.point(mid)) < 0.0:
            lo = mid
        else:
            hi = mid
    s_hit = 0.5 * (lo + hi)
    # Newton polish on phi along the path
    for _ in range(8):
        p = path.point(s_hit)
        f = table.phi(p)
        if abs(f) <= _EXIT_TOL_REL * scale:
            break
        slope = float(table.grad(p) @ path.tangent(s_hit))
        if slope == 0.0:
            break
        s_new = s_hit - f / slope
        if not (lo - step <= s_new <= hi + step):
            break
        s_hit = s_new
    p = path.point(s_hit)
    if abs(table.phi(p)) > 1e-10 * scale:
        raise NoConvergence("boundary crossing did not polish to tolerance")
    return p, path.tangent(s_hit)


def intersect_forward(metric: FinslerMetric, table: ConvexTable,
                      y: BoundaryPoint, v) -> BoundaryPoint:
    """First boundary point hit by the geodesic leaving y with direction v.

    ``v`` must point strictly inward: its pairing with the conormal must be
    below -1e-8.
    """
    va = as_components(v, table.dim)
    p = conormal(table, y, metric)
    pairing = float(p.components @ va)
    if abs(pairing) < 1e-8:
        raise GrazingDeparture("departure direction is tangent to the boundary")
    if pairing > 0:
        raise InvalidParameters("departure direction points outward")
    hit, _ = _march_to_boundary(metric, table, y.position.components, va)
    return table.boundary_point(hit)
