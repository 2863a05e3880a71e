"""The billiard reflection law and the induced boundary map.

At a boundary point the incoming indicatrix direction u (positive conormal
pairing) reflects to the outgoing direction v determined by the cotangent
relation: the difference of Legendre transforms of u and v is a positive
multiple of the unit conormal.  The outgoing covector is found by root
finding on the drop parameter t, since the dual norm of ``D_u - t p`` is a
convex function of t that equals 1 at t = 0 and at exactly one t > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GrazingRay, InvalidParameters, NoConvergence
from .geodesics import _march_to_boundary
from .metrics import FinslerMetric
from .tables import BoundaryPoint, ConvexTable, conormal
from .vectors import as_components

__all__ = ["BoundaryState", "reflect", "billiard_step", "trace"]

GRAZING_TOL = 1e-8
_BRACKET_START = 1e-6
_BRACKET_CAP = 1e3
_BISECT_WIDTH = 1e-12


@dataclass(frozen=True)
class BoundaryState:
    """A boundary point together with an indicatrix direction at it."""

    point: BoundaryPoint
    direction: np.ndarray


def reflect(metric: FinslerMetric, table: ConvexTable, y: BoundaryPoint, u) -> np.ndarray:
    """Outgoing indicatrix direction for the incoming indicatrix direction u.

    Solves dual_norm(D_u - t p) = 1 for the unique positive root t* and
    returns the indicatrix point supporting the resulting unit covector.
    Raises GrazingRay when the conormal pairing of u is below 1e-8.
    """
    ua = as_components(u, table.dim)
    x = y.position.components
    p = conormal(table, y, metric).components
    if abs(metric._L(x, ua) - 1.0) > 1e-9:
        raise InvalidParameters("incoming direction must have unit Finsler length")
    pu = float(p @ ua)
    if pu <= GRAZING_TOL:
        raise GrazingRay(f"conormal pairing {pu} is below the grazing threshold")
    Du = metric._DL(x, ua)

    def phi(t: float) -> float:
        return metric._dual_norm(x, Du - t * p) - 1.0

    # bracket the positive root: phi(0) = 0, phi'(0) < 0, phi convex
    t_hi = _BRACKET_START
    while phi(t_hi) <= 0.0:
        t_hi *= 2.0
        if t_hi > _BRACKET_CAP:
            raise NoConvergence("reflection root bracket exceeded its cap")
    t_lo = 0.0 if t_hi == _BRACKET_START else t_hi / 2.0
    while t_hi - t_lo > _BISECT_WIDTH:
        mid = 0.5 * (t_lo + t_hi)
        if phi(mid) <= 0.0:
            t_lo = mid
        else:
            t_hi = mid
    t = 0.5 * (t_lo + t_hi)
    # Newton polish; the derivative of the dual norm at q is its maximizer
    for _ in range(6):
        q = Du - t * p
        f = metric._dual_norm(x, q) - 1.0
        slope = -float(p @ metric._dual_argmax(x, q))
        if slope == 0.0:
            break
        t_new = t - f / slope
        if t_new <= 0.0:
            break
        t = t_new

    q = Du - t * p
    v = metric._dual_argmax(x, q)
    Dv = metric._DL(x, v)
    acc = metric.dual_accuracy
    if abs(metric._dual_norm(x, q) - 1.0) > max(1e-10, 10.0 * acc):
        raise NoConvergence("reflected covector is off the unit dual sphere")
    res_tol = max(1e-9, 100.0 * acc) * float(np.linalg.norm(Du))
    if np.max(np.abs(Du - Dv - t * p)) > res_tol:
        raise NoConvergence("reflection residual exceeded tolerance")
    if abs(metric._L(x, v) - 1.0) > 1e-9:
        raise NoConvergence("reflected direction is off the indicatrix")
    if float(p @ v) >= 0.0:
        raise NoConvergence("reflected direction does not point inward")
    return v


def billiard_step(metric: FinslerMetric, table: ConvexTable, state: BoundaryState) -> BoundaryState:
    """Follow the geodesic to the next boundary hit and reflect there.

    The state direction must point strictly inward; the returned state holds
    the next impact point with the post-reflection inward direction.
    """
    y = state.point
    v = as_components(state.direction, table.dim)
    hit, tangent = _march_to_boundary(metric, table, y.position.components, v)
    z = table.boundary_point(hit)
    arrival = metric._unit(z.position.components, tangent)
    outgoing = reflect(metric, table, z, arrival)
    return BoundaryState(z, outgoing)


def trace(metric: FinslerMetric, table: ConvexTable, state: BoundaryState,
          n_steps: int) -> list[BoundaryState]:
    """n_steps consecutive billiard steps; deterministic.

    Errors from a failing step are re-raised with the step index attached.
    """
    if n_steps < 1:
        raise InvalidParameters("n_steps must be >= 1")
    out = []
    current = state
    for i in range(n_steps):
        try:
            current = billiard_step(metric, table, current)
        except Exception as exc:
            raise type(exc)(f"step {i}: {exc}") from exc
        out.append(current)
    return out
