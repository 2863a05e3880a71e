"""Periodic billiard orbits as critical points of the cyclic length function.

An r-gon inscribed in the table boundary has cyclic length equal to the sum
of the oriented geodesic distances around it.  Its differential at vertex i
is the difference between the Legendre transforms of the arriving and the
departing unit tangents, restricted to the boundary tangent space, so r-gons
with vanishing projected gradient are exactly the r-periodic orbits.

The search minimizes the squared projected gradient with a damped Newton
iteration on boundary charts (saddle-capable: it converges to critical points
of any index), deduplicates the converged polygons modulo cyclic relabeling,
and guards against collapsed polygons with the edge-product threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .billiards import BoundaryState, billiard_step
from .errors import (
    AmbiguousCanonicalization,
    FinslerBilliardsError,
    InvalidParameters,
    ZeroWinding,
)
from .geodesics import GeodesicSegment, connect
from .metrics import FinslerMetric, MagneticMetric, validate_field_strength
from .tables import (
    BoundaryPoint,
    ConvexTable,
    orthonormal_complement,
    project_to_boundary,
    random_boundary_point,
)
from .vectors import as_components

__all__ = [
    "CyclicPolygon",
    "OrbitRecord",
    "SearchConfig",
    "make_polygon",
    "length_function",
    "grad_length",
    "in_g_epsilon",
    "canonicalize",
    "rotation_number",
    "morse_index",
    "find_critical",
    "orbit_record_dict",
]

_DISTINCT_REL = 1e-8
_MIN_EDGE_REL = 1e-4
_JAC_H_REL = 1e-6
_HESS_H_REL = 1e-4
_EIG_TOL_REL = 1e-6
_CONTINUUM_REL = 1e-4


@dataclass(frozen=True)
class CyclicPolygon:
    """An r-tuple of boundary points with cached cyclic-length data."""

    vertices: tuple[BoundaryPoint, ...]
    segments: tuple[GeodesicSegment, ...]
    r: int
    lambda_value: float
    min_edge: float
    edge_product: float

    @property
    def dim(self) -> int:
        return self.vertices[0].dim

    def positions(self) -> np.ndarray:
        return np.array([v.position.components for v in self.vertices])


@dataclass(frozen=True)
class OrbitRecord:
    """A deduplicated critical polygon with diagnostics."""

    polygon: CyclicPolygon
    residual: float
    morse_index: int | None
    degeneracy: int | None
    rotation_number: int | None
    canonical_key: tuple
    flags: tuple[str, ...]
    multiplicity: int = 1


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for find_critical; None tolerances resolve against the table scale."""

    seeds: int = 500
    rng_seed: int = 0
    grad_tol: float | None = None      # default 1e-9 * scale
    epsilon: float | None = None       # default 1e-9 * scale**r
    cluster_tol: float | None = None   # default 1e-5 * scale
    max_iter: int = 60
    jobs: int = 1

    def resolved(self, table: ConvexTable, r: int) -> dict:
        s = table.scale
        return {
            "seeds": self.seeds,
            "rng_seed": self.rng_seed,
            "grad_tol": self.grad_tol if self.grad_tol is not None else 1e-9 * s,
            "epsilon": self.epsilon if self.epsilon is not None else 1e-9 * s**r,
            "cluster_tol": self.cluster_tol if self.cluster_tol is not None else 1e-5 * s,
            "max_iter": self.max_iter,
            "jobs": self.jobs,
        }


def _points_array(table: ConvexTable, points) -> np.ndarray:
    if isinstance(points, CyclicPolygon):
        return points.positions()
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], BoundaryPoint):
        return np.array([p.position.components for p in points])
    a = np.asarray(points, dtype=float)
    if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] != table.dim:
        raise InvalidParameters("expected an (r, d) array of vertex coordinates")
    return a


def _check_distinct(pts: np.ndarray, scale: float) -> bool:
    r = pts.shape[0]
    for i in range(r):
        if np.linalg.norm(pts[(i + 1) % r] - pts[i]) <= _DISTINCT_REL * scale:
            return False
    return True


def make_polygon(metric: FinslerMetric, table: ConvexTable, points) -> CyclicPolygon:
    """Assemble a cyclic polygon from boundary vertices, validating them."""
    pts = _points_array(table, points)
    r = pts.shape[0]
    if not _check_distinct(pts, table.scale):
        raise InvalidParameters("consecutive vertices coincide within tolerance")
    verts = tuple(table.boundary_point(p) for p in pts)
    segs = tuple(connect(metric, pts[i], pts[(i + 1) % r]) for i in range(r))
    lengths = [s.length for s in segs]
    prod = 1.0
    for ell in lengths:
        prod *= ell
    return CyclicPolygon(
        vertices=verts, segments=segs, r=r,
        lambda_value=math.fsum(lengths),
        min_edge=float(min(lengths)),
        edge_product=float(prod),
    )


def _cycle_length(metric: FinslerMetric, pts: np.ndarray) -> float:
    r = pts.shape[0]
    return math.fsum(connect(metric, pts[i], pts[(i + 1) % r]).length for i in range(r))


def length_function(metric: FinslerMetric, polygon) -> float:
    """Cyclic length: sum of oriented geodesic distances around the polygon.

    Summation uses exact accumulation, so cyclic relabelings give the same
    float value.
    """
    pts = polygon.positions() if isinstance(polygon, CyclicPolygon) else np.asarray(polygon, float)
    return _cycle_length(metric, pts)


def _grad_flat(metric: FinslerMetric, table: ConvexTable, pts: np.ndarray) -> np.ndarray:
    """Projected gradient of the cyclic length, flattened to r*(d-1)."""
    r, d = pts.shape
    segs = [connect(metric, pts[i], pts[(i + 1) % r]) for i in range(r)]
    out = np.empty((r, d - 1))
    for i in range(r):
        u = segs[i - 1].end_tangent
        v = segs[i].start_tangent
        cov = metric._DL(pts[i], u) - metric._DL(pts[i], v)
        frame = orthonormal_complement(table.grad(pts[i]))
        out[i] = frame @ cov
    return out.ravel()


def grad_length(metric: FinslerMetric, table: ConvexTable, polygon) -> np.ndarray:
    """Gradient covectors of the cyclic length on each boundary tangent space.

    Row i holds the pairing of the arriving-minus-departing Legendre
    covector at vertex i with the deterministic tangent basis there.
    """
    pts = _points_array(table, polygon)
    return _grad_flat(metric, table, pts).reshape(pts.shape[0], pts.shape[1] - 1)


def in_g_epsilon(polygon: CyclicPolygon, epsilon: float) -> bool:
    """Whether the product of edge lengths clears the compactness threshold."""
    if not epsilon > 0:
        raise InvalidParameters("epsilon must be positive")
    return polygon.edge_product >= epsilon


def _zr_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max vertex deviation minimized over cyclic relabelings of b."""
    best = np.inf
    for s in range(b.shape[0]):
        best = min(best, float(np.max(np.abs(a - np.roll(b, -s, axis=0)))))
    return best


def canonicalize(polygon, cluster_tol: float) -> tuple:
    """Canonical key of the cyclic class: lexicographically minimal rotation.

    Coordinates are rounded to the cluster tolerance grid; ties between
    rotations that differ beyond tolerance are retried with finer rounding
    and reported if unresolved.
    """
    pts = polygon.positions() if isinstance(polygon, CyclicPolygon) else np.asarray(polygon, float)
    r = pts.shape[0]
    tol = float(cluster_tol)
    for _ in range(3):
        keys = []
        for s in range(r):
            rot = np.roll(pts, -s, axis=0)
            keys.append((tuple(int(k) for k in np.round(rot / tol).ravel()), s))
        keys.sort(key=lambda ks: ks[0])
        best_key, best_s = keys[0]
        ambiguous = False
        for key, s in keys[1:]:
            if key != best_key:
                break
            gap = float(np.max(np.abs(np.roll(pts, -best_s, axis=0) - np.roll(pts, -s, axis=0))))
            if gap > tol:
                ambiguous = True
                break
        if not ambiguous:
            return best_key
        tol /= 10.0
    raise AmbiguousCanonicalization("cyclic rotations tie under rounding but differ beyond it")


def rotation_number(polygon, centroid=None) -> int:
    """Winding number of the planar chord polygon, reduced to 1..r-1.

    Computed from the signed turning of the vertex directions about the
    centroid (the table centroid for built-in tables, else the vertex mean).
    """
    pts = polygon.positions() if isinstance(polygon, CyclicPolygon) else np.asarray(polygon, float)
    if pts.shape[1] != 2:
        raise InvalidParameters("rotation numbers are defined for planar tables only")
    c = np.mean(pts, axis=0) if centroid is None else as_components(centroid, 2)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    total = 0.0
    r = pts.shape[0]
    for i in range(r):
        inc = ang[(i + 1) % r] - ang[i]
        total += (inc + np.pi) % (2.0 * np.pi) - np.pi
    k = int(round(total / (2.0 * np.pi))) % r
    if k == 0:
        raise ZeroWinding("chord polygon does not wind around the centroid")
    return k


def _length_on_chart(metric, table, base, frames, s_flat):
    r, d = base.shape
    s = s_flat.reshape(r, d - 1)
    pts = np.empty_like(base)
    for i in range(r):
        pts[i] = project_to_boundary(table, base[i] + s[i] @ frames[i]).position.components
    return _cycle_length(metric, pts)


def morse_index(metric: FinslerMetric, table: ConvexTable, polygon,
                eig_tol: float | None = None) -> tuple[int, int]:
    """(index, degeneracy) of the chart Hessian of the cyclic length.

    Central second differences on boundary charts anchored at the polygon;
    eigenvalues below -eig_tol count toward the index, eigenvalues within
    eig_tol of zero are reported as degeneracy.  Valid at critical points,
    where the chart curvature terms drop out.
    """
    pts = _points_array(table, polygon)
    r, d = pts.shape
    scale = table.scale
    h = _HESS_H_REL * scale
    tol = eig_tol if eig_tol is not None else _EIG_TOL_REL * scale
    frames = [orthonormal_complement(table.grad(pts[i])) for i in range(r)]
    n = r * (d - 1)

    def lam(s):
        return _length_on_chart(metric, table, pts, frames, s)

    f0 = lam(np.zeros(n))
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (lam(ei) - 2.0 * f0 + lam(-ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            H[i, j] = H[j, i] = (
                lam(ei + ej) - lam(ei - ej) - lam(-ei + ej) + lam(-ei - ej)
            ) / (4.0 * h**2)
    eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
    index = int(np.sum(eigs < -tol))
    degeneracy = int(np.sum(np.abs(eigs) <= tol))
    return index, degeneracy


# ---------------------------------------------------------------------------
# multistart refinement


def _safe_grad(metric, table, pts, scale):
    if not _check_distinct(pts, scale):
        return None
    try:
        return _grad_flat(metric, table, pts)
    except FinslerBilliardsError:
        return None


def _retract(table, pts, frames, delta):
    r, d = pts.shape
    s = delta.reshape(r, d - 1)
    out = np.empty_like(pts)
    for i in range(r):
        out[i] = project_to_boundary(table, pts[i] + s[i] @ frames[i]).position.components
    return out


def _refine(metric, table, seed_pts, grad_tol, scale, max_iter):
    """Damped Newton on the projected-gradient system; None if it fails."""
    try:
        pts = np.array([
            project_to_boundary(table, p).position.components for p in seed_pts
        ])
    except FinslerBilliardsError:
        return None
    g = _safe_grad(metric, table, pts, scale)
    if g is None:
        return None
    gn = float(np.linalg.norm(g))
    r, d = pts.shape
    n = r * (d - 1)
    h = _JAC_H_REL * scale

    for _ in range(max_iter):
        if gn <= 1e-14 * scale:
            break
        frames = [orthonormal_complement(table.grad(pts[i])) for i in range(r)]
        J = np.empty((n, n))
        col = 0
        failed = False
        for i in range(r):
            for k in range(d - 1):
                try:
                    plus = pts.copy()
                    plus[i] = project_to_boundary(
                        table, pts[i] + h * frames[i][k]).position.components
                    minus = pts.copy()
                    minus[i] = project_to_boundary(
                        table, pts[i] - h * frames[i][k]).position.components
                except FinslerBilliardsError:
                    failed = True
                    break
                gp = _safe_grad(metric, table, plus, scale)
                gm = _safe_grad(metric, table, minus, scale)
                if gp is None or gm is None:
                    failed = True
                    break
                J[:, col] = (gp - gm) / (2.0 * h)
                col += 1
            if failed:
                break
        if failed:
            break
        delta, *_ = np.linalg.lstsq(J, -g, rcond=None)
        dn = float(np.linalg.norm(delta))
        if dn > 0.5 * scale:
            delta *= 0.5 * scale / dn
        t = 1.0
        accepted = False
        while t > 1e-12:
            try:
                cand = _retract(table, pts, frames, t * delta)
            except FinslerBilliardsError:
                t *= 0.5
                continue
            gc = _safe_grad(metric, table, cand, scale)
            if gc is not None:
                gcn = float(np.linalg.norm(gc))
                if gcn < gn:
                    pts, g, gn = cand, gc, gcn
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
    if gn <= grad_tol:
        return pts, gn
    return None


def _random_seed(table, r, rng, scale):
    for _ in range(300):
        pts = np.array([
            random_boundary_point(table, rng).position.components for _ in range(r)
        ])
        dists = [np.linalg.norm(pts[i] - pts[j]) for i in range(r) for j in range(i + 1, r)]
        if min(dists) >= 0.1 * scale:
            return pts
    return None


def _trace_seed(metric, table, r, rng, scale):
    best = None
    best_closure = np.inf
    for _ in range(5):
        try:
            y = random_boundary_point(table, rng)
            n = y.outward_normal.components
            w = rng.standard_normal(table.dim)
            if float(w @ n) > 0.0:
                w = w - 2.0 * float(w @ n) * n
            if float(w @ n) / np.linalg.norm(w) > -0.05:
                continue
            v = metric._unit(y.position.components, w)
            state = BoundaryState(y, v)
            pts = [y.position.components]
            for _ in range(r):
                state = billiard_step(metric, table, state)
                pts.append(state.point.position.components)
        except FinslerBilliardsError:
            continue
        candidate = np.array(pts[:r])
        closure = float(np.linalg.norm(pts[r] - pts[0]))
        if _check_distinct(candidate, scale) and closure < best_closure:
            best, best_closure = candidate, closure
            if closure < 0.2 * scale:
                break
    return best


def _divisors(r: int) -> list[int]:
    return [k for k in range(1, r) if r % k == 0]


def find_critical(metric: FinslerMetric, table: ConvexTable, r: int,
                  config: SearchConfig | None = None) -> list[OrbitRecord]:
    """Multistart search for r-periodic orbits; deterministic given the seed.

    Seeds alternate between random spaced r-tuples and near-closing billiard
    traces.  Converged polygons are filtered by the edge-product and minimum
    edge guards, deduplicated modulo cyclic relabeling, merged across the
    continuum radius (merged or Hessian-degenerate classes are flagged
    ``continuum-suspect``), and returned sorted by cyclic length.
    """
    if r < 2:
        raise InvalidParameters("period r must be >= 2")
    cfg = config or SearchConfig()
    params = cfg.resolved(table, r)
    scale = table.scale
    if isinstance(metric, MagneticMetric):
        validate_field_strength(metric, table, rng=np.random.default_rng(params["rng_seed"]))
    rng = np.random.default_rng(params["rng_seed"])

    seeds = []
    misses = 0
    while len(seeds) < params["seeds"] and misses < 50:
        if len(seeds) % 2 == 0:
            cand = _random_seed(table, r, rng, scale)
        else:
            cand = _trace_seed(metric, table, r, rng, scale)
            if cand is None:
                cand = _random_seed(table, r, rng, scale)
        if cand is None:
            misses += 1
            continue
        seeds.append(cand)

    def task(seed_pts):
        return _refine(metric, table, seed_pts, params["grad_tol"], scale, params["max_iter"])

    if params["jobs"] > 1:
        with ThreadPoolExecutor(max_workers=params["jobs"]) as pool:
            results = list(pool.map(task, seeds))
    else:
        results = [task(s) for s in seeds]

    polygons = []
    for res in results:
        if res is None:
            continue
        pts, gn = res
        try:
            poly = make_polygon(metric, table, pts)
        except FinslerBilliardsError:
            continue
        if poly.min_edge <= _MIN_EDGE_REL * scale:
            continue
        if not in_g_epsilon(poly, params["epsilon"]):
            continue
        polygons.append((pts, gn, poly))

    # group modulo cyclic relabeling at the cluster tolerance
    cluster_tol = params["cluster_tol"]
    reps: list[list] = []  # [pts, best_gn, best_poly, count]
    for pts, gn, poly in polygons:
        for rep in reps:
            if _zr_distance(rep[0], pts) <= cluster_tol:
                rep[3] += 1
                if gn < rep[1]:
                    rep[0], rep[1], rep[2] = pts, gn, poly
                break
        else:
            reps.append([pts, gn, poly, 1])

    # merge classes closer than the continuum radius and flag them
    merge_tol = _CONTINUUM_REL * scale
    merged_flags = [False] * len(reps)
    keep = [True] * len(reps)
    for i in range(len(reps)):
        if not keep[i]:
            continue
        for j in range(i + 1, len(reps)):
            if keep[j] and _zr_distance(reps[i][0], reps[j][0]) <= merge_tol:
                keep[j] = False
                merged_flags[i] = True
                reps[i][3] += reps[j][3]
                if reps[j][1] < reps[i][1]:
                    reps[i][0], reps[i][1], reps[i][2] = reps[j][0], reps[j][1], reps[j][2]

    survivors = [(rep, merged_flags[i]) for i, (rep, k) in enumerate(zip(reps, keep)) if k]
    records = []
    for (pts, gn, poly, count), was_merged in survivors:
        flags = []
        index, degeneracy = morse_index(metric, table, poly)
        if was_merged or degeneracy > 0:
            flags.append("continuum-suspect")
        for k in _divisors(poly.r):
            if float(np.max(np.abs(pts - np.roll(pts, -k, axis=0)))) <= cluster_tol:
                flags.append("multiple-cover")
                break
        if _zr_distance(pts, pts[::-1]) <= cluster_tol:
            flags.append("reversal-symmetric")
        rot = None
        if table.dim == 2:
            try:
                rot = rotation_number(poly, centroid=table.centroid)
            except ZeroWinding:
                flags.append("zero-winding")
        records.append(OrbitRecord(
            polygon=poly,
            residual=gn,
            morse_index=index,
            degeneracy=degeneracy,
            rotation_number=rot,
            canonical_key=canonicalize(poly, cluster_tol),
            flags=tuple(flags),
            multiplicity=count,
        ))
    records.sort(key=lambda rec: (rec.polygon.lambda_value, rec.canonical_key))
    return records


def orbit_record_dict(record: OrbitRecord) -> dict:
    """JSON-ready description of an orbit record."""
    poly = record.polygon
    return {
        "vertices": [[float(c) for c in v.position.components] for v in poly.vertices],
        "lambda": float(poly.lambda_value),
        "edge_lengths": [float(s.length) for s in poly.segments],
        "min_edge": float(poly.min_edge),
        "edge_product": float(poly.edge_product),
        "residual": float(record.residual),
        "index": record.morse_index,
        "degeneracy": record.degeneracy,
        "rotation_number": record.rotation_number,
        "canonical_key": list(record.canonical_key),
        "flags": list(record.flags),
        "multiplicity": record.multiplicity,
    }
