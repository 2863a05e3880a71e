import numpy as np
import pytest

import finsler_billiards as fb


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_circle():
    return fb.ellipsoid_table([1.0, 1.0])


@pytest.fixture
def unit_sphere():
    return fb.ellipsoid_table([1.0, 1.0, 1.0])


@pytest.fixture
def ellipse():
    return fb.ellipsoid_table([1.2, 1.0])


@pytest.fixture
def bumpy_ellipsoid():
    return fb.ellipsoid_table([1.0, 1.3, 1.7], eps=0.02)


def random_inward_state(metric, table, rng, min_cos=0.1):
    """Random boundary point with a non-grazing inward indicatrix direction."""
    while True:
        bp = fb.project_to_boundary(table, rng.standard_normal(table.dim))
        n = bp.outward_normal.components
        w = rng.standard_normal(table.dim)
        if float(w @ n) > 0.0:
            w = w - 2.0 * float(w @ n) * n
        if float(w @ n) / np.linalg.norm(w) <= -min_cos:
            v = metric._unit(bp.position.components, w)
            return fb.BoundaryState(bp, v)


def random_incoming(metric, table, rng, min_cos=0.1):
    """Random boundary point with a non-grazing incoming indicatrix direction."""
    while True:
        bp = fb.project_to_boundary(table, rng.standard_normal(table.dim))
        n = bp.outward_normal.components
        w = rng.standard_normal(table.dim)
        if float(w @ n) < 0.0:
            w = w - 2.0 * float(w @ n) * n
        if float(w @ n) / np.linalg.norm(w) >= min_cos:
            u = metric._unit(bp.position.components, w)
            return bp, u
