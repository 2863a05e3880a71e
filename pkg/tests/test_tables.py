import numpy as np
import pytest

from finsler_billiards import (
    EuclideanMetric,
    InvalidParameters,
    MinkowskiMetric,
    conormal,
    ellipsoid_table,
    project_to_boundary,
    table_from_spec,
    tangent_basis,
)
from finsler_billiards.tables import convexity_defect


def test_projection_onto_unit_sphere(unit_sphere):
    bp = project_to_boundary(unit_sphere, [2.0, 0.0, 0.0])
    assert np.allclose(bp.position.components, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(bp.outward_normal.components, [1.0, 0.0, 0.0], atol=1e-12)


def test_projection_fixed_point_on_boundary(unit_sphere):
    bp = project_to_boundary(unit_sphere, [1.0, 0.0, 0.0])
    assert np.allclose(bp.position.components, [1.0, 0.0, 0.0], atol=1e-12)


def test_projection_axis_point_of_ellipsoid():
    table = ellipsoid_table([2.0, 1.0, 1.0])
    bp = project_to_boundary(table, [3.0, 0.0, 0.0])
    assert np.allclose(bp.position.components, [2.0, 0.0, 0.0], atol=1e-10)


def test_projection_idempotent(bumpy_ellipsoid, rng):
    for _ in range(50):
        x = rng.standard_normal(3)
        bp = project_to_boundary(bumpy_ellipsoid, x)
        bp2 = project_to_boundary(bumpy_ellipsoid, bp.position.components)
        move = np.linalg.norm(bp2.position.components - bp.position.components)
        assert move <= 1e-9
        assert abs(bumpy_ellipsoid.phi(bp.position.components)) <= 1e-10 * bumpy_ellipsoid.scale


def test_tangent_basis_axis_examples(unit_sphere):
    bp = unit_sphere.boundary_point([0.0, 0.0, 1.0])
    basis = tangent_basis(bp)
    assert np.allclose(basis[0].components, [1.0, 0.0, 0.0])
    assert np.allclose(basis[1].components, [0.0, 1.0, 0.0])
    bp = unit_sphere.boundary_point([1.0, 0.0, 0.0])
    basis = tangent_basis(bp)
    assert np.allclose(basis[0].components, [0.0, 1.0, 0.0])
    assert np.allclose(basis[1].components, [0.0, 0.0, 1.0])


def test_tangent_basis_orthonormal_and_tangent(bumpy_ellipsoid, rng):
    for _ in range(50):
        bp = project_to_boundary(bumpy_ellipsoid, rng.standard_normal(3))
        rows = np.array([b.components for b in tangent_basis(bp)])
        gram = rows @ rows.T
        assert np.max(np.abs(gram - np.eye(2))) <= 1e-12
        assert np.max(np.abs(rows @ bp.outward_normal.components)) <= 1e-12


def test_convexity_sampling_midpoints(bumpy_ellipsoid):
    # midpoints of random boundary pairs stay inside the sublevel set
    rng = np.random.default_rng(7)
    assert convexity_defect(bumpy_ellipsoid, 10_000, rng) <= 1e-9


def test_conormal_euclidean_sphere(unit_sphere):
    bp = unit_sphere.boundary_point([0.0, 0.0, 1.0])
    p = conormal(unit_sphere, bp, EuclideanMetric())
    assert np.allclose(p.components, [0.0, 0.0, 1.0], atol=1e-12)


def test_conormal_annihilates_tangent_space(bumpy_ellipsoid, rng):
    metric = MinkowskiMetric([0.2, 0.1, 0.0])
    for _ in range(20):
        bp = project_to_boundary(bumpy_ellipsoid, rng.standard_normal(3))
        p = conormal(bumpy_ellipsoid, bp, metric)
        for w in tangent_basis(bp):
            assert abs(p(w)) <= 1e-10
        assert p(bp.outward_normal) > 0.0
        assert metric.dual_norm(bp.position.components, p.components) == pytest.approx(1.0, abs=1e-10)


def test_conormal_minkowski_offset_circle(unit_circle):
    # drift along +x; at the rightmost point the conormal is a positive
    # multiple of (1, 0) rescaled to unit dual norm
    metric = MinkowskiMetric([0.5, 0.0])
    bp = unit_circle.boundary_point([1.0, 0.0])
    p = conormal(unit_circle, bp, metric)
    assert p.components[1] == pytest.approx(0.0, abs=1e-14)
    assert p.components[0] > 0.0
    # dense indicatrix sampling evaluates sup p(v) independently
    theta = np.linspace(0.0, 2.0 * np.pi, 200_001)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    lag = 1.0 + 0.5 * np.cos(theta)
    samples = dirs / lag[:, None]
    assert np.max(samples @ p.components) == pytest.approx(1.0, abs=1e-9)
    # closed form: sup of (1,0) over this indicatrix is 2/3, so p = (1.5, 0)
    assert p.components[0] == pytest.approx(1.5, abs=1e-12)


def test_spec_round_trip():
    spec = {"kind": "ellipsoid", "semi_axes": [1.0, 1.3, 1.7],
            "perturbation": {"eps": 0.02, "coeffs": [1.0, 1.0, 1.0]}}
    table = table_from_spec(spec)
    assert table.dim == 3
    assert table.spec["perturbation"]["eps"] == 0.02


def test_spec_validation_errors():
    with pytest.raises(InvalidParameters):
        table_from_spec({"kind": "torus"})
    with pytest.raises(InvalidParameters):
        table_from_spec({"kind": "ellipsoid"})
    with pytest.raises(InvalidParameters):
        ellipsoid_table([1.0])
    with pytest.raises(InvalidParameters):
        ellipsoid_table([1.0, -2.0])


def test_boundary_point_rejects_interior(unit_sphere):
    with pytest.raises(InvalidParameters):
        unit_sphere.boundary_point([0.5, 0.0, 0.0])
