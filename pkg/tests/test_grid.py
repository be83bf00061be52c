import numpy as np
import pytest

from nlwave.errors import CFLError, GridTooSmallError
from nlwave.grid import (
    SIDES,
    CoefficientSet,
    SpaceTimeGrid,
    SpaceTimeScalarField,
    SpaceTimeVectorField,
    face_slice,
    gradient_tx,
    divergence_tx,
    integrate_face,
    integrate_omega,
    integrate_qt,
    normal_derivative,
    outward_normal,
)
from nlwave.reference import bump_b, reference_potential


def test_grid_rejects_tiny_shapes():
    with pytest.raises(GridTooSmallError):
        SpaceTimeGrid(2, 5, 5)
    with pytest.raises(GridTooSmallError):
        SpaceTimeGrid(5, 5, 1)


def test_from_courant_respects_ratio():
    g = SpaceTimeGrid.from_courant(33, 33, 2.5, 0.5)
    assert g.shape == (161, 33, 33)
    assert g.dt <= 0.5 * g.dx + 1e-15
    g.check_cfl()


def test_cfl_violation_detected():
    g = SpaceTimeGrid(17, 17, 9, T=1.0)
    with pytest.raises(CFLError):
        g.check_cfl()


def test_gradient_exact_on_quadratics(small_grid):
    f = SpaceTimeScalarField.from_function(small_grid, lambda t, x, y: t * t + 2 * x * y - 3 * y * y + t * x)
    g = gradient_tx(f)
    t, x, y = small_grid.mesh()
    assert np.allclose(g.t, np.broadcast_to(2 * t + x, small_grid.shape), atol=1e-11)
    assert np.allclose(g.x, np.broadcast_to(2 * y + t, small_grid.shape), atol=1e-11)
    assert np.allclose(g.y, np.broadcast_to(2 * x - 6 * y, small_grid.shape), atol=1e-11)


def test_divergence_of_gradient_of_quadratic(small_grid):
    f = SpaceTimeScalarField.from_function(small_grid, lambda t, x, y: t * t + x * x + y * y)
    d = divergence_tx(gradient_tx(f))
    assert np.allclose(d.values, 6.0, atol=1e-9)


def test_trapezoid_integrals_exact_on_linear(small_grid):
    f = SpaceTimeScalarField.from_function(small_grid, lambda t, x, y: 1 + t + x - y)
    assert integrate_qt(f) == pytest.approx(1.5, rel=1e-12)
    X, Y = small_grid.spatial_mesh()
    assert integrate_omega(X + Y, small_grid) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(TypeError):
        integrate_qt(f.values)


def test_face_integral_and_normals(small_grid):
    ones = np.ones(small_grid.shape)
    for side in SIDES:
        assert integrate_face(face_slice(ones, side), small_grid, side) == pytest.approx(1.0)
        assert sum(abs(c) for c in outward_normal(side)) == 1.0


def test_normal_derivative_outward_sign(small_grid):
    t, x, y = small_grid.mesh()
    u = np.broadcast_to(x * x + y, small_grid.shape)
    assert np.allclose(normal_derivative(u, small_grid, "x-"), 0.0, atol=1e-12)
    assert np.allclose(normal_derivative(u, small_grid, "x+"), 2.0)
    assert np.allclose(normal_derivative(u, small_grid, "y-"), -1.0)
    assert np.allclose(normal_derivative(u, small_grid, "y+"), 1.0)


def test_fields_are_immutable_and_grid_checked(small_grid):
    f = SpaceTimeScalarField.zeros(small_grid)
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0
    other = SpaceTimeGrid.from_courant(9, 9, 1.0)
    with pytest.raises(ValueError):
        f + SpaceTimeScalarField.zeros(other)
    with pytest.raises(ValueError):
        SpaceTimeScalarField(small_grid, np.full(small_grid.shape, np.nan))


def test_coefficients_require_flat_b(small_grid):
    a = reference_potential(small_grid)
    b = bump_b(small_grid)
    CoefficientSet(a, b, flat_margin=0.1)
    t, x, y = small_grid.mesh()
    bad = np.broadcast_to(t + 0 * x * y, small_grid.shape)
    with pytest.raises(ValueError):
        CoefficientSet(a, SpaceTimeVectorField(small_grid, bad, bad * 0, bad * 0))
    assert CoefficientSet(a, SpaceTimeVectorField.zeros(small_grid)).is_linear
