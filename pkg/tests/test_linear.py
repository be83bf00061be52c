import numpy as np
import pytest

from nlwave.errors import CFLError
from nlwave.grid import SpaceTimeGrid, qt_weights
from nlwave.linear import InitialBoundaryData, discrete_energy, solve_linear_ibvp
from nlwave.reference import reference_potential


def _eigen_error(n, c=2.0):
    g = SpaceTimeGrid.from_courant(n, n, 1.0, 0.5)
    om = np.sqrt(2 * np.pi**2 + c)

    def u(t, x, y):
        return np.cos(om * t) * np.sin(np.pi * x) * np.sin(np.pi * y)

    def ut(t, x, y):
        return -om * np.sin(om * t) * np.sin(np.pi * x) * np.sin(np.pi * y)

    data = InitialBoundaryData.from_functions(g, u, ut)
    num = solve_linear_ibvp(g, c, data).values
    return float(np.max(np.abs(num - g.sample(u))))


def _plane_error(n, c=1.0):
    g = SpaceTimeGrid.from_courant(n, n, 1.0, 0.5)
    k = np.array([2.0, 1.0])
    om = np.sqrt(k @ k + c)

    def u(t, x, y):
        return np.sin(k[0] * x + k[1] * y - om * t)

    def ut(t, x, y):
        return -om * np.cos(k[0] * x + k[1] * y - om * t)

    data = InitialBoundaryData.from_functions(g, u, ut)
    num = solve_linear_ibvp(g, c, data).values
    return float(np.max(np.abs(num - g.sample(u))))


@pytest.mark.parametrize("err", [_eigen_error, _plane_error])
def test_closed_forms_second_order(err):
    e = [err(n) for n in (17, 33, 65)]
    orders = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all(orders >= 1.9), (e, orders)


def test_zero_data_gives_zero(small_grid):
    u = solve_linear_ibvp(small_grid, 1.0, InitialBoundaryData.zeros(small_grid))
    assert not np.any(u.values)


def test_energy_conserved_over_256_steps():
    g = SpaceTimeGrid(33, 33, 258, T=257 * 0.5 / 32)
    a = reference_potential(g)
    X, Y = g.spatial_mesh()
    phi = np.sin(np.pi * X) * np.sin(2 * np.pi * Y)
    psi = np.sin(3 * np.pi * X) * np.sin(np.pi * Y)
    data = InitialBoundaryData(g, phi, psi, {s: np.zeros((g.nt, 33)) for s in ("x-", "x+", "y-", "y+")})
    u = solve_linear_ibvp(g, a, data)
    E = np.array([discrete_energy(u, a, k) for k in range(1, 257)])
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-10


def test_cfl_checked():
    g = SpaceTimeGrid(17, 17, 9, T=1.0)
    with pytest.raises(CFLError):
        solve_linear_ibvp(g, 1.0, InitialBoundaryData.zeros(g))


def test_backward_solve_reverses_forward(small_grid):
    g = small_grid
    X, Y = g.spatial_mesh()
    zero_f = {s: np.zeros((g.nt, g.nx)) for s in ("x-", "x+", "y-", "y+")}
    data = InitialBoundaryData(g, np.sin(np.pi * X) * np.sin(np.pi * Y), np.zeros(g.spatial_shape), zero_f)
    u = solve_linear_ibvp(g, 1.0, data).values
    ut_T = (u[-1] - u[-2]) / g.dt
    back = InitialBoundaryData(g, u[-1], ut_T, zero_f, check=False)
    v = solve_linear_ibvp(g, 1.0, back, backward=True).values
    w = qt_weights(g)
    assert np.sqrt(np.sum((u - v) ** 2 * w) / np.sum(u**2 * w)) < 0.05
