import numpy as np
import pytest

from nlwave.errors import ConfigError, ValidityRadiusError
from nlwave.expansion import l2_qt
from nlwave.grid import RemainderSpec
from nlwave.linear import solve_linear_ibvp
from nlwave.nonlinear import flux_eval, solve_nonlinear, solve_nonlinear_lagged, solve_nonlinear_picard
from nlwave.reference import cubic_remainder, reference_coefficients, reference_data


@pytest.fixture(scope="module")
def setup(small_grid):
    return small_grid, reference_coefficients(small_grid), reference_data(small_grid)


def test_linear_medium_reduces_to_scaled_linear_solution(setup):
    g, co, d = setup
    lin = reference_coefficients(g, with_b=False)
    u = solve_nonlinear(g, lin, d, 0.05).values
    u1 = solve_linear_ibvp(g, lin.a, d).values
    assert np.max(np.abs(u - 0.05 * u1)) <= 1e-13


def test_eps_above_limit_rejected(setup):
    g, co, d = setup
    with pytest.raises(ConfigError):
        solve_nonlinear(g, co, d, 0.5)


def test_picard_and_lagged_agree(setup):
    g, co, d = setup
    up = solve_nonlinear_picard(g, co, d, 0.05).values
    ul = solve_nonlinear_lagged(g, co, d, 0.05).values
    assert l2_qt(up - ul, g) / l2_qt(up, g) < 1e-2


def test_second_order_part_is_odd_in_b(setup):
    g, co, d = setup
    eps = 0.04
    res = solve_nonlinear_picard(g, co, d, eps, full_output=True)
    neg = solve_nonlinear_picard(g, co.negated_b(), d, eps, full_output=True)
    assert np.allclose(res.u2.values, -neg.u2.values)
    assert res.iterations >= 1 and all(r < 1 for r in res.ratios())


def test_remainder_radius_enforced(setup):
    g, co, d = setup
    rem = cubic_remainder(g)
    tight = co.with_remainder(RemainderSpec("cubic", rem.r, radius=1e-3))
    with pytest.raises(ValidityRadiusError):
        solve_nonlinear_picard(g, tight, d, 0.05)


def test_flux_eval_quadratic(setup):
    g, co, d = setup
    from nlwave.grid import gradient_tx

    q = gradient_tx(solve_linear_ibvp(g, co.a, d))
    f = flux_eval(co, q)
    assert np.allclose(f.x, q.norm_sq().values * co.b.x)
