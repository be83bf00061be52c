import numpy as np
import pytest

from nlwave.errors import ConfigError
from nlwave.expansion import epsilon_expand, slope_fit
from nlwave.reference import reference_coefficients, reference_data


def test_slope_fit_recovers_power_law():
    pairs = [(e, 3.0 * e**2.5) for e in (0.1, 0.05, 0.025, 0.0125)]
    slope, intercept, r2 = slope_fit(pairs)
    assert slope == pytest.approx(2.5) and intercept == pytest.approx(np.log(3.0)) and r2 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        slope_fit(pairs[:2])


def test_expansion_small_grid_third_order(small_grid):
    co = reference_coefficients(small_grid)
    rep = epsilon_expand(small_grid, co, reference_data(small_grid), [0.08, 0.04, 0.02])
    slope, _, r2 = rep.fit("norm2_L2")
    assert 2.6 <= slope <= 3.4 and r2 >= 0.98
    slope1, _, _ = rep.fit("norm1_L2")
    assert 1.8 <= slope1 <= 2.2


def test_expansion_rejects_bad_lists(small_grid):
    co = reference_coefficients(small_grid)
    d = reference_data(small_grid)
    with pytest.raises(ConfigError):
        epsilon_expand(small_grid, co, d, [0.01, 0.02])
    with pytest.raises(ConfigError):
        epsilon_expand(small_grid, co, d, [0.5, 0.2])
