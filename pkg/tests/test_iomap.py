import numpy as np
import pytest

from nlwave.errors import ConfigError
from nlwave.grid import SIDES
from nlwave.iomap import (
    IOData,
    compute_iomap,
    direct_second_order_record,
    first_order_defect,
    pairing_weights,
    record_normal_derivative,
    records_from_field,
    second_order_extract,
    trace_norm,
)
from nlwave.reference import reference_coefficients, reference_data


@pytest.fixture(scope="module")
def setup(small_grid):
    return small_grid, reference_coefficients(small_grid), reference_data(small_grid)


def test_zero_eps_gives_zero_record(setup):
    g, co, d = setup
    assert compute_iomap(g, co, d, 0.0).norm() == 0.0


def test_iodata_arithmetic_and_roundtrip(setup, tmp_path):
    g, co, d = setup
    io = compute_iomap(g, co, d, 0.02)
    assert (io - io).norm() == 0.0
    assert (2 * io).norm() == pytest.approx(2 * io.norm())
    io.save(tmp_path / "rec")
    back = IOData.load(tmp_path / "rec", g)
    assert back.identical(io)
    with pytest.raises(ValueError):
        IOData(g, {"x-": np.zeros((g.nt, g.ny))}, io.final_u, io.final_ut)


def test_record_stencils(small_grid):
    g = small_grid
    t, x, y = g.mesh()
    u = np.broadcast_to(2 * x - y + t, g.shape)
    assert np.allclose(record_normal_derivative(u, g, "x-"), -2.0)
    assert np.allclose(record_normal_derivative(u, g, "y+"), -1.0)
    rec = records_from_field(u, g)
    assert np.allclose(rec.final_ut, 1.0)
    for side in SIDES:
        w = pairing_weights(g, side)
        assert w[0].sum() == 0 and w[-1].sum() == 0
        assert w.sum() == pytest.approx(g.dt * (g.nt - 2))


def test_first_order_defect_slope(setup):
    g, co, d = setup
    res = first_order_defect(g, co, d, [0.08, 0.04, 0.02])
    assert 1.8 <= res["fit"][0] <= 2.3


def test_second_order_extract_matches_direct(setup):
    g, co, d = setup
    g2 = second_order_extract(g, co, d, (0.02, 0.01))
    direct = direct_second_order_record(g, co, d)
    assert g2.relative_error(direct) <= 3e-2
    assert trace_norm(direct) > 0


def test_eps_pair_validated(setup):
    g, co, d = setup
    with pytest.raises(ConfigError):
        second_order_extract(g, co, d, (0.02, 0.015))
