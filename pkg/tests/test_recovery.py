import numpy as np
import pytest

from nlwave.errors import UnderdeterminedError
from nlwave.grid import CoefficientSet, SpaceTimeGrid, _grad_arrays, qt_weights
from nlwave.iomap import records_from_field
from nlwave.linear import solve_linear_ibvp
from nlwave.recovery import (
    AllMaskedError,
    RecoveryBasis,
    RecoveryConfig,
    StageError,
    assemble_identity_data,
    betaw_direct,
    end_to_end,
    identity_kernel,
    polarize,
    recover_b_pointwise,
    recovery_points,
)
from nlwave.nonlinear import second_order_source
from nlwave.linear import InitialBoundaryData
from nlwave.probes import DEFAULT_DIRECTIONS, build_wkb
from nlwave.reference import cubic_remainder, mode_data, reference_coefficients, reference_data, reference_potential, zero_b


@pytest.fixture(scope="module")
def grid():
    return SpaceTimeGrid.from_courant(17, 17, 1.0, 0.5)


@pytest.fixture(scope="module")
def medium(grid):
    co = reference_coefficients(grid)
    return co, np.broadcast_to(co.a, grid.spatial_shape)


def g2_record(grid, co, u1):
    u2 = solve_linear_ibvp(grid, co.a, InitialBoundaryData.zeros(grid), second_order_source(co, _field(grid, u1))).values
    q = _grad_arrays(u1, grid)
    P = sum(c * c for c in q)
    return records_from_field(u2, grid, tuple(P * b for b in co.b.components)), P


def _field(grid, v):
    from nlwave.grid import SpaceTimeScalarField

    return SpaceTimeScalarField(grid, v)


def interior_sum(grid, b, w, P):
    gw = _grad_arrays(w, grid)
    return float(np.sum(qt_weights(grid) * sum(bc * c for bc, c in zip(b, gw)) * P))


def test_identity_is_exact_for_discrete_solutions(grid, medium):
    co, a = medium
    u1 = solve_linear_ibvp(grid, a, reference_data(grid)).values
    w = solve_linear_ibvp(grid, a, mode_data(grid, 2, 1)).values
    rec, P = g2_record(grid, co, u1)
    D = assemble_identity_data(rec, w)
    assert D == pytest.approx(interior_sum(grid, co.b.components, w, P), rel=1e-12)
    kernel = identity_kernel(grid, a, w)
    assert kernel.apply(tuple(b * P for b in co.b.components)) == pytest.approx(D, rel=1e-12)


def test_identity_vanishes_without_b(grid, medium):
    co, a = medium
    flat = co.with_b(zero_b(grid))
    u1 = solve_linear_ibvp(grid, a, reference_data(grid)).values
    rec, _ = g2_record(grid, flat, u1)
    w = solve_linear_ibvp(grid, a, mode_data(grid, 1, 2)).values
    assert assemble_identity_data(rec, w) == 0.0
    with pytest.raises(ValueError):
        assemble_identity_data(rec, w[:-1])


def test_polarization(grid, medium):
    co, a = medium
    u = solve_linear_ibvp(grid, a, reference_data(grid)).values
    v = solve_linear_ibvp(grid, a, mode_data(grid, 2, 2)).values
    w = solve_linear_ibvp(grid, a, mode_data(grid, 1, 2)).values
    rp, Pp = g2_record(grid, co, u + v)
    rm, Pm = g2_record(grid, co, u - v)
    val = polarize(rp, rm, w)
    gu, gv = _grad_arrays(u, grid), _grad_arrays(v, grid)
    cross = sum(x * y for x, y in zip(gu, gv))
    assert val == pytest.approx(interior_sum(grid, co.b.components, w, cross), rel=1e-10)
    assert polarize(rp, rm, w, rp, rm) == 0.0
    # equal data on both sides: the plus record is the record of 2u, the minus one vanishes
    r2, _ = g2_record(grid, co, 2 * u)
    r0, _ = g2_record(grid, co, 0 * u)
    r1, _ = g2_record(grid, co, u)
    assert polarize(r2, r0, w) == pytest.approx(assemble_identity_data(r1, w), rel=1e-12)


def plane_wave_moments(grid, basis, beta, n_dirs=8, lams=(2, 4, 6)):
    t, x, y = grid.mesh()
    fields = []
    for k in range(n_dirs):
        ang = 2 * np.pi * k / n_dirs + 0.1
        s = t + x * np.cos(ang) + y * np.sin(ang)
        for lam in lams:
            fields += [np.broadcast_to(np.cos(lam * s), grid.shape), np.broadcast_to(np.sin(lam * s), grid.shape)]
    G = [np.stack(_grad_arrays(f, grid)) for f in fields]
    qw = qt_weights(grid)
    rows, vals = [], []
    for i in range(len(G)):
        for k in range(i, len(G)):
            P = np.einsum("ctyx,ctyx->tyx", G[i], G[k])
            rows.append(basis.moments(P))
            vals.append(np.sum(qw * beta * P))
    return np.array(rows), np.array(vals)


@pytest.fixture(scope="module")
def synthetic(grid):
    t, x, y = grid.mesh()
    window = (t > 0.1) & (t < 0.9)
    beta = np.broadcast_to(np.sin(np.pi * x) * np.sin(np.pi * y) * np.where(window, np.sin(np.pi * (t - 0.1) / 0.8) ** 2, 0), grid.shape)
    basis = RecoveryBasis.build(grid, 0.25, 0.1)
    rows, vals = plane_wave_moments(grid, basis, beta, 12, (2, 4, 6, 8))
    idx = recovery_points(grid, 1, 1, basis.t_window)  # 17 x 17 x 33 minus the flat time margins
    return beta, basis, rows, vals, idx


def _err(est, beta, idx):
    r = est.field(0, idx)
    tr = beta[np.ix_(*idx)]
    return np.linalg.norm(r - tr) / np.linalg.norm(tr)


def test_betaw_recovers_smooth_bump(synthetic):
    beta, basis, rows, vals, idx = synthetic
    assert _err(betaw_direct(rows, vals, basis), beta, idx) <= 0.10
    assert np.all(betaw_direct(rows, 0 * vals, basis).coef == 0)


def test_betaw_noise_stability(synthetic, rng):
    beta, basis, rows, vals, idx = synthetic
    noisy = vals + 0.01 * np.linalg.norm(vals) / np.sqrt(vals.size) * rng.standard_normal(vals.size)
    assert _err(betaw_direct(rows, noisy, basis), beta, idx) <= 0.25


def test_betaw_underdetermined(synthetic):
    _, basis, rows, vals, _ = synthetic
    with pytest.raises(UnderdeterminedError):
        betaw_direct(rows[:10], vals[:10], basis, ridge=0.0)
    with pytest.raises(ValueError):
        betaw_direct(rows[:, :-1], vals, basis)


def test_pointwise_exact_and_masked(rng):
    b = rng.standard_normal((3, 4, 5))
    G = rng.standard_normal((5, 3, 4, 5)) + 1j * rng.standard_normal((5, 3, 4, 5))
    beta = np.einsum("jcpq,cpq->jpq", G, b)
    rec = recover_b_pointwise(beta, G)
    assert rec.unmasked_fraction == 1.0
    assert np.max(np.abs(rec.b - b)) <= 1e-8
    G[:, 2, 0, 0] = 0
    rec = recover_b_pointwise(np.einsum("jcpq,cpq->jpq", G, b), G)
    assert not rec.mask[0, 0] and rec.b[:, 0, 0].tolist() == [0, 0, 0]
    with pytest.raises(AllMaskedError):
        recover_b_pointwise(beta, np.zeros_like(G))
    with pytest.raises(ValueError):
        recover_b_pointwise(beta.real[:2], G.real[:2])


def test_end_to_end_identical_media(grid, medium):
    co, _ = medium
    cfg = RecoveryConfig(n_dirs=4, lams=(2.0, 4.0), hs=0.25, ht=0.1, probe_lam=2.0)
    with pytest.warns(RuntimeWarning):
        rep = end_to_end(cfg, co, co)
    assert rep.metric("identical", "recovered_norm") == 0.0
    assert np.all(rep.b_recovered == 0)


def test_wkb_probes_leave_few_points_masked():
    g = SpaceTimeGrid.from_courant(41, 41, 1.0, 0.5)
    a = reference_potential(g)
    probes = [build_wkb(g, a, w, 20.0) for w in DEFAULT_DIRECTIONS]
    G = np.stack([np.stack(p.gradient()) for p in probes])[:, :, 1:-1, 1:-1, 1:-1]
    rec = recover_b_pointwise(np.zeros(G.shape[:1] + G.shape[2:], dtype=complex), G)
    assert rec.unmasked_fraction >= 0.95
    assert not np.any(rec.b[:, rec.mask])


def test_end_to_end_ignores_the_remainder(grid, medium):
    co, _ = medium
    cubic = co.with_remainder(cubic_remainder(grid))
    cfg = RecoveryConfig(n_dirs=4, lams=(2.0, 4.0), hs=0.25, ht=0.1, probe_lam=2.0)
    with pytest.warns(RuntimeWarning):
        rep = end_to_end(cfg, cubic, co)
    assert rep.metric("identical", "recovered_norm") == 0.0
    assert np.all(rep.b_recovered == 0)


def test_end_to_end_stage_errors(grid, medium):
    co, _ = medium
    cfg = RecoveryConfig(probe_lam=20.0)
    with pytest.warns(RuntimeWarning), pytest.raises(StageError) as info:
        end_to_end(cfg, co)
    assert info.value.stage == "probes"
    other = CoefficientSet(np.ones(grid.spatial_shape) * 2, co.b, flat_margin=co.flat_margin)
    with pytest.raises(StageError) as info:
        end_to_end(RecoveryConfig(), co, other)
    assert info.value.stage == "setup"
