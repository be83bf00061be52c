"""Recovery of b from second-order boundary data.

Pipeline: the boundary pairing D of a second-order record g2 with a probe w equals
the interior integral of b.grad(w) |grad u1|^2.  Polarizing over a battery of data
fields turns these numbers into moments of beta_w = b.grad(w) against products
grad(u_i).grad(u_k); a ridge least-squares fit on a coarse spline basis estimates
beta_w, and pointwise linear solves over several probes return b.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline

from .errors import NLWaveError, UnderdeterminedError
from .fieldio import write_array, write_csv
from .grid import (
    SIDES,
    CoefficientSet,
    SpaceTimeScalarField,
    _grad_arrays,
    face_slice,
    omega_weights,
    outward_normal,
    trapezoid_weights,
)
from .iomap import IOData, pairing_weights, record_time_derivative, records_from_field
from .linear import InitialBoundaryData, laplacian_interior, solve_linear_ibvp
from .nonlinear import second_order_source
from .probes import build_wkb, unit_vector

__all__ = [
    "assemble_identity_data",
    "polarize",
    "IdentityKernel",
    "identity_kernel",
    "RecoveryBasis",
    "BetaEstimate",
    "betaw_direct",
    "PointwiseRecovery",
    "recover_b_pointwise",
    "recovery_points",
    "wkb_battery",
    "RecoveryConfig",
    "UniquenessReport",
    "end_to_end",
    "StageError",
    "AllMaskedError",
]


class AllMaskedError(NLWaveError, RuntimeError):
    """Every recovery point failed the conditioning test."""


class StageError(NLWaveError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _values(w):
    return w.values if isinstance(w, SpaceTimeScalarField) else np.asarray(w, dtype=float)


# ------------------------------------------------------------- identity


def assemble_identity_data(g2, w, b_lateral_term=None):
    """Boundary pairing of a second-order record with a probe solution w.

    D = sum_faces <g2.lateral_flux, w> - int_Omega [g2.final_ut w(T) - g2.final_u d_t w(T)],

    with the lateral pairing weights of :func:`nlwave.iomap.pairing_weights` and the
    final time derivative of w taken with the record stencil.  For w a solution of the
    homogeneous scheme this equals the interior sum of b.grad(w) |grad u1|^2.
    ``b_lateral_term`` optionally adds nu.b|grad u1|^2 per face when g2 holds only the
    normal derivative of u2.
    """
    grid = g2.grid
    wv = _values(w)
    if wv.shape != grid.shape:
        raise ValueError(f"probe shape {wv.shape} does not match the record grid {grid.shape}")
    total = 0.0
    for side in SIDES:
        rec = g2.lateral_flux[side]
        if b_lateral_term is not None:
            rec = rec + b_lateral_term[side]
        total += float(np.sum(pairing_weights(grid, side) * rec * face_slice(wv, side)))
    wo = omega_weights(grid)
    total -= float(np.sum(wo * (g2.final_ut * wv[-1] - g2.final_u * record_time_derivative(wv, grid))))
    return total


def polarize(g2_plus, g2_minus, w, ref_plus=None, ref_minus=None):
    """Polarized functional from the records of data d1+d2 and d1-d2.

    Returns (D(g2_plus) - D(g2_minus)) / 4, the pairing of w with the bilinear
    b.grad(w) grad(u1).grad(u1').  With ``ref_plus`` / ``ref_minus`` the records of a
    second medium are subtracted first, giving the functional for the b difference.
    """
    for g in (g2_minus, ref_plus, ref_minus):
        if g is not None and g.grid.shape != g2_plus.grid.shape:
            raise ValueError("polarization records live on different grids")
    dp = assemble_identity_data(g2_plus, w)
    dm = assemble_identity_data(g2_minus, w)
    if ref_plus is not None:
        dp -= assemble_identity_data(ref_plus, w)
    if ref_minus is not None:
        dm -= assemble_identity_data(ref_minus, w)
    return 0.25 * (dp - dm)


def _adjoint_leapfrog(grid, a, g):
    """Gradient of J(F) = sum g*u with respect to the source F of the zero-data scheme.

    p^k = g^k + (2 + dt^2 A) p^{k+1} - p^{k+2} on interior nodes, then
    dJ/dF^k = dt^2 p^{k+1} (k >= 1) and dt^2 p^1 / 2 for the Taylor start.
    """
    nt, dt = grid.nt, grid.dt
    ai = np.broadcast_to(np.asarray(a, dtype=float), grid.spatial_shape)[1:-1, 1:-1]
    p = np.zeros(grid.shape)
    for k in range(nt - 1, 0, -1):
        pk = p[k]
        pk[1:-1, 1:-1] = g[k, 1:-1, 1:-1]
        if k <= nt - 2:
            q = p[k + 1]
            pk[1:-1, 1:-1] += 2 * q[1:-1, 1:-1] + dt * dt * (laplacian_interior(q, grid.dx, grid.dy) - ai * q[1:-1, 1:-1])
        if k <= nt - 3:
            pk[1:-1, 1:-1] -= p[k + 2, 1:-1, 1:-1]
    out = np.zeros(grid.shape)
    out[1 : nt - 1] = dt * dt * p[2:nt]
    out[0] = 0.5 * dt * dt * p[1]
    out[:, [0, -1], :] = 0.0
    out[:, :, [0, -1]] = 0.0
    return out


def _gradient_matrix(n, h):
    return np.gradient(np.eye(n), h, axis=0, edge_order=2)


@dataclass(frozen=True, eq=False)
class IdentityKernel:
    """Arrays Z with D(g2) = sum Z . V for the record of the u2 problem with flux V.

    Here u2 solves the scheme with source div(V) and zero data and its lateral record
    includes nu.V, so ``apply`` evaluates the identity pairing without a forward solve.
    In the interior Z equals the quadrature weights times grad(w).
    """

    grid: object
    Z: tuple

    def apply(self, V):
        return float(sum(np.sum(z * v) for z, v in zip(self.Z, V)))

    def contract(self, b):
        """Scalar array Y = Z . b, so that D = sum Y |grad u1|^2 for flux b|grad u1|^2."""
        return sum(z * bc for z, bc in zip(self.Z, b))


def identity_kernel(grid, a, w):
    """Adjoint-state kernel of :func:`assemble_identity_data` for probe w."""
    wv = _values(w)
    if wv.shape != grid.shape:
        raise ValueError("probe shape does not match the grid")
    g = np.zeros(grid.shape)
    faces = {}
    for side in SIDES:
        c = pairing_weights(grid, side) * face_slice(wv, side)
        faces[side] = c
        if side == "x-":
            g[:, :, 1] -= c / grid.dx
        elif side == "x+":
            g[:, :, -2] -= c / grid.dx
        elif side == "y-":
            g[:, 1, :] -= c / grid.dy
        else:
            g[:, -2, :] -= c / grid.dy
    wo = omega_weights(grid)
    g[-1] -= wo * wv[-1] / grid.dt
    g[-2] += wo * wv[-1] / grid.dt
    g[-1] += wo * record_time_derivative(wv, grid)
    gF = _adjoint_leapfrog(grid, a, g)
    Zt = np.tensordot(_gradient_matrix(grid.nt, grid.dt), gF, axes=(0, 0))
    Zx = np.einsum("ix,tyi->tyx", _gradient_matrix(grid.nx, grid.dx), gF)
    Zy = np.einsum("jy,tjx->tyx", _gradient_matrix(grid.ny, grid.dy), gF)
    for side, (comp, sl) in {
        "x-": (Zx, (slice(None), slice(None), 0)),
        "x+": (Zx, (slice(None), slice(None), -1)),
        "y-": (Zy, (slice(None), 0, slice(None))),
        "y+": (Zy, (slice(None), -1, slice(None))),
    }.items():
        comp[sl] += sum(outward_normal(side)) * faces[side]
    return IdentityKernel(grid, (Zt, Zx, Zy))


# ------------------------------------------------------------- beta_w stage


def _clamped_design(x, lo, hi, h):
    n = max(int(round((hi - lo) / h)), 1)
    knots = np.r_[[lo] * 3, np.linspace(lo, hi, n + 1), [hi] * 3]
    return BSpline.design_matrix(np.clip(x, lo, hi), knots, 3).toarray()


def _interior_design(x, lo, hi, h):
    """Cubic B-splines whose support lies inside [lo, hi]; zero outside."""
    n = int(round((hi - lo) / h))
    if n < 7:  # scipy needs at least 2k + 2 knots
        raise ValueError(f"time window [{lo:g}, {hi:g}] holds {n} spline intervals of width {h:g}; need at least 7")
    knots = np.linspace(lo, hi, n + 1)
    D = BSpline.design_matrix(np.clip(x, lo, hi), knots, 3, extrapolate=True).toarray()
    D[(x < lo) | (x > hi)] = 0.0
    return D


@dataclass(frozen=True, eq=False)
class RecoveryBasis:
    """Tensor cubic B-spline basis for beta_w.

    Clamped in space; in time only splines supported in [t_lo, t_hi], matching a b
    that vanishes near t=0 and t=T.
    """

    grid: object
    Bt: np.ndarray
    By: np.ndarray
    Bx: np.ndarray
    t_window: tuple

    @classmethod
    def build(cls, grid, hs=0.125, ht=0.125, t_margin=None):
        m = 0.1 * grid.T if t_margin is None else float(t_margin)
        lo, hi = m, grid.T - m
        return cls(
            grid,
            _interior_design(grid.t, lo, hi, ht),
            _clamped_design(grid.y, 0.0, grid.Ly, hs),
            _clamped_design(grid.x, 0.0, grid.Lx, hs),
            (lo, hi),
        )

    @property
    def shape(self):
        return (self.Bt.shape[1], self.By.shape[1], self.Bx.shape[1])

    @property
    def size(self):
        return int(np.prod(self.shape))

    def moments(self, P):
        """Trapezoid integrals of P against every basis function, flattened."""
        g = self.grid
        Ht = self.Bt * trapezoid_weights(g.nt, g.dt)[:, None]
        Hy = self.By * trapezoid_weights(g.ny, g.dy)[:, None]
        Hx = self.Bx * trapezoid_weights(g.nx, g.dx)[:, None]
        c = np.tensordot(Ht, P, axes=(0, 0))
        c = np.tensordot(c, Hx, axes=(2, 0))
        c = np.tensordot(c, Hy, axes=(1, 0))
        return c.transpose(0, 2, 1).ravel()

    def evaluate(self, coef, idx=None):
        """Spline values on the grid, or on the index triple ``idx`` = (it, iy, ix)."""
        it, iy, ix = idx if idx is not None else (slice(None),) * 3
        c = np.asarray(coef).reshape(self.shape)
        return np.einsum("ta,abc,yb,xc->tyx", self.Bt[it], c, self.By[iy], self.Bx[ix], optimize=True)


def recovery_points(grid, factor_s=2, factor_t=4, t_window=None):
    """Index arrays (it, iy, ix) of the recovery grid: a subsampled copy inside the time window."""
    lo, hi = t_window if t_window is not None else (0.1 * grid.T, 0.9 * grid.T)
    it = np.arange(0, grid.nt, factor_t)
    it = it[(grid.t[it] > lo) & (grid.t[it] < hi)]
    return it, np.arange(0, grid.ny, factor_s), np.arange(0, grid.nx, factor_s)


@dataclass(frozen=True, eq=False)
class BetaEstimate:
    basis: RecoveryBasis
    coef: np.ndarray  # (n_basis, n_probes)
    singular_values: np.ndarray
    ridge: float

    def field(self, j, idx=None):
        return self.basis.evaluate(self.coef[:, j], idx)


def betaw_direct(rows, values, basis, ridge=1e-6):
    """Ridge least squares for beta_w from identity values.

    ``rows`` (M, n_basis) holds basis moments of the polarized weights and ``values``
    (M,) or (M, J) the measured functionals, one column per probe.  The ridge term is
    ``ridge * sigma_max^2``.
    """
    A = np.asarray(rows, dtype=float)
    m = np.asarray(values, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if A.shape[1] != basis.size or A.shape[0] != m.shape[0]:
        raise ValueError(f"rows {A.shape} and values {m.shape} do not match the basis size {basis.size}")
    if ridge <= 0 and A.shape[0] < A.shape[1]:
        raise UnderdeterminedError(
            f"{A.shape[0]} measurements for {A.shape[1]} unknowns without regularization; "
            "add data pairs, coarsen the basis or set ridge > 0"
        )
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if ridge > 0:
        filt = s / (s**2 + ridge * s[0] ** 2)
    else:
        if s[-1] <= 1e-14 * s[0]:
            raise UnderdeterminedError("moment matrix is rank deficient; set ridge > 0")
        filt = 1.0 / s
    coef = Vt.T @ (filt[:, None] * (U.T @ m))
    return BetaEstimate(basis, coef, s, float(ridge))


# ------------------------------------------------------------- pointwise stage


@dataclass(frozen=True, eq=False)
class PointwiseRecovery:
    b: np.ndarray  # (3, *points)
    mask: np.ndarray  # True where the solve was accepted
    cond: np.ndarray

    @property
    def unmasked_fraction(self):
        return float(np.mean(self.mask))


def recover_b_pointwise(betaw_fields, gradients, cond_cap=1e6):
    """Solve [grad w_j] . b = beta_j at every point.

    ``betaw_fields`` has shape (J, *points) and ``gradients`` (J, 3, *points); complex
    inputs are split into real and imaginary rows.  With J > 3 the solve is least
    squares.  Points whose gradient matrix has condition number above ``cond_cap`` are
    masked and get b = 0.
    """
    beta = np.asarray(betaw_fields)
    G = np.asarray(gradients)
    if G.ndim < 2 or G.shape[1] != 3 or G.shape[0] != beta.shape[0] or G.shape[2:] != beta.shape[1:]:
        raise ValueError("gradients must have shape (J, 3, *points) matching betaw_fields (J, *points)")
    if np.iscomplexobj(beta) or np.iscomplexobj(G):
        beta = np.concatenate([beta.real, beta.imag])
        G = np.concatenate([G.real, G.imag])
    if beta.shape[0] < 3:
        raise ValueError("need at least three real probe rows")
    pts = beta.shape[1:]
    M = np.moveaxis(G.reshape(G.shape[0], 3, -1), -1, 0)  # (P, J, 3)
    rhs = beta.reshape(beta.shape[0], -1).T  # (P, J)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(s[:, -1] > 0, s[:, 0] / s[:, -1], np.inf)
    mask = cond <= cond_cap
    if not mask.any():
        raise AllMaskedError(f"all {mask.size} points exceed the condition cap {cond_cap:g}")
    inv_s = np.where(mask[:, None], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    coeff = np.einsum("pjk,pj->pk", U, rhs) * inv_s
    b = np.einsum("pkc,pk->pc", Vt, coeff)
    return PointwiseRecovery(b.T.reshape((3,) + pts), mask.reshape(pts), cond.reshape(pts))


# ------------------------------------------------------------- end to end


def wkb_battery(grid, a, n_dirs, lams, offset=0.1, N=2):
    """Real and imaginary parts of WKB solutions over a fan of directions and frequencies."""
    fields = []
    for k in range(n_dirs):
        ang = 2 * np.pi * k / n_dirs + offset
        for lam in lams:
            p = build_wkb(grid, a, (np.cos(ang), np.sin(ang)), lam, N=N)
            fields += [f.values for f in p.real_parts()]
    return fields


@dataclass
class RecoveryConfig:
    nx: int = 33
    ny: int = 33
    T: float = 2.5
    courant: float = 0.5
    amplitude: tuple = (0.15, 0.1, -0.125)
    radius: float = 0.49
    n_dirs: int = 16
    lams: tuple = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    probe_dirs: int = 5
    probe_lam: float = 3.0
    hs: float = 0.125
    ht: float = 0.125
    ridge: float = 1e-6
    cond_cap: float = 1e6
    factor_s: int = 2
    factor_t: int = 4
    g2_source: str = "adjoint"
    seed: int = 0


@dataclass(eq=False)
class UniquenessReport:
    rows: list = field(default_factory=list)
    b_recovered: np.ndarray | None = None
    b_true: np.ndarray | None = None
    mask: np.ndarray | None = None

    def add(self, stage, metric, value):
        self.rows.append((stage, metric, value))

    def metric(self, stage, metric):
        for s, m, v in self.rows:
            if s == stage and m == metric:
                return v
        raise KeyError(f"{stage}/{metric}")

    def write(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        rows = [r for r in self.rows if r[0] != "runtime"]  # keep the file byte-reproducible
        write_csv(directory / "uniqueness_report.csv", ["stage", "metric", "value"], rows)
        if self.b_recovered is not None:
            for name, comp in zip(("bt", "bx", "by"), self.b_recovered):
                write_array(directory / f"b_recovered_{name}.nlwf", comp)


def _pair_loop(fields, grid, basis, kernels_b, pairs, direct=None):
    """Moments rows and polarized identity values for every data pair.

    ``kernels_b`` is a list of Y_j = Z_j . (b1 - b2) arrays.  With ``direct`` =
    (coeffs1, coeffs2, a, probes) the values come from forward u2 solves instead.
    """
    grads = [np.stack(_grad_arrays(u, grid)) for u in fields]
    Y = np.stack([y.ravel() for y in kernels_b]) if kernels_b else None
    rows, vals = [], []
    for i, k in pairs:
        P = np.einsum("ctyx,ctyx->tyx", grads[i], grads[k])
        rows.append(basis.moments(P))
        if direct is None:
            qp = grads[i] + grads[k]
            qm = grads[i] - grads[k]
            Pp = np.einsum("ctyx,ctyx->tyx", qp, qp).ravel()
            Pm = np.einsum("ctyx,ctyx->tyx", qm, qm).ravel()
            vals.append(0.25 * (Y @ Pp - Y @ Pm))
        else:
            vals.append(_direct_values(grid, direct, fields[i], fields[k]))
    return np.array(rows), np.array(vals)


def _g2_record(grid, coeffs, u1):
    u1f = SpaceTimeScalarField(grid, u1)
    u2 = solve_linear_ibvp(grid, coeffs.a, InitialBoundaryData.zeros(grid), second_order_source(coeffs, u1f)).values
    q = _grad_arrays(u1, grid)
    q2 = q[0] ** 2 + q[1] ** 2 + q[2] ** 2
    return records_from_field(u2, grid, tuple(q2 * c for c in coeffs.b.components))


def _direct_values(grid, direct, ui, uk):
    c1, c2, probes = direct
    recs = [_g2_record(grid, c, u) for c in (c1, c2) for u in (ui + uk, ui - uk)]
    return np.array([polarize(recs[0], recs[1], w, recs[2], recs[3]) for w in probes])


def _rel(err, ref):
    n = np.linalg.norm(ref)
    return float(np.linalg.norm(err) / n) if n > 0 else float(np.linalg.norm(err))


def end_to_end(config=None, coeffs1=None, coeffs2=None, grid=None, log=None):
    """Recover b1 - b2 from the second-order data of two media sharing a.

    Without explicit media the reference pair is used: a smooth bump b1 against b2 = 0.
    Identity values come from the adjoint kernel (``g2_source='adjoint'``) or from
    forward u2 solves per data pair (``'direct'``); both use the same scheme that
    generated the data.
    """
    from .reference import bump_b, reference_grid, reference_potential

    cfg = config or RecoveryConfig()
    say = log or (lambda msg: None)
    report = UniquenessReport()
    t0 = time.perf_counter()

    def stage(name, fn):
        try:
            return fn()
        except NLWaveError as exc:
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise StageError(name, exc) from exc

    if grid is None:
        grid = coeffs1.grid if coeffs1 is not None else reference_grid(cfg.nx, cfg.ny, cfg.T, cfg.courant)
    if coeffs1 is None:
        b1 = bump_b(grid, amplitude=tuple(cfg.amplitude), radius=cfg.radius)
        coeffs1 = CoefficientSet(reference_potential(grid), b1, flat_margin=0.1 * grid.T)
    if coeffs2 is None:
        coeffs2 = coeffs1.with_b(coeffs1.b * 0.0)
    if not np.array_equal(np.broadcast_to(coeffs1.a, grid.spatial_shape), np.broadcast_to(coeffs2.a, grid.spatial_shape)):
        raise StageError("setup", ValueError("the two media must share the potential a"))
    a = np.broadcast_to(np.asarray(coeffs1.a, dtype=float), grid.spatial_shape)
    report.add("setup", "T", grid.T)
    report.add("setup", "diameter", grid.diameter)
    report.add("setup", "T_exceeds_diameter", int(grid.T > grid.diameter))
    if grid.T <= grid.diameter:
        warnings.warn("T does not exceed the diameter of the domain; uniqueness is not guaranteed", RuntimeWarning, stacklevel=2)

    db = [c1 - c2 for c1, c2 in zip(coeffs1.b.components, coeffs2.b.components)]

    def make_probes():
        out = []
        for k in range(cfg.probe_dirs):
            ang = 2 * np.pi * k / cfg.probe_dirs
            p = build_wkb(grid, a, unit_vector((np.cos(ang), np.sin(ang))), cfg.probe_lam)
            out += [f.values for f in p.real_parts()]
        return out

    probes = stage("probes", make_probes)
    report.add("probes", "count", len(probes))
    say(f"probes: {len(probes)} real fields")

    fields = stage("battery", lambda: wkb_battery(grid, a, cfg.n_dirs, cfg.lams))
    K = len(fields)
    pairs = [(i, k) for i in range(K) for k in range(i, K)]
    report.add("battery", "fields", K)
    report.add("battery", "pairs", len(pairs))
    say(f"battery: {K} fields, {len(pairs)} pairs")

    basis = stage("betaw", lambda: RecoveryBasis.build(grid, cfg.hs, cfg.ht, coeffs1.flat_margin))
    report.add("betaw", "unknowns", basis.size)

    if cfg.g2_source == "adjoint":
        kernels = stage("identity", lambda: [identity_kernel(grid, a, w) for w in probes])
        Yb = [k.contract(db) for k in kernels]
        rows, vals = stage("identity", lambda: _pair_loop(fields, grid, basis, Yb, pairs))
    elif cfg.g2_source == "direct":
        rows, vals = stage("identity", lambda: _pair_loop(fields, grid, basis, None, pairs, (coeffs1, coeffs2, probes)))
    else:
        raise StageError("identity", ValueError(f"unknown g2_source {cfg.g2_source!r}"))
    report.add("identity", "max_abs_value", float(np.abs(vals).max()))
    say(f"identity: {vals.shape[0]} x {vals.shape[1]} values")

    est = stage("betaw", lambda: betaw_direct(rows, vals, basis, cfg.ridge))
    report.add("betaw", "sigma_max", float(est.singular_values[0]))
    report.add("betaw", "sigma_min", float(est.singular_values[-1]))
    report.add("betaw", "ridge", cfg.ridge)

    idx = recovery_points(grid, cfg.factor_s, cfg.factor_t, basis.t_window)
    sel = np.ix_(*idx)
    grads = [np.stack([c[sel] for c in _grad_arrays(w, grid)]) for w in probes]
    beta = np.stack([est.field(j, idx) for j in range(len(probes))])
    beta_true = np.stack([sum(g[c] * db[c][sel] for c in range(3)) for g in grads])
    report.add("betaw", "relative_error", _rel(beta - beta_true, beta_true))

    rec = stage("pointwise", lambda: recover_b_pointwise(beta, np.stack(grads), cfg.cond_cap))
    truth = np.stack([c[sel] for c in db])
    m = rec.mask
    report.add("pointwise", "unmasked_fraction", rec.unmasked_fraction)
    err = _rel(rec.b[:, m] - truth[:, m], truth[:, m])
    report.add("pointwise", "b_relative_error", err)
    report.add("pointwise", "recovery_shape", "x".join(str(n) for n in m.shape))

    # identical media: the data difference vanishes; the floor is the response to
    # round-off-sized data
    rng = np.random.default_rng(cfg.seed)
    zero = betaw_direct(rows, np.zeros_like(vals), basis, cfg.ridge)
    noise = np.finfo(float).eps * np.abs(vals).max() * rng.standard_normal(vals.shape)
    fl = betaw_direct(rows, noise, basis, cfg.ridge)

    def b_norm(e):
        bt = np.stack([e.field(j, idx) for j in range(len(probes))])
        r = recover_b_pointwise(bt, np.stack(grads), cfg.cond_cap)
        return float(np.linalg.norm(r.b[:, m])) / max(float(np.linalg.norm(truth[:, m])), 1e-300)

    floor = b_norm(fl)
    report.add("identical", "recovered_norm", b_norm(zero))
    report.add("identical", "floor", floor)
    report.add("runtime", "seconds", time.perf_counter() - t0)
    report.b_recovered = rec.b
    report.b_true = truth
    report.mask = m
    say(f"b relative error {err:.4f}")
    return report
