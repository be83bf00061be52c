"""Nonlinear forward problem

    u_tt - Δu + a u = div_{t,x} N(t, x, grad_{t,x} u),   N(q) = |q|^2 b + R(q),

with data eps*(phi, psi, f).  The principal flux term q stays in the linear
operator; only N enters as a source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonContractionError, NumericalFailure, ValidityRadiusError
from .grid import (
    SpaceTimeScalarField,
    SpaceTimeVectorField,
    _div_arrays,
    _grad_arrays,
    omega_weights,
)
from .linear import (
    InitialBoundaryData,
    _apply_dirichlet,
    check_stability,
    laplacian_interior,
    solve_linear_ibvp,
)

EPS_MAX = 0.1
GROWTH_LIMIT = 1e3

__all__ = ["flux_eval", "solve_nonlinear_lagged", "solve_nonlinear_picard", "rho_distance", "PicardResult"]


def _flux_arrays(b, r, radius, qt, qx, qy):
    q2 = qt * qt + qx * qx + qy * qy
    nt, nx, ny = q2 * b[0], q2 * b[1], q2 * b[2]
    if r is not None:
        if radius is not None:
            qmax = float(np.sqrt(np.max(q2)))
            if qmax > radius:
                loc = np.unravel_index(int(np.argmax(q2)), q2.shape)
                raise ValidityRadiusError(
                    f"|q| = {qmax:.4g} exceeds the remainder validity radius {radius:.4g} at index {loc}",
                    location=tuple(int(i) for i in loc),
                )
        rq = r * q2
        nt, nx, ny = nt + rq * qt, nx + rq * qx, ny + rq * qy
    return nt, nx, ny


def _remainder_array(coeffs, shape):
    rem = coeffs.remainder
    if rem.kind == "zero":
        return None
    return np.broadcast_to(rem.r, shape)


def flux_eval(coeffs, q):
    """Nonlinear flux part |q|^2 b + R(t,x,q) for a space-time vector field q."""
    grid = q.grid
    r = _remainder_array(coeffs, grid.shape)
    out = _flux_arrays(coeffs.b.components, r, coeffs.remainder.radius if r is not None else None, *q.components)
    return SpaceTimeVectorField(grid, *out)


def _check_eps(coeffs, eps, eps_max):
    if eps < 0:
        raise ConfigError("eps must be non-negative")
    if eps > eps_max and not coeffs.is_linear:
        raise ConfigError(f"eps={eps} exceeds eps_max={eps_max}")


def _data_scale(data, eps, extra, grid):
    s = max(
        float(np.max(np.abs(data.phi))),
        float(np.max(np.abs(data.psi))) * grid.T,
        max(float(np.max(np.abs(v))) for v in data.f.values()),
    ) * eps
    if extra is not None:
        s = max(s, float(np.max(np.abs(extra))) * grid.T**2)
    return s


# ------------------------------------------------------------------ lagged


def solve_nonlinear_lagged(grid, coeffs, data, eps, *, extra_forcing=None, eps_max=EPS_MAX):
    """Leapfrog with the nonlinear source lagged onto already computed levels.

    At level k the gradient uses u^k (space) and a backward difference of
    u^k, u^{k-1}, u^{k-2} (time); d/dt of N_t uses the same backward stencil.
    ``extra_forcing`` is an optional unscaled source added to the equation.
    """
    _check_eps(coeffs, eps, eps_max)
    a = coeffs.a
    check_stability(grid, a)
    if extra_forcing is not None:
        extra_forcing = (
            extra_forcing.values if isinstance(extra_forcing, SpaceTimeScalarField) else np.asarray(extra_forcing)
        )
    if eps == 0 and extra_forcing is None:
        return SpaceTimeScalarField.zeros(grid)

    nt, dt, dx, dy = grid.nt, grid.dt, grid.dx, grid.dy
    b = coeffs.b.components
    r = _remainder_array(coeffs, grid.shape)
    radius = coeffs.remainder.radius if r is not None else None
    f = {s: eps * v for s, v in data.f.items()}
    ai = a[1:-1, 1:-1]
    limit = GROWTH_LIMIT * max(_data_scale(data, eps, extra_forcing, grid), np.finfo(float).tiny)

    U = np.empty(grid.shape)
    Nt_hist = []

    def source(k, ut):
        uk = U[k]
        gy, gx = np.gradient(uk, dy, dx, edge_order=2)
        rk = None if r is None else r[k]
        Nt, Nx, Ny = _flux_arrays((b[0][k], b[1][k], b[2][k]), rk, radius, ut, gx, gy)
        Nt_hist.append(Nt)
        div = np.gradient(Nx, dx, axis=1, edge_order=2) + np.gradient(Ny, dy, axis=0, edge_order=2)
        if k == 1:
            div += (Nt_hist[1] - Nt_hist[0]) / dt
        elif k >= 2:
            div += (3 * Nt_hist[k] - 4 * Nt_hist[k - 1] + Nt_hist[k - 2]) / (2 * dt)
        if extra_forcing is not None:
            div += extra_forcing[k]
        return div[1:-1, 1:-1]

    U[0] = eps * data.phi
    _apply_dirichlet(U[0], f, 0)
    ut0 = eps * data.psi
    acc = laplacian_interior(U[0], dx, dy) - ai * U[0, 1:-1, 1:-1] + source(0, ut0)
    U[1] = U[0] + dt * ut0
    U[1, 1:-1, 1:-1] += 0.5 * dt**2 * acc
    _apply_dirichlet(U[1], f, 1)
    ut_prev = ut0
    for k in range(1, nt - 1):
        if k == 1:
            ut = 2 * (U[1] - U[0]) / dt - ut_prev
        else:
            ut = (3 * U[k] - 4 * U[k - 1] + U[k - 2]) / (2 * dt)
        acc = laplacian_interior(U[k], dx, dy) - ai * U[k, 1:-1, 1:-1] + source(k, ut)
        nxt = U[k + 1]
        nxt[1:-1, 1:-1] = 2 * U[k, 1:-1, 1:-1] - U[k - 1, 1:-1, 1:-1] + dt * dt * acc
        _apply_dirichlet(nxt, f, k + 1)
        peak = float(np.max(np.abs(nxt)))
        if not np.isfinite(peak):
            raise NumericalFailure(f"non-finite values at time step {k + 1}", step=k + 1)
        if peak > limit:
            raise NumericalFailure(
                f"solution grew by more than {GROWTH_LIMIT:g}x the data scale at step {k + 1}", step=k + 1
            )
    return SpaceTimeScalarField(grid, U)


# ------------------------------------------------------------------ Picard


def rho_distance(values, grid):
    """max_t (|v|_{H^1(Ω)}^2 + |∂_t v|_{L^2(Ω)}^2)^{1/2} for an (nt, ny, nx) array."""
    gt, gx, gy = _grad_arrays(values, grid)
    w = omega_weights(grid)
    per_t = np.sum((values**2 + gx**2 + gy**2 + gt**2) * w, axis=(1, 2))
    return float(np.sqrt(np.max(per_t)))


@dataclass
class PicardResult:
    u: SpaceTimeScalarField
    u1: SpaceTimeScalarField
    u2: SpaceTimeScalarField
    w: SpaceTimeScalarField
    history: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.history)

    def ratios(self):
        h = np.asarray(self.history)
        return h[1:] / h[:-1] if h.size > 1 else np.array([])


def second_order_source(coeffs, u1):
    """div(b |grad u1|^2): right-hand side of the u2 problem."""
    grid = u1.grid
    qt, qx, qy = _grad_arrays(u1.values, grid)
    q2 = qt * qt + qx * qx + qy * qy
    bt, bx, by = coeffs.b.components
    return _div_arrays(q2 * bt, q2 * bx, q2 * by, grid)


def solve_nonlinear_picard(
    grid, coeffs, data, eps, max_iter=50, tol=1e-12, *, eps_max=EPS_MAX, full_output=False, u1=None
):
    """Fixed-point iteration on the remainder w in u = eps*(u1 + eps*(u2 + w)).

    w_j solves the linear problem with zero data and source
    div(b (2 eps q1.v + eps^2 |v|^2) + eps r Q|Q|^2),  v = grad(u2 + w_{j-1}),
    Q = q1 + eps v.  Iteration stops once the rho distance between successive
    u iterates, eps^2 rho(w_j - w_{j-1}), drops below ``tol``.
    """
    if max_iter < 1 or tol <= 0:
        raise ConfigError("max_iter must be >= 1 and tol > 0")
    _check_eps(coeffs, eps, eps_max)
    a = coeffs.a
    zero_data = InitialBoundaryData.zeros(grid)
    if u1 is None:
        u1 = solve_linear_ibvp(grid, a, data)
    if coeffs.is_linear:
        u2 = SpaceTimeScalarField.zeros(grid)
    else:
        u2 = solve_linear_ibvp(grid, a, zero_data, second_order_source(coeffs, u1))
    w = np.zeros(grid.shape)
    history = []
    if eps == 0:
        zero = SpaceTimeScalarField.zeros(grid)
        res = PicardResult(zero, u1, u2, zero, [0.0])
        return res if full_output else zero

    q1 = _grad_arrays(u1.values, grid)
    g2 = _grad_arrays(u2.values, grid)
    b = coeffs.b.components
    r = _remainder_array(coeffs, grid.shape)
    radius = coeffs.remainder.radius
    for _ in range(max_iter):
        gw = _grad_arrays(w, grid) if history else (0.0, 0.0, 0.0)
        v = [g2[i] + gw[i] for i in range(3)]
        cross = 2 * eps * (q1[0] * v[0] + q1[1] * v[1] + q1[2] * v[2]) + eps * eps * (v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
        N = [cross * b[i] for i in range(3)]
        if r is not None:
            Q = [q1[i] + eps * v[i] for i in range(3)]
            Q2 = Q[0] ** 2 + Q[1] ** 2 + Q[2] ** 2
            if eps * np.sqrt(np.max(Q2)) > radius:
                loc = tuple(int(i) for i in np.unravel_index(int(np.argmax(Q2)), Q2.shape))
                raise ValidityRadiusError("gradient exceeds the remainder validity radius", location=loc)
            rQ = eps * r * Q2
            N = [N[i] + rQ * Q[i] for i in range(3)]
        src = _div_arrays(*N, grid)
        w_new = solve_linear_ibvp(grid, a, zero_data, src).values
        dist = eps * eps * rho_distance(w_new - w, grid)
        history.append(dist)
        w = w_new
        if dist < tol:
            break
        if not np.isfinite(dist) or (len(history) >= 3 and history[-1] > history[-2] > history[-3]):
            raise NonContractionError("Picard iterates do not contract", history=history)
    else:
        raise NonContractionError(f"no convergence within {max_iter} iterations", history=history)

    u = SpaceTimeScalarField(grid, eps * (u1.values + eps * (u2.values + w)))
    if full_output:
        return PicardResult(u, u1, u2, SpaceTimeScalarField(grid, w), history)
    return u


def solve_nonlinear(grid, coeffs, data, eps, scheme="picard", **kw):
    if scheme == "picard":
        return solve_nonlinear_picard(grid, coeffs, data, eps, **kw)
    if scheme == "lagged":
        return solve_nonlinear_lagged(grid, coeffs, data, eps, **kw)
    raise ConfigError(f"unknown scheme {scheme!r}; expected 'picard' or 'lagged'")
