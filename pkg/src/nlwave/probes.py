"""Probe solutions of the linear equation  (d_t^2 - Δ + a) w = 0.

Two families:

* semiclassical pairs  u± = e^{∓(s - s0)/h} (phi(x + t ω) + h R±),  s = t + x·ω,
  concentrating on the tube x + tω ∈ supp phi as h -> 0;
* WKB probes  v = e^{iλs} Σ_k A_k / (2iλ)^k + R  with amplitudes solving the
  transport equations  (d_t - ω·∇) A_k = -(d_t^2 - Δ + a) A_{k-1},  A_0 = 1.

Leading terms are evaluated analytically and the correctors come from the
leapfrog solver, so every probe is a solution at solver accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ExponentOverflowError, HaloError, ResolutionError
from .grid import SpaceTimeScalarField, _grad_arrays
from .linear import InitialBoundaryData, solve_linear_ibvp
from .reference import bump1d, smooth_step

MAX_EXPONENT = 700.0
DEFAULT_DIRECTIONS = ((1 / np.sqrt(2.0), 1 / np.sqrt(2.0)), (1.0, 0.0), (0.0, 1.0))

__all__ = [
    "BumpProfile",
    "GOProbe",
    "WKBProbe",
    "build_go_pair",
    "go_weight",
    "limiting_det",
    "DEFAULT_DIRECTIONS",
    "transport_solve",
    "build_wkb",
    "gradient_matrix_det",
    "det_field",
    "unit_vector",
]


def unit_vector(omega):
    w = np.asarray(omega, dtype=float)
    if w.shape != (2,) or abs(np.hypot(*w) - 1.0) > 1e-12:
        raise ValueError(f"omega must be a unit 2-vector, got {omega}")
    return w


def _potential_on(grid, a):
    if callable(a):
        X, Y = grid.spatial_mesh()
        return np.broadcast_to(np.asarray(a(X, Y), dtype=float), grid.spatial_shape)
    return np.broadcast_to(np.asarray(a, dtype=float), grid.spatial_shape)


# ----------------------------------------------------------- GO probes


@dataclass(frozen=True)
class BumpProfile:
    """phi(x) = g(|x - c|^2 / r^2) with g(z) = exp(1 - 1/(1 - z)) on z < 1."""

    center: tuple = (0.5, 0.5)
    radius: float = 0.2

    def _parts(self, x, y):
        dx, dy = x - self.center[0], y - self.center[1]
        z = (dx * dx + dy * dy) / self.radius**2
        g = np.zeros(np.broadcast(z, z).shape)
        g1 = np.zeros_like(g)
        g2 = np.zeros_like(g)
        m = z < 1
        zm = np.broadcast_to(z, g.shape)[m]
        q = 1.0 / (1.0 - zm)
        g[m] = np.exp(1.0 - q)
        g1[m] = -g[m] * q * q
        g2[m] = g[m] * (q**4 - 2 * q**3)
        return dx, dy, g, g1, g2

    def __call__(self, x, y):
        return self._parts(x, y)[2]

    def gradient(self, x, y):
        dx, dy, _, g1, _ = self._parts(x, y)
        c = 2 / self.radius**2
        return c * g1 * dx, c * g1 * dy

    def hessian(self, x, y):
        dx, dy, _, g1, g2 = self._parts(x, y)
        r2 = self.radius**2
        c4 = 4 / r2**2
        return c4 * g2 * dx * dx + 2 * g1 / r2, c4 * g2 * dx * dy, c4 * g2 * dy * dy + 2 * g1 / r2

    def l2_squared(self, n=2001):
        """∫ phi^2 dx over the plane (radial quadrature)."""
        rho = np.linspace(0.0, 1.0, n)
        f = bump1d(rho) ** 2 * rho
        return float(2 * np.pi * self.radius**2 * np.trapezoid(f, rho))


@dataclass(eq=False)
class GOProbe:
    omega: np.ndarray
    h: float
    profile: BumpProfile
    sign: int
    s0: float
    N: int
    u: SpaceTimeScalarField
    ansatz: np.ndarray
    ansatz_grad: tuple
    corrector: np.ndarray

    def gradient(self):
        """(d_t, d_x, d_y) u: analytic phase derivative plus differenced amplitudes and correction."""
        e = _grad_arrays(self.u.values - self.ansatz, self.u.grid)
        return tuple(lg + ei for lg, ei in zip(self.ansatz_grad, e))

    def corrector_norms(self):
        """(|R|_{L2}, |h grad R|_{L2}) over Q_T, with R = (u e^{±(s-s0)/h} - phi(x+tω)) / h on the tube."""
        from .grid import qt_weights

        g = self.u.grid
        wts = qt_weights(g)
        R = self.corrector
        gr = _grad_arrays(R, g)
        return (
            float(np.sqrt(np.sum(R**2 * wts))),
            float(self.h * np.sqrt(np.sum(sum(c**2 for c in gr) * wts))),
        )


def _exponent(grid, omega, h, sign, s0):
    t, x, y = grid.mesh()
    expo = np.broadcast_to(-sign * (t + x * omega[0] + y * omega[1] - s0) / h, grid.shape)
    if np.max(np.abs(expo)) > MAX_EXPONENT:
        raise ExponentOverflowError(
            f"exponent |s - s0|/h reaches {np.max(np.abs(expo)):.1f} > {MAX_EXPONENT}; increase h"
        )
    return expo


def build_go_pair(grid, a, omega, h, profile=None, N=2, pad=None):
    """Semiclassical pair u± = e^{∓(s - s0)/h} (phi(x + tω) + h R±), s = t + x·ω.

    R± is built in two stages: the transport amplitudes A_1..A_N of the sum
    Σ_k A_k (∓h/2)^k with A_0 = phi(x + tω) remove the defect up to O(h^N) on the
    tube, and the remaining defect is absorbed by a solver call with zero data.
    Conjugated by its exponential, the u+ equation reads v_tt - (2/h) v_t + ...,
    which is damped only in reversed time, so u+ is corrected from zero final
    data and u- from zero initial data.  Every correction then reaches the
    other probe's tube with a factor e^{-|s - s'|/h}, and the normalisation
    s0 = center·ω keeps both probes O(e^{r/h}).
    """
    omega = unit_vector(omega)
    if h <= 0:
        raise ValueError("h must be positive")
    profile = profile or BumpProfile()
    a_grid = _potential_on(grid, a)
    s0 = float(np.dot(profile.center, omega))

    def lead(t, x, y):
        return profile(x + t * omega[0], y + t * omega[1])

    amps, P, a_pad = _transport_padded(grid, a, omega, N, pad, A0=lead)
    t, x, y = grid.mesh()
    phi_t = np.broadcast_to(lead(t, x, y), grid.shape)
    tube = phi_t > 0
    zero = InitialBoundaryData.zeros(grid)
    probes = []
    for sign in (1, -1):
        expo = _exponent(grid, omega, h, sign, s0)
        E = np.exp(expo)
        ansatz, grad, residual = _assemble(grid, amps, P, a_pad, omega, -2.0 * sign / h, E)
        e = solve_linear_ibvp(grid, a_grid, zero, -residual, backward=(sign > 0)).values
        u = ansatz + e
        R = np.zeros(grid.shape)
        R[tube] = (u[tube] * np.exp(-expo[tube]) - phi_t[tube]) / h
        probes.append(GOProbe(omega, h, profile, sign, s0, N, SpaceTimeScalarField(grid, u), ansatz, grad, R))
    return probes[0].u, probes[1].u, tuple(probes)


def go_weight(pair):
    """grad u+ · grad u- (space-time Euclidean product)."""
    gp, gm = pair[0].gradient(), pair[1].gradient()
    return gp[0] * gm[0] + gp[1] * gm[1] + gp[2] * gm[2]


# ----------------------------------------------------------- transport


def _simpson_weights(nt, dt):
    """W[n, m]: weights of ∫_0^{t_n} g(τ) dτ on nodes m <= n (Simpson, 3/8 for odd tails)."""
    W = np.zeros((nt, nt))
    for n in range(1, nt):
        if n == 1:
            W[1, :2] = 0.5 * dt
            continue
        end = n if n % 2 == 0 else n - 3
        if end > 0:
            W[n, 0 : end + 1 : 2] += 2 * dt / 3
            W[n, 1:end:2] += 4 * dt / 3
            W[n, 0] -= dt / 3
            W[n, end] -= dt / 3
        if n % 2 == 1:
            W[n, n - 3 : n + 1] += np.array([3, 9, 9, 3]) * dt / 8
    return W


def _shift_bilinear(Gp, margin, shape, ox, oy):
    """Bilinear values of a 2D array G at index positions (j + oy, i + ox), output ``shape``.

    ``Gp`` is G edge-padded by ``margin`` cells on every side, which clamps
    positions outside the array to its edge values.
    """
    ny, nx = shape
    ix, fx = int(np.floor(ox)), ox - np.floor(ox)
    iy, fy = int(np.floor(oy)), oy - np.floor(oy)
    x0, y0 = margin + ix, margin + iy
    if x0 < 0 or y0 < 0 or x0 + nx + 1 > Gp.shape[1] or y0 + ny + 1 > Gp.shape[0]:
        raise HaloError("shift exceeds the padded halo")
    v00 = Gp[y0 : y0 + ny, x0 : x0 + nx]
    v01 = Gp[y0 : y0 + ny, x0 + 1 : x0 + 1 + nx]
    v10 = Gp[y0 + 1 : y0 + 1 + ny, x0 : x0 + nx]
    v11 = Gp[y0 + 1 : y0 + 1 + ny, x0 + 1 : x0 + 1 + nx]
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11)


def _second_diff(A, h, axis):
    """Second derivative, centred inside and 4-point one-sided at the ends."""
    A = np.moveaxis(A, axis, 0)
    out = np.empty_like(A)
    out[1:-1] = (A[2:] - 2 * A[1:-1] + A[:-2]) / h**2
    if A.shape[0] >= 4:
        out[0] = (2 * A[0] - 5 * A[1] + 4 * A[2] - A[3]) / h**2
        out[-1] = (2 * A[-1] - 5 * A[-2] + 4 * A[-3] - A[-4]) / h**2
    else:
        out[0], out[-1] = out[1], out[-2]
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class _Padded:
    """Spatial padding of the grid: (lo, hi) cell counts in x and y."""

    px: tuple
    py: tuple
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray

    def crop(self, A):
        return A[..., self.py[0] : self.py[0] + self.ny, self.px[0] : self.px[0] + self.nx]


def required_padding(grid, omega, N):
    """Cells needed so that characteristics x + (t - τ)ω from Ω stay inside, plus a stencil margin."""
    m = N + 3
    sx = int(np.ceil(grid.T * abs(omega[0]) / grid.dx - 1e-12))
    sy = int(np.ceil(grid.T * abs(omega[1]) / grid.dy - 1e-12))
    px = (m, m + sx) if omega[0] >= 0 else (m + sx, m)
    py = (m, m + sy) if omega[1] >= 0 else (m + sy, m)
    return px, py


def _make_padded(grid, px, py):
    x = grid.x[0] + grid.dx * np.arange(-px[0], grid.nx + px[1])
    y = grid.y[0] + grid.dy * np.arange(-py[0], grid.ny + py[1])
    return _Padded(px, py, grid.nx, grid.ny, x, y)


def extend_potential(grid, a, pad):
    """Potential on the padded grid.

    Callables are evaluated directly.  Arrays are extended by their nearest
    boundary value, blended smoothly to the mean boundary value across the halo.
    """
    X, Y = np.meshgrid(pad.x, pad.y)
    if callable(a):
        return np.broadcast_to(np.asarray(a(X, Y), dtype=float), X.shape).copy()
    a = np.broadcast_to(np.asarray(a, dtype=float), grid.spatial_shape)
    ext = np.pad(a, (pad.py, pad.px), mode="edge")
    edge = np.concatenate([a[0], a[-1], a[:, 0], a[:, -1]])
    dist = np.hypot(np.maximum(0, np.maximum(-X, X - grid.Lx)), np.maximum(0, np.maximum(-Y, Y - grid.Ly)))
    halo = max(max(pad.px + pad.py) * min(grid.dx, grid.dy), 1e-300)
    s = smooth_step(dist / halo)
    return (1 - s) * ext + s * edge.mean()


def _wave_op(A, a_pad, dt, dx, dy):
    return _second_diff(A, dt, 0) - _second_diff(A, dx, 2) - _second_diff(A, dy, 1) + a_pad[None] * A


def _transport_padded(grid, a, omega, N, pad=None, A0=None):
    omega = unit_vector(omega)
    if N < 1:
        raise ValueError("N must be at least 1")
    need = required_padding(grid, omega, N)
    if pad is None:
        pad = need
    if any(p < q for p, q in zip(pad[0] + pad[1], need[0] + need[1])):
        raise HaloError(f"padding {pad} is smaller than the required halo {need}")
    P = _make_padded(grid, *pad)
    a_pad = extend_potential(grid, a, P)
    nt, dt = grid.nt, grid.dt
    W = _simpson_weights(nt, dt)
    if A0 is None:
        amps = [np.ones((nt, P.y.size, P.x.size))]
    else:
        amps = [np.broadcast_to(A0(grid.t[:, None, None], P.x[None, None, :], P.y[None, :, None]), (nt, P.y.size, P.x.size)).astype(float)]
    # characteristic frame ξ = x + tω: A(t, x) = -C(t, x + tω) with C(t, ξ) = ∫_0^t src(τ, ξ - τω) dτ
    shape = (P.y.size, P.x.size)
    qx = int(np.ceil(grid.T * max(-omega[0], 0.0) / grid.dx)) + 1
    qy = int(np.ceil(grid.T * max(-omega[1], 0.0) / grid.dy)) + 1
    frame = (
        shape[0] + qy + int(np.ceil(grid.T * max(omega[1], 0.0) / grid.dy)) + 1,
        shape[1] + qx + int(np.ceil(grid.T * max(omega[0], 0.0) / grid.dx)) + 1,
    )
    cx = grid.t * omega[0] / grid.dx
    cy = grid.t * omega[1] / grid.dy
    m_in = int(np.ceil(max(qx + np.max(np.abs(cx)), qy + np.max(np.abs(cy))))) + max(frame) - min(shape) + 2
    m_out = int(np.ceil(max(qx + np.max(np.abs(cx)), qy + np.max(np.abs(cy))))) + 2
    for _ in range(N):
        src = _wave_op(amps[-1], a_pad, dt, grid.dx, grid.dy)
        G = np.empty((nt,) + frame)
        for n in range(nt):
            G[n] = _shift_bilinear(np.pad(src[n], m_in, mode="edge"), m_in, frame, -qx - cx[n], -qy - cy[n])
        C = (W @ G.reshape(nt, -1)).reshape(G.shape)
        del G
        A = np.empty_like(src)
        for n in range(nt):
            A[n] = -_shift_bilinear(np.pad(C[n], m_out, mode="edge"), m_out, shape, qx + cx[n], qy + cy[n])
        amps.append(A)
    return amps, P, a_pad


def transport_solve(grid, a, omega, N, pad=None):
    """Amplitudes A_0 = 1, A_1..A_N on the grid.

    A_k(t, x) = -∫_0^t (d_t^2 - Δ + a) A_{k-1}(τ, x + (t - τ)ω) dτ, Simpson in τ on
    the time nodes with bilinear interpolation in space.  ``a`` may be a constant,
    an (ny, nx) array or a callable a(x, y) evaluated on the padded grid.
    """
    amps, P, _ = _transport_padded(grid, a, omega, N, pad)
    return [SpaceTimeScalarField(grid, P.crop(A)) for A in amps]


def _assemble(grid, amps, P, a_pad, omega, c, phase):
    """Phase times Σ_k A_k c^{-k}: values, gradient and residual with the phase factored out.

    With ∇_{t,x} phase = (c/2)(1, ω) phase the residual of the truncated sum is
    phase * Σ_k [(□ + a) A_k + c (d_t - ω·∇) A_k] c^{-k}.
    """
    dt, dx, dy = grid.dt, grid.dx, grid.dy
    dtype = complex if np.iscomplexobj(c) else float
    S = np.zeros(amps[0].shape, dtype=dtype)
    smooth_res = np.zeros_like(S)
    for k, A in enumerate(amps):
        S += A / c**k
        gt, gy, gx = np.gradient(A, dt, dy, dx, edge_order=2)
        smooth_res += (_wave_op(A, a_pad, dt, dx, dy) + c * (gt - omega[0] * gx - omega[1] * gy)) / c**k
    St, Sy, Sx = (P.crop(g) for g in np.gradient(S, dt, dy, dx, edge_order=2))
    S = P.crop(S)
    half = 0.5 * c
    ansatz = phase * S
    grad = (phase * (half * S + St), phase * (half * omega[0] * S + Sx), phase * (half * omega[1] * S + Sy))
    return ansatz, grad, phase * P.crop(smooth_res)


# ----------------------------------------------------------- WKB probes


@dataclass(eq=False)
class WKBProbe:
    omega: np.ndarray
    lam: float
    N: int
    amplitudes: list
    remainder: np.ndarray
    grid: object
    ansatz: np.ndarray
    ansatz_grad: tuple
    residual: np.ndarray

    @property
    def field(self):
        """Complex v = ansatz + R on the grid."""
        return self.ansatz + self.remainder

    def gradient(self):
        gR = [gr + 1j * gi for gr, gi in zip(_grad_arrays(self.remainder.real, self.grid), _grad_arrays(self.remainder.imag, self.grid))]
        return tuple(g + r for g, r in zip(self.ansatz_grad, gR))

    def real_parts(self):
        """(Re v, Im v) as solver-grade real solutions."""
        v = self.field
        return SpaceTimeScalarField(self.grid, v.real), SpaceTimeScalarField(self.grid, v.imag)

    def residual_norm(self):
        from .grid import qt_weights

        return float(np.sqrt(np.sum(np.abs(self.residual) ** 2 * qt_weights(self.grid))))


def build_wkb(grid, a, omega, lam, N=2, pad=None):
    """WKB probe e^{iλ(t + x·ω)} Σ_{k<=N} A_k (2iλ)^{-k} + R.

    The residual of the truncated sum is evaluated with the phase factored out,
    e^{iλs} Σ_k [(□ + a) A_k + 2iλ (d_t - ω·∇) A_k] (2iλ)^{-k}, and R solves the
    forced problem with zero data (real and imaginary parts separately).
    """
    omega = unit_vector(omega)
    if lam * max(grid.dx, grid.dy) > 0.5:
        raise ResolutionError(f"lambda*max(dx,dy) = {lam * max(grid.dx, grid.dy):.3g} exceeds 0.5")
    amps, P, a_pad = _transport_padded(grid, a, omega, N, pad)
    t, x, y = grid.mesh()
    phase = np.exp(1j * lam * (t + x * omega[0] + y * omega[1]))
    ansatz, grad, residual = _assemble(grid, amps, P, a_pad, omega, 2j * lam, phase)
    a_grid = P.crop(a_pad)
    zero = InitialBoundaryData.zeros(grid)
    R = solve_linear_ibvp(grid, a_grid, zero, -residual.real).values + 1j * solve_linear_ibvp(
        grid, a_grid, zero, -residual.imag
    ).values
    amp_fields = [SpaceTimeScalarField(grid, P.crop(A)) for A in amps]
    return WKBProbe(omega, float(lam), int(N), amp_fields, R, grid, ansatz, grad, residual)


def det_field(probes):
    """det[grad v_j] / λ^3 at every grid node (complex array)."""
    lam = probes[0].lam
    if any(p.lam != lam or p.grid is not probes[0].grid for p in probes):
        raise ValueError("probes must share grid and lambda")
    G = [p.gradient() for p in probes]
    M = np.stack([np.stack(g, axis=-1) for g in G], axis=-2)
    return np.linalg.det(M) / lam**3


def gradient_matrix_det(probes, t, x, y=None):
    """det[d v_j / d(t, x1, x2)] / λ^3 at a point (trilinear interpolation between nodes)."""
    if y is None:
        x, y = x
    grid = probes[0].grid
    if not (0 <= t <= grid.T and 0 <= x <= grid.Lx and 0 <= y <= grid.Ly):
        raise ValueError(f"point ({t}, {x}, {y}) lies outside the grid")
    rows = []
    for p in probes:
        row = []
        for g in p.gradient():
            re = RegularGridInterpolator((grid.t, grid.y, grid.x), g.real)((t, y, x))
            im = RegularGridInterpolator((grid.t, grid.y, grid.x), g.imag)((t, y, x))
            row.append(complex(re) + 1j * complex(im))
        rows.append(row)
    return complex(np.linalg.det(np.array(rows)) / probes[0].lam ** 3)


def limiting_det(directions):
    """det[(1, ω_j)]: modulus of the λ -> ∞ limit of det/λ^3."""
    return float(np.linalg.det(np.array([[1.0, *w] for w in directions])))
