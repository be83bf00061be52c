"""Leapfrog solver for  u_tt - Δu + a u = F  with Dirichlet and Cauchy data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLError, NumericalFailure
from .grid import SIDES, SpaceTimeScalarField, face_coordinates

__all__ = ["InitialBoundaryData", "solve_linear_ibvp", "discrete_energy", "laplacian_interior"]


def _as_record(f, grid):
    out = {}
    for side in SIDES:
        n = grid.ny if side in ("x-", "x+") else grid.nx
        arr = np.array(f[side], dtype=float)
        if arr.shape != (grid.nt, n):
            raise ValueError(f"boundary record for {side} must have shape {(grid.nt, n)}, got {arr.shape}")
        arr.flags.writeable = False
        out[side] = arr
    return out


@dataclass(frozen=True, eq=False)
class InitialBoundaryData:
    """Cauchy data (phi, psi) at t=0 and Dirichlet record f on the four faces.

    ``f[side]`` has shape (nt, n_along); corners appear on two faces and must agree.
    """

    grid: object
    phi: np.ndarray
    psi: np.ndarray
    f: dict
    flat_margin: float = 0.0
    check: bool = True

    def __post_init__(self):
        g = self.grid
        phi = np.array(np.broadcast_to(self.phi, g.spatial_shape), dtype=float)
        psi = np.array(np.broadcast_to(self.psi, g.spatial_shape), dtype=float)
        phi.flags.writeable = psi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "f", _as_record(self.f, g))
        if self.check:
            self.check_compatibility()

    def check_compatibility(self, rtol=1e-9):
        scale = max(1.0, float(np.max(np.abs(self.phi))), *(float(np.max(np.abs(v))) for v in self.f.values()))
        edges = {"x-": self.phi[:, 0], "x+": self.phi[:, -1], "y-": self.phi[0, :], "y+": self.phi[-1, :]}
        for side in SIDES:
            if np.max(np.abs(self.f[side][0] - edges[side])) > rtol * scale:
                raise ValueError(f"boundary data on {side} disagree with phi at t=0")
        if self.flat_margin > 0:
            n = 1 + int(np.floor(self.flat_margin / self.grid.dt + 1e-9))
            for side in SIDES:
                if np.max(np.abs(self.f[side][:n] - self.f[side][0])) > rtol * scale:
                    raise ValueError(f"boundary data on {side} are not flat inside the margin")

    @classmethod
    def zeros(cls, grid):
        z = {s: np.zeros((grid.nt, grid.ny if s in ("x-", "x+") else grid.nx)) for s in SIDES}
        return cls(grid, np.zeros(grid.spatial_shape), np.zeros(grid.spatial_shape), z)

    @classmethod
    def from_functions(cls, grid, u, ut, **kw):
        """Data matching a function ``u(t, x, y)`` with time derivative ``ut``."""
        X, Y = grid.spatial_mesh()
        phi = np.broadcast_to(u(0.0, X, Y), grid.spatial_shape)
        psi = np.broadcast_to(ut(0.0, X, Y), grid.spatial_shape)
        f = {}
        t = grid.t[:, None]
        for side in SIDES:
            xs, ys = face_coordinates(grid, side)
            f[side] = np.broadcast_to(u(t, xs[None, :], ys[None, :]), (grid.nt, xs.size))
        return cls(grid, phi, psi, f, **kw)

    def _combine(self, other, op):
        return InitialBoundaryData(
            self.grid,
            op(self.phi, other.phi),
            op(self.psi, other.psi),
            {s: op(self.f[s], other.f[s]) for s in SIDES},
            check=False,
        )

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def scaled(self, s):
        return InitialBoundaryData(
            self.grid, s * self.phi, s * self.psi, {k: s * v for k, v in self.f.items()}, check=False
        )

    __mul__ = scaled
    __rmul__ = scaled

    def time_reversed(self, final_u, final_ut):
        """Data for the reflected problem t -> T - t started from a final pair."""
        return InitialBoundaryData(
            self.grid, final_u, -np.asarray(final_ut), {s: v[::-1] for s, v in self.f.items()}, check=False
        )

    def is_zero(self):
        return not (np.any(self.phi) or np.any(self.psi) or any(np.any(v) for v in self.f.values()))


def laplacian_interior(u, dx, dy):
    """Five-point Laplacian on interior nodes of an (..., ny, nx) array."""
    c = u[..., 1:-1, 1:-1]
    return (u[..., 1:-1, 2:] - 2 * c + u[..., 1:-1, :-2]) / dx**2 + (u[..., 2:, 1:-1] - 2 * c + u[..., :-2, 1:-1]) / dy**2


def _apply_dirichlet(u, f, k):
    u[:, 0] = f["x-"][k]
    u[:, -1] = f["x+"][k]
    u[0, :] = f["y-"][k]
    u[-1, :] = f["y+"][k]


def check_stability(grid, a):
    grid.check_cfl()
    amax = float(np.max(a)) if np.size(a) else 0.0
    if grid.dt**2 * amax >= 2.0:
        raise CFLError(f"dt^2 * max(a) = {grid.dt**2 * amax:.3g} must stay below 2")


def solve_linear_ibvp(grid, a, data, F=None, *, backward=False):
    """Leapfrog solution on the whole grid.

    ``a`` is a scalar or (ny, nx) array, ``F`` an optional space-time source
    (field or array).  With ``backward=True`` the Cauchy pair in ``data`` is
    imposed at t=T and the scheme runs on the reflected time axis.
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), grid.spatial_shape)
    check_stability(grid, a)
    if F is not None:
        F = F.values if isinstance(F, SpaceTimeScalarField) else np.asarray(F, dtype=float)
        if F.shape != grid.shape:
            raise ValueError("source shape does not match the grid")
    if backward:
        rev = InitialBoundaryData(grid, data.phi, -data.psi, {s: v[::-1] for s, v in data.f.items()}, check=False)
        u = _leapfrog(grid, a, rev, None if F is None else F[::-1])
        return SpaceTimeScalarField(grid, u[::-1])
    return SpaceTimeScalarField(grid, _leapfrog(grid, a, data, F))


def _leapfrog(grid, a, data, F):
    nt, dt = grid.nt, grid.dt
    dx, dy = grid.dx, grid.dy
    ai = a[1:-1, 1:-1]
    U = np.empty(grid.shape)
    U[0] = data.phi
    _apply_dirichlet(U[0], data.f, 0)
    acc = laplacian_interior(U[0], dx, dy) - ai * U[0, 1:-1, 1:-1]
    if F is not None:
        acc = acc + F[0, 1:-1, 1:-1]
    U[1] = U[0] + dt * data.psi
    U[1, 1:-1, 1:-1] += 0.5 * dt**2 * acc
    _apply_dirichlet(U[1], data.f, 1)
    dt2 = dt * dt
    for k in range(1, nt - 1):
        uk = U[k]
        acc = laplacian_interior(uk, dx, dy) - ai * uk[1:-1, 1:-1]
        if F is not None:
            acc += F[k, 1:-1, 1:-1]
        nxt = U[k + 1]
        nxt[1:-1, 1:-1] = 2 * uk[1:-1, 1:-1] - U[k - 1, 1:-1, 1:-1] + dt2 * acc
        _apply_dirichlet(nxt, data.f, k + 1)
        if not np.isfinite(nxt[1:-1, 1:-1].sum()):
            raise NumericalFailure(f"non-finite values at time step {k + 1}", step=k + 1)
    return U


def _inner(u, v, grid):
    return float(np.sum(u[1:-1, 1:-1] * v[1:-1, 1:-1])) * grid.dx * grid.dy


def _grad_inner(u, v, grid):
    dx, dy = grid.dx, grid.dy
    gx = np.sum((u[:, 1:] - u[:, :-1]) * (v[:, 1:] - v[:, :-1])) / dx**2
    gy = np.sum((u[1:, :] - u[:-1, :]) * (v[1:, :] - v[:-1, :])) / dy**2
    return float(gx + gy) * dx * dy


def discrete_energy(u, a, k):
    """Staggered leapfrog energy between levels k and k+1.

    E^k = 1/2 |D_t u|^2 + 1/2 <grad_h u^k, grad_h u^{k+1}> + 1/2 <a u^k, u^{k+1}>,
    exactly conserved by the scheme when data and source vanish.
    """
    grid = u.grid
    if not 1 <= k <= grid.nt - 2:
        raise IndexError(f"energy index k={k} outside [1, {grid.nt - 2}]")
    v = u.values
    a = np.broadcast_to(np.asarray(a, dtype=float), grid.spatial_shape)
    ut = (v[k + 1] - v[k]) / grid.dt
    return 0.5 * _inner(ut, ut, grid) + 0.5 * _grad_inner(v[k], v[k + 1], grid) + 0.5 * _inner(a * v[k], v[k + 1], grid)


def discrete_power(u, F, k):
    """Work rate <F^k, (u^{k+1}-u^{k-1})/(2dt)> balancing (E^k - E^{k-1})/dt."""
    grid = u.grid
    F = F.values if isinstance(F, SpaceTimeScalarField) else F
    v = u.values
    return _inner(F[k], (v[k + 1] - v[k - 1]) / (2 * grid.dt), grid)
