"""Reference scenario: smooth bumps, the reference medium and data battery."""

from __future__ import annotations

import numpy as np

from .grid import CoefficientSet, RemainderSpec, SpaceTimeGrid, SpaceTimeVectorField
from .linear import InitialBoundaryData


def bump1d(s):
    """C^infinity bump exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside, peak 1 at s=0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def smooth_step(s):
    """C^infinity step: 0 for s <= 0, 1 for s >= 1, all derivatives flat at both ends."""
    s = np.asarray(s, dtype=float)

    def g(z):
        out = np.zeros_like(z)
        m = z > 0
        out[m] = np.exp(-1.0 / z[m])
        return out

    a, b = g(s), g(1.0 - s)
    return a / (a + b)


def reference_grid(nx=33, ny=33, T=2.5, courant=0.5):
    return SpaceTimeGrid.from_courant(nx, ny, T, courant)


def reference_potential(grid):
    X, Y = grid.spatial_mesh()
    return 1.0 + 0.5 * np.sin(np.pi * X) * np.sin(np.pi * Y)


def bump_b(grid, amplitude=(0.15, 0.1, -0.125), t_center=None, t_halfwidth=None, center=(0.5, 0.5), radius=0.35):
    """Space-time bump b = amplitude * chi(t) * eta(x) vanishing flat near t=0 and t=T."""
    tc = 0.5 * grid.T if t_center is None else t_center
    hw = 0.36 * grid.T if t_halfwidth is None else t_halfwidth
    t, x, y = grid.mesh()
    rr = np.sqrt((x - center[0]) ** 2 + (y - center[1]) ** 2) / radius
    prof = bump1d((t - tc) / hw) * bump1d(rr)
    prof = np.broadcast_to(prof, grid.shape)
    return SpaceTimeVectorField(grid, *(c * prof for c in amplitude))


def zero_b(grid):
    return SpaceTimeVectorField.zeros(grid)


def cubic_remainder(grid, amplitude=0.05, start=0.3, ramp=0.5, radius=10.0):
    """r(t) = amplitude * S((t - start)/ramp), identically zero for t <= start."""
    r = amplitude * smooth_step((grid.t - start) / ramp)[:, None, None] * np.ones((1, grid.ny, grid.nx))
    return RemainderSpec("cubic", r, radius)


def reference_coefficients(grid, with_b=True, remainder=False, **bump_kw):
    b = bump_b(grid, **bump_kw) if with_b else zero_b(grid)
    rem = cubic_remainder(grid) if remainder else RemainderSpec()
    return CoefficientSet(reference_potential(grid), b, rem, flat_margin=0.1 * grid.T)


def reference_data(grid, amp=0.3, ramp=0.5):
    """phi = sin(pi x) sin(pi y), psi = 0, f = S(t/ramp) * amp cos(pi x) cos(pi y) on the boundary."""
    return mode_data(grid, 1, 1, boundary=(1, 1), amp=amp, ramp=ramp)


def mode_data(grid, m=1, n=1, boundary=None, amp=0.3, ramp=0.5, velocity=False):
    """Interior mode sin(m pi x) sin(n pi y) as phi (or psi) plus an optional boundary drive.

    ``boundary=(p, q)`` adds f = S(t/ramp) * amp * cos(p pi x / Lx) cos(q pi y / Ly).
    """
    X, Y = grid.spatial_mesh()
    mode = np.sin(m * np.pi * X / grid.Lx) * np.sin(n * np.pi * Y / grid.Ly)
    phi = np.zeros(grid.spatial_shape) if velocity else mode
    psi = mode if velocity else np.zeros(grid.spatial_shape)
    return InitialBoundaryData(grid, phi, psi, boundary_drive(grid, boundary, amp, ramp))


def boundary_drive(grid, boundary, amp=0.3, ramp=0.5, t_shift=0.0):
    from .grid import SIDES, face_coordinates

    out = {}
    s = smooth_step((grid.t - t_shift) / ramp)[:, None]
    for side in SIDES:
        xs, ys = face_coordinates(grid, side)
        if boundary is None:
            out[side] = np.zeros((grid.nt, xs.size))
        else:
            p, q = boundary
            out[side] = s * amp * np.cos(p * np.pi * xs / grid.Lx) * np.cos(q * np.pi * ys / grid.Ly)[None, :]
    return out
