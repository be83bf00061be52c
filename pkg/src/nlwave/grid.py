"""Space-time grid on (0,T) x rectangle, sampled fields and discrete operators.

Arrays are indexed ``(time, y, x)``.  All derivatives use second-order
centered differences in the interior and second-order one-sided differences
at the ends of every axis (the stencils of :func:`numpy.gradient` with
``edge_order=2``), so the operators are exact on quadratics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CFLError, GridTooSmallError

SIDES = ("x-", "x+", "y-", "y+")


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid on [0,T] x [0,Lx] x [0,Ly] including end points."""

    nx: int
    ny: int
    nt: int
    Lx: float = 1.0
    Ly: float = 1.0
    T: float = 1.0
    cfl_safety: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise GridTooSmallError(f"need at least 3 points per spatial axis, got nx={self.nx}, ny={self.ny}")
        if self.nt < 2:
            raise GridTooSmallError(f"need at least 2 time levels, got nt={self.nt}")
        if min(self.Lx, self.Ly, self.T) <= 0:
            raise ValueError("extents must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")

    @classmethod
    def from_courant(cls, nx, ny, T, courant=0.5, Lx=1.0, Ly=1.0, cfl_safety=1.0):
        """Grid whose time step is ``courant * min(dx, dy)`` (rounded down to fit T)."""
        h = min(Lx / (nx - 1), Ly / (ny - 1))
        nt = int(np.ceil(T / (courant * h) - 1e-9)) + 1
        return cls(nx, ny, nt, Lx, Ly, T, cfl_safety)

    @property
    def dx(self):
        return self.Lx / (self.nx - 1)

    @property
    def dy(self):
        return self.Ly / (self.ny - 1)

    @property
    def dt(self):
        return self.T / (self.nt - 1)

    @property
    def shape(self):
        return (self.nt, self.ny, self.nx)

    @property
    def spatial_shape(self):
        return (self.ny, self.nx)

    @property
    def h(self):
        return max(self.dx, self.dy, self.dt)

    @cached_property
    def t(self):
        return np.linspace(0.0, self.T, self.nt)

    @cached_property
    def x(self):
        return np.linspace(0.0, self.Lx, self.nx)

    @cached_property
    def y(self):
        return np.linspace(0.0, self.Ly, self.ny)

    def mesh(self):
        """Broadcastable coordinate arrays ``(t, x, y)`` of shapes (nt,1,1), (1,1,nx), (1,ny,1)."""
        return self.t[:, None, None], self.x[None, None, :], self.y[None, :, None]

    def spatial_mesh(self):
        return np.meshgrid(self.x, self.y)

    @property
    def diameter(self):
        return float(np.hypot(self.Lx, self.Ly))

    def max_stable_dt(self):
        return self.cfl_safety * min(self.dx, self.dy) / np.sqrt(2.0)

    def check_cfl(self):
        if self.dt > self.max_stable_dt() * (1 + 1e-12):
            raise CFLError(
                f"dt={self.dt:.6g} exceeds cfl_safety*min(dx,dy)/sqrt(2)={self.max_stable_dt():.6g}"
            )

    def require_time_derivatives(self):
        if min(self.nt, self.ny, self.nx) < 3:
            raise GridTooSmallError("second-order differences need at least 3 points on every axis")

    def sample(self, func):
        """Evaluate ``func(t, x, y)`` on the full grid."""
        t, x, y = self.mesh()
        return np.broadcast_to(func(t, x, y), self.shape).astype(float)


def _frozen(values, shape):
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SpaceTimeScalarField:
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, grid.sample(func))

    def _other(self, other):
        if isinstance(other, SpaceTimeScalarField):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return SpaceTimeScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SpaceTimeScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return SpaceTimeScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return SpaceTimeScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SpaceTimeScalarField(self.grid, -self.values)

    def at_time(self, k):
        return self.values[k]


@dataclass(frozen=True, eq=False)
class SpaceTimeVectorField:
    """Components along (t, x, y)."""

    grid: SpaceTimeGrid
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        for name in ("t", "x", "y"):
            object.__setattr__(self, name, _frozen(getattr(self, name), self.grid.shape))

    @classmethod
    def zeros(cls, grid):
        z = np.zeros(grid.shape)
        return cls(grid, z, z, z)

    @property
    def components(self):
        return (self.t, self.x, self.y)

    def dot(self, other):
        return SpaceTimeScalarField(self.grid, sum(a * b for a, b in zip(self.components, other.components)))

    def norm_sq(self):
        return SpaceTimeScalarField(self.grid, self.t**2 + self.x**2 + self.y**2)

    def __add__(self, other):
        return SpaceTimeVectorField(self.grid, *(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return SpaceTimeVectorField(self.grid, *(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, s):
        return SpaceTimeVectorField(self.grid, *(c * s for c in self.components))

    __rmul__ = __mul__


@dataclass(frozen=True)
class RemainderSpec:
    """Higher-order flux part ``R(t,x,q) = r(t,x) q |q|^2`` (or zero).

    ``radius`` bounds |q| for which the cubic model is trusted.
    """

    kind: str = "zero"
    r: np.ndarray | None = field(default=None, compare=False)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "cubic"):
            raise ValueError(f"unknown remainder kind {self.kind!r}")
        if self.kind == "cubic":
            if self.r is None:
                raise ValueError("cubic remainder needs an amplitude field r")
            arr = np.array(self.r, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, "r", arr)

    @property
    def bound_constant(self):
        """C in |R| <= C |q|^3."""
        return 0.0 if self.kind == "zero" else float(np.max(np.abs(self.r)))


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """One medium: potential a(x), quadratic coefficient b(t,x), remainder R."""

    a: np.ndarray
    b: SpaceTimeVectorField
    remainder: RemainderSpec = RemainderSpec()
    flat_margin: float = 0.0

    def __post_init__(self):
        grid = self.b.grid
        a = np.array(np.broadcast_to(self.a, grid.spatial_shape), dtype=float)
        if not np.all(np.isfinite(a)):
            raise ValueError("potential contains non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        scale = max(1.0, max(float(np.max(np.abs(c))) for c in self.b.components))
        n_flat = 1 + int(np.floor(self.flat_margin / grid.dt + 1e-9))
        for c in self.b.components:
            if np.max(np.abs(c[:n_flat])) > 1e-12 * scale:
                raise ValueError("b must vanish on the first time slice and inside the flatness margin")
            if np.max(np.abs(c[-1])) > 1e-12 * scale:
                raise ValueError("b must vanish at t = T")
        if self.remainder.kind == "cubic":
            r = np.broadcast_to(self.remainder.r, grid.shape)
            if np.max(np.abs(r[:n_flat])) > 1e-12 * max(1.0, float(np.max(np.abs(r)))):
                raise ValueError("remainder amplitude must vanish near t = 0")

    @property
    def grid(self):
        return self.b.grid

    @property
    def is_linear(self):
        return self.remainder.kind == "zero" and all(not np.any(c) for c in self.b.components)

    def with_b(self, b):
        return CoefficientSet(self.a, b, self.remainder, self.flat_margin)

    def with_remainder(self, remainder):
        return CoefficientSet(self.a, self.b, remainder, self.flat_margin)

    def negated_b(self):
        return self.with_b(self.b * -1.0)


# ---------------------------------------------------------------- operators

def _grad_arrays(values, grid):
    grid.require_time_derivatives()
    gt, gy, gx = np.gradient(values, grid.dt, grid.dy, grid.dx, edge_order=2)
    return gt, gx, gy


def _div_arrays(vt, vx, vy, grid):
    grid.require_time_derivatives()
    return (
        np.gradient(vt, grid.dt, axis=0, edge_order=2)
        + np.gradient(vx, grid.dx, axis=2, edge_order=2)
        + np.gradient(vy, grid.dy, axis=1, edge_order=2)
    )


def gradient_tx(field):
    """Space-time gradient (d/dt, d/dx, d/dy) of a scalar field."""
    return SpaceTimeVectorField(field.grid, *_grad_arrays(field.values, field.grid))


def divergence_tx(vfield):
    """Space-time divergence with the same stencils as :func:`gradient_tx`."""
    return SpaceTimeScalarField(vfield.grid, _div_arrays(*vfield.components, vfield.grid))


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def qt_weights(grid):
    """Tensor-product trapezoid weights on the (t, y, x) grid."""
    wt = trapezoid_weights(grid.nt, grid.dt)
    wy = trapezoid_weights(grid.ny, grid.dy)
    wx = trapezoid_weights(grid.nx, grid.dx)
    return wt[:, None, None] * wy[None, :, None] * wx[None, None, :]


def omega_weights(grid):
    return trapezoid_weights(grid.ny, grid.dy)[:, None] * trapezoid_weights(grid.nx, grid.dx)[None, :]


def integrate_qt(field):
    """Trapezoid rule over Q_T; accepts a field or a raw (nt, ny, nx) array."""
    if isinstance(field, SpaceTimeScalarField):
        grid, values = field.grid, field.values
        return float(np.sum(values * qt_weights(grid)))
    raise TypeError("integrate_qt expects a SpaceTimeScalarField")


def integrate_omega(values, grid):
    """Trapezoid rule over the spatial rectangle for an (ny, nx) array."""
    return float(np.sum(values * omega_weights(grid)))


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def face_slice(values, side):
    """Restrict an (nt, ny, nx) array to one lateral face -> (nt, n_along)."""
    _check_side(side)
    return {
        "x-": values[:, :, 0],
        "x+": values[:, :, -1],
        "y-": values[:, 0, :],
        "y+": values[:, -1, :],
    }[side]


def face_spacing(grid, side):
    """Spacing along the face (the tangential direction)."""
    return grid.dy if side in ("x-", "x+") else grid.dx


def face_coordinates(grid, side):
    """Coordinates (x, y) of the face nodes, each of length n_along."""
    if side == "x-":
        return np.zeros(grid.ny), grid.y
    if side == "x+":
        return np.full(grid.ny, grid.Lx), grid.y
    if side == "y-":
        return grid.x, np.zeros(grid.nx)
    if side == "y+":
        return grid.x, np.full(grid.nx, grid.Ly)
    _check_side(side)


def outward_normal(side):
    _check_side(side)
    return {"x-": (-1.0, 0.0), "x+": (1.0, 0.0), "y-": (0.0, -1.0), "y+": (0.0, 1.0)}[side]


def lateral_trace(field, side):
    values = field.values if isinstance(field, SpaceTimeScalarField) else field
    return np.array(face_slice(values, side))


def normal_derivative(values, grid, side):
    """Outward normal derivative with second-order one-sided differences."""
    _check_side(side)
    if side == "x-":
        return -(-3 * values[:, :, 0] + 4 * values[:, :, 1] - values[:, :, 2]) / (2 * grid.dx)
    if side == "x+":
        return (3 * values[:, :, -1] - 4 * values[:, :, -2] + values[:, :, -3]) / (2 * grid.dx)
    if side == "y-":
        return -(-3 * values[:, 0, :] + 4 * values[:, 1, :] - values[:, 2, :]) / (2 * grid.dy)
    return (3 * values[:, -1, :] - 4 * values[:, -2, :] + values[:, -3, :]) / (2 * grid.dy)


def neumann_trace(field, side):
    return normal_derivative(field.values, field.grid, side)


def integrate_face(values, grid, side):
    """Trapezoid rule over one lateral face (time x tangential coordinate)."""
    wt = trapezoid_weights(grid.nt, grid.dt)
    ws = trapezoid_weights(values.shape[1], face_spacing(grid, side))
    return float(np.sum(values * wt[:, None] * ws[None, :]))


def integrate_lateral(records, grid):
    """Sum of face integrals of a {side: (nt, n_along)} record."""
    return sum(integrate_face(records[s], grid, s) for s in SIDES)


def time_derivative_at_end(values, grid):
    """d/dt at t=T, second-order one-sided (matches :func:`gradient_tx`)."""
    if grid.nt < 3:
        return (values[-1] - values[-2]) / grid.dt
    return (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * grid.dt)


def time_derivative_at_start(values, grid):
    if grid.nt < 3:
        return (values[1] - values[0]) / grid.dt
    return (-3 * values[0] + 4 * values[1] - values[2]) / (2 * grid.dt)
