"""Input-output map: conormal flux on the lateral boundary plus the final Cauchy pair."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .expansion import slope_fit
from .fieldio import read_array, write_array, write_csv
from .grid import (
    SIDES,
    _grad_arrays,
    face_slice,
    face_spacing,
    integrate_face,
    integrate_omega,
    outward_normal,
    trapezoid_weights,
)
from .linear import InitialBoundaryData, solve_linear_ibvp
from .nonlinear import _flux_arrays, _remainder_array, second_order_source, solve_nonlinear

__all__ = [
    "IOData",
    "compute_iomap",
    "compute_linearized_iomap",
    "first_order_defect",
    "second_order_extract",
    "direct_second_order_record",
    "sign_flip_combination",
    "trace_norm",
    "records_from_field",
    "record_normal_derivative",
    "record_time_derivative",
    "pairing_weights",
]


@dataclass(frozen=True, eq=False)
class IOData:
    grid: object
    lateral_flux: dict
    final_u: np.ndarray
    final_ut: np.ndarray

    def __post_init__(self):
        g = self.grid
        if set(self.lateral_flux) != set(SIDES):
            raise ValueError(f"lateral_flux must cover the faces {SIDES}")
        for side in SIDES:
            n = g.ny if side in ("x-", "x+") else g.nx
            if np.shape(self.lateral_flux[side]) != (g.nt, n):
                raise ValueError(f"flux record on {side} has the wrong shape")
        if np.shape(self.final_u) != g.spatial_shape or np.shape(self.final_ut) != g.spatial_shape:
            raise ValueError("final records must have the spatial grid shape")

    def _map(self, fn, other=None):
        if other is None:
            return IOData(self.grid, {s: fn(v) for s, v in self.lateral_flux.items()}, fn(self.final_u), fn(self.final_ut))
        if other.grid.shape != self.grid.shape:
            raise ValueError("IOData records live on different grids")
        return IOData(
            self.grid,
            {s: fn(self.lateral_flux[s], other.lateral_flux[s]) for s in SIDES},
            fn(self.final_u, other.final_u),
            fn(self.final_ut, other.final_ut),
        )

    def __add__(self, other):
        return self._map(np.add, other)

    def __sub__(self, other):
        return self._map(np.subtract, other)

    def __mul__(self, s):
        return self._map(lambda v: s * v)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self._map(lambda v: v / s)

    def norm(self):
        return trace_norm(self)

    def relative_error(self, reference):
        den = trace_norm(reference)
        return trace_norm(self - reference) / den if den > 0 else trace_norm(self - reference)

    def identical(self, other):
        return all(np.array_equal(self.lateral_flux[s], other.lateral_flux[s]) for s in SIDES) and np.array_equal(
            self.final_u, other.final_u
        ) and np.array_equal(self.final_ut, other.final_ut)

    def save(self, directory):
        """One NLWF file per face and final record plus ``manifest.csv``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        rows = []
        for side in SIDES:
            name = f"flux_{side.replace('-', 'm').replace('+', 'p')}.nlwf"
            write_array(directory / name, self.lateral_flux[side])
            rows.append(("lateral_flux", side, name))
        write_array(directory / "final_u.nlwf", self.final_u)
        write_array(directory / "final_ut.nlwf", self.final_ut)
        rows += [("final_u", "", "final_u.nlwf"), ("final_ut", "", "final_ut.nlwf")]
        write_csv(directory / "manifest.csv", ["record", "side", "file"], rows)

    @classmethod
    def load(cls, directory, grid):
        directory = Path(directory)
        flux, finals = {}, {}
        with open(directory / "manifest.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                arr = read_array(directory / row["file"])
                if row["record"] == "lateral_flux":
                    flux[row["side"]] = arr
                else:
                    finals[row["record"]] = arr
        return cls(grid, flux, finals["final_u"], finals["final_ut"])

    @classmethod
    def zeros(cls, grid):
        flux = {s: np.zeros((grid.nt, grid.ny if s in ("x-", "x+") else grid.nx)) for s in SIDES}
        return cls(grid, flux, np.zeros(grid.spatial_shape), np.zeros(grid.spatial_shape))


def trace_norm(io):
    """sqrt(sum_faces |flux|^2_{L2(face x (0,T))} + |u(T)|^2 + |u_t(T)|^2)."""
    g = io.grid
    s = sum(integrate_face(io.lateral_flux[side] ** 2, g, side) for side in SIDES)
    s += integrate_omega(io.final_u**2, g) + integrate_omega(io.final_ut**2, g)
    return float(np.sqrt(s))


def record_normal_derivative(u, grid, side):
    """Outward difference between a face and the adjacent interior line.

    This first-order stencil is the one the leapfrog scheme produces when summed by
    parts, which makes the boundary pairing with a discrete solution exact.
    """
    if side == "x-":
        return (u[:, :, 0] - u[:, :, 1]) / grid.dx
    if side == "x+":
        return (u[:, :, -1] - u[:, :, -2]) / grid.dx
    if side == "y-":
        return (u[:, 0, :] - u[:, 1, :]) / grid.dy
    if side == "y+":
        return (u[:, -1, :] - u[:, -2, :]) / grid.dy
    raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def record_time_derivative(u, grid):
    """Backward difference (u^N - u^{N-1}) / dt at the final level."""
    return (u[-1] - u[-2]) / grid.dt


def pairing_weights(grid, side):
    """Weights (nt, n_along) that pair a lateral record with a face trace.

    The time weights are dt on the interior levels and zero at t=0 and t=T, which is
    how the lateral terms appear in the summation-by-parts identity of the scheme.
    """
    wt = np.full(grid.nt, grid.dt)
    wt[0] = wt[-1] = 0.0
    n = grid.ny if side in ("x-", "x+") else grid.nx
    return wt[:, None] * trapezoid_weights(n, face_spacing(grid, side))[None, :]


def records_from_field(u, grid, flux=None):
    """Assemble IOData from a space-time array; ``flux`` optionally gives (N_t, N_x, N_y) arrays."""
    lateral = {}
    for side in SIDES:
        rec = record_normal_derivative(u, grid, side)
        if flux is not None:
            nx, ny = outward_normal(side)
            rec = rec + nx * face_slice(flux[1], side) + ny * face_slice(flux[2], side)
        lateral[side] = np.array(rec)
    return IOData(grid, lateral, np.array(u[-1]), record_time_derivative(u, grid))


def compute_iomap(grid, coeffs, data, eps, scheme="picard", **solver_kw):
    """Solve the nonlinear problem with data eps*(phi, psi, f) and record its boundary response."""
    if eps == 0:
        return IOData.zeros(grid)
    u = solve_nonlinear(grid, coeffs, data, eps, scheme, **solver_kw).values
    flux = None
    if not coeffs.is_linear:
        r = _remainder_array(coeffs, grid.shape)
        flux = _flux_arrays(coeffs.b.components, r, None, *_grad_arrays(u, grid))
    return records_from_field(u, grid, flux)


def compute_linearized_iomap(grid, a, data, u1=None):
    """Records of the linear solution u1: (normal derivative, u1(T), d_t u1(T))."""
    if u1 is None:
        u1 = solve_linear_ibvp(grid, a, data)
    return records_from_field(u1.values, grid)


def first_order_defect(grid, coeffs, data, eps_list, scheme="picard", **solver_kw):
    """Rows (eps, |Lam(eps) - eps Lam_a|, |Lam(eps) - eps Lam_a| / eps) and the slope fit of the middle column."""
    lin = compute_linearized_iomap(grid, coeffs.a, data)
    rows = []
    for e in eps_list:
        d = trace_norm(compute_iomap(grid, coeffs, data, e, scheme, **solver_kw) - e * lin)
        rows.append((float(e), d, d / e))
    fit = None
    if len(rows) >= 3 and all(r[1] > 0 for r in rows):
        fit = slope_fit([(r[0], r[1]) for r in rows])
    return {"rows": rows, "fit": fit}


def sign_flip_combination(grid, coeffs, data, eps, scheme="picard", **solver_kw):
    """Lam_b(eps) + Lam_{-b}(eps) - 2 eps Lam_a: the eps^2 terms cancel, leaving O(eps^3)."""
    lin = compute_linearized_iomap(grid, coeffs.a, data)
    plus = compute_iomap(grid, coeffs, data, eps, scheme, **solver_kw)
    minus = compute_iomap(grid, coeffs.negated_b(), data, eps, scheme, **solver_kw)
    return plus + minus - 2 * eps * lin, plus - eps * lin


def direct_second_order_record(grid, coeffs, data, u1=None):
    """Records of u2 with flux d_nu u2 + nu.b|grad u1|^2, computed from the u2 problem directly."""
    if u1 is None:
        u1 = solve_linear_ibvp(grid, coeffs.a, data)
    u2 = solve_linear_ibvp(grid, coeffs.a, InitialBoundaryData.zeros(grid), second_order_source(coeffs, u1))
    qt, qx, qy = _grad_arrays(u1.values, grid)
    q2 = qt * qt + qx * qx + qy * qy
    flux = tuple(q2 * c for c in coeffs.b.components)
    return records_from_field(u2.values, grid, flux)


def second_order_extract(grid, coeffs, data, eps_pair, scheme="picard", lin=None, rtol_warn=0.2, **solver_kw):
    """Second-order record g2 from boundary data at eps and eps/2.

    A(e) = (Lam(e) - e Lam_a) / e^2 = g2 + O(e); the combination 2 A(eps/2) - A(eps)
    removes the O(e) term.
    """
    e1, e2 = (float(e) for e in eps_pair)
    if e1 <= 0 or abs(e2 - 0.5 * e1) > 1e-12 * e1:
        raise ConfigError("eps_pair must be (eps, eps/2) with eps > 0")
    if lin is None:
        lin = compute_linearized_iomap(grid, coeffs.a, data)
    A1 = (compute_iomap(grid, coeffs, data, e1, scheme, **solver_kw) - e1 * lin) / e1**2
    A2 = (compute_iomap(grid, coeffs, data, e2, scheme, **solver_kw) - e2 * lin) / e2**2
    n2 = trace_norm(A2)
    if n2 > 0 and trace_norm(A1 - A2) > rtol_warn * n2:
        warnings.warn(
            f"second-order estimates at eps={e1} and eps={e2} differ by more than {rtol_warn:.0%}; "
            "eps is likely outside the expansion radius",
            RuntimeWarning,
            stacklevel=2,
        )
    return 2 * A2 - A1
