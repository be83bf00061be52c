"""Small-amplitude expansion u = eps u1 + eps^2 u2 + O(eps^3) measured across an eps sweep."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, NLWaveError, NumericalFailure
from .fieldio import write_csv
from .grid import qt_weights
from .linear import InitialBoundaryData, solve_linear_ibvp
from .nonlinear import EPS_MAX, rho_distance, second_order_source, solve_nonlinear

CSV_HEADER = ["eps", "norm1_L2", "norm2_L2", "norm1_H1", "norm2_H1"]


def l2_qt(values, grid):
    return float(np.sqrt(np.sum(values**2 * qt_weights(grid))))


def slope_fit(pairs):
    """Least-squares line through (log eps, log value); returns (slope, intercept, r^2)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("slope_fit needs at least 3 pairs")
    e = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    if np.any(v <= 0) or np.any(e <= 0):
        raise ValueError("slope_fit needs positive eps and values")
    fit = stats.linregress(np.log(e), np.log(v))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


@dataclass
class ExpansionReport:
    rows: list
    floor: float = 0.0
    notes: dict = field(default_factory=dict)

    def column(self, name):
        i = CSV_HEADER.index(name)
        return [r[i] for r in self.rows]

    def fit(self, name="norm2_L2"):
        """Slope fit of one column, dropping values below 10x the floor."""
        pairs = [(r[0], r[CSV_HEADER.index(name)]) for r in self.rows]
        kept = [p for p in pairs if p[1] > 10 * self.floor]
        if len(kept) < 3:
            return None
        return slope_fit(kept)

    def to_csv(self, path):
        write_csv(path, CSV_HEADER, sorted(self.rows, key=lambda r: -r[0]))


def expansion_terms(grid, coeffs, data):
    """u1 and u2 from two linear solves."""
    u1 = solve_linear_ibvp(grid, coeffs.a, data)
    if coeffs.is_linear:
        return u1, None
    u2 = solve_linear_ibvp(grid, coeffs.a, InitialBoundaryData.zeros(grid), second_order_source(coeffs, u1))
    return u1, u2


def _norms(grid, ue, u1, u2, eps):
    r1 = ue - eps * u1
    r2 = r1 if u2 is None else r1 - eps * eps * u2
    return [eps, l2_qt(r1, grid), l2_qt(r2, grid), rho_distance(r1, grid), rho_distance(r2, grid)]


def epsilon_expand(grid, coeffs, data, eps_list, scheme="picard", eps_max=EPS_MAX, floor_run=True, **solver_kw):
    """Rows (eps, |u - eps u1|, |u - eps u1 - eps^2 u2|) in L2(Q_T) and the rho (sup-in-time H1) norm.

    ``floor`` is the largest second-order remainder of the same sweep with b
    and R switched off, i.e. the scheme's own agreement level.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    if any(e <= 0 or e >= eps_max for e in eps_list):
        raise ConfigError(f"every eps must lie in (0, eps_max={eps_max})")
    u1, u2 = expansion_terms(grid, coeffs, data)
    rows = []
    for e in eps_list:
        try:
            ue = solve_nonlinear(grid, coeffs, data, e, scheme, eps_max=eps_max, **solver_kw)
        except NumericalFailure as err:
            raise NumericalFailure(f"eps={e}: {err}", step=err.step) from err
        except NLWaveError as err:
            raise type(err)(f"eps={e}: {err}") from err
        rows.append(_norms(grid, ue.values, u1.values, None if u2 is None else u2.values, e))
    floor = 0.0
    if floor_run and not coeffs.is_linear:
        from .grid import RemainderSpec, SpaceTimeVectorField

        lin = coeffs.with_b(SpaceTimeVectorField.zeros(grid)).with_remainder(RemainderSpec())
        for e in eps_list:
            ue = solve_nonlinear(grid, lin, data, e, scheme, eps_max=eps_max, **solver_kw)
            floor = max(floor, l2_qt(ue.values - e * u1.values, grid))
    return ExpansionReport(rows, floor)
