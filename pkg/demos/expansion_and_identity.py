"""
Small-data expansion and the boundary identity on the reference grid.

Solves the nonlinear problem for a few amplitudes, fits the order of the
remainder u - eps*u1 - eps^2*u2, then pairs the extracted second-order
record with a WKB probe and compares against the interior integral.
"""
import numpy as np

from nlwave.expansion import epsilon_expand
from nlwave.grid import _grad_arrays, qt_weights
from nlwave.iomap import second_order_extract
from nlwave.linear import solve_linear_ibvp
from nlwave.probes import build_wkb
from nlwave.recovery import assemble_identity_data
from nlwave.reference import reference_coefficients, reference_data, reference_grid

grid = reference_grid()
coeffs = reference_coefficients(grid)
data = reference_data(grid)

rep = epsilon_expand(grid, coeffs, data, [0.08, 0.04, 0.02, 0.01])
slope, _, r2 = rep.fit("norm2_L2")
print(f"remainder slope {slope:.3f} (r2 {r2:.4f})")

# second-order record from two amplitudes (Richardson)
g2 = second_order_extract(grid, coeffs, data, (0.02, 0.01))

w = build_wkb(grid, coeffs.a, (0.6, 0.8), 3.0).real_parts()[0].values
u1 = solve_linear_ibvp(grid, coeffs.a, data).values
P = sum(c * c for c in _grad_arrays(u1, grid))
gw = _grad_arrays(w, grid)
interior = np.sum(qt_weights(grid) * sum(b * c for b, c in zip(coeffs.b.components, gw)) * P)
D = assemble_identity_data(g2, w)
print(f"boundary pairing {D:.6e}, interior integral {interior:.6e}, rel diff {abs(D - interior) / abs(interior):.2e}")
