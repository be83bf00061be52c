"""Light-ray transform of space-time functions and the semiclassical concentration onto rays.

A ray Ray(ω, y) is the line t -> (t, y - tω); the transform of β is
∫ β(t, y - tω) dt with β extended by zero outside Q_T.  The substitution
y = x + tω turns ∫∫ β φ²(x + tω) into ∫ φ²(y) Lβ(ω, y) dy, which is how GO
probe pairs see ray data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from .expansion import slope_fit
from .fieldio import write_csv
from .grid import SpaceTimeScalarField, integrate_qt, trapezoid_weights
from .probes import BumpProfile, build_go_pair, go_weight, unit_vector

__all__ = [
    "Ray",
    "lightray_transform",
    "lightray_batch",
    "lightray_callable",
    "fourier_slice_check",
    "FourierSliceReport",
    "null_element",
    "gaussian_bump",
    "weighted_ray_integral",
    "ray_weighted_integral",
    "concentration_extract",
    "ConcentrationReport",
    "sample_ray_data",
    "RAYDATA_HEADER",
]

RAYDATA_HEADER = ["omega_angle", "y1", "y2", "value"]
_GAUSS = {"linear": np.polynomial.legendre.leggauss(2), "cubic": np.polynomial.legendre.leggauss(5)}


@dataclass(frozen=True)
class Ray:
    """The line t -> (t, y - tω) through (0, y) with direction (1, -ω)."""

    omega: tuple
    y: tuple

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (2,) or abs(np.hypot(*w) - 1.0) > 1e-12:
            raise ValueError(f"ray direction must be a unit 2-vector, got {self.omega}")
        object.__setattr__(self, "omega", (float(w[0]), float(w[1])))
        object.__setattr__(self, "y", (float(self.y[0]), float(self.y[1])))

    @classmethod
    def through(cls, t, x, omega):
        """The ray through the space-time point (t, x)."""
        w = unit_vector(omega)
        return cls(tuple(w), (x[0] + t * w[0], x[1] + t * w[1]))

    @classmethod
    def from_angle(cls, angle, y):
        return cls((np.cos(angle), np.sin(angle)), y)

    def point(self, t):
        return (t, self.y[0] - t * self.omega[0], self.y[1] - t * self.omega[1])

    @property
    def angle(self):
        return float(np.arctan2(self.omega[1], self.omega[0]) % (2 * np.pi))


def _interpolator(field, interp):
    """Evaluator of the multilinear interpolant or of the cubic spline (cubic B-spline, mirror ends)."""
    g = field.grid
    if interp == "linear":
        f = RegularGridInterpolator((g.t, g.y, g.x), field.values, method="linear", bounds_error=False, fill_value=0.0)
        return lambda t, x, y: f(np.stack([t, y, x], axis=-1))
    if interp == "cubic":
        coef = ndimage.spline_filter(field.values, order=3, mode="mirror")
        scale = np.array([g.dt, g.dy, g.dx])[:, None]

        def f(t, x, y):
            idx = np.stack([t, y, x]) / scale
            return ndimage.map_coordinates(coef, idx, order=3, mode="mirror", prefilter=False)

        return f
    raise ValueError(f"interp must be 'linear' or 'cubic', got {interp!r}")


def _slab(y, w, L):
    """Times t with 0 <= y - t w <= L, as (lo, hi) arrays."""
    if w == 0:
        inside = (y >= 0) & (y <= L)
        return np.where(inside, -np.inf, np.inf), np.where(inside, np.inf, -np.inf)
    t1, t2 = y / w, (y - L) / w
    return np.minimum(t1, t2), np.maximum(t1, t2)


def lightray_batch(beta, omega, bases, chunk=2048, interp="linear"):
    """Transforms of a grid field along Ray(ω, y) for every row y of ``bases``.

    Between consecutive crossings of grid planes the multilinear interpolant
    restricted to a ray is a cubic and the cubic spline a degree-9
    polynomial, so two-point (five-point) Gauss on each such segment
    integrates the chosen interpolant exactly.
    """
    g = beta.grid
    w = unit_vector(omega)
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    evaluate = _interpolator(beta, interp)
    nodes, weights = _GAUSS[interp]
    out = np.zeros(len(bases))
    for s in range(0, len(bases), chunk):
        B = bases[s : s + chunk]
        lo1, hi1 = _slab(B[:, 0], w[0], g.Lx)
        lo2, hi2 = _slab(B[:, 1], w[1], g.Ly)
        t_in = np.maximum.reduce([np.zeros(len(B)), lo1, lo2])
        t_out = np.minimum.reduce([np.full(len(B), g.T), hi1, hi2])
        hit = t_out > t_in
        if not np.any(hit):
            continue
        B, t_in, t_out = B[hit], t_in[hit], t_out[hit]
        cuts = [np.broadcast_to(g.t, (len(B), g.nt))]
        if w[0] != 0:
            cuts.append((B[:, :1] - g.x[None, :]) / w[0])
        if w[1] != 0:
            cuts.append((B[:, 1:] - g.y[None, :]) / w[1])
        bp = np.sort(np.clip(np.concatenate(cuts, axis=1), t_in[:, None], t_out[:, None]), axis=1)
        bp = np.concatenate([t_in[:, None], bp, t_out[:, None]], axis=1)
        mid, half = 0.5 * (bp[:, 1:] + bp[:, :-1]), 0.5 * (bp[:, 1:] - bp[:, :-1])
        tq = mid[..., None] + half[..., None] * nodes
        xq = np.clip(B[:, 0, None, None] - tq * w[0], 0.0, g.Lx)
        yq = np.clip(B[:, 1, None, None] - tq * w[1], 0.0, g.Ly)
        tq = np.clip(tq, 0.0, g.T)
        vals = evaluate(tq.ravel(), xq.ravel(), yq.ravel()).reshape(tq.shape)
        res = np.sum((vals @ weights) * half, axis=1)
        chunk_out = np.zeros(hit.size)
        chunk_out[hit] = res
        out[s : s + chunk] = chunk_out
    return out


def lightray_transform(beta, ray, interp="linear"):
    """∫ β(t, y - tω) dt of a grid field along one ray (exact for its interpolant)."""
    if not isinstance(beta, SpaceTimeScalarField):
        raise TypeError("lightray_transform expects a SpaceTimeScalarField; use lightray_callable for functions")
    return float(lightray_batch(beta, ray.omega, [ray.y], interp=interp)[0])


def lightray_callable(func, ray, T, Lx=1.0, Ly=1.0, step=None):
    """Transform of a function β(t, x, y) restricted to [0, T] x Ω, by the trapezoid rule."""
    w = np.asarray(ray.omega)
    y = np.asarray(ray.y)
    lo1, hi1 = _slab(np.array([y[0]]), w[0], Lx)
    lo2, hi2 = _slab(np.array([y[1]]), w[1], Ly)
    t_in = max(0.0, lo1[0], lo2[0])
    t_out = min(T, hi1[0], hi2[0])
    if t_out <= t_in:
        return 0.0
    step = step or 1e-3
    n = max(2, int(np.ceil((t_out - t_in) / step)) + 1)
    t = np.linspace(t_in, t_out, n)
    vals = func(t, y[0] - t * w[0], y[1] - t * w[1])
    return float(np.dot(trapezoid_weights(n, t[1] - t[0]), vals))


def gaussian_bump(grid, center, widths, amplitude=1.0):
    """Separable Gaussian amplitude * exp(-Σ ((z - c)/σ)^2) in (t, x, y)."""
    tc, xc, yc = center
    st, sx, sy = widths

    def f(t, x, y):
        return amplitude * np.exp(-(((t - tc) / st) ** 2) - ((x - xc) / sx) ** 2 - ((y - yc) / sy) ** 2)

    return SpaceTimeScalarField(grid, np.broadcast_to(grid.sample(f), grid.shape)), f


def null_element(grid, omega, center, widths):
    """(d_t + ω·∇) G for a Gaussian G: its transform vanishes along every ray of direction (1, ω)."""
    w = unit_vector(omega)
    G, _ = gaussian_bump(grid, center, widths)
    t, x, y = grid.mesh()
    tc, xc, yc = center
    st, sx, sy = widths
    d = -2 * (t - tc) / st**2 - 2 * w[0] * (x - xc) / sx**2 - 2 * w[1] * (y - yc) / sy**2
    return SpaceTimeScalarField(grid, G.values * d)


# ----------------------------------------------------------- Fourier slice


@dataclass
class FourierSliceReport:
    omega: tuple
    zetas: np.ndarray
    direct: np.ndarray
    from_rays: np.ndarray
    discrepancy: np.ndarray = field(default=None)

    @property
    def max_discrepancy(self):
        return float(np.max(self.discrepancy)) if len(self.discrepancy) else 0.0


def _direct_fourier(beta, zeta):
    g = beta.grid
    wt = trapezoid_weights(g.nt, g.dt) * np.exp(-1j * zeta[0] * g.t)
    wy = trapezoid_weights(g.ny, g.dy) * np.exp(-1j * zeta[2] * g.y)
    wx = trapezoid_weights(g.nx, g.dx) * np.exp(-1j * zeta[1] * g.x)
    return complex(np.einsum("t,tyx,y,x->", wt, beta.values, wy, wx))


def fourier_slice_check(beta, omega, zeta_list, refine=1, interp="cubic"):
    """Compare the space-time Fourier transform of β at spacelike ζ ⊥ (1, ω) with ray data.

    Along the rays t -> (t, y + tω) the phase e^{-iζ·(t,x)} is constant when
    ζ·(1, ω) = 0, so ∫∫ β e^{-iζ·(t,x)} = ∫ e^{-iζ'·y} L(y) dy with L the
    transform along Ray(-ω, y).  Ray data are sampled on a y-lattice of
    spacing min(dx, dy)/refine over the shadow of Q_T and summed by the
    trapezoid rule.  Discrepancies are relative to |direct(0)|.
    """
    g = beta.grid
    w = unit_vector(omega)
    zetas = np.atleast_2d(np.asarray(zeta_list, dtype=float))
    if zetas.shape[1] != 3:
        raise ValueError("each zeta must be a space-time covector (zeta_t, zeta_x, zeta_y)")
    dots = zetas[:, 0] + zetas[:, 1] * w[0] + zetas[:, 2] * w[1]
    scale = np.maximum(1.0, np.linalg.norm(zetas, axis=1))
    if np.any(np.abs(dots) > 1e-10 * scale):
        raise ValueError("every zeta must satisfy zeta·(1, omega) = 0")
    h = min(g.dx, g.dy) / refine
    ax = []
    for k, L in ((0, g.Lx), (1, g.Ly)):
        lo, hi = min(0.0, -g.T * w[k]), L + max(0.0, -g.T * w[k])
        n = int(np.ceil((hi - lo) / h)) + 1
        ax.append(np.linspace(lo, hi, n))
    Y1, Y2 = np.meshgrid(ax[0], ax[1], indexing="ij")
    data = lightray_batch(beta, -w, np.stack([Y1.ravel(), Y2.ravel()], axis=1), interp=interp).reshape(Y1.shape)
    w1 = trapezoid_weights(ax[0].size, ax[0][1] - ax[0][0])
    w2 = trapezoid_weights(ax[1].size, ax[1][1] - ax[1][0])
    direct, rays = [], []
    for z in zetas:
        direct.append(_direct_fourier(beta, z))
        p1 = w1 * np.exp(-1j * z[1] * ax[0])
        p2 = w2 * np.exp(-1j * z[2] * ax[1])
        rays.append(complex(p1 @ data @ p2))
    direct, rays = np.array(direct), np.array(rays)
    ref = abs(_direct_fourier(beta, np.zeros(3)))
    disc = np.abs(direct - rays) / ref if ref > 0 else np.abs(direct - rays)
    return FourierSliceReport(tuple(w), zetas, direct, rays, disc)


def spacelike_slice(omega, radii, angles=None):
    """Covectors ζ = (-ζ'·ω, ζ') with ζ' on circles of the given radii."""
    w = unit_vector(omega)
    angles = np.linspace(0, np.pi, 4, endpoint=False) if angles is None else np.asarray(angles)
    out = []
    for r in radii:
        for a in angles:
            zp = r * np.array([np.cos(a), np.sin(a)])
            out.append((-zp @ w, zp[0], zp[1]))
    return np.array(out)


# ----------------------------------------------------------- concentration


def weighted_ray_integral(beta, omega, profile):
    """∫∫ β(t, x) φ²(x + tω) dx dt by direct quadrature on the grid."""
    g = beta.grid
    w = unit_vector(omega)
    t, x, y = g.mesh()
    phi = np.broadcast_to(profile(x + t * w[0], y + t * w[1]), g.shape)
    return integrate_qt(SpaceTimeScalarField(g, beta.values * phi**2))


def ray_weighted_integral(beta, omega, profile, refine=2):
    """∫ φ²(y) Lβ(ω, y) dy from ray data over a lattice covering supp φ."""
    g = beta.grid
    h = min(g.dx, g.dy) / refine
    c, r = profile.center, profile.radius
    n = int(np.ceil(2 * r / h)) + 1
    a1, a2 = np.linspace(c[0] - r, c[0] + r, n), np.linspace(c[1] - r, c[1] + r, n)
    Y1, Y2 = np.meshgrid(a1, a2, indexing="ij")
    phi2 = profile(Y1, Y2) ** 2
    m = phi2 > 0
    vals = np.zeros_like(phi2)
    vals[m] = lightray_batch(beta, omega, np.stack([Y1[m], Y2[m]], axis=1)) * phi2[m]
    wts = np.outer(trapezoid_weights(n, a1[1] - a1[0]), trapezoid_weights(n, a2[1] - a2[0]))
    return float(np.sum(vals * wts))


@dataclass
class ConcentrationReport:
    h: list
    values: list
    target: float
    errors: list
    corrector_norms: list

    @property
    def relative_errors(self):
        return [e / abs(self.target) if self.target else e for e in self.errors]

    @property
    def order(self):
        """Least-squares slope of log error against log h, or None when errors sit at zero."""
        pairs = [(h, e) for h, e in zip(self.h, self.errors) if e > 0]
        if len(pairs) < 3:
            return None
        return slope_fit(pairs)[0]

    @property
    def pairwise_orders(self):
        e, h = self.errors, self.h
        return [float(np.log(e[i] / e[i + 1]) / np.log(h[i] / h[i + 1])) for i in range(len(e) - 1) if e[i + 1] > 0]


def concentration_extract(beta_w, omega, h_list, profile=None, a=1.0, N=1):
    """-h²/2 ∫ β_w ∇u+·∇u- for GO pairs at each h, against ∫∫ β_w φ²(x + tω).

    The leading part of ∇u+·∇u- is -2φ²/h², so the scaled value tends to the
    weighted ray integral with an O(h) error from the amplitude corrections.
    """
    g = beta_w.grid
    profile = profile or BumpProfile()
    w = unit_vector(omega)
    t, x, y = g.mesh()
    if not np.any(profile(x + t * w[0], y + t * w[1]) > 0):
        raise ValueError("the tube x + tω ∈ supp φ misses Q_T")
    target = weighted_ray_integral(beta_w, w, profile)
    values, errors, cnorms = [], [], []
    for h in h_list:
        _, _, pair = build_go_pair(g, a, w, h, profile, N=N)
        v = -0.5 * h * h * integrate_qt(SpaceTimeScalarField(g, beta_w.values * go_weight(pair)))
        values.append(v)
        errors.append(abs(v - target))
        cnorms.append(tuple(p.corrector_norms()[0] for p in pair))
    return ConcentrationReport(list(h_list), values, target, errors, cnorms)


# ----------------------------------------------------------- ray data


def sample_ray_data(beta, n_omega, n_base, path=None):
    """Transforms over n_omega equally spaced directions and an n_base² lattice of bases.

    Bases cover the shadow Ω + [0, T]ω of each direction.  Returns rows
    (omega_angle, y1, y2, value) and writes them as CSV when ``path`` is given.
    """
    g = beta.grid
    rows = []
    for k in range(n_omega):
        ang = 2 * np.pi * k / n_omega
        w = np.array([np.cos(ang), np.sin(ang)])
        axes = []
        for i, L in ((0, g.Lx), (1, g.Ly)):
            lo, hi = min(0.0, g.T * w[i]), L + max(0.0, g.T * w[i])
            axes.append(np.linspace(lo, hi, n_base))
        Y1, Y2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        vals = lightray_batch(beta, w, np.stack([Y1.ravel(), Y2.ravel()], axis=1))
        rows += [(ang, a, b, v) for a, b, v in zip(Y1.ravel(), Y2.ravel(), vals)]
    if path is not None:
        write_csv(path, RAYDATA_HEADER, rows)
    return rows
