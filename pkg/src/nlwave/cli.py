"""Command line entry point: ``nlwave <subcommand> [config] [--set key=value] [--jobs N]``.

Artifacts go to ``<output.root>/<subcommand>-<hash>`` where the hash is taken over the
resolved configuration, which is echoed there as ``config.resolved.ini``.  Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 acceptance failure (``report``).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import config_hash, load_config
from .errors import ConfigError, NLWaveError
from .fieldio import write_array, write_csv

SUBCOMMANDS = ("forward", "expand", "iomap", "identity", "probes", "lightray", "recover", "report")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPT = 0, 2, 3, 4


# ------------------------------------------------------------- scenario


def build_scenario(cfg, remainder=None, b_radius=None):
    """Grid, coefficients and data battery entry described by a resolved config."""
    from .grid import CoefficientSet, RemainderSpec, SpaceTimeGrid
    from .reference import bump_b, cubic_remainder, mode_data, reference_potential

    g = cfg["grid"]
    grid = SpaceTimeGrid.from_courant(g["nx"], g["ny"], g["T"], g["courant"])
    m = cfg["medium"]
    b = bump_b(grid, amplitude=m["b_amplitude"], center=m["b_center"], radius=m["b_radius"] if b_radius is None else b_radius)
    kind = m["remainder"] if remainder is None else remainder
    rem = cubic_remainder(grid, m["remainder_amplitude"]) if kind == "cubic" else RemainderSpec()
    coeffs = CoefficientSet(reference_potential(grid), b, rem, flat_margin=0.1 * grid.T)
    d = cfg["data"]
    if len(d["mode"]) != 2 or len(d["boundary"]) != 2:
        raise ConfigError("data.mode and data.boundary need two integers each")
    data = mode_data(grid, *d["mode"], boundary=d["boundary"], amp=d["amp"], ramp=d["ramp"])
    return grid, coeffs, data


def _solver_kw(cfg):
    return {"scheme": cfg["solver"]["scheme"], "eps_max": cfg["solver"]["eps_max"]}


def _pmap(fn, items, jobs):
    """Ordered map, in worker processes when jobs > 1."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ------------------------------------------------------------- subcommands
# each returns a list of acceptance rows (check, metric, value, passed)


def run_forward(cfg, out, jobs=1):
    from .expansion import l2_qt
    from .nonlinear import solve_nonlinear

    grid, coeffs, data = build_scenario(cfg)
    kw = _solver_kw(cfg)
    eps = cfg["forward"]["eps"]
    u = solve_nonlinear(grid, coeffs, data, eps, kw["scheme"], eps_max=kw["eps_max"])
    write_array(out / "u.nlwf", u.values)
    write_csv(out / "forward.csv", ["eps", "l2_norm", "max_abs"], [(eps, l2_qt(u.values, grid), float(np.abs(u.values).max()))])
    return []


def run_expand(cfg, out, jobs=1):
    from .expansion import epsilon_expand

    rows, fits = [], []
    for kind in ("none", "cubic"):
        grid, coeffs, data = build_scenario(cfg, remainder=kind)
        kw = _solver_kw(cfg)
        rep = epsilon_expand(grid, coeffs, data, cfg["expand"]["eps"], kw["scheme"], eps_max=kw["eps_max"])
        rep.to_csv(out / f"expansion_report_{kind}.csv")
        if kind == cfg["medium"]["remainder"]:
            rep.to_csv(out / "expansion_report.csv")
        fit = rep.fit("norm2_L2")
        slope, _, r2 = fit if fit else (float("nan"), 0.0, 0.0)
        fits.append((kind, slope, r2, rep.floor))
        rows.append((f"expand[{kind}]", "slope", slope, bool(2.6 <= slope <= 3.4 and r2 >= 0.98)))
    write_csv(out / "expansion_fit.csv", ["remainder", "slope", "r2", "floor"], fits)
    return rows


def run_iomap(cfg, out, jobs=1):
    from .iomap import direct_second_order_record, first_order_defect, second_order_extract

    grid, coeffs, data = build_scenario(cfg)
    kw = _solver_kw(cfg)
    res = first_order_defect(grid, coeffs, data, cfg["iomap"]["eps"], kw["scheme"], eps_max=kw["eps_max"])
    write_csv(out / "iomap_defect.csv", ["eps", "defect", "defect_over_eps"], res["rows"])
    slope = res["fit"][0] if res["fit"] else float("nan")
    direct = direct_second_order_record(grid, coeffs, data)
    rows = [("iomap", "defect_slope", slope, bool(1.8 <= slope <= 2.3))]
    metrics = [("defect_slope", slope)]
    for kind in ("none", "cubic"):
        _, ck, _ = build_scenario(cfg, remainder=kind)
        g2 = second_order_extract(grid, ck, data, cfg["iomap"]["eps_pair"], kw["scheme"], eps_max=kw["eps_max"])
        err = g2.relative_error(direct)
        metrics.append((f"extract_vs_direct[{kind}]", err))
        rows.append((f"iomap[{kind}]", "extract_vs_direct", err, bool(err <= 3e-2)))
        if kind == "none":
            g2.save(out / "g2")
    write_csv(out / "iomap_report.csv", ["metric", "value"], metrics)
    return rows


def _identity_probe(args):
    from .grid import _grad_arrays, qt_weights
    from .probes import build_wkb

    cfg, k, n = args
    from .iomap import direct_second_order_record
    from .recovery import assemble_identity_data

    grid, coeffs, data = build_scenario(cfg)
    ang = 2 * np.pi * k / n
    p = build_wkb(grid, coeffs.a, (np.cos(ang), np.sin(ang)), cfg["identity"]["probe_lam"])
    w = p.real_parts()[k % 2].values
    g2 = direct_second_order_record(grid, coeffs, data)
    D = assemble_identity_data(g2, w)
    from .linear import solve_linear_ibvp

    u1 = solve_linear_ibvp(grid, coeffs.a, data).values
    q = _grad_arrays(u1, grid)
    P = q[0] ** 2 + q[1] ** 2 + q[2] ** 2
    gw = _grad_arrays(w, grid)
    terms = sum(b * c for b, c in zip(coeffs.b.components, gw)) * P * qt_weights(grid)
    quad = float(np.sum(terms))
    same = direct_second_order_record(grid, coeffs, data)
    D_equal = assemble_identity_data(g2 - same, w)
    floor = 16 * np.finfo(float).eps * float(np.sum(np.abs(terms)))
    return (k, ang, D, quad, abs(D - quad) / abs(quad), D_equal, floor)


def run_identity(cfg, out, jobs=1):
    n = cfg["identity"]["probes"]
    res = _pmap(_identity_probe, [(cfg, k, n) for k in range(n)], jobs)
    write_csv(out / "identity_report.csv", ["probe", "angle", "D", "quadrature", "relative_error", "D_equal_media", "floor"], res)
    worst = max(r[4] for r in res)
    eq_ok = all(abs(r[5]) <= r[6] for r in res)
    return [("identity", "max_relative_error", worst, bool(worst <= 3e-2)), ("identity", "equal_media_at_floor", float(eq_ok), eq_ok)]


def run_probes(cfg, out, jobs=1):
    from .expansion import slope_fit
    from .probes import DEFAULT_DIRECTIONS, build_wkb, det_field, limiting_det

    grid, coeffs, _ = build_scenario(cfg)
    p = cfg["probes"]
    rows = []
    for lam in p["lams"]:
        pr = build_wkb(grid, coeffs.a, DEFAULT_DIRECTIONS[0], lam, N=p["N"])
        rows.append((lam, pr.residual_norm()))
    write_csv(out / "wkb_residuals.csv", ["lambda", "residual_L2"], rows)
    slope = slope_fit(rows)[0] if len(rows) >= 3 else float("nan")
    probes = [build_wkb(grid, coeffs.a, w, p["lam"], N=p["N"]) for w in DEFAULT_DIRECTIONS]
    det = np.abs(det_field(probes))[1:-1, 1:-1, 1:-1]
    target = abs(limiting_det(DEFAULT_DIRECTIONS))
    within = float(np.mean(np.abs(det - target) <= 0.1 * target))
    summary = [("residual_slope", slope), ("det_target", target), ("det_median", float(np.median(det))), ("fraction_within_10pct", within)]
    write_csv(out / "probes_report.csv", ["metric", "value"], summary)
    return [("probes", "residual_slope", slope, bool(abs(slope + p["N"]) <= 0.3)), ("probes", "fraction_within_10pct", within, bool(within >= 0.95))]


def run_lightray(cfg, out, jobs=1):
    from .grid import SpaceTimeGrid
    from .lightray import fourier_slice_check, gaussian_bump, sample_ray_data

    g = cfg["grid"]
    grid = SpaceTimeGrid.from_courant(g["nx"], g["ny"], g["T"], g["courant"])
    lr = cfg["lightray"]
    beta, _ = gaussian_bump(grid, lr["bump_center"], lr["bump_widths"])
    sample_ray_data(beta, lr["n_omega"], lr["n_base"], out / "raydata.csv")
    omega = np.array([0.6, 0.8])
    perp = np.array([-omega[1], omega[0]])
    zetas = [np.array([-(r * perp) @ omega, *(r * perp)]) for r in (0.0, 1.0, 2.0, 4.0)]
    zetas += [np.array([-r, *(r * omega)]) for r in (1.0, 2.0)]
    rep = fourier_slice_check(beta, omega, zetas)
    write_csv(
        out / "fourier_slice.csv",
        ["zeta_t", "zeta_x", "zeta_y", "direct_re", "direct_im", "rays_re", "rays_im"],
        [(*z, d.real, d.imag, r.real, r.imag) for z, d, r in zip(rep.zetas, rep.direct, rep.from_rays)],
    )
    disc = rep.max_discrepancy
    write_csv(out / "lightray_report.csv", ["metric", "value"], [("max_discrepancy", disc)])
    return [("lightray", "fourier_slice_discrepancy", disc, bool(disc <= 1e-3))]


def run_recover(cfg, out, jobs=1):
    from .recovery import RecoveryConfig, end_to_end

    grid, coeffs, _ = build_scenario(cfg, b_radius=cfg["recover"]["b_radius"])
    r = cfg["recover"]
    rc = RecoveryConfig(
        n_dirs=r["n_dirs"],
        lams=r["lams"],
        probe_dirs=r["probe_dirs"],
        probe_lam=r["probe_lam"],
        hs=r["hs"],
        ht=r["ht"],
        ridge=r["ridge"],
        cond_cap=r["cond_cap"],
        factor_s=r["factor_s"],
        factor_t=r["factor_t"],
        g2_source=r["g2_source"],
    )
    rep = end_to_end(rc, coeffs, grid=grid, log=lambda m: print(f"  {m}", file=sys.stderr))
    rep.write(out)
    err = rep.metric("pointwise", "b_relative_error")
    ident = rep.metric("identical", "recovered_norm") <= 2 * rep.metric("identical", "floor")
    return [("recover", "b_relative_error", err, bool(err <= r["threshold"])), ("recover", "identical_media_at_floor", float(ident), ident)]


RUNNERS = {
    "forward": run_forward,
    "expand": run_expand,
    "iomap": run_iomap,
    "identity": run_identity,
    "probes": run_probes,
    "lightray": run_lightray,
    "recover": run_recover,
}


def run_report(cfg, out, jobs=1):
    rows = []
    for check in cfg["report"]["checks"]:
        if check not in RUNNERS:
            raise ConfigError(f"report.checks: unknown check '{check}'; valid: " + ", ".join(RUNNERS))
        sub = out / check
        sub.mkdir(parents=True, exist_ok=True)
        rows += RUNNERS[check](cfg, sub, jobs)
    return rows


RUNNERS["report"] = run_report


# ------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="nlwave", description="Forward, expansion and recovery experiments for the quadratic-gradient wave equation.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", nargs="?", help="INI config file (default: the shipped reference config)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key, e.g. expand.eps=0.04,0.02,0.01")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent tasks (does not change outputs)")
    p.add_argument("--out", help="output root (overrides output.root)")
    return p


def run(subcommand, config_path=None, overrides=(), jobs=1, out_root=None):
    """Run one subcommand; returns (exit status, output directory)."""
    try:
        cfg, text = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    root = Path(out_root if out_root is not None else cfg["output"]["root"])
    out = root / f"{subcommand}-{config_hash(text)}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.ini").write_text(text)
    print(text)
    print(f"output: {out}")
    try:
        rows = RUNNERS[subcommand](cfg, out, max(1, int(jobs)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, out
    except (NLWaveError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {subcommand}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, out
    if rows:
        write_csv(out / "acceptance.csv", ["check", "metric", "value", "passed"], [(c, m, v, int(ok)) for c, m, v, ok in rows])
        for c, m, v, ok in rows:
            print(f"{'PASS' if ok else 'FAIL'}  {c}  {m} = {v:.6g}")
    if subcommand == "report" and not all(r[3] for r in rows):
        return EXIT_ACCEPT, out
    return EXIT_OK, out


def main(argv=None):
    args = build_parser().parse_args(argv)
    status, _ = run(args.subcommand, args.config, args.overrides, args.jobs, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
