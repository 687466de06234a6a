"""Command-line experiment driver.

Subcommands: simulate, convergence, counterexample, audit, paths.  Each takes
--config PATH plus optional --seed and --out overrides.  Exit codes: 0 all
checks pass, 1 audit failure, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .audit import run_standard_audit
from .bgk import run_simulation
from .brownian import levy_modulus_statistic, sample_path, sample_paths
from .config import (build_bgk_config, build_spec, load_config,
                     validate_run_config, _opt)
from .counterexample import (bv_growth_experiment, cusp_data,
                             smooth_control_data, stochastic_counterpart)
from .csvio import (check_manifest, read_trajectory_csv, write_audit_csv,
                    write_defect_csv, write_manifest, write_rows,
                    write_trajectory_csv)
from .errors import ConfigurationError, NumericalAbortError, StochBGKError
from .fields import DensityField, discrete_bv
from .grids import SpatialGrid
from .oracles import shift_reduction_oracle


def _out_dir(cfg, override):
    out = override or _opt(cfg, "output.dir", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _finish_bundle(out, resolved, seed, files):
    with open(os.path.join(out, "config_resolved.json"), "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files = files + [os.path.join(out, "config_resolved.json")]
    write_manifest(out, resolved, seed, files)


def cmd_simulate(cfg, seed, out) -> int:
    spec = build_spec(cfg)
    bgk_cfg = build_bgk_config(cfg)
    path = sample_path(seed, bgk_cfg.dt, bgk_cfg.horizon, dim=spec.dim)
    traj = run_simulation(spec, bgk_cfg, path)
    report = run_standard_audit(traj, spec,
                                entropy_tol=_opt(cfg, "audit.entropy_tol", None))
    files = [os.path.join(out, "trajectory.csv"),
             os.path.join(out, "defect.csv"),
             os.path.join(out, "audit.csv")]
    write_trajectory_csv(traj, files[0])
    write_defect_csv(traj, files[1])
    write_audit_csv(report, files[2])
    _finish_bundle(out, cfg, seed, files)
    print(report.table())
    return 0 if report.passed() else 1


def cmd_convergence(cfg, seed, out) -> int:
    from dataclasses import replace

    spec = build_spec(cfg)
    base = build_bgk_config(cfg)
    levels = int(_opt(cfg, "convergence.levels", 3))
    dt_over_h = float(_opt(cfg, "convergence.dt_over_h", 0.25))
    eps_over_dt = float(_opt(cfg, "convergence.eps_over_dt", 1.0))
    if spec.dim != 1:
        raise ConfigurationError("convergence command drives the 1D oracles")
    b_probe = spec.b_on_grid(SpatialGrid(1, base.half_width, 16))
    if float(np.ptp(b_probe)) > 1e-12:
        raise ConfigurationError(
            "convergence.oracle: the shift-reduction oracle needs constant b"
        )
    c = float(b_probe.ravel()[0])
    horizon = base.horizon
    rows = []
    errs = []
    for lvl in range(levels):
        n = base.n * (2 ** lvl)
        h = 2.0 * base.half_width / n
        n_steps = max(1, int(round(horizon / (dt_over_h * h))))
        dt = horizon / n_steps
        eps = eps_over_dt * dt
        cfg_l = replace(base, n=n, dt=dt, epsilon=eps,
                        snapshot_stride=max(1, n_steps // 8))
        path = sample_path(seed, dt, horizon, dim=1)
        traj = run_simulation(spec, cfg_l, path)
        flux = (lambda r, c=c: c * spec.f(r))
        fsup = abs(c) * spec.f_prime_sup(traj.vgrid.bound)
        _, oracle = shift_reduction_oracle(flux, traj.initial(), path, horizon,
                                           flux_sup_speed=max(fsup, 1e-12))
        sample_errs = []
        for i, t in enumerate(traj.times):
            if t < horizon / 2:
                continue
            k = int(round(t / path.dt))
            sample_errs.append(float(np.sum(np.abs(traj.rho[i] - oracle[k])) * h))
        err = float(np.mean(sample_errs))
        rows.append((lvl, n, h, dt, eps, err))
        errs.append(err)
        print(f"level {lvl}: n={n} h={h:.5g} dt={dt:.5g} eps={eps:.5g} L1={err:.6g}")
    rate = float(-np.polyfit(np.arange(levels), np.log2(errs), 1)[0])
    print(f"fitted rate: {rate:.3f}")
    files = [os.path.join(out, "convergence.csv")]
    write_rows(files[0], ["level", "n", "h", "dt", "epsilon", "l1_error"], rows)
    summary = os.path.join(out, "convergence_summary.csv")
    write_rows(summary, ["fitted_rate", "finest_error"], [(rate, errs[-1])])
    _finish_bundle(out, cfg, seed, files + [summary])
    return 0


def cmd_counterexample(cfg, seed, out) -> int:
    t = float(_opt(cfg, "counterexample.t", 1.0))
    resolutions = [int(n) for n in
                   _opt(cfg, "counterexample.resolutions", [128, 256, 512, 1024])]
    rows = []
    for label, data in (("cusp", cusp_data()), ("smooth", smooth_control_data())):
        for n, h, bv_t, bv_0 in bv_growth_experiment(data, t, resolutions):
            rows.append((label, n, h, t, bv_t, bv_0))
            print(f"{label:7s} n={n:5d} BV(t)={bv_t:.5f} BV(0)={bv_0:.5f}")
    files = [os.path.join(out, "deterministic_bv.csv")]
    write_rows(files[0], ["experiment", "n", "h", "t", "bv", "bv_initial"], rows)

    sres = _opt(cfg, "counterexample.stochastic_resolutions", None)
    srows = []
    if sres:
        n_paths = int(_opt(cfg, "counterexample.paths", 16))
        workers = int(_opt(cfg, "monte_carlo.workers", 1))
        n_v = int(_opt(cfg, "counterexample.n_v", 8))
        for n, h, mean_bv, std_bv, m in stochastic_counterpart(
                cusp_data(), t, [int(n) for n in sres], n_paths, seed,
                n_v=n_v, workers=workers):
            srows.append(("stochastic", n, h, t, mean_bv, std_bv, m))
            print(f"stochastic n={n:5d} mean BV={mean_bv:.5f} std={std_bv:.5f} M={m}")
        sfile = os.path.join(out, "stochastic_bv.csv")
        write_rows(sfile, ["experiment", "n", "h", "t", "mean_bv", "std_bv", "paths"],
                   srows)
        files.append(sfile)
    files.extend(_write_figure_pair(out, rows, srows))
    _finish_bundle(out, cfg, seed, files)
    return 0


def _write_figure_pair(out, det_rows, sto_rows):
    """Plot-ready long table plus a gnuplot script for the BV figure."""
    fig = os.path.join(out, "figure_bv.csv")
    long_rows = [(lab, n, h, bv, 0.0) for lab, n, h, _, bv, _ in det_rows]
    long_rows += [(lab, n, h, bv, std) for lab, n, h, _, bv, std, _ in sto_rows]
    write_rows(fig, ["series", "n", "h", "bv", "std"], long_rows)
    gp = os.path.join(out, "figure_bv.gp")
    with open(gp, "w") as fh:
        fh.write(
            'set datafile separator ","\n'
            'set logscale x 2\n'
            'set xlabel "cells per axis n"\n'
            'set ylabel "discrete BV on the study box"\n'
            'set key left top\n'
            'plot "figure_bv.csv" using 2:(strcol(1) eq "cusp" ? $4 : 1/0) '
            'with linespoints title "deterministic, cusp data", \\\n'
            '     "" using 2:(strcol(1) eq "smooth" ? $4 : 1/0) '
            'with linespoints title "deterministic, smooth control", \\\n'
            '     "" using 2:(strcol(1) eq "stochastic" ? $4 : 1/0):5 '
            'with yerrorlines title "transport noise, mean over paths"\n'
        )
    return [fig, gp]


def cmd_audit(cfg, seed, out, bundle_dir) -> int:
    manifest = check_manifest(bundle_dir)
    times, rho, dim = read_trajectory_csv(os.path.join(bundle_dir, "trajectory.csv"))
    half_width = float(_opt(manifest["config"], "grid.half_width", 1.0))
    grid = SpatialGrid(dim=dim, half_width=half_width, n=rho.shape[1])
    sup0 = float(np.max(np.abs(rho[0])))
    sup_t = float(np.max(np.abs(rho)))
    entries = [("max_principle", sup_t, sup0, 0.0,
                "PASS" if sup_t <= sup0 else "FAIL")]
    # BV non-increase is a theorem only for x-independent fluxes
    field_preset = _opt(manifest["config"], "spec.field.preset", "")
    if field_preset in ("constant", "zero"):
        bv0 = discrete_bv(DensityField(grid, rho[0]))
        bv_worst = max(discrete_bv(DensityField(grid, r)) for r in rho)
        ok_bv = bv_worst <= bv0 * (1 + 1e-8) if bv0 > 0 else bv_worst <= 1e-12
        entries.append(("bv_nonincrease", bv_worst, bv0, 1e-8,
                        "PASS" if ok_bv else "FAIL"))
    files = [os.path.join(out, "reaudit.csv")]
    write_rows(files[0], ["check", "measured", "bound", "tol", "verdict"], entries)
    _finish_bundle(out, cfg, seed, files)
    for row in entries:
        print(f"{row[0]:20s} measured={row[1]:.6g} bound={row[2]:.6g} {row[4]}")
    return 0 if all(r[4] == "PASS" for r in entries) else 1


def cmd_paths(cfg, seed, out) -> int:
    delta = float(_opt(cfg, "paths_cmd.delta", 2.0 ** -14))
    count = int(_opt(cfg, "paths_cmd.count", 100))
    horizon = float(_opt(cfg, "paths_cmd.horizon", 1.0))
    dims = [int(d) for d in _opt(cfg, "paths_cmd.dims", [1, 2])]
    rows = []
    for dim in dims:
        paths = sample_paths(seed, delta, horizon, dim, count)
        stat = levy_modulus_statistic(paths, delta)
        inc = np.concatenate([p.increments for p in paths])
        var = float(np.mean(inc * inc))
        rows.append((dim, delta, count, stat, stat / math.sqrt(dim), var))
        print(f"d={dim}: levy statistic={stat:.4f} (/sqrt d = {stat / math.sqrt(dim):.4f}), "
              f"increment var={var:.3e} (dt={delta:.3e})")
    files = [os.path.join(out, "paths.csv")]
    write_rows(files[0], ["dim", "delta", "paths", "levy_statistic",
                          "levy_over_sqrt_d", "increment_variance"], rows)
    _finish_bundle(out, cfg, seed, files)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stochbgk",
        description="BGK laboratory for scalar conservation laws with "
                    "Brownian transport noise",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "convergence", "counterexample", "paths"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
    p = sub.add_parser("audit")
    p.add_argument("--config", required=True)
    p.add_argument("--bundle", required=True,
                   help="directory holding a previous run's outputs")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        resolved = validate_run_config(cfg)
        if resolved["experiment"] != args.command:
            raise ConfigurationError(
                f"experiment: config says '{resolved['experiment']}' but the "
                f"command is '{args.command}'"
            )
        seed = args.seed if args.seed is not None else int(
            resolved["monte_carlo"]["master_seed"])
        resolved["monte_carlo"]["master_seed"] = seed
        out = _out_dir(resolved, args.out)
        if args.command == "simulate":
            return cmd_simulate(resolved, seed, out)
        if args.command == "convergence":
            return cmd_convergence(resolved, seed, out)
        if args.command == "counterexample":
            return cmd_counterexample(resolved, seed, out)
        if args.command == "audit":
            return cmd_audit(resolved, seed, out, args.bundle)
        if args.command == "paths":
            return cmd_paths(resolved, seed, out)
        raise ConfigurationError(f"unknown command {args.command}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbortError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    except StochBGKError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
