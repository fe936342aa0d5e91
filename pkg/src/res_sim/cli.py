"""Command-line entry point.

Subcommands: run, validate, gains, mass-balance-check, demo.  Exit codes:
0 success, 1 validation failure, 2 invalid configuration or arguments,
3 runtime abort.  Set RES_SIM_LOG to a logging level name for diagnostics.
Heavy imports happen inside the handlers so --threads can pin the BLAS
thread count before numpy loads.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="res-sim",
        description="Closed-loop reservoir pressure / seismicity-rate "
                    "simulation with a robust tracking controller.")
    parser.add_argument("--threads", type=int, default=None,
                        help="BLAS/OpenMP thread count (default: library choice)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write CSVs + report")
    p_run.add_argument("--config", required=True, help="scenario TOML path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--dt", type=float, default=None, help="override dt [yr]")
    p_run.add_argument("--t-end", type=float, default=None, help="override horizon [yr]")
    p_run.add_argument("--grid", default=None, help="override resolution, e.g. 40x40")
    p_run.add_argument("--bc", choices=["neumann", "dirichlet"], default=None)
    p_run.add_argument("--baseline", action="store_true",
                       help="also run the zero-feedback baseline for comparison")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check a scenario's assumptions")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_gains = sub.add_parser("gains", help="design super-twisting gains")
    p_gains.add_argument("--k-bar2", type=float, required=True)
    p_gains.add_argument("--l", type=float, required=True)
    p_gains.add_argument("--b", type=float, default=1.0)
    p_gains.add_argument("--delta-b", type=float, default=0.0)
    p_gains.add_argument("--margin", type=float, default=2.22)
    p_gains.set_defaults(func=cmd_gains)

    p_mb = sub.add_parser("mass-balance-check",
                          help="randomized mean-pressure conservation check")
    p_mb.add_argument("--cases", type=int, default=100)
    p_mb.add_argument("--seed", type=int, default=0)
    p_mb.set_defaults(func=cmd_mass_balance)

    p_demo = sub.add_parser("demo", help="reduced end-to-end scenario (seconds)")
    p_demo.add_argument("--out", required=True)
    p_demo.set_defaults(func=cmd_demo)
    return parser


def _setup_logging():
    level = os.environ.get("RES_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _overrides_from(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "t_end", None) is not None:
        overrides["t_end"] = args.t_end
    if getattr(args, "bc", None) is not None:
        overrides["bc"] = args.bc
    if getattr(args, "grid", None) is not None:
        try:
            nx, ny = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise SystemExit(2)
        overrides["grid"] = (nx, ny)
    return overrides


def cmd_run(args) -> int:
    from .analysis import (emit_csv, sr_log_bound_report, verify_demand,
                           verify_eiss, verify_mass_balance, write_report)
    from .scenario import ConfigError, SimulationAbort, load_scenario, run

    try:
        config = load_scenario(args.config, overrides=_overrides_from(args))
    except ConfigError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2
    try:
        record = run(config)
        baseline = run(config, feedback=False) if args.baseline else None
    except SimulationAbort as e:
        print(f"runtime abort: {e}", file=sys.stderr)
        return 3
    files = emit_csv(record, args.out, baseline=baseline)
    reports = [verify_mass_balance(record), verify_demand(record)]
    reports += verify_eiss(record, declared_l_q=config.schedule.q_bound)
    reports.append(sr_log_bound_report(record, config.sr))
    report_path = write_report(record, args.out, reports=reports)
    print(f"run complete: {record.n_samples} samples over {record.t[-1]:g} yr")
    for rep in reports:
        status = "n/a" if not rep.applicable else ("pass" if rep.passed else "FAIL")
        print(f"  {rep.name}: {status} (measured {rep.measured:.3e}, "
              f"bound {rep.bound:.3e})")
    print("wrote " + ", ".join(str(f) for f in files + [report_path]))
    return 0


def cmd_validate(args) -> int:
    from .scenario import ConfigError, load_scenario

    try:
        config = load_scenario(args.config, strict=False)
    except ConfigError as e:
        if e.assumption is not None:
            print(f"{e.assumption}: FAIL ({e})")
            return 1
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2
    all_ok = True
    for name in ("A1", "A2", "A3", "A4", "demand"):
        ok, detail = config.assumptions.get(name, (True, "not applicable"))
        all_ok &= ok
        print(f"{name}: {'pass' if ok else 'FAIL'} ({detail.splitlines()[0]})")
    return 0 if all_ok else 1


def cmd_gains(args) -> int:
    from .controller import design_gains

    try:
        gains = design_gains(k_bar2=args.k_bar2, l=args.l, b=args.b,
                             delta_b=args.delta_b, margin=args.margin)
    except ValueError as e:
        print(f"invalid gain inputs: {e}", file=sys.stderr)
        return 2
    if args.delta_b > 0.9:
        print(f"warning: delta_b = {args.delta_b} is near 1; k1 grows without bound")
    import math
    rhs = math.sqrt(gains.b * gains.k2_bar / (1.0 - gains.delta_b))
    print(f"k1 = {gains.k1:.6g}")
    print(f"k2 = {gains.k2:.6g}")
    print(f"k1_bar = {gains.k1_bar:.6g} > sqrt(b*k2_bar/(1-delta_b)) = {rhs:.6g}")
    return 0


def cmd_mass_balance(args) -> int:
    import numpy as np

    from .diffusion import DiffusionParams, DiffusionSolver, initial_pressure_state
    from .domain_mesh import WellSet, build_grid

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.cases):
        nx = int(rng.integers(6, 16))
        ny = int(rng.integers(6, 16))
        grid = build_grid((rng.uniform(5, 40), rng.uniform(5, 40)), (nx, ny))
        c_hy = np.exp(rng.uniform(np.log(1.0), np.log(500.0), size=grid.n_active))
        params = DiffusionParams(beta=rng.uniform(1e-4, 1e-2), c_hy=c_hy)
        wells = WellSet(grid)
        for cid in rng.choice(grid.active_ids, size=int(rng.integers(1, 6)),
                              replace=False):
            wells.add_well([int(cid)])
        solver = DiffusionSolver(grid, params, wells)
        state = initial_pressure_state(grid, rng.normal(0.0, 3.0, grid.n_active))
        for _ in range(3):
            q_vec = rng.normal(0.0, 1.0, wells.n)
            dt = rng.uniform(1e-4, 0.5)
            mean_before = float(np.mean(state.u))
            state, info = solver.step(state, q_vec, dt)
            worst = max(worst, info["mass_residual"] / max(1.0, abs(mean_before)))
    ok = worst <= 1e-12
    print(f"mass balance over {args.cases} randomized configurations: "
          f"max relative residual {worst:.3e} ({'pass' if ok else 'FAIL'})")
    return 0 if ok else 1


def cmd_demo(args) -> int:
    from .analysis import emit_csv, verify_demand, verify_mass_balance, write_report
    from .fixtures import demo_config
    from .scenario import SimulationAbort, run

    config = demo_config()
    try:
        record = run(config)
        baseline = run(config, feedback=False)
    except SimulationAbort as e:
        print(f"runtime abort: {e}", file=sys.stderr)
        return 3
    emit_csv(record, args.out, baseline=baseline)
    reports = [verify_mass_balance(record), verify_demand(record)]
    write_report(record, args.out, reports=reports)
    enorm_final = float(abs(record.sigma[-1]).max())
    print(f"demo complete: final max|sigma| = {enorm_final:.3e}, "
          f"events {record.cum_events[-1]:.2f} vs background "
          f"{record.meta['r_star'] * record.t[-1]:.2f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    _setup_logging()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
