"""Command-line interface.

Subcommands: simulate, classify, constants, sweep, check.  A config
argument is a file path or a preset name.  The FLOCKLAB_THREADS variable
caps sweep parallelism; single runs are sequential and bitwise
reproducible regardless of its value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from .config import ConfigError, preset_names, resolve_config
from .runner import classify, run, sweep, sweep_csv


def _thread_cap() -> int:
    raw = os.environ.get("FLOCKLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_axis(spec: str):
    # key=lo:hi:n, inclusive endpoints
    try:
        key, _, grid = spec.partition("=")
        lo_s, hi_s, n_s = grid.split(":")
        lo, hi, count = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ConfigError(f"axis must look like key=lo:hi:n, got {spec!r}") from None
    if count < 1:
        raise ConfigError(f"axis point count must be >= 1, got {count}")
    if count == 1:
        values = [lo]
    else:
        step = (hi - lo) / (count - 1)
        values = [lo + i * step for i in range(count)]
    return key, values


def cmd_simulate(args) -> int:
    cfg = resolve_config(args.config)
    result = run(cfg)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "frames.csv"), "w", encoding="utf-8") as fh:
            fh.write(result.csv())
        with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(result.summary.to_json() + "\n")
    print(result.summary.to_json())
    failed = [c for c in result.summary.bound_checks if not c.passed]
    return 1 if failed else 0


def cmd_classify(args) -> int:
    cfg = resolve_config(args.config)
    report, details = classify(cfg, u_max=args.u_max)
    print(json.dumps({"report": asdict(report), "details": details}, indent=2))
    return 0


def cmd_constants(args) -> int:
    cfg = resolve_config(args.config)
    print(constants_json(cfg))
    return 0


def constants_json(cfg) -> str:
    from . import constants as consts
    from .initial import build_state
    from .kernels import ConstantKernel, kernel_bounds
    from .potentials import convexity_bounds
    from .runner import _phi_minus_apriori

    _, info = build_state(cfg)
    a_lo, a_hi = convexity_bounds(cfg.potential)
    _, phi_plus, dphi_inf = kernel_bounds(cfg.kernel, 0.0)
    phi_minus, source = _phi_minus_apriori(cfg, info)
    coupling = cfg.m0 * cfg.kernel.value if isinstance(cfg.kernel, ConstantKernel) else None
    u_max = None
    if phi_minus is not None and a_lo > 0.0:
        u_max = consts.velocity_bound(
            a_lo, a_hi, cfg.m0, phi_minus, phi_plus, info.energy0, info.max_speed_position0
        )
    report = consts.constants_report(
        a_lo,
        a_hi,
        cfg.m0,
        phi_minus,
        phi_plus,
        dphi_inf,
        K=coupling,
        energy0=info.energy0,
        particle_energy0=info.particle_energy0,
        kernel=cfg.kernel,
        u_max=u_max,
    )
    report.notes.append(f"kernel floor source: {source}")
    return report.to_json()


def cmd_sweep(args) -> int:
    cfg = resolve_config(args.config)
    axes = [_parse_axis(spec) for spec in args.axis]
    workers = _thread_cap() if args.parallel else 1
    columns, rows = sweep(cfg, axes, simulate=args.simulate, max_workers=workers)
    text = sweep_csv(columns, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(args) -> int:
    cfg = resolve_config(args.preset)
    result = run(cfg)
    summary = result.summary
    for check in summary.bound_checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: max violation {check.max_violation:.3e}"
              f" (tol {check.tol:.0e})")
    if summary.threshold is not None:
        print(f"threshold verdict: {summary.threshold.verdict}")
    if summary.blowup:
        lo, hi = summary.blowup
        print(f"blow-up bracket: [{lo:.6g}, {hi:.6g}]")
    print(f"wall time: {summary.wall_time:.2f} s, frames: {summary.n_frames}")
    ok = summary.all_checks_pass
    print("RESULT:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flocklab",
        description="Alignment dynamics laboratory: simulate, classify thresholds,"
        " evaluate closed-form constants, sweep parameter grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configuration and print the summary")
    p.add_argument("config", help="config file path or preset name")
    p.add_argument("--out", help="directory for frames.csv and summary.json")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("classify", help="threshold classification of a hydro config")
    p.add_argument("config")
    p.add_argument("--u-max", type=float, default=None, dest="u_max",
                   help="measured velocity bound (otherwise the a-priori bound is used)")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("constants", help="closed-form constants for a config")
    p.add_argument("config")
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("sweep", help="classify over a 1- or 2-axis parameter grid")
    p.add_argument("config")
    p.add_argument("--axis", action="append", required=True, metavar="key=lo:hi:n",
                   help="sweep axis, may be given twice")
    p.add_argument("--simulate", action="store_true", help="also simulate each grid point")
    p.add_argument("--parallel", action="store_true",
                   help="run grid points in parallel (capped by FLOCKLAB_THREADS)")
    p.add_argument("--out", help="write the sweep CSV here instead of stdout")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("check", help="run an acceptance preset and report pass/fail")
    p.add_argument("preset", help=f"one of: {', '.join(preset_names())}")
    p.set_defaults(fn=cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
