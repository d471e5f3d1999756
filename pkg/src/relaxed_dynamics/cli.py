"""Command line entry point: ``relaxed-dynamics <subcommand> <config>``.

Subcommands
-----------
simulate           integrate the configured system and run the diagnostics
validate-schedule  check one assumption (a1..a6) and print the margin
rate               gradient-system run with the ergodic rate report
discrete           inertial forward-backward iteration
compare            discrete iteration next to the continuous trajectory

Exit codes: 0 all contracted diagnostics passed, 1 some diagnostic failed,
2 the schedule violates the assumption the run relies on (or usage error),
3 the config could not be used.

The output directory is taken from ``--out``, then the environment variable
``RELAXED_DYNAMICS_OUT``, then ``[output] dir`` in the config.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, apply_override, load_config
from .exceptions import (
    CapabilityError,
    InvalidOperatorError,
    InvalidScheduleError,
    ParameterDomainError,
)
from .experiment import (
    EXIT_ASSUMPTION,
    EXIT_OK,
    _validation_items,
    _write_lines,
    build_experiment,
    run_experiment,
)
from .schedules import default_grid, validate

ENV_OUT = "RELAXED_DYNAMICS_OUT"
EXIT_CONFIG = 3

_USER_ERRORS = (ConfigError, ParameterDomainError, InvalidOperatorError,
                InvalidScheduleError, CapabilityError, OSError)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="relaxed-dynamics",
        description="Simulate and certify second-order relaxed dynamics.",
    )
    sub = p.add_subparsers(dest="command", metavar="command", required=True)

    def common(sp):
        sp.add_argument("config", help="TOML experiment config")
        sp.add_argument("--out", help="output directory (overrides env and config)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--force", action="store_true",
                        help="run even if the schedule fails its assumption; "
                             "diagnostics are then marked non-contractual")
        sp.add_argument("--sweep", metavar="PARAM=RANGE",
                        help="vary section.key over a:b:n (linspace) or v1,v2,...")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes for --sweep (default: CPU count)")

    for name, help_ in [
        ("simulate", "integrate and run diagnostics"),
        ("rate", "ergodic rate report on a gradient system"),
        ("discrete", "inertial forward-backward iteration"),
        ("compare", "discrete iteration against the continuous limit"),
    ]:
        common(sub.add_parser(name, help=help_))
    vs = sub.add_parser("validate-schedule", help="check one assumption on the schedule")
    vs.add_argument("config")
    vs.add_argument("--assumption", required=True,
                    choices=["a1", "a2", "a3", "a4", "a5", "a6"])
    vs.add_argument("--seed", type=int)
    vs.add_argument("--out", help="also write validation.txt here")
    return p


def parse_sweep(text: str):
    """``"schedule.gam=1:3:5"`` -> ``("schedule.gam", [1.0, 1.5, ...])``."""
    key, sep, rng = text.partition("=")
    if not sep or "." not in key and key != "seed":
        raise ConfigError(f"--sweep expects section.key=range, got {text!r}")
    try:
        if ":" in rng:
            a, b, n = rng.split(":")
            values = [float(v) for v in np.linspace(float(a), float(b), int(n))]
        else:
            values = [float(v) for v in rng.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep range {rng!r}: {exc}") from exc
    if not values:
        raise ConfigError("empty sweep range")
    if key == "seed" or key.endswith(("max_iter", "T_points")):
        values = [int(v) for v in values]
    return key, values


def _out_dir(args, cfg) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    return Path(cfg.output_dir)


def _print_summary(summary: dict, out: Path, stream=None):
    stream = sys.stdout if stream is None else stream
    code = summary["exit_code"]
    if code == EXIT_ASSUMPTION:
        print(f"assumption {summary['assumption']} violated: {summary.get('violated', '')} "
              f"(witness_t={summary['witness_t']:.6g}, margin={summary['assumption_margin']:.6g})",
              file=sys.stderr)
        return
    keys = ["assumption", "assumption_margin", "norm_v", "norm_a", "norm_field",
            "distance_to_x_star", "lyapunov_max_uptick", "slope", "max_gap_minus_bound",
            "discrete_status", "discrete_iterations", "discrete_final_residual",
            "final_gap", "same_limit"]
    parts = [f"{k}={summary[k]:.6g}" if isinstance(summary[k], float) else f"{k}={summary[k]}"
             for k in keys if k in summary]
    failed = [k[6:] for k, v in summary.items() if k.startswith("check_") and not v]
    status = "ok" if code == EXIT_OK else "FAILED " + ",".join(failed)
    if not summary.get("contractual", True):
        status += " (non-contractual: --force)"
    print(f"{out}: {status}", file=stream)
    print("  " + " ".join(parts), file=stream)


def _run_one(job):
    cfg, command, force, out = job
    return str(out), run_experiment(cfg, command, force, out)


def _cmd_validate(args, cfg) -> int:
    exp = build_experiment(cfg)
    key = args.assumption
    kw = {}
    if key in ("a1", "a4", "a5"):
        kw["beta"] = exp.problem.beta if exp.problem is not None else exp.spec.field.beta
    if key in ("a4", "a5"):
        if exp.eta is None:
            raise ConfigError(f"{key} needs system.eta or system.eta_over_beta")
        kw["eta"] = exp.eta
    if key == "a3":
        kw["alpha"] = float(cfg.problem.get("alpha", cfg.system.get("alpha", 0.5)))
    rep = validate(key, exp.schedule, default_grid(exp.integrator.horizon), **kw)
    name = "zeta_star" if key == "a6" else "theta_star"
    head = "feasible" if rep.feasible else "infeasible"
    # margins are only resolved to 1e-12, so print them at that precision
    line = f"{head} {name}={round(rep.margin, 12) + 0.0!r} witness_t={rep.witness_t:g}"
    if rep.violated:
        line += f" violated: {rep.violated}"
    print(line)
    if args.out:
        _write_lines(Path(args.out) / "validation.txt", _validation_items(rep))
    return EXIT_OK if rep.feasible else EXIT_ASSUMPTION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = apply_override(cfg, "seed", args.seed)
        if args.command == "validate-schedule":
            return _cmd_validate(args, cfg)
        base = _out_dir(args, cfg)
        if not args.sweep:
            summary = run_experiment(cfg, args.command, args.force, base)
            _print_summary(summary, base)
            return int(summary["exit_code"])

        key, values = parse_sweep(args.sweep)
        jobs = []
        for i, v in enumerate(values):
            run_cfg = apply_override(cfg, key, v)
            jobs.append((run_cfg, args.command, args.force,
                         base / f"run_{i:03d}_{key.replace('.', '_')}={v:g}"))
        # build everything up front so config errors surface before forking
        for job in jobs:
            build_experiment(job[0])
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, jobs))
        codes = []
        for out, summary in results:
            _print_summary(summary, Path(out))
            codes.append(int(summary["exit_code"]))
        return max(codes)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
