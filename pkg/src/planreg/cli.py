"""Command-line front end: census, bound-curve, ucurve, policy-sweep, rerun.

Every subcommand writes ``<output>.manifest.json`` next to its outputs. The
manifest records the full flag set, so ``planreg rerun <manifest>`` repeats
the run and reproduces the CSVs byte for byte.

Exit codes: 0 success, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from planreg import __version__
from planreg.census import run_census_sweep, write_census_csv
from planreg.experiments import (
    EPSILON_GRID,
    GAMMA_GRID,
    UCurveConfig,
    bound_argmins,
    run_bound_curve,
    run_ucurve,
    write_bound_csv,
    write_ucurve_csv,
)
from planreg.policy_search import SweepConfig, run_hidden_sweep, sweep_problem, write_sweep_csv
from planreg.svgplot import Series, line_chart, write_svg

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="planreg", description="Planner-overfitting experiments on tabular MDPs.")
    parser.add_argument("--version", action="version", version=f"planreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def threads(p):
        p.add_argument("--threads", type=_positive_int, default=1, help="worker processes (default 1)")

    p = sub.add_parser("census", help="count distinct optimal policies over random transitions")
    p.add_argument("--mode", choices=["gamma", "epsilon", "softened"], required=True)
    p.add_argument("--values", type=_float_list, help="regularizer grid (default depends on mode)")
    p.add_argument("--reward-draws", type=_positive_int, default=20)
    p.add_argument("--stop-window", type=_positive_int, default=5000)
    p.add_argument("--vi-sweeps", type=_positive_int, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    threads(p)

    p = sub.add_parser("bound-curve", help="loss bound as a function of the planning discount")
    p.add_argument("--n-list", type=_int_list, default=(40000, 1000000))
    p.add_argument("--grid", type=_float_list, default=GAMMA_GRID)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", required=True, help="CSV path; the SVG goes next to it")

    p = sub.add_parser("ucurve", help="Monte-Carlo loss against the regularizer")
    p.add_argument("--mode", choices=["gamma", "epsilon"], required=True)
    p.add_argument("--n", type=_int_list, default=(5, 10, 20, 50), help="trajectory counts")
    p.add_argument("--replicates", type=_positive_int, default=1000)
    p.add_argument("--grid", type=_float_list)
    p.add_argument("--horizon", type=_positive_int, default=10)
    p.add_argument("--fixed-point", action="store_true",
                   help="epsilon mode: plan with the epsilon-greedy fixed point")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out-prefix", required=True)
    threads(p)

    p = sub.add_parser("policy-sweep", help="REINFORCE on a learned model across hidden widths")
    p.add_argument("--hidden", type=_int_list, default=SweepConfig.hidden_list)
    p.add_argument("--runs", type=_positive_int, default=SweepConfig.runs)
    p.add_argument("--trajectories", type=_positive_int, default=20)
    p.add_argument("--trajectory-horizon", type=_positive_int, default=10)
    p.add_argument("--episodes", type=_positive_int, default=SweepConfig.episodes_per_run)
    p.add_argument("--episode-horizon", type=_positive_int, default=SweepConfig.episode_horizon)
    p.add_argument("--step-size", type=float, default=SweepConfig.step_size)
    p.add_argument("--baseline-step", type=float, default=SweepConfig.baseline_step)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out-prefix", required=True)
    threads(p)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--threads", type=_positive_int, help="override the recorded worker count")
    return parser


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


def _flags(args: argparse.Namespace) -> dict:
    return {k: _plain(v) for k, v in vars(args).items() if k != "command"}


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def _cmd_census(args) -> list[Path]:
    values = args.values or (GAMMA_GRID if args.mode == "gamma" else EPSILON_GRID)
    rows = run_census_sweep(args.mode, values, args.reward_draws, args.seed, args.stop_window,
                            args.vi_sweeps, threads=args.threads)
    out = Path(args.out)
    write_census_csv(rows, out)
    return [out]


def _cmd_bound_curve(args) -> list[Path]:
    _check(0.0 < args.delta < 1.0, f"--delta must lie in (0, 1), got {args.delta}")
    _check(all(0.0 <= g < 1.0 for g in args.grid), "--grid values must lie in [0, 1)")
    rows = run_bound_curve(args.n_list, args.grid, args.delta)
    out = Path(args.out)
    write_bound_csv(rows, out)
    series = [Series(f"n={n}", [g for m, g, _ in rows if m == n], [b for m, _, b in rows if m == n])
              for n in args.n_list]
    best = bound_argmins(rows)
    title = "Loss bound; argmin " + ", ".join(f"n={n}: {g:g}" for n, g in best.items())
    svg = out.with_suffix(".svg")
    write_svg(line_chart(series, title, "planning discount", "bound on loss"), svg)
    return [out, svg]


def _cmd_ucurve(args) -> list[Path]:
    grid = args.grid or (GAMMA_GRID if args.mode == "gamma" else EPSILON_GRID)
    config = UCurveConfig(args.mode, tuple(grid), tuple(args.n), args.replicates, args.horizon,
                          seed=args.seed, fixed_point=args.fixed_point)
    result = run_ucurve(config, args.threads)
    csv_path, svg_path = Path(args.out_prefix + ".csv"), Path(args.out_prefix + ".svg")
    write_ucurve_csv(result, csv_path)
    series = []
    for n in config.n_list:
        rows = result.curve(n)
        series.append(Series(f"{n} trajectories", [r.param for r in rows], [r.mean_loss for r in rows],
                             [r.ci_low for r in rows], [r.ci_high for r in rows]))
    x_label = "planning discount" if args.mode == "gamma" else "epsilon"
    write_svg(line_chart(series, "Loss on the true MDP", x_label, "mean loss"), svg_path)
    return [csv_path, svg_path]


def _cmd_policy_sweep(args) -> list[Path]:
    _check(args.step_size > 0, "--step-size must be positive")
    _check(args.baseline_step is None or args.baseline_step >= 0, "--baseline-step must be non-negative")
    config = SweepConfig(tuple(args.hidden), args.runs, args.episodes, args.episode_horizon,
                         args.step_size, args.baseline_step, args.seed)
    true_mdp, dataset = sweep_problem(args.seed, args.trajectories, args.trajectory_horizon)
    rows = run_hidden_sweep(true_mdp, dataset, config, args.threads)
    csv_path, svg_path = Path(args.out_prefix + ".csv"), Path(args.out_prefix + ".svg")
    write_sweep_csv(rows, csv_path)
    hs = [r.hidden_units for r in rows]
    series = [
        Series("learned model", hs, [r.value_on_model for r in rows],
               [r.vm_ci_low for r in rows], [r.vm_ci_high for r in rows]),
        Series("true MDP", hs, [r.value_on_true for r in rows],
               [r.vt_ci_low for r in rows], [r.vt_ci_high for r in rows]),
    ]
    write_svg(line_chart(series, "Policy value against width", "hidden units", "value", log_x=True), svg_path)
    return [csv_path, svg_path]


COMMANDS = {
    "census": _cmd_census,
    "bound-curve": _cmd_bound_curve,
    "ucurve": _cmd_ucurve,
    "policy-sweep": _cmd_policy_sweep,
}


def _manifest_path(outputs: list[Path]) -> Path:
    first = outputs[0]
    return first.with_name(first.stem + ".manifest.json")


def _execute(command: str, args: argparse.Namespace) -> int:
    started = time.time()
    outputs = COMMANDS[command](args)
    manifest = {
        "subcommand": command,
        "flags": _flags(args),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": time.time(),
        "outputs": [str(p) for p in outputs],
    }
    with open(_manifest_path(outputs), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _rerun(manifest_file: str, threads: int | None) -> int:
    with open(manifest_file) as fh:
        manifest = json.load(fh)
    command = manifest.get("subcommand")
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown subcommand {command!r}")
    # Re-parse the recorded flags so they get the same validation and types.
    defaults = vars(build_parser().parse_args(_required_argv(command, manifest["flags"])))
    defaults.update(manifest["flags"])
    if threads is not None and "threads" in defaults:
        defaults["threads"] = threads
    for key, value in defaults.items():
        if isinstance(value, list):
            defaults[key] = tuple(value)
    return _execute(command, argparse.Namespace(**defaults))


def _required_argv(command: str, flags: dict) -> list[str]:
    argv = [command]
    for key in ("mode", "out", "out_prefix"):
        if key in flags:
            argv += ["--" + key.replace("_", "-"), str(flags[key])]
    return argv


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "rerun":
            return _rerun(args.manifest, args.threads)
        return _execute(args.command, args)
    except (UsageError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
