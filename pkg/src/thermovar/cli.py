"""Command-line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    EXPERIMENT_IDS,
    load_config_file,
    resolve_config,
    run_experiment,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermovar",
        description="Reproduction runs for variational Gibbs-state preparation.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for experiment in EXPERIMENT_IDS:
        p = sub.add_parser(experiment, help=f"run the {experiment} experiment")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output directory (default results/<experiment>)")
        p.add_argument("--seeds", type=int, help="number of random restarts per cell")
        p.add_argument("--beta", help="comma-separated inverse temperatures")
        p.add_argument("--max-iters", type=int, help="optimizer iteration cap")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--exact", action="store_true",
                          help="exact loss evaluation (default)")
        mode.add_argument("--shots", type=int,
                          help="sampled loss evaluation with this shot budget")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    file_entries = load_config_file(args.config) if args.config else None
    overrides: dict[str, object] = {
        "out_dir": args.out,
        "seeds": args.seeds,
        "max_iters": args.max_iters,
    }
    if args.beta:
        overrides["betas"] = tuple(float(b) for b in args.beta.split(","))
    if args.shots:
        overrides["loss_mode"] = "sampled"
        overrides["shots"] = args.shots
    elif args.exact:
        overrides["loss_mode"] = "exact"
    cfg = resolve_config(args.experiment, file_entries, overrides)
    outcome = run_experiment(cfg)
    out = write_outputs(outcome)
    for check in outcome.checks:
        status = "PASS" if check.passed else ("FAIL" if check.gate else "fail*")
        print(f"[{status}] {check.name}: {check.detail}")
    print(f"wrote {out}")
    if not outcome.gate_passed:
        print("one or more reported thresholds failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
