"""Command line front end.

    aura5g run --scenario CABE --constraints MRT,CB --trials 100 --users 150 \
               --time-limit 600 --seed 42 --out results/cabe
    aura5g sweep --matrix matrix.json --out results/

``run`` executes one campaign and writes the artifact set into --out.  A JSON
config mirroring the scenario spec can replace the flags (--config); explicit
flags win over the config.  ``sweep`` reads a scenario x constraint matrix:

    {"scenarios": ["CABE", "CAIE"],
     "constraint_sets": [[], ["MRT"], ["MRT", "CB"]],
     "trials": 20, "users": 30, "seed": 7}

and runs every combination into per-label subdirectories plus a sweep.json
summary.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .campaign import run_campaign
from .scenario import (DcMode, ScenarioSpec, UnknownCode, parse_scenario_code,
                       scenario_label, spec_from_config)


def _parse_override(text: str):
    key, _, raw = text.partition("=")
    if not _:
        raise argparse.ArgumentTypeError(f"override {text!r} is not key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if isinstance(value, list):
        value = tuple(value)
    return key, value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, help="Monte Carlo iterations")
    p.add_argument("--users", type=int, help="number of eMBB users")
    p.add_argument("--mmtc-per-mc", type=int, help="mMTC devices per macro cell")
    p.add_argument("--time-limit", type=float, help="solver cutoff per trial, seconds")
    p.add_argument("--seed", type=int, help="campaign base seed")
    p.add_argument("--gap-tol", type=float, default=1e-4,
                   help="relative MIP gap for optimality (default 1e-4)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel trial processes (default 1)")
    p.add_argument("--dc-mode", choices=[m.value for m in DcMode],
                   help="override the connectivity mode (sa / baseline have no code letter)")
    p.add_argument("--override", action="append", type=_parse_override, default=[],
                   metavar="KEY=VALUE", help="parameter override, repeatable")
    p.add_argument("--out", required=True, help="output directory")


def _spec_from_args(args, scenario: str | None, constraints) -> ScenarioSpec:
    if args.config:
        spec = spec_from_config(json.loads(Path(args.config).read_text()))
    elif scenario:
        spec = parse_scenario_code(scenario)
    else:
        raise SystemExit("either --scenario or --config is required")
    fields = {}
    if constraints is not None:
        fields["constraints"] = frozenset(c for c in constraints.split(",") if c)
    if args.trials is not None:
        fields["n_trials"] = args.trials
    if args.users is not None:
        fields["n_embb_users"] = args.users
    if args.mmtc_per_mc is not None:
        fields["mmtc_per_mc"] = args.mmtc_per_mc
    if args.time_limit is not None:
        fields["solver_time_limit_s"] = args.time_limit
    if args.seed is not None:
        fields["base_seed"] = args.seed
    if args.dc_mode is not None:
        fields["dc_mode"] = DcMode(args.dc_mode)
        if fields["dc_mode"] is DcMode.BASELINE:
            fields.setdefault("constraints", frozenset())
    if args.override:
        overrides = dict(spec.parameter_overrides)
        overrides.update(dict(args.override))
        fields["parameter_overrides"] = overrides
    return replace(spec, **fields) if fields else spec


def cmd_run(args) -> int:
    try:
        spec = _spec_from_args(args, args.scenario, args.constraints)
    except UnknownCode as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_campaign(spec, args.out, workers=args.workers, gap_tol=args.gap_tol)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(report.status_counts.items()))
    print(f"{report.label}: {spec.n_trials} trials ({counts}) -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    matrix = json.loads(Path(args.matrix).read_text())
    scenarios = matrix.get("scenarios", [])
    constraint_sets = matrix.get("constraint_sets", [[]])
    if not scenarios:
        print("error: sweep matrix has no scenarios", file=sys.stderr)
        return 2
    summary = []
    out_root = Path(args.out)
    for code in scenarios:
        for cset in constraint_sets:
            try:
                spec = _spec_from_args(args, code, ",".join(cset))
            except UnknownCode as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            for key in ("trials", "users", "seed", "time_limit"):
                if key in matrix and getattr(args, key if key != "time_limit" else "time_limit") is None:
                    field = {"trials": "n_trials", "users": "n_embb_users",
                             "seed": "base_seed", "time_limit": "solver_time_limit_s"}[key]
                    spec = replace(spec, **{field: matrix[key]})
            label = scenario_label(spec)
            directory = out_root / label.replace("+", "_").replace("[", "_").rstrip("]")
            report = run_campaign(spec, directory, workers=args.workers,
                                  gap_tol=args.gap_tol)
            summary.append({"label": label, "dir": str(directory),
                            "status_counts": report.status_counts,
                            "mean_throughput_bps": report.aggregates["mean_throughput_bps"]})
            print(f"{label}: {report.status_counts}")
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "sweep.json").write_text(json.dumps(summary, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aura5g",
                                     description="HetNet user-association simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario campaign")
    run_p.add_argument("--scenario", help="scenario code, e.g. CABE or SMIEm")
    run_p.add_argument("--constraints", help="comma-separated flags from MRT,CB,CPL")
    run_p.add_argument("--config", help="JSON config mirroring the scenario spec")
    _add_common(run_p)
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a scenario x constraint matrix")
    sweep_p.add_argument("--matrix", required=True, help="JSON matrix file")
    sweep_p.set_defaults(func=cmd_sweep, config=None)
    _add_common(sweep_p)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
