"""Command-line front end: run experiments, regenerate oracles, verify reports.

Exit codes: 0 when every verdict passes, 2 when any verdict (or verification
check) fails, 3 for configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exactref import (
    MAX_ENUMERATION_SIDE,
    compute_oracle_entries,
    load_oracles,
    write_oracles,
)
from .harness import ConfigError, ExperimentConfig, run_experiment, verify_report

EXIT_OK = 0
EXIT_VERDICT_FAILED = 2
EXIT_CONFIG_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isinglab",
        description="Heat-bath Glauber dynamics laboratory on small tori.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the experiment config (JSON)")
    p_run.add_argument("--output", default=None, help="override the config's output_dir")
    p_run.add_argument("--workers", type=int, default=None, help="override the config's worker count")

    p_oracle = sub.add_parser(
        "oracle-regen",
        help="recompute exact-enumeration oracles and compare with the packaged file",
    )
    p_oracle.add_argument("--n", type=int, action="append", default=None,
                          help="torus side to enumerate (repeatable; default: packaged grid)")
    p_oracle.add_argument("--beta", type=float, action="append", default=None,
                          help="inverse temperature (repeatable; default: packaged grid)")
    p_oracle.add_argument("--out", default=None,
                          help="write the regenerated oracle file here (default: print summary only)")

    p_verify = sub.add_parser("verify", help="re-check a report from its CSVs without re-simulating")
    p_verify.add_argument("--report", required=True, help="report directory containing report.json")
    return parser


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        overrides = {}
        if args.output is not None:
            overrides["output_dir"] = args.output
        if args.workers is not None:
            overrides["workers"] = args.workers
        if overrides:
            data = config.to_json_dict()
            data.update(overrides)
            config = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"running {config.experiment} (seed {config.master_seed}) -> {config.output_dir}")
    report = run_experiment(config)
    for verdict in report.verdicts:
        flag = "PASS" if verdict.passed else "FAIL"
        print(f"  [{flag}] {verdict.criterion}: statistic={verdict.statistic:.6g} "
              f"{verdict.comparison} {verdict.threshold}")
    print(f"report written to {Path(config.output_dir) / 'report.json'} "
          f"({report.wall_time_seconds:.2f}s)")
    return report.exit_code


def _cmd_oracle_regen(args) -> int:
    sides = args.n
    if sides is not None:
        bad = [n for n in sides if not 2 <= n <= MAX_ENUMERATION_SIDE]
        if bad:
            print(
                f"config error: enumeration sides must be in [2, {MAX_ENUMERATION_SIDE}], got {bad}",
                file=sys.stderr,
            )
            return EXIT_CONFIG_ERROR
    betas = args.beta
    if betas is not None and any(b <= 0 for b in betas):
        print("config error: beta must be positive", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    entries = compute_oracle_entries(sides=sides, betas=betas)
    packaged = load_oracles()
    worst = 0.0
    missing = 0
    for entry in entries:
        key = (entry["side"], entry["beta"], entry["observable"])
        if key not in packaged:
            missing += 1
            print(f"  new entry (not in packaged file): side={key[0]} beta={key[1]} {key[2]}")
            continue
        gap = abs(entry["value"] - packaged[key][0])
        worst = max(worst, gap)
        ok = gap <= packaged[key][1]
        print(
            f"  [{'PASS' if ok else 'FAIL'}] side={key[0]} beta={key[1]} {key[2]}: "
            f"value={entry['value']!r} gap={gap:.3e}"
        )
    if args.out is not None:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        write_oracles(out_path, entries)
        print(f"wrote {len(entries)} entries to {out_path}")
    tolerance_ok = all(
        abs(e["value"] - packaged[(e["side"], e["beta"], e["observable"])][0])
        <= packaged[(e["side"], e["beta"], e["observable"])][1]
        for e in entries
        if (e["side"], e["beta"], e["observable"]) in packaged
    )
    print(f"regenerated {len(entries)} entries; max gap to packaged = {worst:.3e}")
    return EXIT_OK if tolerance_ok else EXIT_VERDICT_FAILED


def _cmd_verify(args) -> int:
    try:
        ok, messages = verify_report(args.report)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for msg in messages:
        print(msg)
    print("verification " + ("PASSED" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VERDICT_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "oracle-regen":
        return _cmd_oracle_regen(args)
    if args.command == "verify":
        return _cmd_verify(args)
    parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    return EXIT_CONFIG_ERROR  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
