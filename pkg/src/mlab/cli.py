"""Batch command-line front end.

Subcommands: run, diagonalize, replay, splitting, complexity,
enumerate-low, verify.  All capital outputs are exact rationals; the
optional --plot flags render matplotlib figures to files next to the CSV
output.  MLAB_BUDGET sets the default step budget.

Exit codes: 0 success, 1 verification failure, 2 configuration/usage
error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .catalog import (
    CatalogError,
    description_system,
    landing_by_id,
    load_roster,
    schedule_by_id,
    schedule_id_for,
    source_by_id,
    strategy_from_ids,
)
from .certificates import CertificateFormatError, parse_certificate, serialize_certificate
from .complexity import DescriptionSystem, complexity_upper, enumerate_low
from .core import StepBudget, Word, validate_checkpoints
from .diagonalize import replay_certificate, run_construction
from .splitting import build_plan, build_splitting_strategy, checkpoint_gains
from .strategies import run_on_sequence
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(Exception):
    pass


def _parse_schedule_arg(text: str) -> tuple[list[int], str]:
    if "," in text:
        try:
            values = [int(x) for x in text.split(",")]
        except ValueError as e:
            raise ConfigError(f"bad schedule {text!r}") from e
        return values, schedule_id_for(values)
    return schedule_by_id(text), text


def _bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    padded = bits + "0" * (-len(bits) % 8)
    return bytes(int(padded[i:i + 8], 2)
                 for i in range(0, len(padded), 8)).hex()


# --- run ----------------------------------------------------------------------


def _load_run_config(path: str):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path!r}")
    if "run" not in parser:
        raise ConfigError("config needs a [run] section")
    run = parser["run"]
    max_moves = run.getint("max_moves", fallback=32)
    out_dir = Path(run.get("out_dir", "out"))
    budget = run.getint("budget", fallback=0)
    strategies = {}
    sources = {}
    for section in parser.sections():
        if section.startswith("strategy:"):
            name = section.split(":", 1)[1]
            strategies[name] = strategy_from_ids(
                parser[section]["martingale"],
                parser[section].get("rule", "monotonic"))
        elif section.startswith("source:"):
            name = section.split(":", 1)[1]
            sources[name] = source_by_id(parser[section]["id"])
    if not strategies:
        raise ConfigError("config lists no strategies")
    if not sources:
        raise ConfigError("config lists no sources")
    return strategies, sources, max_moves, out_dir, budget


def cmd_run(args) -> int:
    from .report import plot_capitals, write_trace_csv

    try:
        strategies, sources, max_moves, out_dir, budget = _load_run_config(args.config)
    except (ConfigError, CatalogError, KeyError, configparser.Error) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for s_name, strategy in sorted(strategies.items()):
            for src_name, source in sorted(sources.items()):
                bgt = StepBudget(budget) if budget else None
                trace = run_on_sequence(strategy, source, max_moves, bgt)
                stem = out_dir / f"{s_name}__{src_name}"
                write_trace_csv(stem.with_suffix(".csv"), trace)
                if args.plot:
                    plot_capitals(stem.with_suffix(".png"),
                                  {f"{s_name} vs {src_name}": trace.capitals})
                print(f"{s_name} vs {src_name}: {len(trace.positions)} moves, "
                      f"halt={trace.halt} -> {stem.with_suffix('.csv')}")
    except OSError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# --- diagonalize / replay --------------------------------------------------------


def cmd_diagonalize(args) -> int:
    try:
        roster = load_roster(args.roster)
        schedule, schedule_id = _parse_schedule_arg(args.schedule)
        landing = landing_by_id(args.landing)
    except (ConfigError, CatalogError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_construction(roster, schedule, args.variant,
                                  landing=landing, schedule_id=schedule_id)
        blob = serialize_certificate(result.certificate)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(blob)
        print(f"constructed {len(result.word)} bits; adversary max "
              f"{max(result.d_trajectory)}; certificate {len(blob)} bytes -> {out}")
        print(f"prefix: {result.word}")
        if args.plot:
            from .report import plot_adversary

            plot_adversary(out.with_suffix(".png"), result.d_trajectory)
    except (ValueError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        blob = Path(args.certificate).read_bytes()
        cert = parse_certificate(blob)
    except (OSError, CertificateFormatError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        roster = load_roster(args.roster or f"{cert.variant}-std")
        schedule = schedule_by_id(cert.schedule_id)
        landing = landing_by_id(cert.landing_id)
        n = args.length if args.length is not None else cert.target_length
        word = replay_certificate(cert, n, roster, schedule, landing=landing)
        print(word)
        if args.check:
            forward = run_construction(roster, schedule, cert.variant,
                                       landing=landing,
                                       schedule_id=cert.schedule_id)
            if forward.word[:n] != word:
                print("check FAILED: replay differs from forward run",
                      file=sys.stderr)
                return EXIT_FAILED
            print(f"check ok: replay matches the forward construction to {n} bits")
    except (CatalogError, ValueError, KeyError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# --- splitting --------------------------------------------------------------------


def cmd_splitting(args) -> int:
    try:
        values = [int(x) for x in args.checkpoints.split(",")]
        cp = validate_checkpoints(values)
        thresholds = None
        if args.thresholds:
            thresholds = [int(x) for x in args.thresholds.split(",")]
        source = source_by_id(args.source)
    except (ValueError, CatalogError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        plan = build_plan(cp, thresholds)
        strategy, schedule = build_splitting_strategy(plan, DescriptionSystem())
        moves = args.max_moves or len(schedule.positions)
        trace = run_on_sequence(strategy, source, moves)
        out_dir = Path(args.out_dir)
        from .report import plot_capitals, write_gain_csv, write_trace_csv

        write_trace_csv(out_dir / "trajectory.csv", trace)
        rows = checkpoint_gains(schedule, trace.capitals, trace.positions)
        write_gain_csv(out_dir / "gains.csv", rows)
        if args.plot:
            plot_capitals(out_dir / "trajectory.png",
                          {f"splitting vs {source.description}": trace.capitals})
        cleared = sum(1 for r in rows if r["gain"] >= 1)
        print(f"{len(trace.positions)} moves against {source.description}; "
              f"{cleared}/{len(rows)} intervals cleared gain 1 -> {out_dir}/")
    except (ValueError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# --- complexity --------------------------------------------------------------------


def cmd_complexity(args) -> int:
    try:
        word = Word(args.word)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    ds = description_system()
    budget = StepBudget(args.budget) if args.budget else None
    bound = complexity_upper(ds, word, args.condition, budget)
    if bound is None:
        print("no bound found within budget")
        return EXIT_FAILED
    print(f"bound={bound.bound} witness_bits={bound.witness} "
          f"witness_hex={_bits_to_hex(bound.witness)}")
    return EXIT_OK


def cmd_enumerate_low(args) -> int:
    ds = description_system()
    condition = args.condition if args.condition is not None else args.length
    result = enumerate_low(ds, args.length, condition, args.threshold)
    for w in result.words:
        print(w)
    if not result.complete:
        print("(truncated by budget)", file=sys.stderr)
    return EXIT_OK


# --- verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; have "
              f"{sorted(SUITES) + ['all']}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlab",
        description="betting strategies, martingale transforms, and "
                    "diagonalization constructions over bit sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run configured strategy/source pairs to CSV")
    p.add_argument("config")
    p.add_argument("--plot", action="store_true",
                   help="also render capital trajectories to PNG")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diagonalize", help="run a staged construction")
    p.add_argument("--roster", required=True,
                   help="roster file path or standard roster name")
    p.add_argument("--schedule", required=True,
                   help="schedule name (s64, s512) or comma list like 0,8,32")
    p.add_argument("--variant", required=True, choices=["tmr", "tir", "pmr", "ppr"])
    p.add_argument("--landing", default="", help="landing set id, e.g. multiples:10")
    p.add_argument("--out", required=True, help="certificate output path")
    p.add_argument("--plot", action="store_true",
                   help="render the adversary trajectory next to the certificate")
    p.set_defaults(fn=cmd_diagonalize)

    p = sub.add_parser("replay", help="replay a certificate to a prefix")
    p.add_argument("certificate")
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--roster", default=None,
                   help="roster path/name; defaults to the variant's standard roster")
    p.add_argument("--check", action="store_true",
                   help="also re-run the forward construction and compare")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("splitting", help="run the interval-splitting strategy")
    p.add_argument("--checkpoints", required=True, help="comma list, e.g. 0,256,512")
    p.add_argument("--source", required=True)
    p.add_argument("--max-moves", type=int, default=0,
                   help="0 = the whole materialized schedule")
    p.add_argument("--thresholds", default="",
                   help="per-interval candidate thresholds (comma list); "
                        "default: the asymptotic formula")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_splitting)

    p = sub.add_parser("complexity", help="witnessed description-length bound")
    p.add_argument("word")
    p.add_argument("--condition", type=int, required=True)
    p.add_argument("--budget", type=int, default=0)
    p.set_defaults(fn=cmd_complexity)

    p = sub.add_parser("enumerate-low", help="stream low-complexity words")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--threshold", type=int, required=True)
    p.add_argument("--condition", type=int, default=None)
    p.set_defaults(fn=cmd_enumerate_low)

    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("suite")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
