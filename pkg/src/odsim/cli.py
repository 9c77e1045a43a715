"""Command-line driver.

Subcommands:
  run          simulate a design with the interleaved engine
  oracle       simulate with the brute-force reference simulator
  incremental  re-finalize a prior run's artifacts under new depths
  bench        run every design in a corpus directory and cross-check

Exit codes: 0 ok, 1 error (parse/validate/usage/io), 2 deadlock,
3 budget exhausted, 4 timing inconsistency, 5 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import report as report_mod
from .analysis import (
    DesignError, classify_design, elaborate, prune_unused_checks,
    validate_design,
)
from .engine import DEFAULT_BUDGET, run_simulation
from .incremental import ConstraintLedger, re_finalize, validate_constraints
from .model import SimulationFault
from .oracle import oracle_run
from .parser import ParseError, parse_design

log = logging.getLogger("odsim")

ARTIFACT_REPORT = "report.json"
ARTIFACT_GRAPH = "graph.json"
ARTIFACT_LEDGER = "ledger.json"
ARTIFACT_DESIGN = "design.od"


class _CliParser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default, reserved here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(report_mod.EXIT_ERROR)


def _parse_depth_overrides(items: list[str]) -> dict[str, int]:
    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"expected FIFO=DEPTH, got {item!r}")
        overrides[name] = int(value)
    return overrides


def _load_design(path: str):
    text = Path(path).read_text(encoding="utf-8")
    design = parse_design(text)
    diags = validate_design(design)
    for d in diags:
        print(f"{path}: {d}", file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        raise DesignError([d for d in diags if d.severity == "error"])
    return design


def _oracle_check(ed, depths, engine_result, max_cycles: int) -> dict:
    oracle = oracle_run(ed, depths, max_cycles=max_cycles)
    match = (oracle.status == engine_result.status
             and oracle.total_cycles == engine_result.total_cycles
             and oracle.outputs == engine_result.outputs
             and tuple(oracle.blocked) == tuple(engine_result.blocked))
    return {
        "verdict": "match" if match else "mismatch",
        "oracle_status": oracle.status,
        "oracle_total_cycles": oracle.total_cycles,
        "oracle_outputs": dict(sorted(oracle.outputs.items())),
        "oracle_blocked": sorted(oracle.blocked),
    }


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def cmd_run(args) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    try:
        design = _load_design(args.design)
    except (OSError, ParseError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    timings["parse"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    design_class = str(classify_design(design))
    if not args.no_prune:
        design = prune_unused_checks(design)
    ed = elaborate(design)
    try:
        depths = ed.resolve_depths(_parse_depth_overrides(args.depth))
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    timings["elaborate"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    try:
        result = run_simulation(ed, depths, budget=args.budget,
                                jitter_seed=args.jitter)
    except SimulationFault as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    timings["engine"] = (time.perf_counter() - t0) * 1e3
    timings["finalize"] = result.stats.get("finalize_us", 0) / 1e3

    log.info("%s: %s in %d cycles (%d events, %d queries)",
             result.design_name, result.status, result.total_cycles,
             result.stats["events"], result.stats["queries"])

    oracle_check = None
    if args.oracle_check:
        t0 = time.perf_counter()
        oracle_check = _oracle_check(ed, depths, result, args.oracle_max_cycles)
        timings["oracle"] = (time.perf_counter() - t0) * 1e3
        log.info("oracle verdict: %s", oracle_check["verdict"])

    report = report_mod.build_report(
        "engine", result.design_name, design_class, result.depths,
        result.status, result.total_cycles, result.outputs, result.blocked,
        len(result.constraints), oracle_check, timings, result.stats)
    _emit(report, args.report)
    if args.artifacts:
        outdir = Path(args.artifacts)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_json(outdir / ARTIFACT_REPORT, report)
        _write_json(outdir / ARTIFACT_GRAPH, result.graph_dump())
        _write_json(outdir / ARTIFACT_LEDGER, result.ledger().to_json())
        (outdir / ARTIFACT_DESIGN).write_text(
            Path(args.design).read_text(encoding="utf-8"), encoding="utf-8")
    if result.status == "timing-inconsistency":
        for c in result.violated:
            print(f"violated: {c.kind} {c.fifo} ordinal {c.ordinal} "
                  f"recorded {c.outcome}", file=sys.stderr)
    return report_mod.exit_code(report)


def cmd_oracle(args) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    try:
        design = _load_design(args.design)
    except (OSError, ParseError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    timings["parse"] = (time.perf_counter() - t0) * 1e3
    design_class = str(classify_design(design))
    ed = elaborate(design)
    try:
        depths = ed.resolve_depths(_parse_depth_overrides(args.depth))
        t0 = time.perf_counter()
        result = oracle_run(ed, depths, max_cycles=args.max_cycles)
    except SimulationFault as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    timings["oracle"] = (time.perf_counter() - t0) * 1e3
    report = report_mod.build_report(
        "oracle", design.name, design_class, depths, result.status,
        result.total_cycles, result.outputs, result.blocked, 0, None, timings)
    _emit(report, args.report)
    return report_mod.exit_code(report)


def cmd_incremental(args) -> int:
    """Artifact-level incremental path: no module code runs unless the
    recorded constraints are violated by the new depths."""
    indir = Path(args.artifacts)
    try:
        prior_report = json.loads((indir / ARTIFACT_REPORT).read_text())
        graph_dump = json.loads((indir / ARTIFACT_GRAPH).read_text())
        ledger = ConstraintLedger.from_json(
            json.loads((indir / ARTIFACT_LEDGER).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: missing or bad artifacts: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR
    if prior_report["status"] != "ok":
        print("error: prior run did not finish ok", file=sys.stderr)
        return report_mod.EXIT_ERROR
    try:
        overrides = _parse_depth_overrides(args.depth)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return report_mod.EXIT_ERROR

    design_class = prior_report.get("class")
    prior_depths = dict(prior_report["depths"])
    new_depths = dict(prior_depths)
    for name, depth in overrides.items():
        if name not in prior_depths:
            print(f"error: unknown FIFO {name!r}", file=sys.stderr)
            return report_mod.EXIT_ERROR
        new_depths[name] = depth

    if new_depths == prior_depths:
        print("reused, unchanged")
        report = report_mod.build_report(
            "incremental", prior_report["design"], design_class, new_depths,
            "ok", prior_report["total_cycles"], prior_report["outputs"],
            constraint_count=prior_report["constraint_count"])
        _emit(report, args.report)
        return report_mod.exit_code(report)

    t0 = time.perf_counter()
    graph, access, outcome = re_finalize(graph_dump, new_depths)
    violated = None
    if not outcome.deadlocked:
        violated = validate_constraints(ledger, graph, access, new_depths)
    incr_ms = (time.perf_counter() - t0) * 1e3

    if outcome.deadlocked or violated:
        reason = "capacity-deadlock" if outcome.deadlocked else "constraint-violated"
        print(f"resimulated ({reason})")
        try:
            design = _load_design(str(indir / ARTIFACT_DESIGN))
        except (OSError, ParseError, DesignError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return report_mod.EXIT_ERROR
        ed = elaborate(prune_unused_checks(design) if not args.no_prune else design)
        t0 = time.perf_counter()
        result = run_simulation(ed, new_depths, budget=args.budget)
        timings = {"incremental": incr_ms,
                   "engine": (time.perf_counter() - t0) * 1e3}
        report = report_mod.build_report(
            "incremental", result.design_name, design_class, result.depths,
            result.status, result.total_cycles, result.outputs, result.blocked,
            len(result.constraints), None, timings, result.stats)
    else:
        print("reused")
        report = report_mod.build_report(
            "incremental", prior_report["design"], design_class, new_depths,
            "ok", outcome.total_cycles, prior_report["outputs"],
            constraint_count=len(ledger.constraints),
            timings_ms={"incremental": incr_ms},
            stats={"statements": 0})
    _emit(report, args.report)
    return report_mod.exit_code(report)


def cmd_bench(args) -> int:
    corpus = sorted(Path(args.corpus).glob("*.od"))
    rows = []
    failures = 0
    for path in corpus:
        try:
            design = _load_design(str(path))
            design_class = str(classify_design(design))
            ed = elaborate(prune_unused_checks(design))
            result = run_simulation(ed, budget=args.budget)
            check = _oracle_check(ed, result.depths, result, args.oracle_max_cycles)
        except (ParseError, DesignError, SimulationFault) as exc:
            rows.append((path.stem, "?", "error", "-", "-", str(exc)))
            failures += 1
            continue
        expect_deadlock = "deadlock" in path.stem
        verdict = check["verdict"]
        note = ""
        if expect_deadlock:
            note = "expected-deadlock"
            if result.status != "deadlock":
                verdict = "mismatch"
        elif result.status != "ok":
            verdict = "mismatch"
        if verdict != "match":
            failures += 1
        rows.append((path.stem, design_class, result.status,
                     str(result.total_cycles), verdict, note))
    width = max([len(r[0]) for r in rows], default=10)
    print(f"{'design':<{width}}  {'class':<6} {'status':<20} "
          f"{'cycles':>8}  {'oracle':<8} note")
    for row in rows:
        print(f"{row[0]:<{width}}  {row[1]:<6} {row[2]:<20} "
              f"{row[3]:>8}  {row[4]:<8} {row[5]}")
    if args.report:
        _write_json(Path(args.report), {
            "schema": "odsim-bench/1",
            "rows": [dict(zip(("design", "class", "status", "cycles",
                               "oracle", "note"), r)) for r in rows],
        })
    return 0 if failures == 0 else report_mod.EXIT_ERROR


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="odsim", description=__doc__,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, oracle=False):
        p.add_argument("--depth", action="append", default=[],
                       metavar="FIFO=N", help="override a FIFO depth")
        p.add_argument("--report", metavar="PATH",
                       help="write the JSON report here instead of stdout")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                       help="work budget (committed events + resolved queries)")
        if not oracle:
            p.add_argument("--no-prune", action="store_true",
                           help="keep unused status checks")

    p_run = sub.add_parser("run", help="simulate with the interleaved engine")
    p_run.add_argument("design")
    add_common(p_run)
    p_run.add_argument("--oracle-check", action="store_true",
                       help="also run the reference simulator and compare")
    p_run.add_argument("--oracle-max-cycles", type=int, default=1_000_000)
    p_run.add_argument("--jitter", type=int, default=None, metavar="SEED",
                       help="randomize agent scheduling (results identical)")
    p_run.add_argument("--artifacts", metavar="DIR",
                       help="write graph/ledger/design artifacts for "
                            "incremental re-simulation")
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="simulate with the reference model")
    p_oracle.add_argument("design")
    add_common(p_oracle, oracle=True)
    p_oracle.add_argument("--max-cycles", type=int, default=1_000_000)
    p_oracle.set_defaults(func=cmd_oracle)

    p_incr = sub.add_parser("incremental",
                            help="re-finalize a prior run under new depths")
    p_incr.add_argument("--artifacts", required=True, metavar="DIR")
    add_common(p_incr)
    p_incr.set_defaults(func=cmd_incremental)

    p_bench = sub.add_parser("bench", help="run a corpus directory")
    p_bench.add_argument("corpus")
    p_bench.add_argument("--report", metavar="PATH")
    p_bench.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p_bench.add_argument("--oracle-max-cycles", type=int, default=1_000_000)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("ODSIM_LOG", "WARNING").upper())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


def entry() -> None:  # console-script hook
    raise SystemExit(main())
