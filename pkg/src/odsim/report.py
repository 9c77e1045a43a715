"""Run reports: a stable, machine-readable summary of one simulation.

The report has a deterministic body and a `meta` stanza (wall times,
work counters). Everything outside `meta` is a pure function of
(design, depths, budget), so `canonical_bytes` serializes the body with
sorted keys for byte-comparison across scheduling jitter.
"""
from __future__ import annotations

import json

SCHEMA = "odsim-report/1"

EXIT_CODES = {
    "ok": 0,
    "deadlock": 2,
    "budget-exhausted": 3,
    "timing-inconsistency": 4,
}
EXIT_ORACLE_MISMATCH = 5
EXIT_ERROR = 1


def build_report(generator: str, design_name: str, design_class: str | None,
                 depths: dict[str, int], status: str, total_cycles: int,
                 outputs: dict[str, int], blocked=(), constraint_count: int = 0,
                 oracle_check: dict | None = None,
                 timings_ms: dict[str, float] | None = None,
                 stats: dict[str, int] | None = None) -> dict:
    report = {
        "schema": SCHEMA,
        "generator": generator,  # "engine", "oracle" or "incremental"
        "design": design_name,
        "class": design_class,
        "depths": dict(sorted(depths.items())),
        "status": status,
        "total_cycles": total_cycles,
        "outputs": dict(sorted(outputs.items())),
        "blocked": sorted(blocked),
        "constraint_count": constraint_count,
        "oracle_check": oracle_check,
        "meta": {
            "timings_ms": timings_ms or {},
            "stats": stats or {},
        },
    }
    return report


def canonical_bytes(report: dict) -> bytes:
    body = {k: v for k, v in report.items() if k != "meta"}
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def exit_code(report: dict) -> int:
    if report.get("oracle_check") and report["oracle_check"]["verdict"] != "match":
        return EXIT_ORACLE_MISMATCH
    return EXIT_CODES.get(report["status"], EXIT_ERROR)
