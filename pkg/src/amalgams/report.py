"""Machine-readable run reports: one schema for every subcommand."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

SCHEMA = "amalgams-report/1"

STATUSES = ("pass", "fail", "inconclusive")


@dataclass
class CheckResult:
    name: str
    status: str
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


def emit_report(command: str, seed: int, checks: List[CheckResult],
                budgets: Optional[Dict[str, int]] = None) -> dict:
    counts = {s: 0 for s in STATUSES}
    for c in checks:
        counts[c.status] += 1
    doc = {
        "schema": SCHEMA,
        "command": command,
        "seed": seed,
        "budgets": dict(budgets or {}),
        "counts": counts,
        "checks": [{"name": c.name, "status": c.status, "data": c.data}
                   for c in checks],
    }
    return doc


def parse_report(doc: dict) -> List[CheckResult]:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unknown report schema {doc.get('schema')!r}")
    return [CheckResult(c["name"], c["status"], c.get("data", {}))
            for c in doc["checks"]]


def exit_status(doc: dict, escalate_inconclusive: bool = False) -> int:
    counts = doc["counts"]
    if counts["fail"]:
        return 1
    if escalate_inconclusive and counts["inconclusive"]:
        return 2
    return 0


def write_report(doc: dict, out_path=None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
