"""Report serialization. Output is a pure function of scenario bytes, seed and command."""

from __future__ import annotations

import csv
import hashlib
import io
import json

from . import __version__
from .commands import RunReport


def digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def as_document(report: RunReport, raw: bytes, seed: int, wall_time: float | None = None) -> dict:
    doc = {
        "tool": "consentify",
        "version": __version__,
        "command": report.command,
        "scenario_sha256": digest(raw),
        "seed": seed,
        "checks": [c.as_dict() for c in report.checks],
        "summary": report.summary(),
        "exit_code": report.exit_code,
        "tables": report.tables,
    }
    if wall_time is not None:
        doc["wall_time_seconds"] = round(wall_time, 3)
    return doc


def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def to_csv(doc: dict) -> str:
    """One row per check; metadata rows first. Detail and witness columns hold JSON."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "name", "verdict", "detail", "witness"])
    for key in ("tool", "version", "command", "scenario_sha256", "seed", "exit_code"):
        w.writerow(["meta", key, "", doc[key], ""])
    if "wall_time_seconds" in doc:
        w.writerow(["meta", "wall_time_seconds", "", doc["wall_time_seconds"], ""])
    for c in doc["checks"]:
        w.writerow([
            "check",
            c["name"],
            c["verdict"],
            json.dumps(c["detail"], sort_keys=True),
            json.dumps(c.get("witness"), sort_keys=True) if "witness" in c else "",
        ])
    return buf.getvalue()


def render(doc: dict, fmt: str) -> str:
    return to_csv(doc) if fmt == "csv" else to_json(doc)
