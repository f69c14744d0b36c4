"""Report records and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__

SWEEP_COLUMNS = ["param", "value", "v_safe", "binding", "v1", "v2", "empirical", "rel_err"]


@dataclass
class Report:
    kind: str
    scenario: dict
    payload: dict
    scenario_hash: str = ""
    tool: str = "safespeed"
    version: str = __version__
    wall_time: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "tool": self.tool,
            "version": self.version,
            "kind": self.kind,
            "scenario_hash": self.scenario_hash,
            "scenario": self.scenario,
            "payload": self.payload,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Report":
        return cls(
            kind=doc["kind"],
            scenario=doc["scenario"],
            payload=doc["payload"],
            scenario_hash=doc.get("scenario_hash", ""),
            tool=doc.get("tool", "safespeed"),
            version=doc.get("version", __version__),
            wall_time=doc.get("wall_time"),
        )


def plain(obj):
    """Dataclasses, numpy values and tuples to JSON-ready builtins (NaN -> None)."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return plain(obj.tolist())
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    return str(obj)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def sweep_rows(report: Report) -> list[dict]:
    p = report.payload
    if report.kind == "sweep":
        return [row for series in p["series"] for row in series["rows"]]
    if report.kind == "validation":
        return [row for panel in p["panels"].values() for row in panel["rows"]]
    raise ValueError(f"report kind {report.kind!r} has no sweep rows")


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    p = report.payload
    if report.kind in ("sweep", "validation"):
        w.writerow(SWEEP_COLUMNS)
        for row in sweep_rows(report):
            w.writerow([_fmt(row.get(c)) for c in SWEEP_COLUMNS])
    elif report.kind == "surface":
        w.writerow(["e", "S", "tau", "v_safe"])
        for i, S in enumerate(p["S_grid"]):
            for j, e in enumerate(p["e_grid"]):
                w.writerow([_fmt(e), _fmt(S), _fmt(p["tau"][i][j]), _fmt(p["v_safe"][i][j])])
    elif report.kind == "crossings":
        cols = ["v_x", "v_y_T", "v_y_max_T", "ratio"]
        w.writerow(cols)
        for row in zip(*(p["curve"][c] for c in cols)):
            w.writerow([_fmt(v) for v in row])
    elif report.kind == "solution":
        cols = ["v_safe", "v_x_max", "v1", "v2", "binding"]
        w.writerow(cols)
        w.writerow([_fmt(p.get(c)) for c in cols])
    elif report.kind == "empirical":
        w.writerow(["v_x", "outcome"])
        for v, outcome in p["verdicts"]:
            w.writerow([_fmt(v), outcome])
    else:
        raise ValueError(f"no CSV layout for report kind {report.kind!r}")
    return buf.getvalue()


def emit_report(report: Report, fmt: str, path) -> None:
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = to_csv(report)
    else:
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    atomic_write(path, text)


def load_report(path) -> Report:
    with open(path) as fh:
        return Report.from_dict(json.load(fh))
