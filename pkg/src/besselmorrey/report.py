"""Deterministic JSON / CSV serialization of bound reports."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .bounds import BoundReport

CSV_HEADER = ("theorem", "n", "alpha", "gamma", "p1", "p2", "q1", "q2", "s", "t", "phi",
              "test_function", "lhs", "rhs", "ratio", "verdict")
SIG_DIGITS = 12


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return f"{x:.{SIG_DIGITS}g}"


def _plain(obj):
    """Recursively map to JSON-safe values with floats fixed at 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt_float(x)
        return float(fmt_float(x))
    return obj


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def report_to_json(reports, meta: dict | None = None) -> bytes:
    doc = {"reports": [r.to_dict() for r in reports]}
    if meta:
        doc["meta"] = meta
    return (json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n").encode()


def reports_from_json(data: bytes) -> list[BoundReport]:
    doc = _restore(json.loads(data))
    return [BoundReport(**r) for r in doc["reports"]]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def csv_rows(report: BoundReport):
    p = report.params
    for m in report.members:
        yield [report.theorem] + [_cell(p.get(k)) for k in ("n", "alpha", "gamma", "p1", "p2", "q1", "q2", "s", "t", "phi")] + [
            m["test_function"], _cell(m["lhs"]), _cell(m["rhs"]), _cell(m["ratio"]), m["verdict"]]


def report_to_csv(reports) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerows(csv_rows(r))
    return buf.getvalue().encode()


def emit_report(report, format: str = "json") -> bytes:
    """Serialize one report (or a list of reports) as JSON or CSV bytes."""
    reports = list(report) if isinstance(report, (list, tuple)) else [report]
    if format == "json":
        return report_to_json(reports)
    if format == "csv":
        return report_to_csv(reports)
    raise ValueError(f"format must be json or csv, got {format!r}")


def profile_csv(profiles) -> bytes:
    """Plot-ready radial samples: one block per (label, r, value) triple list."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("label", "r", "value"))
    for label, r, v in profiles:
        for ri, vi in zip(r, v):
            w.writerow((label, fmt_float(ri), fmt_float(vi)))
    return buf.getvalue().encode()
