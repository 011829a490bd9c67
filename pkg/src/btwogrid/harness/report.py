"""Verification reports and their json / csv / text renderings.

Every value stored in a :class:`CheckRecord` is converted to plain JSON types
at construction: complex numbers become ``[re, im]``, arrays become nested
lists and non-finite floats become the strings ``"inf"``, ``"-inf"``,
``"nan"``.  A report therefore survives ``to_dict -> json -> from_dict``
unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["CheckRecord", "VerificationReport", "jsonable", "emit_report", "render_report", "VERDICTS"]

VERDICTS = ("pass", "fail", "skipped")
SCHEMA = "btwogrid-report/1"


def _float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def jsonable(x):
    """Recursively convert numpy / complex values into JSON-native values."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_float(x.real), _float(x.imag)]
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialize {type(x).__name__}")


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    anchor: str
    values: dict
    tol: float | None
    verdict: str
    reason: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        object.__setattr__(self, "values", jsonable(self.values))
        object.__setattr__(self, "tol", None if self.tol is None else jsonable(self.tol))

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "values": self.values,
            "tol": self.tol,
            "verdict": self.verdict,
            "reason": self.reason,
        }


@dataclass
class VerificationReport:
    problem: str
    environment: dict
    checks: list = field(default_factory=list)

    def __post_init__(self):
        self.environment = jsonable(self.environment)

    def add(self, check_id, anchor, values, tol, verdict, reason="") -> CheckRecord:
        if any(c.check_id == check_id for c in self.checks):
            raise ValueError(f"duplicate check id {check_id!r}")
        if isinstance(verdict, (bool, np.bool_)):
            verdict = "pass" if verdict else "fail"
        rec = CheckRecord(check_id, anchor, values, tol, verdict, reason)
        self.checks.append(rec)
        return rec

    def skip(self, check_id, anchor, reason, values=None) -> CheckRecord:
        return self.add(check_id, anchor, values or {}, None, "skipped", reason)

    def __getitem__(self, check_id) -> CheckRecord:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    @property
    def summary(self) -> dict:
        counts = {v: sum(c.verdict == v for c in self.checks) for v in VERDICTS}
        return {"total": len(self.checks), **counts}

    @property
    def all_passed(self) -> bool:
        return self.summary["fail"] == 0

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "problem": self.problem,
            "environment": self.environment,
            "summary": self.summary,
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        rep = cls(problem=data["problem"], environment=data["environment"])
        for c in data["checks"]:
            rep.add(c["check_id"], c["anchor"], c["values"], c["tol"], c["verdict"], c.get("reason", ""))
        return rep


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and len(v) <= 6 and all(not isinstance(x, list) for x in v):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, list):
        return f"<{len(v)} entries>"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def _text(report: VerificationReport) -> str:
    lines = [f"verification report: {report.problem}"]
    env = ", ".join(f"{k}={_fmt(v)}" for k, v in report.environment.items() if k != "tolerances")
    lines.append(f"  {env}")
    for c in report.checks:
        head = f"[{c.verdict.upper():7s}] {c.check_id}  ({c.anchor})"
        if c.tol is not None:
            head += f"  tol={_fmt(c.tol)}"
        lines.append(head)
        if c.reason:
            lines.append(f"          reason: {c.reason}")
        for k, v in c.values.items():
            lines.append(f"          {k} = {_fmt(v)}")
    s = report.summary
    lines.append(f"summary: {s['pass']} pass, {s['fail']} fail, {s['skipped']} skipped of {s['total']}")
    return "\n".join(lines) + "\n"


def _csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check_id", "anchor", "verdict", "tol", "reason", "values"])
    for c in report.checks:
        w.writerow([c.check_id, c.anchor, c.verdict, "" if c.tol is None else json.dumps(c.tol), c.reason,
                    json.dumps(c.values)])
    return buf.getvalue()


def render_report(report: VerificationReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "csv":
        return _csv(report)
    if fmt == "text":
        return _text(report)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: VerificationReport, fmt: str = "json", path=None) -> str:
    """Render ``report``; write it to ``path`` when given.  Returns the text."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text
