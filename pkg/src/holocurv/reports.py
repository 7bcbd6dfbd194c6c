"""Run reports: per-check records, rendering and re-loading.

A JSON-lines report has one header object (``"type": "run"``) followed by one
object per check (``"type": "check"``).  Per-point rows, when a check has
them, are written to a separate CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import asdict, dataclass, field

import numpy as np

# how a reference value is justified
BASIS = ("literature", "derived", "trivial")


@dataclass
class CheckRecord:
    scenario: str
    check: str
    status: str
    verdict: str | None = None
    lhs: float | None = None
    rhs: float | None = None
    margin: float | None = None
    tolerance: float | None = None
    reference: dict | None = None
    stable: bool | None = None
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    rows: list = field(default_factory=list)

    @property
    def passed(self):
        return self.status == "pass"


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str, bool)):
        return obj.value
    return obj


def environment(seed, resolution, tolerance):
    return {"seed": seed, "resolution": resolution, "tolerance": tolerance,
            "numpy": np.__version__, "python": platform.python_version(),
            "platform": platform.platform()}


@dataclass
class RunReport:
    command: str
    scenarios: list
    records: list
    env: dict

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    def literature_failures(self):
        return [r for r in self.records if not r.passed and (r.reference or {}).get("basis") == "literature"]

    def numeric_fingerprint(self):
        """Everything except wall-clock fields, for determinism checks."""
        out = []
        for r in self.records:
            d = asdict(r)
            d.pop("elapsed")
            out.append(json.dumps(_plain(d), sort_keys=True))
        return out

    # -- rendering --------------------------------------------------------

    def to_text(self):
        lines = [f"holocurv {self.command}", "environment: " + ", ".join(
            f"{k}={v}" for k, v in self.env.items() if k in ("seed", "resolution", "tolerance"))]
        for r in self.records:
            head = f"[{r.status.upper():5s}] {r.scenario} / {r.check}"
            if r.verdict:
                head += f": {r.verdict}"
            lines.append(head)
            if r.lhs is not None and not _isnan(r.lhs):
                lines.append(f"    lhs = {r.lhs:.12g}   rhs = {r.rhs:.12g}   margin = {r.margin:.3e}"
                             f"   tol = {r.tolerance:.1e}")
            if r.reference:
                ref = r.reference
                lines.append(f"    reference {ref.get('value')!r} ({ref.get('basis')}): {ref.get('what', '')}")
            if r.stable is False:
                lines.append("    UNSTABLE: fails 3-digit agreement across two resolutions")
            for note in r.notes:
                lines.append(f"    note: {note}")
            lines.append(f"    elapsed {r.elapsed:.3f}s")
        n_pass = sum(r.passed for r in self.records)
        lines.append(f"{n_pass}/{len(self.records)} checks passed")
        return "\n".join(lines) + "\n"

    def to_jsonl(self):
        head = {"type": "run", "command": self.command, "env": self.env, "scenarios": self.scenarios}
        out = [json.dumps(_plain(head), sort_keys=True)]
        for r in self.records:
            d = asdict(r)
            d["type"] = "check"
            out.append(json.dumps(_plain(d), sort_keys=True))
        return "\n".join(out) + "\n"

    CSV_FIELDS = ("scenario", "check", "status", "verdict", "lhs", "rhs", "margin", "tolerance",
                  "reference", "basis", "stable", "elapsed", "notes")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for r in self.records:
            ref = r.reference or {}
            w.writerow([r.scenario, r.check, r.status, r.verdict or "", _num(r.lhs), _num(r.rhs),
                        _num(r.margin), _num(r.tolerance), _num(ref.get("value")), ref.get("basis", ""),
                        "" if r.stable is None else r.stable, f"{r.elapsed:.6f}", " | ".join(r.notes)])
        return buf.getvalue()

    def rows_csv(self):
        """Per-point rows of every check that produced them, or None."""
        rows = [dict(scenario=r.scenario, check=r.check, **row) for r in self.records for row in r.rows]
        if not rows:
            return None
        fields = list(dict.fromkeys(k for row in rows for k in row))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _num(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def render(self, fmt):
        if fmt == "text":
            return self.to_text()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json-lines":
            return self.to_jsonl()
        raise ValueError(f"unknown format {fmt!r}")

    @classmethod
    def from_jsonl(cls, text):
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[0].get("type") != "run":
            raise ValueError("not a holocurv json-lines report")
        head = lines[0]
        fields = CheckRecord.__dataclass_fields__
        records = [CheckRecord(**{k: v for k, v in d.items() if k in fields}) for d in lines[1:]
                   if d.get("type") == "check"]
        return cls(head["command"], head.get("scenarios", []), records, head.get("env", {}))


def _isnan(x):
    return isinstance(x, float) and math.isnan(x)


def _num(x):
    if x is None:
        return ""
    return repr(float(x))
