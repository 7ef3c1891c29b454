"""Experiment reports and their serialization."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

CODE_VERSION = "0.1.0"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous"


@dataclass(frozen=True)
class TolerancePolicy:
    factor: float = 1.0
    rule: str = "lhs <= factor * rhs"
    note: str = ""


def _clean(x: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python scalars."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and getattr(x, "ndim", 1) == 0:
        x = x.item()
    if hasattr(x, "tolist"):
        return _clean(x.tolist())
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def config_hash(config: Any) -> str:
    body = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    experiment_id: str
    group_tag: str
    alpha: float | None
    lhs: float
    rhs: float
    verdict: Verdict
    tolerance_policy: TolerancePolicy = field(default_factory=TolerancePolicy)
    provenance: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.verdict != Verdict.FAIL

    @classmethod
    def judge(
        cls,
        experiment_id: str,
        group_tag: str,
        alpha: float | None,
        lhs: float,
        rhs: float,
        policy: TolerancePolicy | None = None,
        extras: dict | None = None,
        zero: float = 0.0,
    ) -> "ExperimentReport":
        """Verdict pass iff lhs <= factor * rhs; vacuous when both sides are (near) zero or rhs is infinite."""
        policy = policy or TolerancePolicy()
        if (abs(lhs) <= zero and abs(rhs) <= zero) or math.isinf(rhs):
            verdict = Verdict.VACUOUS
        elif lhs <= policy.factor * rhs:
            verdict = Verdict.PASS
        else:
            verdict = Verdict.FAIL
        return cls(experiment_id, group_tag, alpha, float(lhs), float(rhs), verdict, policy, {}, dict(extras or {}))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["ratio"] = self.ratio
        return _clean(d)


CSV_FIELDS = ["experiment_id", "group_tag", "alpha", "lhs", "rhs", "ratio", "verdict", "tolerance_factor"]


def reports_to_json(reports: list[ExperimentReport], header: dict | None = None) -> str:
    body = {"header": _clean(header or {}), "reports": [r.to_dict() for r in reports]}
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def reports_to_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        d = r.to_dict()
        w.writerow([d["experiment_id"], d["group_tag"], d["alpha"], repr(r.lhs), repr(r.rhs), repr(r.ratio), d["verdict"], r.tolerance_policy.factor])
    return buf.getvalue()


def write_reports(reports: list[ExperimentReport], out: Path, fmt: str = "json", header: dict | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / "reports.json"
        path.write_text(reports_to_json(reports, header))
    elif fmt == "csv":
        path = out / "reports.csv"
        path.write_text(reports_to_csv(reports))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
