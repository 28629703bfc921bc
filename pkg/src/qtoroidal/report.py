"""Verification records and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = "1.0"


@dataclass
class CheckRecord:
    """One residual measurement.

    ``kind='identity'`` passes when ``residual <= tol``; ``kind='witness'``
    (an expected-nonzero control) passes when ``residual >= tol``.
    """

    check: str
    case: dict
    residual: float
    tol: float
    kind: str = "identity"
    exact_cols: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.residual):
            return False
        if self.kind == "witness":
            return self.residual >= self.tol
        return self.residual <= self.tol

    @property
    def vacuous(self) -> bool:
        """An identity compared on no exact column says nothing."""
        return self.kind == "identity" and self.exact_cols == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["vacuous"] = self.vacuous
        return d


@dataclass
class VerificationReport:
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    def extend(self, recs) -> None:
        self.records.extend(recs)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def worst(self, check_prefix: str = "", kind: str = "identity") -> float:
        vals = [r.residual for r in self.records
                if r.check.startswith(check_prefix) and r.kind == kind]
        if not vals:
            return 0.0
        return max(vals) if kind == "identity" else min(vals)

    def select(self, check_prefix: str) -> list[CheckRecord]:
        return [r for r in self.records if r.check.startswith(check_prefix)]

    def summary(self) -> dict:
        by_check: dict[str, dict] = {}
        for r in self.records:
            s = by_check.setdefault(r.check, {"count": 0, "failed": 0, "vacuous": 0, "worst": 0.0})
            s["count"] += 1
            s["vacuous"] += r.vacuous
            s["failed"] += 0 if r.passed else 1
            if r.kind == "identity":
                s["worst"] = max(s["worst"], r.residual)
        return {"passed": self.passed, "checks": by_check, "total": len(self.records)}

    def to_json(self, extra: dict | None = None) -> str:
        doc = {"schema": SCHEMA_VERSION, **(extra or {}), "summary": self.summary(),
               "records": [r.to_dict() for r in self.records]}
        return json.dumps(doc, indent=1, sort_keys=True, default=_default)


def _default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item"):
        return x.item()
    return str(x)
