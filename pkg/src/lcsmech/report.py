"""Check records and reports with deterministic JSON output."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

__all__ = ["PASS", "FAIL", "CheckRecord", "Report", "to_json"]

PASS = "PASS"
FAIL = "FAIL"


@dataclass
class CheckRecord:
    name: str
    samples: int
    max_residual: float
    tol: float
    verdict: str = ""
    note: str = ""

    def __post_init__(self):
        if not self.verdict:
            ok = math.isfinite(self.max_residual) and self.max_residual < self.tol
            self.verdict = PASS if ok else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "verdict": self.verdict,
        }
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Report:
    command: str
    records: list[CheckRecord] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    verdict_override: Optional[str] = None

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    @property
    def verdict(self) -> str:
        if self.verdict_override is not None:
            return self.verdict_override
        return PASS if all(r.passed for r in self.records) else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def failed(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"command": self.command, "verdict": self.verdict}
        if self.notes:
            d["notes"] = list(self.notes)
        d["checks"] = [r.to_dict() for r in self.records]
        d.update(self.extra)
        return d


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def to_json(obj) -> str:
    """Stable JSON text; non-finite floats become strings."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"
