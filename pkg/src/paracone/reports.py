"""Shared report records returned by every checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np


@dataclass(frozen=True)
class SampleTriple:
    x1: np.ndarray
    x2: np.ndarray
    lam: float

    def swapped(self) -> "SampleTriple":
        return SampleTriple(self.x2, self.x1, 1.0 - self.lam)

    def to_dict(self) -> dict:
        return {
            "x1": [float(v) for v in np.atleast_1d(self.x1)],
            "x2": [float(v) for v in np.atleast_1d(self.x2)],
            "lambda": float(self.lam),
        }


@dataclass
class CheckReport:
    """Outcome of a checker.

    ``worst_slack`` is the smallest cone-membership slack seen; ``tolerance`` is
    the absolute tolerance that applied at that sample. ``witness`` is either a
    :class:`SampleTriple` or, for non-triple checks, a plain dict.
    """

    passed: bool
    worst_slack: float
    witness: Any = None
    samples_used: int = 0
    params: dict = field(default_factory=dict)
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, SampleTriple):
            w = w.to_dict()
        out = {
            "passed": bool(self.passed),
            "worst_slack": _jsonable(self.worst_slack),
            "witness": _jsonable(w),
            "samples_used": int(self.samples_used),
            "params": _jsonable(self.params),
            "tolerance": _jsonable(self.tolerance),
        }
        if self.details:
            out["details"] = _jsonable(self.details)
        return out


def merge_reports(reports: list[CheckReport]) -> CheckReport:
    """Associative merge: min slack, first failing witness, summed sample counts."""
    if not reports:
        raise ValueError("nothing to merge")
    worst = min(reports, key=lambda r: r.worst_slack)
    failing = [r for r in reports if not r.passed]
    wit = failing[0].witness if failing else worst.witness
    return CheckReport(
        passed=not failing,
        worst_slack=worst.worst_slack,
        witness=wit,
        samples_used=sum(r.samples_used for r in reports),
        params=dict(reports[0].params),
        tolerance=worst.tolerance,
    )


def _jsonable(obj):
    if isinstance(obj, CheckReport):
        return obj.to_dict()
    if isinstance(obj, SampleTriple):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
