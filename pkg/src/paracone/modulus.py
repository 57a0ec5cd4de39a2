"""Moduli ``alpha``: nondecreasing, ``alpha(t)/t -> 0`` as ``t -> 0+``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .reports import CheckReport

TAIL_THRESHOLD = 1e-9
# the ratio test looks at the last few grid points only
TAIL_POINTS = 4


class InvalidModulus(ValueError):
    pass


def default_probe_grid() -> np.ndarray:
    return 2.0 ** -np.arange(1, 41, dtype=float)


@dataclass(frozen=True)
class Modulus:
    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str
    probe_grid: np.ndarray = field(default_factory=default_probe_grid)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.evaluator(t), dtype=float)
        return np.where(t == 0, 0.0, out)

    def ratio(self, t):
        """``alpha(t)/t`` with the value 0 at ``t = 0``."""
        t = np.asarray(t, dtype=float)
        safe = np.where(t == 0, 1.0, t)
        return np.where(t == 0, 0.0, self(t) / safe)


def make_power_modulus(gamma: float) -> Modulus:
    gamma = float(gamma)
    if not gamma > 1:
        raise InvalidModulus(f"pow:{gamma} is not a modulus: alpha(t)/t must vanish at 0, needs gamma > 1")
    return Modulus(lambda t: np.abs(t) ** gamma, f"pow:{_fmt(gamma)}", _power_grid(gamma))


def _power_grid(gamma: float) -> np.ndarray:
    # long enough that t**(gamma-1) drops below the tail threshold
    need = int(np.ceil(-np.log2(TAIL_THRESHOLD) / (gamma - 1.0))) + 2
    k = min(max(40, need), 1000)
    return 2.0 ** -np.arange(1, k + 1, dtype=float)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_modulus(label: str) -> Modulus:
    """Build a modulus from a CLI string such as ``"pow:2"``."""
    kind, _, arg = label.partition(":")
    if kind != "pow" or not arg:
        raise InvalidModulus(f"unknown modulus {label!r}; expected 'pow:<gamma>'")
    try:
        gamma = float(arg)
    except ValueError:
        raise InvalidModulus(f"bad exponent in {label!r}") from None
    return make_power_modulus(gamma)


def validate(alpha: Modulus) -> CheckReport:
    """Numerical proxy for the modulus conditions on ``alpha.probe_grid``.

    Checks ``alpha(0) = 0``, nonnegativity, monotonicity, and that
    ``alpha(t)/t`` decreases along the grid tail to below ``TAIL_THRESHOLD``.
    A limit cannot be certified from finitely many points; this only rejects.
    """
    grid = np.sort(np.asarray(alpha.probe_grid, dtype=float))[::-1]
    params = {"alpha": alpha.label, "threshold": TAIL_THRESHOLD}
    n = len(grid)

    def fail(reason, t, slack):
        return CheckReport(False, float(slack), {"t": float(t), "reason": reason}, n, params)

    with np.errstate(all="ignore"):
        a0 = float(np.asarray(alpha.evaluator(np.array([0.0])), dtype=float).ravel()[0])
        vals = np.asarray(alpha.evaluator(grid), dtype=float)
    if not np.isfinite(a0) or a0 != 0.0:
        return fail("alpha(0) != 0", 0.0, -abs(a0) if np.isfinite(a0) else -np.inf)
    bad = ~np.isfinite(vals)
    if bad.any():
        return fail("non-finite value", grid[np.argmax(bad)], -np.inf)
    if vals.min() < 0:
        i = int(np.argmin(vals))
        return fail("negative value", grid[i], vals[i])
    # grid is decreasing in t, so alpha must be nonincreasing along it
    steps = vals[:-1] - vals[1:]
    if steps.min() < 0:
        i = int(np.argmin(steps))
        return fail("not nondecreasing", grid[i + 1], steps[i])
    ratios = vals / grid
    tail = ratios[-TAIL_POINTS:]
    if np.any(np.diff(tail) > 0):
        i = n - TAIL_POINTS + int(np.argmax(np.diff(tail))) + 1
        return fail("alpha(t)/t not decreasing on tail", grid[i], -(ratios[i] - ratios[i - 1]))
    if ratios[-1] >= TAIL_THRESHOLD:
        return fail("alpha(t)/t does not vanish", grid[-1], TAIL_THRESHOLD - ratios[-1])
    return CheckReport(True, float(TAIL_THRESHOLD - ratios[-1]), None, n, params)
