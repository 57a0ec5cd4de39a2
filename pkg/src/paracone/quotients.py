"""Alpha-corrected difference quotients and directional derivative estimates.

For a base point ``x0``, unit direction ``h`` and ``t > 0``::

    raw(t)       = (F(x0 + t h) - F(x0)) / t
    corrected(t) = raw(t) + C alpha(t) / t k0

For a strongly alpha-k0 paraconvex F the corrected quotient is nondecreasing
up to ``C alpha(t1)/t1 k0`` and bounded below near 0, which forces the raw
quotient to converge as ``t -> 0+``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import MappingSpec
from .modulus import Modulus, parse_modulus
from .ordered_space import ConeDescriptor, as_vec, member, slacks
from .reports import CheckReport


class DomainError(ValueError):
    pass


class TraceError(ValueError):
    pass


def _alpha(alpha) -> Modulus:
    return alpha if isinstance(alpha, Modulus) else parse_modulus(str(alpha))


def compute_delta(alpha: Modulus, C: float) -> float:
    """Largest probe-grid t such that ``2 C alpha(2s)/(2s) <= 1`` for every grid s <= t.

    Capped at 1, since the lower bound also uses the segment [x0 - h, x0].
    Returns 0 when the condition already fails at the finest grid point.
    """
    grid = np.sort(np.asarray(alpha.probe_grid, dtype=float))
    ok = 2.0 * C * alpha.ratio(2.0 * grid) <= 1.0
    if not ok[0]:
        return 0.0
    bad = np.flatnonzero(~ok)
    last = len(grid) - 1 if len(bad) == 0 else bad[0] - 1
    return float(min(grid[last], 1.0))


@dataclass
class QuotientTrace:
    mapping: str
    x0: np.ndarray
    h: np.ndarray  # unit direction
    h_scale: float  # norm of the direction as given
    t_values: np.ndarray
    raw: np.ndarray  # (N, m)
    corrected: np.ndarray  # (N, m)
    C: float
    k0: np.ndarray
    alpha: Modulus
    delta: float
    f0: np.ndarray
    truncated: Optional[str] = None

    def __len__(self):
        return len(self.t_values)

    @property
    def correction(self) -> np.ndarray:
        """Scalar factor ``C alpha(t)/t`` per trace point."""
        return self.C * self.alpha.ratio(self.t_values)

    def params(self) -> dict:
        return {"C": self.C, "k0": self.k0.tolist(), "alpha": self.alpha.label,
                "x0": self.x0.tolist(), "h": self.h.tolist(), "h_scale": self.h_scale,
                "mapping": self.mapping}

    def head(self, n: int) -> "QuotientTrace":
        return QuotientTrace(self.mapping, self.x0, self.h, self.h_scale, self.t_values[:n],
                             self.raw[:n], self.corrected[:n], self.C, self.k0, self.alpha,
                             self.delta, self.f0, self.truncated)


def build_trace(F: MappingSpec, x0, h, C: float, k0, alpha, t_start: float = 0.5,
                ratio: float = 0.5, steps: int = 40) -> QuotientTrace:
    """Quotients on the geometric grid ``t_i = t_start * ratio**(i-1)``.

    A direction with ``|h| != 1`` is normalised and its norm kept in
    ``h_scale``; t always refers to the unit direction.
    """
    if not 0 < ratio < 1:
        raise TraceError("ratio must lie in (0, 1)")
    if t_start <= 0 or steps < 1:
        raise TraceError("t_start must be positive and steps >= 1")
    if C < 0:
        raise TraceError("C must be nonnegative")
    alpha = _alpha(alpha)
    x0 = as_vec(x0, F.n)
    h = as_vec(h, F.n)
    hs = float(np.linalg.norm(h))
    if hs == 0:
        raise TraceError("direction must be nonzero")
    h = h / hs
    k0 = as_vec(k0, F.m)
    if not F.contains(x0):
        raise DomainError(f"x0 = {x0.tolist()} lies outside the domain box")
    if not F.contains(x0 + t_start * h):
        raise DomainError(f"x0 + t_start h leaves the domain box (t_start = {t_start})")

    t = t_start * ratio ** np.arange(steps, dtype=float)
    truncated = None
    pos = t > 0
    moved = np.any(x0 + t[:, None] * h != x0, axis=1)
    keep = pos & moved
    if not keep.all():
        cut = int(np.argmin(keep))
        t = t[:cut]
        truncated = f"t underflow after {cut} steps"
    inside = F.contains(x0 + t[:, None] * h)
    if not inside.all():
        cut = int(np.argmin(inside))
        t = t[:cut]
        truncated = f"left the domain after {cut} steps"
    if len(t) == 0:
        raise DomainError("no admissible trace points")

    f0 = F(x0)
    vals = F(x0 + t[:, None] * h)
    raw = (vals - f0) / t[:, None]
    corrected = raw + (C * alpha.ratio(t))[:, None] * k0
    return QuotientTrace(F.name, x0, h, hs, t, raw, corrected, float(C), k0, alpha,
                         compute_delta(alpha, C), f0, truncated)


def _pair_slacks(Phi: np.ndarray, shift: np.ndarray, k0: np.ndarray, K: ConeDescriptor):
    """Slack of ``Phi_i - Phi_j + shift_j k0`` for every pair i < j, plus its norm."""
    V = Phi[:, None, :] - Phi[None, :, :] + shift[None, :, None] * k0
    S = slacks(V, K)
    N = np.linalg.norm(V, axis=-1)
    iu = np.triu_indices(len(Phi), k=1)
    return S, N, iu


def monotone_slack_matrix(trace: QuotientTrace, K: ConeDescriptor) -> np.ndarray:
    S, _, iu = _pair_slacks(trace.corrected, trace.correction, trace.k0, K)
    out = np.full_like(S, np.nan)
    out[iu] = S[iu]
    return out


def monotone_slack_by_t(trace: QuotientTrace, K: ConeDescriptor) -> np.ndarray:
    """Per row j: smallest pair slack over the larger t_i (NaN on the first row)."""
    M = monotone_slack_matrix(trace, K)
    out = np.full(len(trace), np.nan)
    for j in range(1, len(trace)):
        out[j] = np.nanmin(M[:j, j])
    return out


def check_alpha_monotone(trace: QuotientTrace, K: ConeDescriptor) -> CheckReport:
    """Corrected quotients are nondecreasing up to ``C alpha(t_j)/t_j k0``.

    For each pair with t_i > t_j checks
    ``phi(t_i) - phi(t_j) + C alpha(t_j)/t_j k0`` in K.
    """
    params = trace.params()
    params["check"] = "alpha_monotone"
    if len(trace) < 2:
        return CheckReport(True, float("inf"), None, 0, params)
    S, N, iu = _pair_slacks(trace.corrected, trace.correction, trace.k0, K)
    s = S[iu]
    tol = K.membership_tol * (1.0 + N[iu])
    ex = s + tol
    k = int(np.argmin(ex))
    w = int(np.argmin(s))
    i, j = iu[0][k], iu[1][k]
    ok = bool(ex[k] >= 0)
    wit = None if ok else {"t_i": float(trace.t_values[i]), "t_j": float(trace.t_values[j]),
                           "slack": float(s[k])}
    return CheckReport(ok, float(s[w]), wit, len(s), params, float(tol[k]))


def lower_bound_point(F: MappingSpec, x0, h, C: float, k0, alpha) -> np.ndarray:
    """``b = F(x0) - F(x0 - h) - (C alpha(1) + 1) k0`` for a unit direction h."""
    alpha = _alpha(alpha)
    x0 = as_vec(x0, F.n)
    h = as_vec(h, F.n)
    back = x0 - h
    if not F.contains(back):
        raise DomainError(f"x0 - h = {back.tolist()} lies outside the domain box")
    k0 = as_vec(k0, F.m)
    return F(x0) - F(back) - (C * float(alpha(1.0)) + 1.0) * k0


def check_lower_bound(trace: QuotientTrace, F: MappingSpec, K: ConeDescriptor) -> CheckReport:
    """Corrected quotients dominate ``b`` for every trace point with t < delta."""
    b = lower_bound_point(F, trace.x0, trace.h, trace.C, trace.k0, trace.alpha)
    params = trace.params()
    params.update({"check": "lower_bound", "b": b.tolist(), "delta": trace.delta})
    sel = trace.t_values < trace.delta
    t = trace.t_values[sel]
    cond = 2.0 * trace.C * trace.alpha.ratio(2.0 * t)
    details = {"b": b.tolist(), "delta": trace.delta, "points_checked": int(sel.sum()),
               "delta_condition_max": float(cond.max()) if len(t) else None}
    if not sel.any():
        return CheckReport(True, float("inf"), None, 0, params, details=details)
    V = trace.corrected[sel] - b
    s = slacks(V, K)
    tol = K.membership_tol * (1.0 + np.linalg.norm(V, axis=1))
    ex = s + tol
    k = int(np.argmin(ex))
    ok = bool(ex[k] >= 0) and bool(np.all(cond <= 1.0))
    wit = None if ok else {"t": float(t[k]), "slack": float(s[k])}
    return CheckReport(ok, float(s.min()), wit, int(sel.sum()), params, float(tol[k]), details)


LEMMA_HOLDS = "implication holds"
LEMMA_VACUOUS = "premises unmet"
LEMMA_FALSIFIED = "falsified"


def check_lemma_trace(Phi: Sequence, K: ConeDescriptor, k0, alpha, tail_tol: float = 1e-6,
                      norm_tol: float = 1e-5, member_tol: Optional[float] = None) -> CheckReport:
    """Finite-trace form of the lemma: (i) Phi(t) in K, (ii) the shifted pairwise
    inclusion, (iii) scalarised tail along the dual generators below ``tail_tol``
    together imply a final norm below ``norm_tol``.

    ``Phi`` is a sequence of ``(t, vector)`` pairs with t decreasing. The report
    passes unless the premises hold while the conclusion fails.
    """
    if len(Phi) == 0:
        raise TraceError("empty trace")
    alpha = _alpha(alpha)
    t = np.array([float(p[0]) for p in Phi])
    V = np.array([as_vec(p[1], K.dim) for p in Phi])
    if np.any(np.diff(t) >= 0):
        raise TraceError("t values must be strictly decreasing")
    k0 = as_vec(k0, K.dim)
    mtol = K.membership_tol if member_tol is None else member_tol

    s1 = slacks(V, K)
    prem_i = bool(np.all(s1 >= -mtol * (1.0 + np.linalg.norm(V, axis=1))))
    if len(V) > 1:
        S, N, iu = _pair_slacks(V, alpha.ratio(t), k0, K)
        s2 = S[iu]
        prem_ii = bool(np.all(s2 >= -mtol * (1.0 + N[iu])))
        worst_ii = float(s2.min())
    else:
        prem_ii, worst_ii = True, float("inf")
    # dual cone generators are the facet normals of K
    Y = K.facet_normals
    scal = V @ Y.T if Y.shape[0] else np.zeros((len(V), 0))
    tail = float(np.max(np.abs(scal[-1]))) if scal.shape[1] else 0.0
    prem_iii = tail <= tail_tol
    final_norm = float(np.linalg.norm(V[-1]))
    concl = final_norm <= norm_tol

    premises = prem_i and prem_ii and prem_iii
    if not premises:
        status = LEMMA_VACUOUS
    elif concl:
        status = LEMMA_HOLDS
    else:
        status = LEMMA_FALSIFIED
    ok = status != LEMMA_FALSIFIED
    details = {
        "status": status,
        "premise_i": prem_i,
        "premise_ii": prem_ii,
        "premise_iii": prem_iii,
        "conclusion": concl,
        "scalarized_tail": tail,
        "final_norm": final_norm,
        "worst_slack_i": float(s1.min()),
        "worst_slack_ii": worst_ii,
    }
    params = {"k0": k0.tolist(), "alpha": alpha.label, "tail_tol": tail_tol, "norm_tol": norm_tol}
    wit = None if ok else {"t": float(t[-1]), "norm": final_norm}
    return CheckReport(ok, min(float(s1.min()), worst_ii), wit, len(V), params, mtol, details)


@dataclass
class DerivativeEstimate:
    value: np.ndarray
    trace: QuotientTrace
    cauchy_gap: float
    correction_tail: float
    converged: bool
    tol: float
    subchecks: dict = field(default_factory=dict)
    analytic: Optional[np.ndarray] = None
    analytic_error: Optional[float] = None
    scalarized_gaps: Optional[np.ndarray] = None  # (N-1, p) along dual generators

    def lemma_phi(self) -> list:
        """``(t, phi(t) - value)`` pairs for the lemma checker."""
        return [(t, c - self.value) for t, c in zip(self.trace.t_values, self.trace.corrected)]

    def to_dict(self) -> dict:
        out = {
            "value": self.value.tolist(),
            "value_along_h": (self.value * self.trace.h_scale).tolist(),
            "converged": bool(self.converged),
            "cauchy_gap": self.cauchy_gap,
            "correction_tail": self.correction_tail,
            "delta": self.trace.delta,
            "steps": len(self.trace),
            "t_final": float(self.trace.t_values[-1]),
            "tol": self.tol,
            "params": self.trace.params(),
            "subchecks": {k: (v.to_dict() if isinstance(v, CheckReport) else v)
                          for k, v in self.subchecks.items()},
        }
        if self.trace.truncated:
            out["truncated"] = self.trace.truncated
        if self.analytic is not None:
            out["analytic"] = self.analytic.tolist()
            out["analytic_error"] = self.analytic_error
        return out


def estimate_directional_derivative(F: MappingSpec, x0, h, C: float, k0, alpha, K: ConeDescriptor,
                                    tol: float = 1e-6, max_steps: int = 40, t_start: float = 0.5,
                                    ratio: float = 0.5) -> DerivativeEstimate:
    """One-sided directional derivative of F at x0 along h.

    Stops at the first step where the corrected quotients move by less than
    ``tol`` and the correction ``C alpha(t)/t |k0|`` is below ``tol``. The
    returned value is the raw quotient at that t. An estimate that never meets
    the test is returned with ``converged = False``.
    """
    full = build_trace(F, x0, h, C, k0, alpha, t_start, ratio, max_steps)
    if full.truncated and full.truncated.startswith("left"):
        raise DomainError(full.truncated)
    k0n = float(np.linalg.norm(full.k0))
    gaps = np.r_[np.inf, np.linalg.norm(np.diff(full.corrected, axis=0), axis=1)]
    tails = full.correction * k0n
    ok = (gaps < tol) & (tails < tol)
    n = int(np.argmax(ok)) + 1 if ok.any() else len(full)
    trace = full.head(n)
    value = trace.raw[-1].copy()
    gap = float(gaps[n - 1]) if n > 1 else float("inf")
    est = DerivativeEstimate(value, trace, gap, float(tails[n - 1]), bool(ok.any()), tol)

    est.subchecks["monotone"] = check_alpha_monotone(trace, K)
    try:
        est.subchecks["lower_bound"] = check_lower_bound(trace, F, K)
    except DomainError as exc:
        est.subchecks["lower_bound"] = {"skipped": str(exc)}

    Y = K.facet_normals
    if Y.shape[0] and n > 1:
        est.scalarized_gaps = np.abs(np.diff(trace.corrected @ Y.T, axis=0))

    if F.analytic_dderiv is not None:
        a = np.atleast_1d(np.asarray(F.analytic_dderiv(trace.x0, trace.h), dtype=float)) + 0.0
        est.analytic = a
        est.analytic_error = float(np.max(np.abs(value - a)))
    return est
