"""Per-entry verification suite used by ``corpus-run``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import MappingSpec
from .paraconvexity import (
    MIN_FORM,
    PRODUCT_FORM,
    SamplingPlan,
    check_cone_convex,
    check_paraconvex,
    estimate_min_C,
    verify_square_shift,
)
from .quotients import (
    LEMMA_FALSIFIED,
    build_trace,
    check_alpha_monotone,
    check_lemma_trace,
    check_lower_bound,
    estimate_directional_derivative,
)

NEGATIVE_CONTROL_CS = (1.0, 10.0, 100.0)


@dataclass
class SuiteLine:
    mapping: str
    check: str
    ok: bool
    detail: str = ""
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mapping": self.mapping, "check": self.check, "ok": self.ok,
                "detail": self.detail, "data": self.data}


def base_points(spec: MappingSpec, count: int = 4, seed: int = 0):
    """Deterministic (x0, h) pairs with x0 - h and x0 + h/2 inside the box."""
    rng = np.random.default_rng(seed)
    center = 0.5 * (spec.lower + spec.upper)
    pts = []
    h0 = np.zeros(spec.n)
    h0[0] = 1.0
    pts.append((center.copy(), h0))
    while len(pts) < count:
        x0 = spec.lower + rng.random(spec.n) * (spec.upper - spec.lower)
        h = rng.standard_normal(spec.n)
        h /= np.linalg.norm(h)
        if spec.contains(x0 - h) and spec.contains(x0 + 0.5 * h):
            pts.append((x0, h))
    return pts


def run_entry_suite(spec: MappingSpec, seed: int = 0, trace_sink: Optional[list] = None) -> list:
    """Run every applicable check for one corpus entry.

    Certified entries must pass; uncertified ones are negative controls and
    must fail the paraconvexity check. Traces are appended to ``trace_sink``
    when given.
    """
    plan = SamplingPlan(seed=seed)
    lines = []
    K = spec.cone
    if not spec.certified:
        for C in NEGATIVE_CONTROL_CS:
            rep = check_paraconvex(spec, K, "pow:2", C, np.ones(K.dim), MIN_FORM, plan)
            lines.append(SuiteLine(spec.name, f"negative control C={C:g}", not rep.passed,
                                   "rejected" if not rep.passed else "unexpectedly passed",
                                   rep.to_dict()))
        return lines

    C, k0, alpha = spec.known_C, spec.known_k0, spec.known_modulus
    for form in (MIN_FORM, PRODUCT_FORM):
        rep = check_paraconvex(spec, K, alpha, C, k0, form, plan)
        lines.append(SuiteLine(spec.name, f"paraconvex {form} C={C:g}", rep.passed,
                               f"worst slack {rep.worst_slack:.3g}", rep.to_dict()))
    conv = check_cone_convex(spec, K, plan)
    para0 = check_paraconvex(spec, K, alpha, 0.0, k0, MIN_FORM, plan)
    lines.append(SuiteLine(spec.name, "C=0 agrees with K-convexity", conv.passed == para0.passed,
                           f"convex={conv.passed}"))
    c_min = estimate_min_C(spec, K, alpha, k0, MIN_FORM)
    c_prod = estimate_min_C(spec, K, alpha, k0, PRODUCT_FORM)
    lines.append(SuiteLine(spec.name, "estimated C within known C", c_min <= C + 1e-9,
                           f"min form {c_min:.6g}, product form {c_prod:.6g}",
                           {"min": c_min, "product": c_prod}))
    if alpha == "pow:2":
        sq = verify_square_shift(spec, K, C, k0, plan)
        lines.append(SuiteLine(spec.name, "square shift equivalence", sq.passed,
                               f"agree={sq.details['verdicts_agree']}", sq.details))

    for i, (x0, h) in enumerate(base_points(spec, seed=seed)):
        tag = f"x0={np.round(x0, 3).tolist()}"
        est = estimate_directional_derivative(spec, x0, h, C, k0, alpha, K)
        mono = est.subchecks["monotone"]
        low = est.subchecks["lower_bound"]
        lemma = check_lemma_trace(est.lemma_phi(), K, C * k0, alpha)
        ok = est.converged and mono.passed and (not hasattr(low, "passed") or low.passed)
        if est.analytic_error is not None:
            ok = ok and est.analytic_error <= 10 * est.tol
        lines.append(SuiteLine(spec.name, f"dderiv {tag}", ok,
                               f"value {np.round(est.value, 7).tolist()}, steps {len(est.trace)}",
                               est.to_dict()))
        lines.append(SuiteLine(spec.name, f"lemma {tag}", lemma.details["status"] != LEMMA_FALSIFIED,
                               lemma.details["status"], lemma.details))
        if trace_sink is not None:
            trace_sink.append(est.trace)

    # long exact trace from the box centre along the first axis
    x0 = 0.5 * (spec.lower + spec.upper)
    h = np.zeros(spec.n)
    h[0] = 1.0
    tr = build_trace(spec, x0, h, C, k0, alpha, steps=40)
    mono = check_alpha_monotone(tr, K)
    low = check_lower_bound(tr, spec, K)
    lines.append(SuiteLine(spec.name, "monotone 40-step trace", mono.passed,
                           f"{mono.samples_used} pairs, worst slack {mono.worst_slack:.3g}"))
    lines.append(SuiteLine(spec.name, "lower bound below delta", low.passed,
                           f"delta {tr.delta:g}, worst slack {low.worst_slack:.3g}"))
    return lines
