"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible with ``-s``) and
then asserts. Run directly with ``python3 tests/test_acceptance.py`` for the
summary alone.
"""

import time

import numpy as np
import pytest

from paracone.corpus import certified_entries, corpus_get, corpus_names, polynomial_mapping
from paracone.ordered_space import orthant, estimate_normality_constant
from paracone.paraconvexity import (
    MIN_FORM,
    PRODUCT_FORM,
    SamplingPlan,
    check_paraconvex,
    estimate_min_C,
    grid_plan,
    hilbert_identity_error,
    search_violation,
    verify_square_shift,
)
from paracone.quotients import (
    LEMMA_FALSIFIED,
    LEMMA_HOLDS,
    build_trace,
    check_alpha_monotone,
    check_lemma_trace,
    check_lower_bound,
    estimate_directional_derivative,
    monotone_slack_matrix,
)
from paracone.suite import base_points

R1 = orthant(1)
COARSE = np.round(np.arange(1, 20) * 0.05, 12)  # 0.05, ..., 0.95


def report(num, title, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {title}" + (f" ({detail})" if detail else ""))
    return ok


def trace_directions(spec):
    """Axis directions (both signs) from the box centre, plus the diagonal for n > 1."""
    dirs = []
    for k in range(spec.n):
        for sign in (1.0, -1.0):
            h = np.zeros(spec.n)
            h[k] = sign
            dirs.append(h)
    if spec.n > 1:
        dirs.append(np.ones(spec.n) / np.sqrt(spec.n))
    return dirs


def test_criterion_1_neg_square():
    start = time.perf_counter()
    F = corpus_get("neg_square")
    c_coarse = estimate_min_C(F, R1, "pow:2", [1.0], MIN_FORM, grid_plan(lambdas=COARSE))
    c_fine = estimate_min_C(F, R1, "pow:2", [1.0], MIN_FORM, grid_plan(lambdas=np.r_[0.005, COARSE]))
    passes = check_paraconvex(F, R1, "pow:2", 1.0, [1.0], MIN_FORM).passed
    tr = build_trace(F, [0.0], [1.0], 1.0, [1.0], "pow:2", steps=40)
    raw = tr.raw[:, 0]
    exact = float(np.max(np.abs(raw + tr.t_values)))
    decreasing = bool(np.all(np.diff(raw) > 0))  # t_values decrease along the trace
    elapsed = time.perf_counter() - start
    ok = (abs(c_coarse - 0.95) <= 1e-9 and c_fine > 0.99 and passes
          and exact <= 1e-12 and decreasing and elapsed < 5.0)
    report(1, "neg_square constant, C=1 check, phi(t) = -t", ok,
           f"C_hat={c_coarse:.12f}, with 0.005: {c_fine:.9f}, C=1 pass={passes}, "
           f"|phi+t|max={exact:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_alpha_monotone():
    worst, min_pairs, failures = np.inf, np.inf, []
    for spec in certified_entries():
        x0 = 0.5 * (spec.lower + spec.upper)
        for h in trace_directions(spec):
            tr = build_trace(spec, x0, h, spec.known_C, spec.known_k0, spec.known_modulus, steps=40)
            rep = check_alpha_monotone(tr, spec.cone)
            worst = min(worst, rep.worst_slack)
            min_pairs = min(min_pairs, rep.samples_used)
            if rep.worst_slack < -1e-9 or len(tr) != 40:
                failures.append((spec.name, h.tolist()))
    F = corpus_get("neg_square")
    tr0 = build_trace(F, [0.0], [1.0], 0.0, [1.0], "pow:2", steps=40)
    M = monotone_slack_matrix(tr0, R1)
    i, j = np.triu_indices(40, 1)
    uncorrected = bool(np.all(M[i, j] <= -(tr0.t_values[i] - tr0.t_values[j]) + 1e-12))
    ok = not failures and min_pairs >= 780 and uncorrected and not check_alpha_monotone(tr0, R1).passed
    report(2, "corrected quotients alpha-nondecreasing", ok,
           f"worst slack {worst:.2e}, >= {min_pairs} pairs/trace, C=0 fails as predicted={uncorrected}")
    assert ok, failures


def test_criterion_3_lower_bound():
    failures, checked, cond_max = [], 0, 0.0
    for spec in certified_entries():
        x0 = 0.5 * (spec.lower + spec.upper)
        for h in trace_directions(spec):
            tr = build_trace(spec, x0, h, spec.known_C, spec.known_k0, spec.known_modulus, steps=40)
            rep = check_lower_bound(tr, spec, spec.cone)
            # independent evaluation of the closed-form b
            b = spec(x0) - spec(x0 - tr.h) - (spec.known_C * 1.0 + 1.0) * spec.known_k0
            sel = tr.t_values < tr.delta
            V = tr.corrected[sel] - b
            s = np.min(V @ spec.cone.facet_normals.T, axis=1)
            cond = 2 * spec.known_C * tr.alpha(2 * tr.t_values[sel]) / (2 * tr.t_values[sel])
            checked += int(sel.sum())
            cond_max = max(cond_max, float(cond.max()))
            if not rep.passed or np.any(s < -1e-9) or np.any(cond > 1) or sel.sum() == 0:
                failures.append((spec.name, h.tolist()))
    ok = not failures
    report(3, "corrected quotients bounded below by b for t < delta", ok,
           f"{checked} points checked, max 2C*alpha(2t)/(2t) = {cond_max:.3f}")
    assert ok, failures


CONVEX_QUAD = {"n": 2, "m": 2, "domain": [[-2, -2], [2, 2]],
               "components": [[[2.0, [2, 0]], [1.0, [0, 2]], [1.0, [1, 0]]],
                              [[2.0, [2, 0]], [-2.0, [1, 1]], [2.0, [0, 2]], [1.0, [0, 1]]]]}


def test_criterion_4_directional_derivative():
    notes, ok = [], True
    runs = 0
    for spec in certified_entries():
        for x0, h in base_points(spec, count=5, seed=0):
            e = estimate_directional_derivative(spec, x0, h, spec.known_C, spec.known_k0,
                                                spec.known_modulus, spec.cone, max_steps=40)
            runs += 1
            if not (e.converged and len(e.trace) <= 40 and e.analytic_error <= 10 * e.tol):
                ok = False
                notes.append(f"{spec.name} at {x0.tolist()}")
    F = corpus_get("neg_square")
    for x0, limit in ((0.0, 0.0), (0.5, -1.0)):
        e = estimate_directional_derivative(F, [x0], [1.0], 1.0, [1.0], "pow:2", R1)
        ok &= e.converged and abs(e.value[0] - limit) <= 1e-5
    L = corpus_get("linear")
    rng = np.random.default_rng(0)
    for _ in range(10):
        x0, h = rng.uniform(-1, 1, 2), rng.standard_normal(2)
        h /= np.linalg.norm(h)
        e = estimate_directional_derivative(L, x0, h, 0.0, [1, 1], "pow:2", L.cone)
        ok &= e.converged and float(np.max(np.abs(e.value - L(h)))) <= 1e-5
    # C = 0 on K-convex entries against the C > 0 code path
    K2 = orthant(2)
    for spec in (L, polynomial_mapping(CONVEX_QUAD)):
        x0, h = np.array([0.3, -0.4]), np.array([1.0, 2.0])
        a = estimate_directional_derivative(spec, x0, h, 0.0, [1, 1], "pow:2", K2)
        b = estimate_directional_derivative(spec, x0, h, 0.5, [1, 1], "pow:2", K2)
        n = min(len(a.trace), len(b.trace))
        same = (np.array_equal(a.trace.raw[:n], b.trace.raw[:n])
                and np.array_equal(a.trace.corrected, a.trace.raw)
                and float(np.max(np.abs(a.value - b.value))) <= a.tol
                and a.analytic_error <= 1e-5 and b.analytic_error <= 1e-5
                and a.subchecks["monotone"].passed)
        ok &= same
    report(4, "estimator converges and matches analytic derivatives", ok,
           f"{runs} corpus runs" + (f", failed: {notes}" if notes else ""))
    assert ok


def test_criterion_5_square_shift():
    rng = np.random.default_rng(5)
    err = float(np.max(hilbert_identity_error(rng.uniform(-10, 10, (10_000, 2)),
                                              rng.uniform(-10, 10, (10_000, 2)),
                                              rng.random(10_000))))
    agree = {}
    for name in ("hilbert_shift", "neg_square"):
        F = corpus_get(name)
        rep = verify_square_shift(F, F.cone, F.known_C, F.known_k0, SamplingPlan())
        agree[name] = rep.details["verdicts_agree"] and rep.passed
    ok = err <= 1e-12 and all(agree.values())
    report(5, "Hilbert identity and square-shift equivalence", ok,
           f"identity max error {err:.1e}, agreement {agree}")
    assert ok


def test_criterion_6_form_equivalence():
    plan = grid_plan()

    def passes(F, C, k0, form):
        return check_paraconvex(F, F.cone, "pow:2", C, k0, form, plan).passed

    literal_viol, correct_viol, reverse_cex, cases = [], [], [], 0
    for name in corpus_names():
        F = corpus_get(name)
        k0 = F.known_k0 if F.certified else np.ones(F.m)
        stored = [F.known_C] if F.certified else [1.0, 10.0, 100.0]
        for C in stored:
            cases += 1
            mn, pr = passes(F, C, k0, MIN_FORM), passes(F, C, k0, PRODUCT_FORM)
            if (mn and not pr) or (pr and not passes(F, 2 * C, k0, MIN_FORM)):
                literal_viol.append((name, C))
        for C in np.linspace(0.0, 2.0, 41):
            cases += 1
            mn, pr = passes(F, C, k0, MIN_FORM), passes(F, C, k0, PRODUCT_FORM)
            if (pr and not mn) or (mn and not passes(F, 2 * C, k0, PRODUCT_FORM)):
                correct_viol.append((name, float(C)))
            if mn and not pr:
                reverse_cex.append((name, round(float(C), 3)))
    ok = not literal_viol and not correct_viol
    report(6, "min/product forms equivalent up to a factor 2", ok,
           f"{cases} cases; stated implications hold at stored constants: {not literal_viol}; "
           f"product@C => min@C and min@C => product@2C over the C sweep: {not correct_viol}; "
           f"min@C without product@C occurs at {reverse_cex[:3]}")
    assert ok, (literal_viol, correct_viol)


def test_criterion_7_normality():
    start = time.perf_counter()
    K = orthant(2)
    est = estimate_normality_constant(K, "euclidean", 100_000, 0)
    seq = [estimate_normality_constant(K, "euclidean", n, 0) for n in (10, 100, 1_000, 10_000, 100_000)]
    monotone = all(a <= b for a, b in zip(seq, seq[1:]))
    elapsed = time.perf_counter() - start
    ok = 0.99 <= est <= 1.0 and monotone and elapsed < 10.0
    report(7, "normality constant of R^2_+", ok, f"estimate {est:.6f}, monotone={monotone}, {elapsed:.2f}s")
    assert ok


def test_criterion_8_negative_control():
    F = corpus_get("abs_kink")
    fails = {C: not check_paraconvex(F, R1, "pow:2", C, [1.0]).passed for C in (1.0, 10.0, 100.0)}
    seps = {}
    for C in (10.0, 100.0):
        w = search_violation(F, R1, "pow:2", C, [1.0], budget=10_000, seed=0)
        seps[C] = None if w is None else float(abs(w.x1 - w.x2)[0])
    ok = all(fails.values()) and all(s is not None and s < 0.1 for s in seps.values())
    report(8, "abs_kink rejected, search finds a close witness", ok,
           f"rejected {fails}, witness separation {seps}")
    assert ok


def test_criterion_9_lemma():
    statuses = []
    for spec in certified_entries():
        for x0, h in base_points(spec, count=5, seed=9):
            e = estimate_directional_derivative(spec, x0, h, spec.known_C, spec.known_k0,
                                                spec.known_modulus, spec.cone)
            rep = check_lemma_trace(e.lemma_phi(), spec.cone, spec.known_C * spec.known_k0, spec.known_modulus)
            statuses.append(rep.details["status"])
    falsified = statuses.count(LEMMA_FALSIFIED)
    ok = len(statuses) >= 20 and falsified == 0
    report(9, "lemma implication never falsified", ok,
           f"{len(statuses)} runs, {statuses.count(LEMMA_HOLDS)} with premises met, {falsified} falsified")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
