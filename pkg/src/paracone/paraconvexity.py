"""Sampled checks of cone-convexity and strong alpha-k0 paraconvexity.

Every checker reduces to the cone-membership slack of

    v = lam F(x1) + (1 - lam) F(x2) + C w(lam) alpha(|x1 - x2|) k0 - F(lam x1 + (1 - lam) x2)

over a sampling plan, where ``w`` is ``min(lam, 1 - lam)`` (min form) or
``lam (1 - lam)`` (product form). ``C = 0`` gives plain K-convexity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import MappingSpec
from .modulus import Modulus, make_power_modulus, parse_modulus
from .ordered_space import (
    EUCLIDEAN,
    ConeDescriptor,
    DualVector,
    as_vec,
    member,
    norm,
    orthant,
)
from .reports import CheckReport, SampleTriple

MIN_FORM = "min"
PRODUCT_FORM = "product"
FORMS = (MIN_FORM, PRODUCT_FORM)

DEFAULT_REL_TOL = 1e-9


class ParameterError(ValueError):
    pass


class NoFiniteConstant(ArithmeticError):
    pass


def weight(lam, form: str):
    lam = np.asarray(lam, dtype=float)
    if form == MIN_FORM:
        return np.minimum(lam, 1.0 - lam)
    if form == PRODUCT_FORM:
        return lam * (1.0 - lam)
    raise ParameterError(f"unknown defect form {form!r}; choose from {FORMS}")


def default_lambdas() -> np.ndarray:
    return np.concatenate([[0.0], np.round(np.arange(1, 20) * 0.05, 12), [1.0]])


@dataclass(frozen=True)
class SamplingPlan:
    """Tensor grid of segment endpoints and lambdas plus seeded random triples.

    ``points_per_dim = None`` picks 41 points for n = 1, 9 for n = 2 and 5
    above. ``search_budget`` triple evaluations of hill-climbing are spent
    after the grid passes.
    """

    lambdas: np.ndarray = field(default_factory=default_lambdas)
    points_per_dim: Optional[int] = None
    random_triples: int = 500
    search_budget: int = 4000
    seed: int = 0
    rel_tol: float = DEFAULT_REL_TOL

    def grid_points(self, spec: MappingSpec) -> np.ndarray:
        p = self.points_per_dim or {1: 41, 2: 9}.get(spec.n, 5)
        axes = [np.linspace(lo, hi, p) for lo, hi in zip(spec.lower, spec.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def triples(self, spec: MappingSpec):
        P = self.grid_points(spec)
        lam = np.asarray(self.lambdas, dtype=float)
        i, j, k = np.meshgrid(np.arange(len(P)), np.arange(len(P)), np.arange(len(lam)), indexing="ij")
        X1, X2, L = P[i.ravel()], P[j.ravel()], lam[k.ravel()]
        if self.random_triples > 0:
            rng = np.random.default_rng(self.seed)
            R1, R2, RL = random_triples(spec, self.random_triples, rng)
            X1 = np.concatenate([X1, R1])
            X2 = np.concatenate([X2, R2])
            L = np.concatenate([L, RL])
        return X1, X2, L


def grid_plan(lambdas=None, points_per_dim=None) -> SamplingPlan:
    """Deterministic grid only (no random triples, no search)."""
    lam = default_lambdas() if lambdas is None else np.asarray(lambdas, dtype=float)
    return SamplingPlan(lambdas=lam, points_per_dim=points_per_dim, random_triples=0, search_budget=0)


def random_triples(spec: MappingSpec, count: int, rng: np.random.Generator):
    """Uniform first points; second points half uniform, half at log-uniform distance."""
    width = spec.upper - spec.lower
    U = rng.random((count, 2 * spec.n + 3))
    X1 = spec.lower + U[:, :spec.n] * width
    X2 = spec.lower + U[:, spec.n:2 * spec.n] * width
    near = U[:, -3] < 0.5
    direction = U[:, spec.n:2 * spec.n] - 0.5
    dn = np.linalg.norm(direction, axis=1, keepdims=True)
    direction = direction / np.where(dn > 0, dn, 1.0)
    radius = float(np.max(width)) * 10.0 ** (-6.0 * U[:, -2])
    X2 = np.where(near[:, None], spec.clip(X1 + radius[:, None] * direction), X2)
    return X1, X2, U[:, -1]


@dataclass(frozen=True)
class DefectProblem:
    """Slack function of the paraconvexity inequality for fixed parameters."""

    spec: MappingSpec
    cone: ConeDescriptor
    alpha: Optional[Modulus]
    C: float
    k0: np.ndarray
    form: str
    norm_kind: str = EUCLIDEAN

    def terms(self, X1, X2, L):
        """Return ``(convex_defect, correction)`` so that v = defect + correction."""
        L = np.asarray(L, dtype=float)
        Lc = L[:, None]
        mid = Lc * X1 + (1.0 - Lc) * X2
        F1, F2, Fm = self.spec(X1), self.spec(X2), self.spec(mid)
        defect = Lc * F1 + (1.0 - Lc) * F2 - Fm
        scale = (norm(Lc * F1) + norm((1.0 - Lc) * F2) + norm(Fm))
        if self.C == 0 or self.alpha is None:
            corr = np.zeros_like(defect)
        else:
            d = norm(X1 - X2, self.norm_kind)
            corr = (self.C * weight(L, self.form) * self.alpha(d))[:, None] * self.k0
        return defect, corr, scale

    def __call__(self, X1, X2, L):
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        L = np.atleast_1d(np.asarray(L, dtype=float))
        defect, corr, scale = self.terms(X1, X2, L)
        v = defect + corr
        A = self.cone.facet_normals
        if A.shape[0] == 0:
            s = np.full(len(L), np.inf)
        else:
            s = np.min(v @ A.T, axis=-1)
        scale = scale + norm(corr)
        return s, scale

    def params(self, rel_tol: float) -> dict:
        return {
            "C": float(self.C),
            "k0": [float(v) for v in self.k0],
            "alpha": self.alpha.label if self.alpha is not None else None,
            "form": self.form,
            "norm": self.norm_kind,
            "rel_tol": rel_tol,
            "mapping": self.spec.name,
        }


def _resolve_alpha(alpha) -> Optional[Modulus]:
    if alpha is None or isinstance(alpha, Modulus):
        return alpha
    return parse_modulus(str(alpha))


def make_problem(F: MappingSpec, K: ConeDescriptor, alpha, C: float, k0, form: str = MIN_FORM,
                 norm_kind: str = EUCLIDEAN) -> DefectProblem:
    if C < 0:
        raise ParameterError("C must be nonnegative")
    if K.dim != F.m:
        raise ParameterError(f"cone dimension {K.dim} does not match mapping range R^{F.m}")
    k0 = as_vec(k0, K.dim)
    ok, s = member(k0, K)
    if not ok:
        raise ParameterError(f"k0 = {k0.tolist()} is not in the cone (slack {s:.3g})")
    if C > 0 and not np.any(k0):
        raise ParameterError("k0 must be nonzero")
    weight(0.5, form)
    return DefectProblem(F, K, _resolve_alpha(alpha), float(C), k0, form, norm_kind)


def _verdict(problem: DefectProblem, X1, X2, L, rel_tol: float):
    s, scale = problem(X1, X2, L)
    tol = rel_tol * (1.0 + scale)
    excess = s + tol
    i = int(np.argmin(excess))
    return bool(excess[i] >= 0), i, s, tol


def evaluate_triples(problem: DefectProblem, X1, X2, L, rel_tol: float = DEFAULT_REL_TOL) -> CheckReport:
    X1 = np.atleast_2d(X1)
    X2 = np.atleast_2d(X2)
    L = np.atleast_1d(L)
    ok, i, s, tol = _verdict(problem, X1, X2, L, rel_tol)
    worst = int(np.argmin(s))
    wit = SampleTriple(X1[i].copy(), X2[i].copy(), float(L[i]))
    return CheckReport(
        passed=ok,
        worst_slack=float(s[worst]),
        witness=None if ok else wit,
        samples_used=len(L),
        params=problem.params(rel_tol),
        tolerance=float(tol[i]),
    )


def _run_plan(problem: DefectProblem, plan: SamplingPlan) -> CheckReport:
    X1, X2, L = plan.triples(problem.spec)
    rep = evaluate_triples(problem, X1, X2, L, plan.rel_tol)
    if rep.passed and plan.search_budget > 0:
        found = search_violation_problem(problem, plan.search_budget, plan.seed, plan.rel_tol)
        rep.samples_used += plan.search_budget
        if found is not None:
            sub = evaluate_triples(problem, found.x1, found.x2, found.lam, plan.rel_tol)
            rep.passed = False
            rep.witness = found
            rep.worst_slack = min(rep.worst_slack, sub.worst_slack)
            rep.tolerance = sub.tolerance
    rep.params["seed"] = plan.seed
    return rep


def check_cone_convex(F: MappingSpec, K: ConeDescriptor, plan: Optional[SamplingPlan] = None) -> CheckReport:
    """K-convexity of F on its domain box (no defect term)."""
    plan = plan or SamplingPlan()
    k0 = np.zeros(K.dim)
    problem = DefectProblem(F, K, None, 0.0, k0, MIN_FORM)
    if K.dim != F.m:
        raise ParameterError(f"cone dimension {K.dim} does not match mapping range R^{F.m}")
    return _run_plan(problem, plan)


def check_paraconvex(F: MappingSpec, K: ConeDescriptor, alpha, C: float, k0,
                     form: str = MIN_FORM, plan: Optional[SamplingPlan] = None,
                     norm_kind: str = EUCLIDEAN) -> CheckReport:
    """Strong alpha-k0 paraconvexity of F with constant C, sampled."""
    plan = plan or SamplingPlan()
    problem = make_problem(F, K, alpha, C, k0, form, norm_kind)
    return _run_plan(problem, plan)


def check_paraconvex_family(F: MappingSpec, K: ConeDescriptor, alpha, pairs: Sequence, form: str = MIN_FORM,
                            plan: Optional[SamplingPlan] = None) -> CheckReport:
    """Strong alpha-K paraconvexity on a finite list of ``(k, C_k)`` pairs."""
    reports = [check_paraconvex(F, K, alpha, C, k, form, plan) for k, C in pairs]
    failing = [r for r in reports if not r.passed]
    worst = min(reports, key=lambda r: r.worst_slack)
    return CheckReport(
        passed=not failing,
        worst_slack=worst.worst_slack,
        witness=failing[0].witness if failing else None,
        samples_used=sum(r.samples_used for r in reports),
        params={"pairs": [(list(map(float, np.atleast_1d(k))), float(C)) for k, C in pairs],
                "form": form},
        tolerance=worst.tolerance,
        details={"per_k": [r.to_dict() for r in reports]},
    )


def estimate_min_C(F: MappingSpec, K: ConeDescriptor, alpha, k0, form: str = MIN_FORM,
                   plan: Optional[SamplingPlan] = None, norm_kind: str = EUCLIDEAN) -> float:
    """Smallest C >= 0 making every sampled triple pass.

    Defects within round-off tolerance count as zero. Facets with
    ``a . k0 <= 0`` cannot absorb a positive defect; those raise
    :class:`NoFiniteConstant`.
    """
    plan = plan or grid_plan()
    problem = make_problem(F, K, alpha, 1.0, k0, form, norm_kind)
    if problem.alpha is None:
        raise ParameterError("a modulus is required")
    X1, X2, L = plan.triples(F)
    defect, corr, scale = problem.terms(X1, X2, L)
    tol = plan.rel_tol * (1.0 + scale)
    A = K.facet_normals
    # positive = violation of K-convexity along facet a_i
    viol = -(defect @ A.T)
    viol = np.where(np.abs(viol) <= tol[:, None], 0.0, viol)
    ak = A @ problem.k0
    bad = (ak <= 0) & np.any(viol > 0, axis=0)
    if np.any(bad):
        raise NoFiniteConstant(
            f"positive defect along facet normal(s) {A[bad].tolist()} with a . k0 <= 0; no finite C"
        )
    wa = weight(L, form) * problem.alpha(norm(X1 - X2, norm_kind))
    use = wa > 0
    if not np.any(use):
        return 0.0
    pos = ak > 0
    ratios = viol[use][:, pos] / (wa[use][:, None] * ak[pos])
    return float(max(0.0, np.max(ratios)))


def check_scalarization(F: MappingSpec, K: ConeDescriptor, alpha, C: float, k0, ystar,
                        form: str = MIN_FORM, plan: Optional[SamplingPlan] = None,
                        norm_kind: str = EUCLIDEAN) -> CheckReport:
    """Check that y* o F is strongly alpha-paraconvex with constant C y*(k0)."""
    plan = plan or SamplingPlan()
    if not isinstance(ystar, DualVector):
        from .ordered_space import make_dual_vector
        ystar = make_dual_vector(ystar, K)
    if not ystar.dual_feasible:
        raise ParameterError(f"y* = {ystar.coeffs.tolist()} is not in the dual cone")
    k0 = as_vec(k0, K.dim)
    c = ystar.coeffs
    scalar = replace(F, m=1, evaluate=lambda X, f=F.evaluate: (np.asarray(f(X)) @ c)[..., None],
                     name=f"y*.{F.name}", cone=None)
    ck = float(c @ k0)
    problem = DefectProblem(scalar, orthant(1), _resolve_alpha(alpha), float(C), np.array([ck]), form, norm_kind)
    rep = _run_plan(problem, plan)
    rep.params.update({"ystar": c.tolist(), "scalar_constant": float(C) * ck})
    return rep


def hilbert_identity_error(x1, x2, lam) -> np.ndarray:
    """|lam|x1|^2 + (1-lam)|x2|^2 - |mid|^2 - lam(1-lam)|x1-x2|^2| per row."""
    x1 = np.atleast_2d(x1)
    x2 = np.atleast_2d(x2)
    lam = np.atleast_1d(lam)[:, None]
    mid = lam * x1 + (1 - lam) * x2
    lhs = lam[:, 0] * np.sum(x1 ** 2, 1) + (1 - lam[:, 0]) * np.sum(x2 ** 2, 1) - np.sum(mid ** 2, 1)
    rhs = lam[:, 0] * (1 - lam[:, 0]) * np.sum((x1 - x2) ** 2, 1)
    return np.abs(lhs - rhs)


def verify_square_shift(F: MappingSpec, K: ConeDescriptor, C: float, k0,
                        plan: Optional[SamplingPlan] = None, norm_kind: str = EUCLIDEAN,
                        identity_pairs: int = 10_000, identity_tol: float = 1e-12) -> CheckReport:
    """F is pow:2-k0 paraconvex (product form, constant C) iff F + C|.|^2 k0 is K-convex.

    Both sides are evaluated on one shared sample set (plan grid, random
    triples, and any violation the search finds for either side) so the
    verdicts are comparable. ``passed`` means the two verdicts agree and the
    norm identity holds.
    """
    if norm_kind != EUCLIDEAN:
        raise ParameterError("the square-shift characterisation needs the euclidean norm")
    plan = plan or SamplingPlan()
    k0 = as_vec(k0, K.dim)
    alpha = make_power_modulus(2)
    para = make_problem(F, K, alpha, C, k0, PRODUCT_FORM)
    shifted = replace(
        F,
        evaluate=lambda X, f=F.evaluate: np.asarray(f(X)) + C * np.sum(np.asarray(X) ** 2, axis=-1)[..., None] * k0,
        name=f"{F.name}+C|x|^2k0",
    )
    convex = DefectProblem(shifted, K, None, 0.0, np.zeros(K.dim), MIN_FORM)

    X1, X2, L = plan.triples(F)
    used = len(L)
    if plan.search_budget > 0:
        for prob in (para, convex):
            w = search_violation_problem(prob, plan.search_budget, plan.seed, plan.rel_tol)
            used += plan.search_budget
            if w is not None:
                X1 = np.vstack([X1, w.x1[None]])
                X2 = np.vstack([X2, w.x2[None]])
                L = np.append(L, w.lam)
    rep_para = evaluate_triples(para, X1, X2, L, plan.rel_tol)
    rep_conv = evaluate_triples(convex, X1, X2, L, plan.rel_tol)

    rng = np.random.default_rng(plan.seed)
    width = F.upper - F.lower
    P1 = F.lower + rng.random((identity_pairs, F.n)) * width
    P2 = F.lower + rng.random((identity_pairs, F.n)) * width
    lam = rng.random(identity_pairs)
    ident = float(np.max(hilbert_identity_error(P1, P2, lam))) if identity_pairs else 0.0

    agree = rep_para.passed == rep_conv.passed
    ok = agree and ident <= identity_tol
    return CheckReport(
        passed=ok,
        worst_slack=min(rep_para.worst_slack, rep_conv.worst_slack),
        witness=rep_para.witness or rep_conv.witness,
        samples_used=used,
        params={"C": float(C), "k0": k0.tolist(), "alpha": "pow:2", "form": PRODUCT_FORM,
                "seed": plan.seed, "identity_tol": identity_tol},
        tolerance=max(rep_para.tolerance, rep_conv.tolerance),
        details={
            "paraconvex": rep_para.to_dict(),
            "shifted_convex": rep_conv.to_dict(),
            "verdicts_agree": agree,
            "identity_max_error": ident,
            "identity_pairs": identity_pairs,
        },
    )


# -- counterexample search ---------------------------------------------------

def search_violation_problem(problem: DefectProblem, budget: int, seed: int = 0,
                             rel_tol: float = DEFAULT_REL_TOL, population: int = 8,
                             max_iter: int = 120, polish: int = 400) -> Optional[SampleTriple]:
    """Multi-start hill climb on the slack over ``(x1, x2, lam)``.

    Each restart mutates the incumbent with Gaussian steps scaled to the box
    and adapts the step size (grow on improvement, shrink otherwise). Returns
    the first triple whose slack is below ``-tol``, else ``None``.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    spec = problem.spec
    n = spec.n
    lo = np.concatenate([spec.lower, spec.lower, [0.0]])
    hi = np.concatenate([spec.upper, spec.upper, [1.0]])
    width = hi - lo
    rng = np.random.default_rng(seed)

    alpha = problem.alpha or make_power_modulus(2)

    def score(Z):
        # slack per unit of allowed defect: grows without bound near kinks,
        # which gives the climb a direction even where raw slack is flat
        X1, X2, L = Z[:, :n], Z[:, n:2 * n], Z[:, -1]
        s, scale = problem(X1, X2, L)
        tol = rel_tol * (1.0 + scale)
        den = weight(L, problem.form) * alpha(norm(X1 - X2, problem.norm_kind))
        with np.errstate(divide="ignore", invalid="ignore"):
            # inside the round-off band the defect is taken as zero: score = C
            sc = np.where((np.abs(s) <= tol) | (den <= 0), problem.C, s / np.where(den > 0, den, 1.0))
        return sc, s + tol

    def found(Z, sc, ex, spent):
        # deepen the violation with what is left of the budget
        j = int(np.argmin(ex))
        z, best = Z[j], ex[j]
        sig = 0.05 * max(float(np.linalg.norm(z[:n] - z[n:2 * n])) / float(np.max(width)), 1e-12)
        for _ in range(min(polish, (budget - spent) // population)):
            Zp = np.clip(z + sig * width * rng.standard_normal((population, z.size)), lo, hi)
            _, exp = score(Zp)
            i = int(np.argmin(exp))
            if exp[i] < best:
                z, best = Zp[i], exp[i]
                sig *= 1.5
            else:
                sig *= 0.7
            # step collapsed on a ridge: reopen it at the current separation
            sep = float(np.linalg.norm(z[:n] - z[n:2 * n])) / float(np.max(width))
            if sig < 1e-4 * sep:
                sig = 0.1 * sep
        return SampleTriple(z[:n].copy(), z[n:2 * n].copy(), float(z[-1]))

    spent = 0
    while spent < budget:
        # restart: best of a small random batch, half of them near-coincident pairs
        k = min(population, budget - spent)
        X1, X2, L = random_triples(spec, k, rng)
        Z = np.hstack([X1, X2, L[:, None]])
        s, ex = score(Z)
        spent += k
        if np.min(ex) < 0:
            return found(Z, s, ex, spent)
        i = int(np.argmin(s))
        z, best = Z[i], s[i]
        sep = max(float(np.linalg.norm(z[:n] - z[n:2 * n])), 1e-9 * float(np.max(width)))
        sigma = min(0.25, sep / float(np.max(width)))
        stall = 0
        for _ in range(max_iter):
            if spent >= budget or stall >= 20 or sigma < 1e-14:
                break
            k = min(population, budget - spent)
            Z = np.clip(z + sigma * width * rng.standard_normal((k, z.size)), lo, hi)
            s, ex = score(Z)
            spent += k
            if np.min(ex) < 0:
                return found(Z, s, ex, spent)
            j = int(np.argmin(s))
            if s[j] < best:
                z, best = Z[j], s[j]
                sigma *= 1.5
                stall = 0
            else:
                sigma *= 0.6
                stall += 1
    return None


def search_violation(F: MappingSpec, K: ConeDescriptor, alpha, C: float, k0, form: str = MIN_FORM,
                     budget: int = 10_000, seed: int = 0, rel_tol: float = DEFAULT_REL_TOL,
                     norm_kind: str = EUCLIDEAN) -> Optional[SampleTriple]:
    problem = make_problem(F, K, alpha, C, k0, form, norm_kind)
    return search_violation_problem(problem, budget, seed, rel_tol)


def validate_entry(spec: MappingSpec, plan: Optional[SamplingPlan] = None) -> CheckReport:
    """Check a corpus entry's stored (C, k0, modulus) with the min-form checker."""
    if not spec.certified:
        raise ParameterError(f"{spec.name} carries no known constant")
    return check_paraconvex(spec, spec.cone, spec.known_modulus, spec.known_C, spec.known_k0,
                            MIN_FORM, plan)
