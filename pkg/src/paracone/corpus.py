"""Mappings F: R^n -> R^m with box domains and analytic ground truth.

Evaluators are vectorised: they take an array of shape ``(..., n)`` and
return ``(..., m)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .ordered_space import ConeDescriptor, make_cone, orthant


class UnknownMapping(KeyError):
    pass


class MappingFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MappingSpec:
    name: str
    n: int
    m: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    cone: Optional[ConeDescriptor] = None
    known_C: Optional[float] = None
    known_k0: Optional[np.ndarray] = None
    known_modulus: Optional[str] = None
    analytic_dderiv: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    notes: str = ""

    def __call__(self, x) -> np.ndarray:
        """Evaluate at one point or a batch; always returns at least 1-d."""
        X = np.asarray(x, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1)
        if X.shape[-1] != self.n:
            raise ValueError(f"{self.name}: expected points in R^{self.n}, got shape {X.shape}")
        return np.asarray(self.evaluate(X), dtype=float)

    @property
    def certified(self) -> bool:
        return self.known_C is not None

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        X = np.asarray(x, dtype=float)
        return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=-1)

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


def _box(lo, hi, n):
    return np.full(n, float(lo)), np.full(n, float(hi))


# -- built-in entries --------------------------------------------------------

def _neg_square() -> MappingSpec:
    lo, hi = _box(-2.0, 2.0, 1)
    return MappingSpec(
        "neg_square", 1, 1,
        lambda X: -X ** 2,
        lo, hi,
        cone=orthant(1),
        known_C=1.0,
        known_k0=np.array([1.0]),
        known_modulus="pow:2",
        analytic_dderiv=lambda x0, h: np.atleast_1d(-2.0 * np.asarray(x0, float) * np.asarray(h, float)),
        notes="F(x) = -x^2 on [-2, 2], K = R_+",
    )


LINEAR_MATRIX = np.array([[2.0, -1.0], [0.5, 3.0]])


def _linear() -> MappingSpec:
    A = LINEAR_MATRIX
    lo, hi = _box(-2.0, 2.0, 2)
    return MappingSpec(
        "linear", 2, 2,
        lambda X: X @ A.T,
        lo, hi,
        cone=orthant(2),
        known_C=0.0,
        known_k0=np.array([1.0, 1.0]),
        known_modulus="pow:2",
        analytic_dderiv=lambda x0, h: A @ np.asarray(h, float),
        notes="F(x) = A x, K = R^2_+",
    )


# F = G - C |x|^2 k0 with G componentwise convex, so F + C|.|^2 k0 is K-convex
HILBERT_C = 1.0
HILBERT_K0 = np.array([1.0, 2.0])


def _hilbert_G(X):
    x1, x2 = X[..., 0], X[..., 1]
    return np.stack([2 * x1 ** 2 + x2 ** 2 + x1,
                     (x1 - x2) ** 2 + x2 ** 2 + x2], axis=-1)


def _hilbert_F(X):
    sq = np.sum(X ** 2, axis=-1)
    return _hilbert_G(X) - HILBERT_C * sq[..., None] * HILBERT_K0


def _hilbert_jac(x):
    x1, x2 = float(x[0]), float(x[1])
    # F1 = x1^2 + x1, F2 = -x1^2 - 2 x1 x2 + x2
    return np.array([[2 * x1 + 1.0, 0.0],
                     [-2 * x1 - 2 * x2, -2 * x1 + 1.0]])


def _hilbert_shift() -> MappingSpec:
    lo, hi = _box(-2.0, 2.0, 2)
    return MappingSpec(
        "hilbert_shift", 2, 2,
        _hilbert_F,
        lo, hi,
        cone=orthant(2),
        known_C=HILBERT_C,
        known_k0=HILBERT_K0.copy(),
        known_modulus="pow:2",
        analytic_dderiv=lambda x0, h: _hilbert_jac(np.asarray(x0, float)) @ np.asarray(h, float),
        notes="F(x) = G(x) - |x|^2 (1, 2), G convex quadratic, K = R^2_+",
    )


def _abs_kink() -> MappingSpec:
    lo, hi = _box(-2.0, 2.0, 1)

    def dd(x0, h):
        x0 = float(np.asarray(x0).ravel()[0])
        h = float(np.asarray(h).ravel()[0])
        if x0 == 0:
            return np.array([-abs(h)])
        return np.array([-np.sign(x0) * h])

    return MappingSpec(
        "abs_kink", 1, 1,
        lambda X: -np.abs(X),
        lo, hi,
        cone=orthant(1),
        analytic_dderiv=dd,
        notes="F(x) = -|x|: not pow:2-paraconvex (negative control)",
    )


def _diag_pair() -> MappingSpec:
    lo, hi = _box(-2.0, 2.0, 1)
    return MappingSpec(
        "diag_pair", 1, 2,
        lambda X: np.concatenate([-X ** 2, X ** 2], axis=-1),
        lo, hi,
        cone=orthant(2),
        known_C=1.0,
        known_k0=np.array([1.0, 0.0]),
        known_modulus="pow:2",
        analytic_dderiv=lambda x0, h: np.array([-2.0, 2.0]) * float(np.ravel(x0)[0]) * float(np.ravel(h)[0]),
        notes="F(x) = (-x^2, x^2), K = R^2_+",
    )


# wedge {(u, v): v >= 2|u|}, facet normals (2, 1) and (-2, 1)
WEDGE = make_cone([[2.0, 1.0], [-2.0, 1.0]], [[1.0, 2.0], [-1.0, 2.0]], name="wedge2")


def _wedge_curve() -> MappingSpec:
    # a . F'' for the facet normals: 2*(-2) + 2 = -2 and -2*(-2) + 2 = 6;
    # with k0 = (0, 1) (a . k0 = 1) the first needs C >= 1 (product form)
    lo, hi = _box(-1.5, 1.5, 1)
    return MappingSpec(
        "wedge_curve", 1, 2,
        lambda X: np.concatenate([-X ** 2 + X, X ** 2], axis=-1),
        lo, hi,
        cone=WEDGE,
        known_C=1.5,
        known_k0=np.array([0.0, 1.0]),
        known_modulus="pow:2",
        analytic_dderiv=lambda x0, h: np.array([-2.0 * float(np.ravel(x0)[0]) + 1.0,
                                                2.0 * float(np.ravel(x0)[0])]) * float(np.ravel(h)[0]),
        notes="F(x) = (x - x^2, x^2) ordered by the wedge v >= 2|u|",
    )


_REGISTRY = {
    "neg_square": _neg_square,
    "linear": _linear,
    "hilbert_shift": _hilbert_shift,
    "abs_kink": _abs_kink,
    "diag_pair": _diag_pair,
    "wedge_curve": _wedge_curve,
}


def corpus_names() -> list[str]:
    return list(_REGISTRY)


def corpus_get(name: str) -> MappingSpec:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnknownMapping(f"unknown mapping {name!r}; known: {', '.join(_REGISTRY)}") from None
    return factory()


def certified_entries() -> list[MappingSpec]:
    return [s for s in map(corpus_get, _REGISTRY) if s.certified]


# -- polynomial mappings from JSON -----------------------------------------

def polynomial_mapping(doc: dict, name: str = "polynomial") -> MappingSpec:
    """Componentwise polynomial mapping.

    ``{"n": 1, "m": 2, "components": [[[coeff, [exponents]], ...], ...]}``
    with optional ``"domain": [[lo...], [hi...]]``, ``"cone"`` (cone document),
    ``"known_C"``, ``"known_k0"``, ``"known_modulus"``.
    """
    try:
        n, m = int(doc["n"]), int(doc["m"])
        comps = doc["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MappingFormatError(f"mapping document needs n, m, components: {exc}") from None
    if len(comps) != m:
        raise MappingFormatError(f"expected {m} components, got {len(comps)}")
    terms = []
    for comp in comps:
        coeffs, exps = [], []
        for term in comp:
            if len(term) != 2 or len(term[1]) != n:
                raise MappingFormatError(f"bad term {term!r}: need [coeff, [{n} exponents]]")
            e = [int(v) for v in term[1]]
            if any(v < 0 for v in e):
                raise MappingFormatError(f"negative exponent in {term!r}")
            coeffs.append(float(term[0]))
            exps.append(e)
        terms.append((np.array(coeffs), np.array(exps, dtype=int).reshape(-1, n)))

    def evaluate(X):
        X = np.asarray(X, dtype=float)
        out = []
        for c, E in terms:
            if len(c) == 0:
                out.append(np.zeros(X.shape[:-1]))
                continue
            mon = np.prod(X[..., None, :] ** E, axis=-1)
            out.append(mon @ c)
        return np.stack(out, axis=-1)

    def dderiv(x0, h):
        x0 = np.asarray(x0, dtype=float)
        h = np.asarray(h, dtype=float)
        grads = np.zeros((m, n))
        for i, (c, E) in enumerate(terms):
            for coeff, e in zip(c, E):
                for j in range(n):
                    if e[j] == 0:
                        continue
                    ej = e.copy()
                    ej[j] -= 1
                    grads[i, j] += coeff * e[j] * np.prod(x0 ** ej)
        return grads @ h

    dom = doc.get("domain")
    if dom is None:
        lo, hi = _box(-1.0, 1.0, n)
    else:
        lo, hi = np.asarray(dom[0], float).reshape(n), np.asarray(dom[1], float).reshape(n)
    cone = None
    if "cone" in doc:
        from .ordered_space import cone_from_dict
        cone = cone_from_dict(doc["cone"])
    k0 = doc.get("known_k0")
    return MappingSpec(
        doc.get("name", name), n, m, evaluate, lo, hi,
        cone=cone,
        known_C=doc.get("known_C"),
        known_k0=None if k0 is None else np.asarray(k0, float),
        known_modulus=doc.get("known_modulus"),
        analytic_dderiv=dderiv,
        notes="polynomial mapping from JSON",
    )


def load_mapping(ref: str) -> MappingSpec:
    """Resolve a corpus name or a path to a polynomial JSON document."""
    if ref in _REGISTRY:
        return corpus_get(ref)
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        if not p.exists():
            raise UnknownMapping(f"mapping file not found: {ref}")
        with open(p) as fh:
            return polynomial_mapping(json.load(fh), name=p.stem)
    raise UnknownMapping(f"unknown mapping {ref!r}; known: {', '.join(_REGISTRY)}")
