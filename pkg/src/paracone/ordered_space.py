"""Finite-dimensional spaces ordered by a closed convex polyhedral cone.

A cone is stored in facet-normal form ``K = {y : a_i . y >= 0}``. Generators
are optional; they can be derived only for simplicial cones (square,
invertible normal matrix).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

EUCLIDEAN = "euclidean"
SUP = "sup"
NORMS = (EUCLIDEAN, SUP)


class ConeError(ValueError):
    """Invalid cone input (bad dimensions, non-finite entries)."""


class UnsupportedRepresentation(ConeError):
    pass


class EstimationError(RuntimeError):
    pass


def as_vec(y, dim: Optional[int] = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(y, dtype=float))
    if v.ndim != 1:
        raise ConeError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConeError(f"non-finite coordinates in {v!r}")
    if dim is not None and v.shape[0] != dim:
        raise ConeError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


def norm(v, kind: str = EUCLIDEAN, axis: int = -1):
    """Vector norm along ``axis``; ``kind`` is ``"euclidean"`` or ``"sup"``."""
    v = np.asarray(v, dtype=float)
    if kind == EUCLIDEAN:
        return np.linalg.norm(v, axis=axis)
    if kind == SUP:
        return np.max(np.abs(v), axis=axis)
    raise ValueError(f"unknown norm {kind!r}; choose from {NORMS}")


@dataclass(frozen=True, eq=False)
class ConeDescriptor:
    dim: int
    facet_normals: np.ndarray  # shape (p, dim); p may be 0 (whole space)
    generators: Optional[np.ndarray] = None  # shape (q, dim)
    membership_tol: float = 1e-9
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ConeError("cone dimension must be positive")
        A = np.asarray(self.facet_normals, dtype=float).reshape(-1, self.dim)
        if not np.all(np.isfinite(A)):
            raise ConeError("non-finite facet normal")
        object.__setattr__(self, "facet_normals", A)
        if self.generators is not None:
            G = np.asarray(self.generators, dtype=float).reshape(-1, self.dim)
            if not np.all(np.isfinite(G)):
                raise ConeError("non-finite generator")
            object.__setattr__(self, "generators", G)
            for g in G:
                ok, slack = member(g, self)
                if not ok:
                    raise ConeError(f"generator {g} is not in the cone (slack {slack:.3g})")

    @property
    def has_generators(self) -> bool:
        return self.generators is not None

    def generator_matrix(self) -> np.ndarray:
        """Generators, deriving them for simplicial cones when absent."""
        if self.generators is not None:
            return self.generators
        A = self.facet_normals
        if A.shape[0] == self.dim and abs(np.linalg.det(A)) > 1e-12:
            # K = A^{-1} R^m_+, so the columns of A^{-1} generate K
            return np.linalg.inv(A).T.copy()
        raise UnsupportedRepresentation(
            "generators unavailable and the cone is not simplicial; "
            "supply 'generators' explicitly"
        )

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "facet_normals": self.facet_normals.tolist()}
        if self.generators is not None:
            out["generators"] = self.generators.tolist()
        out["membership_tol"] = self.membership_tol
        if self.name:
            out["name"] = self.name
        return out


def make_cone(facet_normals, generators=None, membership_tol: float = 1e-9, dim=None, name=""):
    A = np.asarray(facet_normals, dtype=float)
    if dim is None:
        if A.size == 0:
            raise ConeError("dim is required when there are no facet normals")
        dim = A.reshape(len(A), -1).shape[1]
    return ConeDescriptor(int(dim), A, generators, float(membership_tol), name)


def orthant(m: int) -> ConeDescriptor:
    eye = np.eye(m)
    return ConeDescriptor(m, eye, eye.copy(), name=f"R^{m}_+")


def cone_from_dict(doc: dict) -> ConeDescriptor:
    if "dim" not in doc or "facet_normals" not in doc:
        raise ConeError("cone document needs 'dim' and 'facet_normals'")
    return make_cone(
        doc["facet_normals"],
        doc.get("generators"),
        doc.get("membership_tol", 1e-9),
        dim=int(doc["dim"]),
        name=doc.get("name", ""),
    )


def load_cone(path) -> ConeDescriptor:
    with open(Path(path)) as fh:
        return cone_from_dict(json.load(fh))


def slacks(Y, K: ConeDescriptor) -> np.ndarray:
    """Vectorised ``min_i a_i . y`` over the last axis; +inf for the whole space."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape[-1] != K.dim:
        raise ConeError(f"dimension mismatch: cone has dim {K.dim}, vector has {Y.shape[-1]}")
    if K.facet_normals.shape[0] == 0:
        return np.full(Y.shape[:-1], np.inf)
    return np.min(Y @ K.facet_normals.T, axis=-1)


def member(y, K: ConeDescriptor) -> tuple[bool, float]:
    """Return ``(y in K, min_i a_i . y)`` with relative tolerance."""
    y = as_vec(y, K.dim)
    s = float(slacks(y, K))
    return bool(s >= -K.membership_tol * (1.0 + np.linalg.norm(y))), s


def leq(x, y, K: ConeDescriptor) -> bool:
    x = as_vec(x, K.dim)
    y = as_vec(y, K.dim)
    return member(y - x, K)[0]


def dual_cone(K: ConeDescriptor) -> ConeDescriptor:
    """Positive dual cone. Facet normals of the result are K's generators."""
    G = K.generator_matrix()
    gens = K.facet_normals.copy() if K.facet_normals.shape[0] else None
    if gens is None:
        # dual of the whole space is {0}
        gens = np.zeros((0, K.dim))
    name = f"dual({K.name})" if K.name else ""
    return ConeDescriptor(K.dim, G.copy(), gens, K.membership_tol, name)


def is_pointed(K: ConeDescriptor, tol: float = 1e-10) -> bool:
    """K is pointed iff its lineality space {y : A y = 0} is trivial."""
    A = K.facet_normals
    if A.shape[0] == 0:
        return False
    return int(np.linalg.matrix_rank(A, tol=tol)) == K.dim


def _random_members(G: np.ndarray, u: np.ndarray) -> np.ndarray:
    # u in [0,1)^(N, q); coefficients below 0.25 are zeroed so faces get sampled
    w = np.where(u < 0.25, 0.0, u)
    return w @ G


def estimate_normality_constant(K: ConeDescriptor, norm_kind: str = EUCLIDEAN,
                                samples: int = 10_000, seed: int = 0) -> float:
    """Sampled lower bound on the normality constant of ``K``.

    Draws pairs ``x, z`` in K and takes the largest ``|x| / |x + z|``. The
    draws for ``samples = N`` are a prefix of the draws for any larger N, so
    the estimate is nondecreasing in ``samples`` for a fixed seed.
    """
    if not is_pointed(K):
        raise EstimationError("normality constant requested for a non-pointed cone")
    if samples < 1:
        raise ValueError("samples must be positive")
    G = K.generator_matrix()
    q = G.shape[0]
    rng = np.random.default_rng(seed)
    # one draw per sample row keeps the prefix property
    U = rng.random((samples, 2 * q + 1))
    X = _random_members(G, U[:, :q])
    Z = _random_members(G, U[:, q:2 * q])
    zn = norm(Z, norm_kind)
    xn = norm(X, norm_kind)
    # rescale z to |z| = |x| * 10^(-6 u), so both comparable and tiny offsets occur
    scale = np.where(zn > 0, xn * 10.0 ** (-6.0 * U[:, -1]) / np.where(zn > 0, zn, 1.0), 0.0)
    Y = X + Z * scale[:, None]
    yn = norm(Y, norm_kind)
    ok = (yn > 0) & (xn > 0)
    if not np.any(ok):
        raise EstimationError("no feasible pair found; is the cone degenerate?")
    return float(np.max(xn[ok] / yn[ok]))


@dataclass(frozen=True)
class DualVector:
    coeffs: np.ndarray
    dual_feasible: bool = False

    def __call__(self, y):
        return np.asarray(y, dtype=float) @ self.coeffs


def make_dual_vector(coeffs, K: Optional[ConeDescriptor] = None, tol: float = 1e-9) -> DualVector:
    c = as_vec(coeffs)
    feasible = False
    if K is not None:
        G = K.generator_matrix()
        feasible = bool(np.all(G @ c >= -tol * (1.0 + np.linalg.norm(c))))
    return DualVector(c, feasible)


def well_based_witness(K: ConeDescriptor, norm_kind: str = EUCLIDEAN) -> Optional[DualVector]:
    """Find ``y*`` with ``y* . g >= |g|`` on every generator, or ``None``.

    Among feasible points the one of smallest l1 norm is returned.
    """
    G = K.generator_matrix()
    G = G[np.any(G != 0, axis=1)]
    if G.shape[0] == 0:
        return DualVector(np.zeros(K.dim), True)
    m = K.dim
    rhs = norm(G, norm_kind)
    # variables [y (free), s >= |y|]; minimise sum(s)
    c = np.concatenate([np.zeros(m), np.ones(m)])
    eye = np.eye(m)
    A_ub = np.vstack([
        np.hstack([-G, np.zeros((G.shape[0], m))]),
        np.hstack([eye, -eye]),
        np.hstack([-eye, -eye]),
    ])
    b_ub = np.concatenate([-rhs, np.zeros(2 * m)])
    bounds = [(None, None)] * m + [(0, None)] * m
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    y = res.x[:m]
    if np.any(G @ y < rhs - 1e-9 * (1.0 + rhs)):
        return None
    return DualVector(y, True)
