import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paracone.ordered_space import (
    ConeError,
    EstimationError,
    UnsupportedRepresentation,
    cone_from_dict,
    dual_cone,
    estimate_normality_constant,
    is_pointed,
    leq,
    load_cone,
    make_cone,
    make_dual_vector,
    member,
    norm,
    orthant,
    slacks,
    well_based_witness,
)

R2 = orthant(2)
ICE = make_cone([[1, 1], [-1, 1]], [[1, 1], [-1, 1]], name="ice")  # v >= |u|
WEDGE = make_cone([[2, 1], [-2, 1]], [[1, 2], [-1, 2]])  # v >= 2|u|
HALF_LINE = make_cone([[1, 0], [0, 1], [0, -1]], [[1, 0]])
HALF_SPACE = make_cone([[0, 1]], [[1, 0], [-1, 0], [0, 1]])
PLANE = make_cone(np.zeros((0, 2)), dim=2)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec2 = st.lists(finite, min_size=2, max_size=2).map(np.array)


def polar_oracle(G, n_theta=400, n_rho=200, rho_max=3.0):
    """Brute-force sup |x|/|x+z| over unit x, z on the cone's arc and |z| = rho."""
    a = np.arctan2(G[:, 1], G[:, 0])
    th = np.linspace(a.min(), a.max(), n_theta)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    best = 0.0
    for r in np.linspace(0.0, rho_max, n_rho):
        Y = U[:, None, :] + r * U[None, :, :]
        best = max(best, float((1.0 / np.linalg.norm(Y, axis=-1)).max()))
    return best


# -- membership and order ----------------------------------------------------

@pytest.mark.parametrize("y, ok, slack", [((1, 1), True, 1.0), ((1, -1), False, -1.0), ((0, 0), True, 0.0)])
def test_member_examples(y, ok, slack):
    assert member(y, R2) == (ok, slack)


def test_apex_in_every_cone():
    for K in (R2, ICE, WEDGE, HALF_LINE, HALF_SPACE, PLANE):
        assert member(np.zeros(2), K)[0]


def test_member_dimension_mismatch():
    with pytest.raises(ConeError):
        member([1, 2, 3], R2)


def test_member_relative_tolerance():
    big = np.array([1e12, -1e2])  # slack -100 but tiny relative to |y|
    assert member(big, R2)[0]
    assert not member([1.0, -1e-6], R2)[0]


def test_leq_examples():
    assert leq((0, 0), (1, 2), R2)
    assert leq((3, -1), (3, -1), ICE)
    assert not leq((2, 0), (1, 0), R2)


@given(vec2, st.floats(0, 1e3))
def test_membership_positively_homogeneous(y, lam):
    for K in (R2, ICE, WEDGE):
        if member(y, K)[0]:
            assert member(lam * y, K)[0]


@given(st.lists(vec2, min_size=3, max_size=3))
def test_leq_transitive_and_antisymmetric(pts):
    a, b, c = pts
    K = ICE
    if leq(a, b, K) and leq(b, c, K):
        assert leq(a, c, K)
    if leq(a, b, K) and leq(b, a, K):
        assert np.allclose(a, b, atol=1e-6 * (1 + np.abs(a).max()))


def test_slacks_vectorised_matches_member():
    Y = np.random.default_rng(0).standard_normal((50, 2))
    s = slacks(Y, WEDGE)
    assert np.allclose(s, [member(y, WEDGE)[1] for y in Y])


# -- duality and pointedness ---------------------------------------------------

def test_orthant_self_dual():
    D = dual_cone(R2)
    assert np.array_equal(D.facet_normals, np.eye(2))


def test_ice_cream_dual_is_itself_bruteforce():
    D = dual_cone(ICE)
    # oracle: y* in K* iff y*.g >= 0 for samples g in K
    th = np.linspace(np.pi / 4, 3 * np.pi / 4, 721)
    G = np.stack([np.cos(th), np.sin(th)], axis=1)
    probes = np.random.default_rng(1).uniform(-2, 2, (4000, 2))
    oracle = np.all(probes @ G.T >= -1e-12, axis=1)
    got = np.array([member(p, D)[0] for p in probes])
    assert np.array_equal(got, oracle)
    assert np.array_equal(got, np.array([member(p, ICE)[0] for p in probes]))


def test_half_line_dual_is_half_space_bruteforce():
    D = dual_cone(HALF_LINE)
    probes = np.random.default_rng(2).uniform(-2, 2, (2000, 2))
    ts = np.linspace(0, 10, 101)
    oracle = np.all(np.outer(probes[:, 0], ts) >= 0, axis=1)  # y*.(t,0) >= 0
    got = np.array([member(p, D)[0] for p in probes])
    assert np.array_equal(got, oracle)


def test_dual_generators_check():
    for K in (R2, ICE, WEDGE, HALF_LINE):
        D = dual_cone(K)
        assert np.all(K.generator_matrix() @ D.facet_normals.T >= -1e-12)


@pytest.mark.parametrize("K", [R2, ICE, WEDGE, HALF_LINE, make_cone([[1, 0.3], [-0.2, 1]])])
def test_bipolar_same_members(K):
    DD = dual_cone(dual_cone(K))
    probes = np.random.default_rng(3).standard_normal((3000, 2))
    probes = np.vstack([probes, K.generator_matrix()])
    assert [member(p, K)[0] for p in probes] == [member(p, DD)[0] for p in probes]


def test_simplicial_generators_derived():
    K = make_cone([[2, 1], [-2, 1]])
    G = K.generator_matrix()
    assert np.allclose(K.facet_normals @ G.T, np.eye(2))


def test_non_simplicial_without_generators_unsupported():
    K = make_cone([[1, 0], [0, 1], [1, 1]])
    with pytest.raises(UnsupportedRepresentation):
        dual_cone(K)


def test_bad_generator_rejected():
    with pytest.raises(ConeError):
        make_cone([[1, 0], [0, 1]], [[1, -1]])


def test_pointedness():
    assert is_pointed(R2)
    assert is_pointed(HALF_LINE)
    assert not is_pointed(PLANE)
    assert not is_pointed(HALF_SPACE)
    assert member([1, 0], HALF_SPACE)[0] and member([-1, 0], HALF_SPACE)[0]


# -- normality -----------------------------------------------------------------

def test_normality_orthant_sup():
    assert estimate_normality_constant(R2, "sup", 2000, 0) == 1.0


def test_normality_orthant_euclidean_oracle():
    oracle = polar_oracle(np.eye(2))
    est = estimate_normality_constant(R2, "euclidean", 20_000, 0)
    assert abs(oracle - 1.0) < 1e-9
    assert abs(est - 1.0) <= 0.01 and est <= oracle + 1e-12


WEDGE_NORMALITY = 1.0  # regression constant from polar_oracle(WEDGE generators)


def test_normality_wedge_regression():
    oracle = polar_oracle(WEDGE.generator_matrix())
    assert oracle == pytest.approx(WEDGE_NORMALITY, abs=1e-9)
    est = estimate_normality_constant(WEDGE, "euclidean", 20_000, 5)
    assert WEDGE_NORMALITY - 0.01 <= est <= oracle + 1e-12


def test_normality_obtuse_cone_against_oracle():
    K = make_cone(np.linalg.inv(np.array([[1, 0.2], [-1, 0.2]]).T), [[1, 0.2], [-1, 0.2]])
    oracle = polar_oracle(K.generator_matrix())
    angle = 2 * np.arctan(1 / 0.2)
    assert oracle == pytest.approx(1 / np.sin(angle), rel=1e-3)
    exact = 1 / np.sin(angle)  # = 2.6, attained at x = g1, z = s g2
    est = estimate_normality_constant(K, "euclidean", 100_000, 7)
    assert exact - 0.01 <= est <= exact + 1e-12


@pytest.mark.parametrize("K", [R2, WEDGE, ICE])
def test_normality_monotone_in_samples(K):
    vals = [estimate_normality_constant(K, "euclidean", n, 11) for n in (10, 100, 1000, 10_000)]
    assert vals == sorted(vals)


def test_normality_deterministic():
    a = estimate_normality_constant(ICE, "sup", 5000, 3)
    assert a == estimate_normality_constant(ICE, "sup", 5000, 3)


def test_normality_non_pointed_raises():
    with pytest.raises(EstimationError):
        estimate_normality_constant(HALF_SPACE, "euclidean", 100, 0)


# -- well-basedness ------------------------------------------------------------

def test_well_based_orthant_sup():
    w = well_based_witness(R2, "sup")
    assert w is not None
    assert np.allclose(w.coeffs, [1, 1])


def test_well_based_ray():
    K = make_cone([[1, -1], [-1, 1], [1, 1]], [[1, 1]])
    w = well_based_witness(K, "euclidean")
    assert w(np.array([1, 1])) >= np.sqrt(2) - 1e-9
    assert make_dual_vector([1, 1], K).dual_feasible


def test_half_space_not_well_based():
    assert well_based_witness(HALF_SPACE, "euclidean") is None


@pytest.mark.parametrize("K", [R2, ICE, WEDGE, HALF_LINE])
@pytest.mark.parametrize("kind", ["euclidean", "sup"])
def test_well_based_witness_on_random_members(K, kind):
    w = well_based_witness(K, kind)
    assert w is not None
    G = K.generator_matrix()
    k = np.random.default_rng(4).random((1000, G.shape[0])) @ G
    assert np.all(w(k) >= norm(k, kind) - 1e-9)


# -- serialisation -------------------------------------------------------------

def test_cone_json_roundtrip(tmp_path):
    p = tmp_path / "wedge.json"
    p.write_text(json.dumps(WEDGE.to_dict()))
    K = load_cone(p)
    assert np.array_equal(K.facet_normals, WEDGE.facet_normals)
    assert np.array_equal(K.generators, WEDGE.generators)


def test_cone_json_requires_keys():
    with pytest.raises(ConeError):
        cone_from_dict({"facet_normals": [[1]]})


def test_cone_json_custom_tol():
    K = cone_from_dict({"dim": 1, "facet_normals": [[1]], "membership_tol": 0.1})
    assert member([-0.1], K)[0]
