"""Prox catalog vs brute-force oracle, resolvent identities, sampling audits."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fbflows.operators import (
    MonotoneMap,
    as_vector,
    audit_map,
    box_indicator,
    brute_force_prox,
    build_prox,
    check_gradient,
    gradient_map,
    l1_norm,
    prox_resolvent,
    resolvent,
    sample_ball,
    scaled_sqnorm,
    translated_linear,
    zero_function,
    zero_operator,
)


def test_prox_of_zero_is_identity_exactly():
    f = zero_function()
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.uniform(-10, 10, size=4)
        eta = float(rng.uniform(1e-3, 1e3))
        assert np.array_equal(f.prox(eta, x), x)


def test_l1_prox_soft_thresholds():
    f = l1_norm(1.0)
    assert_allclose(f.prox(1.0, np.array([2.5])), [1.5])
    assert_allclose(f.prox(1.0, np.array([-0.5])), [0.0])
    # kink region maps to exactly zero
    assert f.prox(2.0, np.array([1.9]))[0] == 0.0
    assert_allclose(f.prox(0.5, np.array([-3.0, 0.2])), [-2.5, 0.0])


def test_sqnorm_prox_shrinks():
    f = scaled_sqnorm(1.0)
    assert_allclose(f.prox(1.0, np.array([2.0])), [1.0])
    # stationarity p + eta*c*p = x
    p = f.prox(0.3, np.array([4.0, -1.0]))
    assert_allclose(p + 0.3 * p, [4.0, -1.0], rtol=1e-15)


def test_box_prox_projects():
    f = box_indicator(0.0, 1.0)
    assert_allclose(f.prox(1.0, np.array([3.0])), [1.0])
    assert_allclose(f.prox(7.0, np.array([-2.0, 0.4, 9.0])), [0.0, 0.4, 1.0])
    assert f.value(np.array([0.5])) == 0.0
    assert f.value(np.array([1.5])) == math.inf


def test_translated_linear_prox_closed_form():
    f = translated_linear(1.0, [1.0, 0.0])
    assert_allclose(f.prox(1.0, np.array([3.0, 1.0])), [2.0, 0.5])


# independent restatement of each catalog objective, vectorized over the grid
_BRUTE_CASES = [
    ("zero", zero_function(),
     lambda p: np.zeros_like(np.asarray(p, dtype=float)),
     lambda eta, x: 1.0 + abs(x)),
    ("l1_norm", l1_norm(1.3),
     lambda p: 1.3 * np.abs(p),
     lambda eta, x: 5.0 * eta * 1.3 + 1e-6),
    ("scaled_sqnorm", scaled_sqnorm(0.7),
     lambda p: 0.35 * np.square(p),
     lambda eta, x: abs(x) + 1.0),
    ("box_indicator", box_indicator(-1.0, 2.0),
     lambda p: np.where((np.asarray(p) >= -1.0) & (np.asarray(p) <= 2.0), 0.0, np.inf),
     lambda eta, x: abs(x) + 4.0),
    ("translated_linear", translated_linear(0.8, [0.3]),
     lambda p: 0.4 * np.square(p) - 0.3 * np.asarray(p),
     lambda eta, x: abs(x) + 2.0),
]


@pytest.mark.parametrize("name,oracle,objective,halfwidth",
                         _BRUTE_CASES, ids=[c[0] for c in _BRUTE_CASES])
def test_prox_matches_brute_force(name, oracle, objective, halfwidth):
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(250):
        x = float(rng.uniform(-4, 4))
        eta = float(rng.uniform(0.1, 3.0))
        got = oracle.prox(eta, np.array([x]))[0]
        ref = brute_force_prox(objective, eta, x, halfwidth=halfwidth(eta, x))
        worst = max(worst, abs(got - ref))
    assert worst <= 1e-4


def test_brute_force_prox_validates_window():
    with pytest.raises(ValueError):
        brute_force_prox(lambda p: np.abs(p), 1.0, 0.0, halfwidth=0.0)
    with pytest.raises(ValueError):
        brute_force_prox(lambda p: np.abs(p), -1.0, 0.0, halfwidth=1.0)


def test_resolvent_of_zero_operator_is_identity():
    a = zero_operator()
    x = np.array([3.0, -1.0])
    assert np.array_equal(resolvent(a, 0.01, x), x)
    assert np.array_equal(resolvent(a, 100.0, x), x)


def test_resolvent_translated_linear():
    a = prox_resolvent(translated_linear(1.0, [1.0, 0.0]))
    p = resolvent(a, 1.0, np.array([3.0, 1.0]))
    assert_allclose(p, [2.0, 0.5])
    # stationarity (x - p)/eta = rho*p - c
    x = np.array([0.7, -2.2])
    eta = 0.6
    p = resolvent(a, eta, x)
    assert_allclose((x - p) / eta, 1.0 * p - np.array([1.0, 0.0]), rtol=1e-13)


def test_resolvent_box_normal_cone_is_projection():
    a = prox_resolvent(box_indicator(0.0, 1.0))
    assert_allclose(resolvent(a, 1.0, np.array([3.0])), [1.0])
    assert_allclose(resolvent(a, 0.2, np.array([-5.0, 0.3])), [0.0, 0.3])


def test_resolvent_rejects_nonpositive_eta():
    a = zero_operator()
    for eta in (0.0, -1.0, math.nan):
        with pytest.raises(ValueError):
            resolvent(a, eta, np.array([1.0]))


def test_prox_resolvent_needs_prox():
    smooth_only = gradient_map(scaled_sqnorm(1.0), 1.0)  # noqa: F841 exercised below
    from fbflows.operators import FunctionOracle
    with pytest.raises(ValueError):
        prox_resolvent(FunctionOracle(value=lambda x: 0.0))


@pytest.mark.parametrize("oracle", [
    l1_norm(1.0),
    box_indicator(-1.0, 1.0),
    scaled_sqnorm(2.0),
    translated_linear(0.5, [1.0, -2.0, 0.0]),
], ids=["l1", "box", "sqnorm", "translated"])
def test_resolvent_firmly_nonexpansive(oracle):
    # ||Jx - Jy||^2 <= <Jx - Jy, x - y> on sampled pairs
    rng = np.random.default_rng(3)
    dim = 3
    for _ in range(200):
        x = sample_ball(rng, dim, 10.0)
        y = sample_ball(rng, dim, 10.0)
        eta = float(rng.uniform(0.05, 5.0))
        dj = oracle.prox(eta, x) - oracle.prox(eta, y)
        assert float(dj @ dj) <= float(dj @ (x - y)) + 1e-10


def test_audit_skew_rotation_map():
    smap = MonotoneMap(eval=lambda x: np.array([x[1], -x[0]]), beta=1.0)
    rep = audit_map(smap, dim=2, rho_claim=0.0, beta_claim=1.0, n_pairs=500, seed=1)
    assert rep.passed
    # <Sx, x> = 0 and ||Sx|| = ||x|| exactly
    assert abs(rep.min_monotone_quotient) <= 1e-12
    assert abs(rep.max_lipschitz_ratio - 1.0) <= 1e-12
    assert rep.cocoercivity_violation_fraction > 0.9


def test_audit_identity_claims():
    ident = lambda x: x  # noqa: E731
    rep = audit_map(ident, dim=3, rho_claim=1.0, beta_claim=1.0, n_pairs=300, seed=2)
    assert rep.passed
    assert rep.cocoercivity_violations == 0
    # claiming the identity is 0.5-Lipschitz must fail
    rep = audit_map(ident, dim=3, beta_claim=2.0, n_pairs=300, seed=2)
    assert not rep.lipschitz_ok and not rep.passed
    # inflating the monotonicity claim must fail
    rep = audit_map(ident, dim=3, rho_claim=2.0, n_pairs=300, seed=2)
    assert not rep.monotone_ok and not rep.passed


def test_audit_skipped_claims_pass():
    rep = audit_map(lambda x: 3.0 * x, dim=2, n_pairs=100, seed=0)
    assert rep.passed and rep.rho_claim is None and rep.beta_claim is None


def test_audit_requires_samples():
    with pytest.raises(ValueError):
        audit_map(lambda x: x, dim=2, n_pairs=0)


def test_sample_ball_stays_inside():
    rng = np.random.default_rng(9)
    for _ in range(200):
        assert np.linalg.norm(sample_ball(rng, 5, 10.0)) <= 10.0 + 1e-12


@pytest.mark.parametrize("oracle", [
    scaled_sqnorm(1.7),
    translated_linear(0.9, [2.0, -1.0, 0.5, 0.0]),
    zero_function(),
], ids=["sqnorm", "translated", "zero"])
def test_gradient_matches_central_differences(oracle):
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = sample_ball(rng, 4, 10.0)
        assert check_gradient(oracle, x, h=1e-5) <= 1e-5


def test_check_gradient_requires_gradient():
    with pytest.raises(ValueError):
        check_gradient(l1_norm(1.0), np.array([1.0]))


def test_catalog_rejects_bad_parameters():
    with pytest.raises(ValueError):
        l1_norm(0.0)
    with pytest.raises(ValueError):
        l1_norm(-1.0)
    with pytest.raises(ValueError):
        scaled_sqnorm(0.0)
    with pytest.raises(ValueError):
        box_indicator(1.0, 0.0)
    with pytest.raises(ValueError):
        translated_linear(0.0, [1.0])
    with pytest.raises(ValueError):
        build_prox("huber", delta=1.0)


def test_build_prox_dispatch():
    f = build_prox("l1_norm", w=2.0)
    assert_allclose(f.prox(1.0, np.array([5.0])), [3.0])
    g = build_prox("zero")
    assert np.array_equal(g.prox(3.0, np.array([1.0, 2.0])), [1.0, 2.0])


def test_gradient_map_validation():
    with pytest.raises(ValueError):
        gradient_map(l1_norm(1.0), 1.0)  # no gradient
    with pytest.raises(ValueError):
        gradient_map(scaled_sqnorm(1.0), 0.0)


def test_as_vector_coercion_and_rejection():
    v = as_vector(2.5)
    assert v.shape == (1,) and v[0] == 2.5
    with pytest.raises(ValueError):
        as_vector([])
    with pytest.raises(ValueError):
        as_vector([[1.0, 2.0]])
    with pytest.raises(ValueError):
        as_vector([1.0, math.nan])
