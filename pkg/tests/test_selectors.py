import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muselect.linalg import normalize_design, residual_corr
from muselect.selectors import (
    Estimate,
    FeasibleSet,
    SelectorConfig,
    SelectorInfeasibleError,
    c_star,
    dantzig,
    epsilon_rule,
    estimate,
    mu_selector_1,
    mu_selector_2,
    parse_theta_set,
    support,
    tau1,
    tau_star,
    threshold,
)

mp.mp.dps = 40


def test_mu1_identity_exact():
    est = mu_selector_1(np.eye(2), [1.0, 0.0], 0.0)
    np.testing.assert_allclose(est.theta_hat, [1.0, 0.0], atol=1e-12)


def test_mu1_identity_with_delta():
    est = mu_selector_1(np.eye(2), [1.0, 0.0], 0.1)
    assert est.l1_norm == pytest.approx(10 / 11, abs=1e-12)
    np.testing.assert_allclose(est.theta_hat, [10 / 11, 0.0], atol=1e-12)


def test_mu1_zero_design_needs_large_norm():
    est = mu_selector_1(np.zeros((1, 1)), [1.0], 0.1)
    assert est.objective_value == pytest.approx(10.0)
    assert est.l1_norm == pytest.approx(10.0)


def test_mu1_infeasible_in_small_ball():
    with pytest.raises(SelectorInfeasibleError) as info:
        mu_selector_1(np.eye(2), [1.0, 0.0], 0.0, FeasibleSet.l1ball(0.5))
    assert info.value.status == "infeasible"


def test_mu2_scalar_shrinkage():
    Z = math.sqrt(2) * np.eye(2)
    y = np.array([math.sqrt(2), 0.0])
    est = mu_selector_2(Z, y, SelectorConfig("MU2", delta=0.0, epsilon=0.25))
    np.testing.assert_allclose(est.theta_hat, [0.75, 0.0], atol=1e-12)
    assert residual_corr(Z, y, est.theta_hat) == pytest.approx(0.25, abs=1e-12)
    # 1e-4 grid over the first coordinate
    t = np.arange(0, 1.0001, 1e-4)
    feas = np.abs(1 - t) <= 0.25 + 1e-12
    assert t[feas].min() == pytest.approx(0.75, abs=1e-4)
    assert dantzig(Z, y, 0.25).objective_value == pytest.approx(0.75)


def test_mu2_delta_zero_is_dantzig():
    rng = np.random.default_rng(4)
    Z, y = rng.normal(size=(12, 20)), rng.normal(size=12)
    a = mu_selector_2(Z, y, SelectorConfig("MU2", delta=0.0, epsilon=0.1))
    b = dantzig(Z, y, 0.1)
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-9)


def test_mu2_noiseless_truth_feasible():
    rng = np.random.default_rng(7)
    X = normalize_design(rng.normal(size=(30, 40))).matrix
    theta = np.zeros(40)
    theta[[3, 17]] = [0.5, -1.0]
    y = X @ theta
    est = mu_selector_2(X, y, SelectorConfig("MU2", delta=0.0, epsilon=0.0))
    assert residual_corr(X, y, est.theta_hat) <= 1e-9
    assert est.l1_norm <= np.abs(theta).sum() + 1e-9


def test_mu2_rejects_other_variants():
    with pytest.raises(ValueError):
        mu_selector_2(np.eye(2), [1.0, 0.0], SelectorConfig("MU1"))


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        mu_selector_1(np.eye(2), [1.0, 0.0, 0.0], 0.0)


def test_simplex_set_sums_to_one():
    rng = np.random.default_rng(11)
    Z = rng.normal(size=(15, 6))
    y = Z @ np.array([0.4, 0.6, 0, 0, 0, 0])
    est = mu_selector_2(Z, y, SelectorConfig("MU2", delta=0.05, epsilon=0.01, theta_set=FeasibleSet.simplex(True)))
    assert est.theta_hat.sum() == pytest.approx(1.0, abs=1e-9)
    assert est.theta_hat.min() >= -1e-12


def test_config_defaults():
    assert SelectorConfig("MU2", delta=0.1).lam == pytest.approx(0.11)
    d = SelectorConfig("Dantzig", delta=0.3, lam=2.0, epsilon=0.1)
    assert d.delta == 0.0 and d.lam == 0.0
    with pytest.raises(ValueError):
        SelectorConfig("MU3")
    with pytest.raises(ValueError):
        SelectorConfig("MU2", delta=-1)


def test_parse_theta_set():
    assert parse_theta_set("all") == FeasibleSet()
    assert parse_theta_set("nonneg").kind == "nonneg"
    assert parse_theta_set("l1ball:2.5").radius == 2.5
    assert parse_theta_set("simplex:nonneg").nonneg
    for bad in ("ball", "l1ball:x", "simplex:pos", "all:1"):
        with pytest.raises(ValueError):
            parse_theta_set(bad)
    assert str(parse_theta_set("l1ball:2")) == "l1ball:2"


def test_threshold_examples():
    est = Estimate(np.array([0.5, 0.05]), "MU2")
    np.testing.assert_array_equal(threshold(est, 0.1).theta_hat, [0.5, 0.0])
    np.testing.assert_array_equal(threshold(est, 0.0).theta_hat, [0.5, 0.05])
    np.testing.assert_array_equal(threshold(est, 0.5).theta_hat, [0.0, 0.0])
    with pytest.raises(ValueError):
        threshold(est, -1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=10), st.floats(0, 2))
def test_threshold_idempotent(vals, tau):
    est = Estimate(np.array(vals), "MU2")
    once = threshold(est, tau)
    np.testing.assert_array_equal(threshold(once, tau).theta_hat, once.theta_hat)


def test_tau_star_values():
    assert tau_star(0.0, 3.7, 2.0) == 0.0
    exact = 2 * (1 + 2 / (3 * mp.sqrt(2))) * mp.mpf("0.1")
    assert tau_star(0.1, 1.0, 2.0) == pytest.approx(float(exact), abs=1e-15)
    assert float(exact) == pytest.approx(0.29428, abs=1e-5)
    vals = [tau_star(0.1, 1.0, a) for a in (2, 10, 100, 1e4, 1e8)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[-1] > 0.2 and vals[-1] - 0.2 < 1e-8
    assert c_star(math.inf) == 2.0
    with pytest.raises(ValueError):
        c_star(1.0)


def test_tau1_values():
    assert tau1("b1", 0.5, 0.0, 2.0, a=1.0) == pytest.approx(7 / 3)
    assert tau1("b2", 0.5, 0.0, 2.0, l1_of_estimate=1.0) == pytest.approx(14 / 3)
    assert tau1("b1", 0.0, 0.0, 2.0, a=1.0) == 0.0
    with pytest.raises(ValueError):
        tau1("b1", 0.5, 0.0, 2.0)
    with pytest.raises(ValueError):
        tau1("b3", 0.5, 0.0, 2.0, a=1.0)


def test_epsilon_rule_values():
    assert epsilon_rule(0.3, 0.0, 100, 500) == 0.0
    exact = mp.sqrt(2) * mp.sqrt(mp.log(3) / 3)
    assert epsilon_rule(0.0, 1.0, 3, 3) == pytest.approx(float(exact), rel=1e-14)
    assert float(exact) == pytest.approx(0.85581, abs=1e-5)
    exact2 = mp.mpf("1.1") * mp.sqrt(2) * (mp.mpf("0.05") / mp.mpf("1.96")) * mp.sqrt(mp.log(500) / 100)
    assert epsilon_rule(0.1, 0.05 / 1.96, 100, 500) == pytest.approx(float(exact2), rel=1e-14)
    assert float(exact2) == pytest.approx(0.0098930, abs=1e-7)
    with pytest.raises(ValueError):
        epsilon_rule(0.1, 1.0, 10, 1)


def test_support_examples():
    assert support(np.array([0.5, 0.0, 1e-12]), 1e-8).tolist() == [0]
    assert support(np.zeros(4)).tolist() == []
    assert support(np.array([-3.0, 2.0]), 0.0).tolist() == [0, 1]


def test_estimate_to_dict():
    est = mu_selector_1(np.eye(2), [1.0, 0.0], 0.0)
    d = est.to_dict()
    assert set(d) >= {"variant", "delta", "epsilon", "lambda", "theta", "support", "l1_norm"}
    assert d["support"] == [0] and d["variant"] == "MU1"


def test_estimate_dispatches_lasso():
    rng = np.random.default_rng(2)
    X = normalize_design(rng.normal(size=(40, 10))).matrix
    y = X[:, 2] + 0.01 * rng.normal(size=40)
    est = estimate(X, y, SelectorConfig("Lasso"), sigma=0.01)
    assert est.variant == "Lasso" and 2 in est.support


# properties on random instances -----------------------------------------------------------

def _instance(seed, n=20, p=30, s=2, delta=0.05):
    rng = np.random.default_rng(seed)
    X = normalize_design(rng.normal(size=(n, p))).matrix
    theta = np.zeros(p)
    theta[rng.choice(p, s, replace=False)] = rng.choice([-1, 1], s) * rng.uniform(0.5, 1.5, s)
    Xi = rng.uniform(-delta, delta, (n, p))
    return X, X + Xi, theta


@pytest.mark.parametrize("seed", range(8))
def test_mu1_objective_nonincreasing_in_delta(seed):
    X, Z, theta = _instance(seed)
    y = X @ theta
    norms = [mu_selector_1(Z, y, d).l1_norm for d in (0.0, 0.02, 0.05, 0.1, 0.2)]
    assert all(b <= a + 1e-9 for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("seed", range(8))
def test_truth_is_feasible_so_estimate_is_smaller(seed):
    X, Z, theta = _instance(seed)
    y = X @ theta
    assert mu_selector_1(Z, y, 0.05).l1_norm <= np.abs(theta).sum() + 1e-9
