import numpy as np
import pytest

from muselect.lp import IterationLimitError, LpProblem, build_l1_lp, dump_lp, solve_lp
from muselect.selectors import FeasibleSet, SelectorConfig
from oracles import lp_oracle, random_lp


def test_single_lower_bound_row():
    sol = solve_lp(LpProblem([1.0], [[1.0]], (">=",), [3.0]))
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(3.0)


def test_face_objective():
    sol = solve_lp(LpProblem([1.0, 1.0], [[1.0, 1.0]], (">=",), [1.0]))
    assert sol.objective_value == pytest.approx(1.0)


def test_unbounded():
    assert solve_lp(LpProblem([-1.0], np.zeros((0, 1)), (), [])).status == "unbounded"


def test_infeasible():
    sol = solve_lp(LpProblem([1.0], [[1.0], [1.0]], ("<=", ">="), [1.0, 2.0]))
    assert sol.status == "infeasible"


def test_free_and_upper_bounded_variables():
    # min x0 - x1, x0 free with x0 >= -2 from a row, x1 <= 4
    prob = LpProblem([1.0, -1.0], [[1.0, 0.0]], (">=",), [-2.0], lower=[-np.inf, 0.0], upper=[np.inf, 4.0])
    sol = solve_lp(prob)
    assert sol.objective_value == pytest.approx(-6.0)
    np.testing.assert_allclose(sol.x, [-2.0, 4.0])


def test_iteration_cap_is_explicit():
    with pytest.raises(IterationLimitError):
        solve_lp(LpProblem(-np.ones(6), np.eye(6), ("<=",) * 6, np.ones(6)), max_iter=2)


def test_rejects_malformed_problem():
    with pytest.raises(ValueError):
        LpProblem([1.0, 2.0], [[1.0, 2.0]], ("<",), [1.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], ("<=",), [np.inf])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], ("<=",), [1.0], lower=[1.0])


@pytest.mark.parametrize("seed", range(60))
def test_random_lps_match_vertex_enumeration(seed):
    c, A, s, b, lo, hi = random_lp(np.random.default_rng(1000 + seed), 6, 6)
    status, value = lp_oracle(c, A, s, b, lo, hi)
    prob = LpProblem(c, A, s, b, lo, hi)
    sol = solve_lp(prob)
    assert sol.status == status
    if status == "optimal":
        assert sol.objective_value == pytest.approx(value, abs=1e-7)
        assert prob.violation(sol.x) <= 1e-9


def test_degenerate_cycling_example():
    # Beale's classic cycling LP; Dantzig's rule cycles here without an anti-cycling fallback.
    c = [-0.75, 150.0, -0.02, 6.0]
    A = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
    sol = solve_lp(LpProblem(c, A, ("<=",) * 3, [0.0, 0.0, 1.0]))
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(-0.05)


def test_build_mu1_scalar():
    prob = build_l1_lp(np.array([[1.0]]), np.array([1.0]), SelectorConfig("MU1", delta=0.0))
    sol = solve_lp(prob)
    assert sol.objective_value == pytest.approx(1.0)
    np.testing.assert_allclose(sol.x, [1.0, 0.0])
    assert prob.labels == {"p": 1, "split": True, "rows_per_side": 1}


def test_build_mu1_identity_ten_elevenths():
    prob = build_l1_lp(np.eye(2), np.array([1.0, 0.0]), SelectorConfig("MU1", delta=0.1))
    assert prob.num_rows == 4
    assert solve_lp(prob).objective_value == pytest.approx(10 / 11, abs=1e-12)
    # dense grid over theta = (t, w)
    t, w = np.meshgrid(np.linspace(-2, 2, 801), np.linspace(-2, 2, 801))
    l1 = np.abs(t) + np.abs(w)
    feas = np.maximum(np.abs(1 - t), np.abs(w)) <= 0.1 * l1 + 1e-12
    assert l1[feas].min() == pytest.approx(10 / 11, abs=5e-3)


def test_build_dantzig_rows_are_residual_correlations():
    rng = np.random.default_rng(0)
    Z, y = rng.normal(size=(6, 3)), rng.normal(size=6)
    eps = 0.3
    prob = build_l1_lp(Z, y, SelectorConfig("Dantzig", epsilon=eps))
    assert prob.num_rows == 2 * 3
    theta = rng.normal(size=3)
    x = np.concatenate([np.maximum(theta, 0), np.maximum(-theta, 0)])
    r = Z.T @ (y - Z @ theta) / 6
    np.testing.assert_allclose(prob.A @ x - prob.b, np.concatenate([r, -r]) - eps, atol=1e-12)


def test_build_nonneg_omits_negative_part():
    prob = build_l1_lp(np.eye(3), np.ones(3), SelectorConfig("MU1", delta=0.0, theta_set=FeasibleSet("nonneg")))
    assert prob.num_vars == 3 and not prob.labels["split"]


def test_build_appends_feasible_set_rows():
    Z, y = np.eye(2), np.array([0.5, 0.5])
    ball = build_l1_lp(Z, y, SelectorConfig("MU1", theta_set=FeasibleSet.l1ball(2.0)))
    assert ball.senses[-1] == "<=" and ball.b[-1] == 2.0
    simplex = build_l1_lp(Z, y, SelectorConfig("MU1", theta_set=FeasibleSet.simplex(nonneg=True)))
    assert simplex.senses[-1] == "="


def test_build_rejects_lasso():
    with pytest.raises(ValueError):
        build_l1_lp(np.eye(2), np.ones(2), SelectorConfig("Lasso"))


def test_dump_format():
    text = dump_lp(LpProblem([1.0, 2.0], [[1.0, -1.0]], (">=",), [3.0]))
    lines = text.splitlines()
    assert lines[0] == "min 1.0 2.0"
    assert lines[1] == "1.0 -1.0 >= 3.0"
    assert lines[2].startswith("lower") and lines[3] == "upper inf inf"
