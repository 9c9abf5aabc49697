"""Randomized verification suites for the error bounds and sign recovery.

Each suite draws orthogonal designs (coherence zero up to rounding), bounded
design perturbations and, where needed, Gaussian response noise with the
noise level ``epsilon`` certified on the drawn sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    best_s_tail,
    check_theorem1,
    check_theorem3,
    check_theorem5,
    coherence,
    compare_signs,
    cone_inequality_gap,
    kappa_from_coherence,
)
from .selectors import (
    FeasibleSet,
    SelectorConfig,
    c_star,
    epsilon_rule,
    mu_selector_1,
    mu_selector_2,
    support,
    tau1,
    tau_star,
    threshold,
)
from .sim import Instance, Truth, box_muller, orthogonal_design, stream

__all__ = ["SuiteSettings", "SuiteCase", "draw_case", "run_bound_suite", "sign_suite"]


@dataclass(frozen=True)
class SuiteSettings:
    count: int = 500
    seed: int = 0
    n_range: tuple = (8, 64)
    s_max: int = 3
    delta_max: float = 0.05
    sigma: float = 0.01
    theorems: tuple = (1, 3, 5)
    q_list: tuple = (1.5, 2.0)
    perturb: str = "bounded"  # 'bounded' keeps |Xi| <= delta; 'violate' doubles it

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("suite needs at least one instance")


@dataclass
class SuiteCase:
    index: int
    n: int
    p: int
    s: int
    delta: float
    reports: dict = field(default_factory=dict)
    truth_l1_ok: dict = field(default_factory=dict)
    cone_gap: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "index": self.index,
            "n": self.n,
            "p": self.p,
            "s": self.s,
            "delta": self.delta,
            "truth_l1_ok": self.truth_l1_ok,
            "cone_gap": self.cone_gap,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
        }


def _signed_values(g, s, lo=0.5, hi=1.5):
    return g.uniform(lo, hi, s) * np.where(g.random(s) < 0.5, -1.0, 1.0)


def draw_case(settings, k):
    """Dimensions, design, perturbation and sparse truth for suite instance ``k``."""
    g = stream(settings.seed, k, "perturb")
    lo, hi = settings.n_range
    n = int(g.integers(lo, hi + 1))
    s = int(g.integers(1, settings.s_max + 1))
    p = int(g.integers(min(2 * s, n), n + 1))
    delta = float(g.uniform(0.1, 1.0) * settings.delta_max)
    X = orthogonal_design(n, p, stream(settings.seed, k, "design"))
    Xi = g.uniform(-delta, delta, (n, p))
    if settings.perturb == "violate":
        Xi[0, :] = 2 * delta
    theta = np.zeros(p)
    idx = g.choice(p, size=s, replace=False)
    theta[idx] = _signed_values(g, s)
    return g, n, p, s, delta, X, Xi, theta


def _lemma_checks(case, key, est, theta_star, J):
    case.truth_l1_ok[key] = bool(est.l1_norm <= np.abs(theta_star).sum() + 1e-9)
    case.cone_gap[key] = cone_inequality_gap(est.theta_hat, theta_star, J)


def run_bound_suite(settings):
    """Fit the selectors on every instance and evaluate all bound reports."""
    cases = []
    for k in range(settings.count):
        g, n, p, s, delta, X, Xi, theta = draw_case(settings, k)
        case = SuiteCase(k, n, p, s, delta)
        Xm = X.matrix
        Z = Xm + Xi
        rho, _ = coherence(X)
        alpha, kappa = kappa_from_coherence(rho, s, "three")
        _, kappa2s = kappa_from_coherence(rho, 2 * s, "three")
        J = support(theta)

        if 1 in settings.theorems:
            y = Xm @ theta
            inst = Instance(y, Z, Truth(X, theta, np.zeros(n), Xi))
            est = mu_selector_1(Z, y, delta)
            case.reports["T1"] = check_theorem1(inst, est, kappa, kappa2s, s, alpha, rho=rho)
            _lemma_checks(case, "MU1", est, theta, J)

        if 3 in settings.theorems:
            xi = settings.sigma * box_muller(g, n)
            y = Xm @ theta + xi
            observed = float(np.max(np.abs(Z.T @ xi)) / n)
            eps = max(epsilon_rule(delta, settings.sigma, n, max(p, 2)), observed)
            inst = Instance(y, Z, Truth(X, theta, xi, Xi))
            est = mu_selector_2(Z, y, SelectorConfig("MU2", delta=delta, epsilon=eps))
            case.reports["T3"] = check_theorem3(inst, est, kappa, kappa2s, s, alpha, settings.q_list, rho=rho)
            _lemma_checks(case, "MU2", est, theta, J)

        if 5 in settings.theorems:
            tail_idx = np.setdiff1d(np.arange(p), J)
            approx = theta.copy()
            if tail_idx.size:
                ratio = g.uniform(0.2, 0.6)
                approx[tail_idx] = 0.2 * delta * ratio ** np.arange(tail_idx.size) * np.sign(
                    box_muller(g, tail_idx.size))
            y = Xm @ approx
            inst = Instance(y, Z, Truth(X, approx, np.zeros(n), Xi))
            alpha5, kappa5 = kappa_from_coherence(rho, s, "five")
            est = mu_selector_1(Z, y, delta)
            case.reports["T5"] = check_theorem5(inst, est, kappa5, s, alpha5, rho=rho)
            top = np.argsort(-np.abs(approx), kind="stable")[:s]
            _lemma_checks(case, "MU1-approx", est, approx, top)
            case.cone_gap["MU1-approx-tail"] = best_s_tail(approx, s)
        cases.append(case)
    return cases


def sign_suite(theorem, seeds=200, base_seed=0, rule="b1"):
    """Exact sign recovery after thresholding, one instance per seed.

    ``theorem=2``: noiseless response, first selector over an l1 ball, the
    data-driven threshold ``C*(alpha) delta |theta_hat|_1``.
    ``theorem=4``: Gaussian response noise, second selector over an l1 ball,
    threshold rule ``b1`` or ``b2``.

    Returns a list of ``(seed, preconditions_met, signs_match)``.
    """
    out = []
    for k in range(seeds):
        g = stream(base_seed, k, "perturb")
        n = int(g.integers(16, 65))
        s = int(g.integers(1, 4))
        p = int(g.integers(2 * s, n + 1))
        delta = float(g.uniform(0.002, 0.01))
        X = orthogonal_design(n, p, stream(base_seed, k, "design"))
        Xm = X.matrix
        Xi = g.uniform(-delta, delta, (n, p))
        Z = Xm + Xi
        theta = np.zeros(p)
        theta[g.choice(p, size=s, replace=False)] = _signed_values(g, s, 0.5, 1.0)
        a = 1.1 * np.abs(theta).sum()
        rho, _ = coherence(X)
        alpha, kappa = kappa_from_coherence(rho, s, "three")
        ball = FeasibleSet.l1ball(a)
        if alpha is None:
            out.append((k, False, False))
            continue
        if theorem == 2:
            y = Xm @ theta
            est = mu_selector_1(Z, y, delta, ball)
            pre = np.abs(theta[theta != 0]).min() > c_star(alpha) * delta * a
            tau = tau_star(delta, est.l1_norm, alpha)
        elif theorem == 4:
            sigma = 0.01
            xi = sigma * box_muller(g, n)
            y = Xm @ theta + xi
            eps = max(epsilon_rule(delta, sigma, n, max(p, 2)), float(np.max(np.abs(Z.T @ xi)) / n))
            est = mu_selector_2(Z, y, SelectorConfig("MU2", delta=delta, epsilon=eps, theta_set=ball))
            if rule == "b1":
                tau = tau1("b1", eps, delta, alpha, a=a)
                pre = True
            else:
                tau = tau1("b2", eps, delta, alpha, l1_of_estimate=est.l1_norm)
                pre = delta <= (1.0 if math.isinf(alpha) else 1 - 1 / alpha) / (8 * s)
            pre = bool(pre and np.abs(theta[theta != 0]).min() > tau)
        else:
            raise ValueError("theorem must be 2 or 4")
        match, _ = compare_signs(threshold(est, tau).theta_hat, theta)
        out.append((k, bool(pre), bool(match)))
    return out
