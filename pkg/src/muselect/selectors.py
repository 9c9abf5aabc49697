"""Matrix-uncertainty selectors, the Dantzig selector and thresholding rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector
from .lp import build_l1_lp, solve_lp

__all__ = [
    "SUPPORT_TOL",
    "FeasibleSet",
    "SelectorConfig",
    "Estimate",
    "SelectorInfeasibleError",
    "support",
    "mu_selector_1",
    "mu_selector_2",
    "dantzig",
    "estimate",
    "threshold",
    "c_star",
    "tau_star",
    "tau1",
    "epsilon_rule",
    "parse_theta_set",
]

SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class FeasibleSet:
    """Prior constraint set for ``theta``.

    ``kind`` is one of ``'all'``, ``'nonneg'``, ``'l1ball'`` (requires
    ``radius > 0``) or ``'simplex'`` (``sum(theta) == 1``, optionally with
    ``nonneg=True``).
    """

    kind: str = "all"
    radius: float = None
    nonneg: bool = False

    def __post_init__(self):
        if self.kind not in ("all", "nonneg", "l1ball", "simplex"):
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        if self.kind == "l1ball" and not (self.radius is not None and self.radius > 0):
            raise ValueError("l1ball requires a positive radius")

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def nonnegative(cls):
        return cls("nonneg")

    @classmethod
    def l1ball(cls, a):
        return cls("l1ball", radius=float(a))

    @classmethod
    def simplex(cls, nonneg=False):
        return cls("simplex", nonneg=bool(nonneg))

    def contains(self, theta, tol=1e-9):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "nonneg":
            return bool(theta.min() >= -tol)
        if self.kind == "l1ball":
            return bool(np.abs(theta).sum() <= self.radius + tol)
        if self.kind == "simplex":
            ok = abs(theta.sum() - 1.0) <= tol
            return bool(ok and (not self.nonneg or theta.min() >= -tol))
        return True

    def __str__(self):
        if self.kind == "l1ball":
            return f"l1ball:{self.radius:g}"
        if self.kind == "simplex":
            return "simplex:nonneg" if self.nonneg else "simplex"
        return self.kind


def parse_theta_set(text):
    """Parse ``all | nonneg | l1ball:a | simplex[:nonneg]``."""
    head, _, rest = text.strip().partition(":")
    if head == "l1ball":
        try:
            return FeasibleSet.l1ball(float(rest))
        except ValueError:
            raise ValueError(f"bad l1ball radius in {text!r}") from None
    if head == "simplex":
        if rest not in ("", "nonneg"):
            raise ValueError(f"bad simplex option in {text!r}")
        return FeasibleSet.simplex(nonneg=rest == "nonneg")
    if rest or head not in ("all", "nonneg"):
        raise ValueError(f"unknown feasible set {text!r}")
    return FeasibleSet(head)


@dataclass(frozen=True)
class SelectorConfig:
    """Estimator choice and tuning.

    ``lam=None`` means the default matrix-uncertainty factor
    ``(1 + delta) * delta``; pass a number for an explicit factor.
    """

    variant: str = "MU2"
    delta: float = 0.0
    epsilon: float = 0.0
    lam: float = None
    theta_set: FeasibleSet = field(default_factory=FeasibleSet)

    def __post_init__(self):
        if self.variant not in ("MU1", "MU2", "Dantzig", "Lasso"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.delta < 0 or self.epsilon < 0:
            raise ValueError("delta and epsilon must be nonnegative")
        if self.variant == "Dantzig":
            object.__setattr__(self, "delta", 0.0)
            object.__setattr__(self, "lam", 0.0)
        elif self.lam is None:
            object.__setattr__(self, "lam", (1.0 + self.delta) * self.delta)
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")


@dataclass(frozen=True)
class Estimate:
    theta_hat: np.ndarray
    variant: str
    delta: float = 0.0
    epsilon: float = 0.0
    lam: float = 0.0
    objective_value: float = float("nan")
    iterations: int = 0
    support_tol: float = SUPPORT_TOL

    def __post_init__(self):
        th = as_vector(self.theta_hat, "theta_hat").copy()
        th.setflags(write=False)
        object.__setattr__(self, "theta_hat", th)

    @property
    def support(self):
        return support(self.theta_hat, self.support_tol)

    @property
    def l1_norm(self):
        return float(np.abs(self.theta_hat).sum())

    @property
    def objective_gap(self):
        """LP objective minus ``|theta_hat|_1``; nonzero only if ``u`` and ``v`` overlap."""
        if math.isnan(self.objective_value):
            return 0.0
        return self.objective_value - self.l1_norm

    def to_dict(self):
        return {
            "variant": self.variant,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "theta": [float(t) for t in self.theta_hat],
            "support": [int(j) for j in self.support],
            "l1_norm": self.l1_norm,
            "objective_value": None if math.isnan(self.objective_value) else self.objective_value,
            "iterations": self.iterations,
        }


class SelectorInfeasibleError(RuntimeError):
    """The selector's LP has no optimal solution."""

    def __init__(self, status, variant):
        self.status = status
        self.variant = variant
        super().__init__(f"{variant} program is {status}")


def support(theta, tol=SUPPORT_TOL):
    """Indices ``j`` with ``|theta_j| > tol`` (0-based)."""
    theta = np.asarray(theta, dtype=float)
    return np.flatnonzero(np.abs(theta) > tol)


def _check(Z, y):
    Z = as_matrix(Z.matrix if hasattr(Z, "matrix") else Z, "Z")
    y = as_vector(y, "y")
    if y.size != Z.shape[0]:
        raise ValueError(f"dimension mismatch: Z has {Z.shape[0]} rows, y has {y.size}")
    return Z, y


def _solve(Z, y, cfg):
    prob = build_l1_lp(Z, y, cfg)
    sol = solve_lp(prob)
    if not sol.optimal:
        raise SelectorInfeasibleError(sol.status, cfg.variant)
    p = prob.labels["p"]
    theta = sol.x[:p] - sol.x[p:] if prob.labels["split"] else sol.x.copy()
    theta[np.abs(theta) <= 1e-13] = 0.0
    return Estimate(
        theta,
        cfg.variant,
        delta=cfg.delta,
        epsilon=cfg.epsilon,
        lam=cfg.lam,
        objective_value=sol.objective_value,
        iterations=sol.iterations,
    )


def mu_selector_1(Z, y, delta, theta_set=None):
    """Minimize ``|theta|_1`` subject to ``|y - Z theta|_inf <= delta |theta|_1``.

    Intended for noiseless responses (``y = X theta``) observed through a
    perturbed design ``Z``.

    Raises
    ------
    SelectorInfeasibleError
        If the program has no solution in ``theta_set``.
    """
    Z, y = _check(Z, y)
    cfg = SelectorConfig("MU1", delta=float(delta), theta_set=theta_set or FeasibleSet())
    return _solve(Z, y, cfg)


def mu_selector_2(Z, y, cfg):
    """Minimize ``|theta|_1`` s.t. ``|Z'(y - Z theta)/n|_inf <= lam |theta|_1 + epsilon``.

    ``cfg.lam`` defaults to ``(1 + delta) * delta``.  With ``delta = 0`` and
    no constraint on ``theta`` this is the Dantzig selector.
    """
    Z, y = _check(Z, y)
    if cfg.variant not in ("MU2", "Dantzig"):
        raise ValueError(f"mu_selector_2 needs an MU2 config, got {cfg.variant}")
    return _solve(Z, y, cfg)


def dantzig(Z, y, epsilon, theta_set=None):
    """Dantzig selector: ``min |theta|_1`` s.t. ``|Z'(y - Z theta)/n|_inf <= epsilon``."""
    Z, y = _check(Z, y)
    cfg = SelectorConfig("Dantzig", epsilon=float(epsilon), theta_set=theta_set or FeasibleSet())
    return _solve(Z, y, cfg)


def estimate(Z, y, cfg, sigma=None):
    """Dispatch on ``cfg.variant``; Lasso uses the Cp-selected path knot."""
    if cfg.variant == "MU1":
        return mu_selector_1(Z, y, cfg.delta, cfg.theta_set)
    if cfg.variant in ("MU2", "Dantzig"):
        return mu_selector_2(Z, y, cfg)
    from .lasso import lasso_cp, lasso_path

    Z, y = _check(Z, y)
    path = lasso_path(Z, y)
    return lasso_cp(path, sigma, Z.shape[0], Z=Z, y=y)


def threshold(est, tau):
    """Zero every coordinate with ``|theta_j| <= tau``."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    theta = np.where(np.abs(est.theta_hat) > tau, est.theta_hat, 0.0)
    return Estimate(
        theta,
        est.variant,
        delta=est.delta,
        epsilon=est.epsilon,
        lam=est.lam,
        objective_value=est.objective_value,
        iterations=est.iterations,
        support_tol=est.support_tol,
    )


def c_star(alpha, s=1):
    """``2 (1 + 2 / (3 sqrt(s alpha (alpha - 1)))``; ``alpha=inf`` gives 2."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    if math.isinf(alpha):
        return 2.0
    return 2.0 * (1.0 + 2.0 / (3.0 * math.sqrt(s * alpha * (alpha - 1.0))))


def tau_star(delta, l1_of_estimate, alpha):
    """Data-driven threshold ``C*(alpha) delta |theta_hat|_1`` for the first selector."""
    return c_star(alpha) * delta * l1_of_estimate


def _alpha_factor(alpha):
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    if math.isinf(alpha):
        return 1.0
    return (3.0 * alpha + 1.0) / (3.0 * (alpha - 1.0))


def tau1(rule, epsilon, delta, alpha, l1_of_estimate=None, a=None):
    """Thresholds for the second selector.

    ``rule='b1'`` uses the l1 radius ``a`` of the feasible set;
    ``rule='b2'`` uses ``|theta_hat|_1`` and is fully data-driven.
    """
    f = _alpha_factor(alpha)
    if rule == "b1":
        if a is None or a <= 0:
            raise ValueError("rule b1 needs a positive radius a")
        return f * (2.0 * epsilon + 2.0 * (2.0 + delta) * delta * a)
    if rule == "b2":
        if l1_of_estimate is None:
            raise ValueError("rule b2 needs |theta_hat|_1")
        return 2.0 * f * (2.0 * epsilon + 2.0 * (1.0 + delta) * delta * l1_of_estimate)
    raise ValueError(f"unknown threshold rule {rule!r}")


def epsilon_rule(delta, sigma, n, p, A=None):
    """``A sigma sqrt(log(p) / n)`` with default ``A = (1 + delta) sqrt(2)``."""
    if p < 2 or n < 1 or sigma < 0:
        raise ValueError("need p >= 2, n >= 1, sigma >= 0")
    if A is None:
        A = (1.0 + delta) * math.sqrt(2.0)
    return A * sigma * math.sqrt(math.log(p) / n)
