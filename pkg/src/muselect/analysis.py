"""Design diagnostics and runtime checks of the error bounds.

The restricted eigenvalue constant is never computed directly; every kappa
used here comes from the coherence implication (coherence below
``1 / (c alpha s)`` gives ``kappa = sqrt(1 - 1/alpha)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .linalg import UNIT_DIAG_TOL, as_matrix, as_vector, gram, norm, residual_corr
from .selectors import SUPPORT_TOL, c_star

__all__ = [
    "BOUND_SLACK",
    "AssumptionReport",
    "BoundRecord",
    "BoundReport",
    "MissingDiagnostics",
    "coherence",
    "kappa_from_coherence",
    "assumption_report",
    "feasibility_margin",
    "check_theorem1",
    "check_theorem3",
    "check_theorem5",
    "best_s_tail",
    "missing_data_diagnostics",
    "compare_signs",
    "cone_inequality_gap",
]

BOUND_SLACK = 1e-9
COHERENCE_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AssumptionReport:
    rho: float
    diag_ok: bool
    s: int = 1
    alpha: float = math.inf
    kappa: float = float("nan")
    coherence_condition_met: bool = False
    mode: str = "three"

    def to_dict(self):
        d = asdict(self)
        d["alpha"] = None if math.isinf(self.alpha) else self.alpha
        d["alpha_is_infinite"] = math.isinf(self.alpha)
        d["kappa"] = None if math.isnan(self.kappa) else self.kappa
        return d


@dataclass(frozen=True)
class BoundRecord:
    bound_id: str
    lhs: float
    rhs: float
    applicable: bool = True
    note: str = ""

    @property
    def holds(self):
        if not self.applicable:
            return None
        return bool(self.lhs <= self.rhs + BOUND_SLACK)

    def to_dict(self):
        return {
            "bound": self.bound_id,
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "applicable": self.applicable,
            "holds": self.holds,
            "note": self.note,
        }


@dataclass
class BoundReport:
    records: list = field(default_factory=list)
    nu: float = float("nan")
    nu1: float = float("nan")

    def add(self, bound_id, lhs, rhs, note=""):
        self.records.append(BoundRecord(bound_id, float(lhs), float(rhs), True, note))

    def skip(self, bound_id, note):
        self.records.append(BoundRecord(bound_id, float("nan"), float("nan"), False, note))

    def __getitem__(self, bound_id):
        for r in self.records:
            if r.bound_id == bound_id:
                return r
        raise KeyError(bound_id)

    @property
    def all_hold(self):
        return all(r.holds for r in self.records if r.applicable)

    @property
    def violations(self):
        return [r for r in self.records if r.applicable and not r.holds]

    def to_dict(self):
        return {
            "nu": _json_float(self.nu),
            "nu1": _json_float(self.nu1),
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


@dataclass(frozen=True)
class MissingDiagnostics:
    delta1: float
    delta2: float
    diag_term: float


def _json_float(x):
    if x is None or (isinstance(x, float) and (math.isnan(x) or math.isinf(x))):
        return None
    return float(x)


def _mat(a):
    return as_matrix(a.matrix if hasattr(a, "matrix") else a)


def coherence(X):
    """Return ``(rho, diag_ok)`` for ``Psi = X'X / n``.

    Off-diagonal magnitudes at or below ``COHERENCE_ZERO_TOL`` are rounding
    noise, so an orthogonal design reports ``rho == 0``.
    """
    psi = gram(_mat(X))
    p = psi.shape[0]
    if p < 2:
        raise ValueError("coherence needs at least two columns")
    diag_ok = bool(np.max(np.abs(np.diag(psi) - 1.0)) <= UNIT_DIAG_TOL)
    off = psi - np.diag(np.diag(psi))
    rho = float(np.max(np.abs(off)))
    return (0.0 if rho <= COHERENCE_ZERO_TOL else rho), diag_ok


def kappa_from_coherence(rho, s, mode="three"):
    """Admissible ``alpha`` and implied ``kappa`` from a coherence level.

    ``mode='three'`` certifies RE(s) (needs ``rho < 1/(3 alpha s)``),
    ``mode='five'`` certifies RE(s, 2) (needs ``rho < 1/(5 alpha s)``).
    ``alpha`` is the midpoint of ``(1, 1/(c rho s))``; ``rho == 0`` gives
    ``alpha = inf`` and ``kappa = 1``.  Returns ``(None, None)`` when no
    ``alpha > 1`` is admissible.
    """
    if rho < 0 or s < 1:
        raise ValueError("need rho >= 0 and s >= 1")
    c = {"three": 3.0, "five": 5.0}[mode]
    if rho == 0.0:
        return math.inf, 1.0
    sup = 1.0 / (c * rho * s)
    if sup <= 1.0:
        return None, None
    alpha = 0.5 * (1.0 + sup)
    return alpha, math.sqrt(1.0 - 1.0 / alpha)


def assumption_report(X, s, mode="three"):
    rho, diag_ok = coherence(X)
    alpha, kappa = kappa_from_coherence(rho, s, mode)
    met = alpha is not None and diag_ok
    return AssumptionReport(
        rho=rho,
        diag_ok=diag_ok,
        s=int(s),
        alpha=alpha if alpha is not None else float("nan"),
        kappa=kappa if kappa is not None else float("nan"),
        coherence_condition_met=met,
        mode=mode,
    )


def feasibility_margin(theta_star, Z, y, cfg):
    """Constraint slack of the selector's program at ``theta_star``.

    Nonnegative exactly when ``theta_star`` is feasible (ignoring the
    ``theta_set`` membership, which is checked separately).
    """
    theta_star = as_vector(theta_star, "theta_star")
    Z = _mat(Z)
    y = as_vector(y, "y")
    l1 = norm(theta_star, "l1")
    if cfg.variant == "MU1":
        return cfg.delta * l1 - float(np.max(np.abs(y - Z @ theta_star)))
    if cfg.variant in ("MU2", "Dantzig"):
        return cfg.lam * l1 + cfg.epsilon - residual_corr(Z, y, theta_star)
    raise ValueError(f"no feasibility constraint for variant {cfg.variant}")


def best_s_tail(theta_star, s):
    """``min_{|J| <= s} |theta*_{J^c}|_1``: sum of all but the ``s`` largest magnitudes."""
    a = np.sort(np.abs(as_vector(theta_star, "theta_star")))
    s = int(s)
    if s >= a.size:
        return 0.0
    return float(a[: a.size - s].sum())


def cone_inequality_gap(theta_hat, theta_star, J):
    """``|D_J|_1 + 2 |theta*_{J^c}|_1 - |D_{J^c}|_1`` with ``D = theta_hat - theta_star``.

    Nonnegative whenever ``theta_hat`` minimizes the l1 norm over a set that
    contains ``theta_star``.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    mask = np.zeros(theta_star.size, dtype=bool)
    mask[np.asarray(J, dtype=int)] = True
    D = theta_hat - theta_star
    return float(np.abs(D[mask]).sum() + 2 * np.abs(theta_star[~mask]).sum() - np.abs(D[~mask]).sum())


def _truth(instance):
    t = instance.truth
    if t is None:
        raise ValueError("bound verification needs an instance with ground truth")
    return t


def _theorem1_preconditions(instance, delta, s):
    t = _truth(instance)
    X = t.X.matrix
    problems = []
    if np.max(np.abs(t.xi)) > 1e-12:
        problems.append("xi != 0")
    if np.max(np.abs(t.Xi)) > delta + 1e-12:
        problems.append("|Xi|_inf > delta")
    if np.count_nonzero(np.abs(t.theta_star) > SUPPORT_TOL) > s:
        problems.append(f"theta* is not {s}-sparse")
    if np.max(np.abs(instance.y - X @ t.theta_star)) > 1e-9 * max(1.0, np.abs(instance.y).max()):
        problems.append("y != X theta*")
    return problems


def check_theorem1(instance, est, kappa, kappa2s, s, alpha, rho=None):
    """Evaluate the four error bounds for the first selector (noiseless response).

    ``kappa`` and ``kappa2s`` are the RE(s) and RE(2s) constants; pass None
    when unknown and the corresponding bound is reported as not applicable.
    ``alpha`` (with ``rho``) drives the sup-norm bound.
    """
    t = _truth(instance)
    delta = est.delta
    rep = BoundReport()
    pre = _theorem1_preconditions(instance, delta, s)
    ids = ("T1-6", "T1-4", "T1-5", "T1-6a")
    if pre:
        for b in ids:
            rep.skip(b, "; ".join(pre))
        return rep
    X = t.X.matrix
    n = X.shape[0]
    D = est.theta_hat - t.theta_star
    l1hat = est.l1_norm
    rep.add("T1-6", float(np.sum((X @ D) ** 2)) / n, 4 * delta**2 * l1hat**2)
    if kappa:
        rep.add("T1-4", norm(D, "l1"), 4 * math.sqrt(s) * delta / kappa * l1hat)
    else:
        rep.skip("T1-4", "RE(s) not certified")
    if kappa2s and 2 * s <= X.shape[1]:
        rep.add("T1-5", norm(D, "l2"), 4 * delta / kappa2s * l1hat)
    else:
        rep.skip("T1-5", "RE(2s) not certified")
    if alpha is not None and alpha > 1 and _coherence_ok(t.X, rho, 3, alpha, s):
        rep.add("T1-6a", norm(D, "linf"), c_star(alpha, s) * delta * l1hat)
    else:
        rep.skip("T1-6a", "coherence condition not met")
    return rep


def _coherence_ok(X, rho, c, alpha, s):
    measured, diag_ok = coherence(X)
    rho = measured if rho is None else rho
    if not diag_ok:
        return False
    if math.isinf(alpha):
        return rho == 0.0
    return rho < 1.0 / (c * alpha * s)


def _theorem3_preconditions(instance, cfg, s):
    t = _truth(instance)
    X = t.X
    Z = instance.Z
    n = Z.shape[0]
    problems = []
    if not coherence(X)[1]:
        problems.append("diag(X'X/n) != 1")
    if np.max(np.abs(t.Xi)) > cfg.delta + 1e-12:
        problems.append("|Xi|_inf > delta")
    if np.max(np.abs(Z.T @ t.xi)) / n > cfg.epsilon + 1e-12:
        problems.append("|Z'xi/n|_inf > epsilon")
    if np.count_nonzero(np.abs(t.theta_star) > SUPPORT_TOL) > s:
        problems.append(f"theta* is not {s}-sparse")
    if abs(cfg.lam - (1 + cfg.delta) * cfg.delta) > 1e-15:
        problems.append("lambda differs from (1+delta)delta")
    return problems


def check_theorem3(instance, est, kappa, kappa2s, s, alpha, q_list=(1.5, 2.0), rho=None):
    """Bounds for the second selector, with the small-``delta`` refinements.

    ``est`` must carry the ``delta``, ``epsilon`` and ``lam`` it was fitted
    with.  Refined bounds are emitted only when ``delta < kappa^2 / (4 s)``
    (sup-norm one only when ``delta <= kappa^2 / (8 s)``).
    """
    from .selectors import SelectorConfig

    t = _truth(instance)
    cfg = SelectorConfig("MU2", delta=est.delta, epsilon=est.epsilon, lam=est.lam)
    delta, eps = cfg.delta, cfg.epsilon
    rep = BoundReport()
    pre = _theorem3_preconditions(instance, cfg, s)
    q_ids = [f"T3-11({q:g})" for q in q_list]
    ids = ["T3-11a", "T3-10", *q_ids, "T3-14", "T31-11ab", "T31-10b", "T31-11b", "T31-14b"]
    if pre:
        for b in ids:
            rep.skip(b, "; ".join(pre))
        return rep

    X = t.X.matrix
    n = X.shape[0]
    D = est.theta_hat - t.theta_star
    l1s = norm(t.theta_star, "l1") if np.any(t.theta_star) else 0.0
    nu = 2 * (2 + delta) * delta * l1s + 2 * eps
    nu1 = 2 * (1 + delta) * delta * est.l1_norm + 2 * eps
    rep.nu, rep.nu1 = nu, nu1
    pred = float(np.sum((X @ D) ** 2)) / n
    coh_ok = alpha is not None and alpha > 1 and _coherence_ok(t.X, rho, 3, alpha, s)

    if kappa:
        rep.add("T3-11a", norm(D, "l1"), 4 * nu * s / kappa**2)
        rep.add("T3-10", pred, 4 * nu**2 * s / kappa**2)
    else:
        rep.skip("T3-11a", "RE(s) not certified")
        rep.skip("T3-10", "RE(s) not certified")
    for q, bid in zip(q_list, q_ids):
        if not 1 < q <= 2:
            raise ValueError("q must lie in (1, 2]")
        if kappa2s:
            rep.add(bid, float(np.sum(np.abs(D) ** q)), (4 * nu / kappa2s**2) ** q * s)
        else:
            rep.skip(bid, "RE(2s) not certified")
    if coh_ok:
        rep.add("T3-14", norm(D, "linf"), _alpha_ratio(alpha) * nu)
    else:
        rep.skip("T3-14", "coherence condition not met")

    if kappa and delta < kappa**2 / (4 * s):
        shrink = 1.0 / (1.0 - 4 * delta * s / kappa**2)
        rep.add("T31-11ab", norm(D, "l1"), 4 * nu1 * s / kappa**2 * shrink)
        rep.add("T31-10b", pred, 4 * nu1**2 * s / kappa**2 * shrink**2)
    else:
        rep.skip("T31-11ab", "delta >= kappa^2/(4s)")
        rep.skip("T31-10b", "delta >= kappa^2/(4s)")
    if kappa2s and delta < kappa2s**2 / (4 * s):
        shrink2 = 1.0 / (1.0 - 4 * delta * s / kappa2s**2)
        rep.add("T31-11b", float(np.sum(np.abs(D) ** 2)), (4 * nu1 / kappa2s**2) ** 2 * shrink2**2 * s,
                note="q=2")
    else:
        rep.skip("T31-11b", "delta >= kappa2s^2/(4s)")
    kappa_c = _kappa_of_alpha(alpha) if coh_ok else None
    if coh_ok and delta <= kappa_c**2 / (8 * s):
        rep.add("T31-14b", norm(D, "linf"), 2 * _alpha_ratio(alpha) * nu1)
    else:
        rep.skip("T31-14b", "coherence condition or delta <= kappa^2/(8s) not met")
    return rep


def _alpha_ratio(alpha):
    if math.isinf(alpha):
        return 1.0
    return (3 * alpha + 1) / (3 * (alpha - 1))


def _kappa_of_alpha(alpha):
    return 1.0 if math.isinf(alpha) else math.sqrt(1.0 - 1.0 / alpha)


def check_theorem5(instance, est, kappa, s, alpha, rho=None):
    """Bounds for the first selector when ``theta*`` is only approximately sparse.

    ``kappa`` and ``alpha`` should come from ``kappa_from_coherence(..., mode='five')``.
    """
    t = _truth(instance)
    delta = est.delta
    rep = BoundReport()
    X = t.X.matrix
    n = X.shape[0]
    problems = []
    if np.max(np.abs(t.xi)) > 1e-12:
        problems.append("xi != 0")
    if np.max(np.abs(t.Xi)) > delta + 1e-12:
        problems.append("|Xi|_inf > delta")
    if np.max(np.abs(instance.y - X @ t.theta_star)) > 1e-9 * max(1.0, np.abs(instance.y).max()):
        problems.append("y != X theta*")
    if problems:
        for b in ("T5-6x", "T5-4x", "T5-6ax"):
            rep.skip(b, "; ".join(problems))
        return rep
    D = est.theta_hat - t.theta_star
    l1hat = est.l1_norm
    tail = best_s_tail(t.theta_star, s)
    rep.add("T5-6x", float(np.sum((X @ D) ** 2)) / n, 4 * delta**2 * l1hat**2)
    if kappa:
        rep.add("T5-4x", norm(D, "l1"), 4 * math.sqrt(s) * delta / kappa * l1hat + 6 * tail,
                note=f"tail={tail!r}")
    else:
        rep.skip("T5-4x", "RE(s,2) not certified")
    if alpha is not None and alpha > 1 and _coherence_ok(t.X, rho, 5, alpha, s):
        if math.isinf(alpha):
            rhs = 2 * delta * l1hat
        else:
            rhs = (2 * (1 + 2 / (5 * math.sqrt(s * alpha * (alpha - 1)))) * delta * l1hat
                   + 6 / (5 * alpha * s) * tail)
        rep.add("T5-6ax", norm(D, "linf"), rhs, note=f"tail={tail!r}")
    else:
        rep.skip("T5-6ax", "coherence condition not met")
    return rep


def missing_data_diagnostics(Xi, X):
    """Cross-moment sizes of a missing-data perturbation ``Xi`` against ``X``."""
    Xi = _mat(Xi)
    X = _mat(X)
    if Xi.shape != X.shape:
        raise ValueError("Xi and X must have the same shape")
    n = X.shape[0]
    cross = Xi.T @ X / n
    delta1 = max(float(np.max(np.abs(cross))), float(np.max(np.abs(cross.T))))
    self_ = Xi.T @ Xi / n
    diag = np.diag(self_)
    off = self_ - np.diag(diag)
    return MissingDiagnostics(delta1, float(np.max(np.abs(off))) if off.size > 1 else 0.0,
                              float(np.max(np.abs(diag))))


def compare_signs(theta_a, theta_b, tol=SUPPORT_TOL):
    """Componentwise sign agreement, treating ``|x| <= tol`` as zero.

    Returns ``(match, mismatched_indices)``.
    """
    a = np.asarray(theta_a, dtype=float)
    b = np.asarray(theta_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("sign comparison needs equal lengths")
    sa = np.where(np.abs(a) > tol, np.sign(a), 0.0)
    sb = np.where(np.abs(b) > tol, np.sign(b), 0.0)
    bad = np.flatnonzero(sa != sb)
    return bad.size == 0, bad
