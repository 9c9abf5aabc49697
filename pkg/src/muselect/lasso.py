"""Lasso regularization path (LARS with the lasso drop step) and Cp selection.

The objective is pinned to ``(1/n) |y - Z theta|_2^2 + lam |theta|_1`` so that
``lam / 2`` is directly comparable to the residual correlations
``Z'(y - Z theta) / n`` used by the other selectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector
from .selectors import Estimate

__all__ = ["LassoKnot", "LassoPath", "lasso_path", "lasso_cp", "cp_scores", "ls_sigma"]


@dataclass(frozen=True)
class LassoKnot:
    lam: float
    theta: np.ndarray
    df: int
    rss: float


@dataclass(frozen=True)
class LassoPath:
    knots: tuple
    n: int
    truncated: bool = False

    def __len__(self):
        return len(self.knots)

    @property
    def lambdas(self):
        return np.array([k.lam for k in self.knots])

    def theta_at(self, lam):
        """Solution at ``lam`` by linear interpolation between knots."""
        lams = self.lambdas
        if lam >= lams[0]:
            return self.knots[0].theta.copy()
        if lam <= lams[-1]:
            return self.knots[-1].theta.copy()
        i = int(np.flatnonzero(lams >= lam)[-1])
        a, b = self.knots[i], self.knots[i + 1]
        w = (a.lam - lam) / (a.lam - b.lam)
        return (1 - w) * a.theta + w * b.theta


def lasso_path(Z, y, max_steps=None):
    """Piecewise-linear Lasso solution path from ``lam_max`` down to 0.

    The path stops when ``lam`` reaches 0, when ``n`` variables are active,
    or when the active Gram block turns singular (``truncated=True``).
    """
    Z = as_matrix(Z.matrix if hasattr(Z, "matrix") else Z, "Z")
    y = as_vector(y, "y")
    n, p = Z.shape
    if y.size != n:
        raise ValueError(f"dimension mismatch: Z has {n} rows, y has {y.size}")
    diag = np.einsum("ij,ij->j", Z, Z) / n
    if np.max(np.abs(diag - 1.0)) > 1e-6:
        warnings.warn("lasso_path: design columns are not normalized", stacklevel=2)
    if max_steps is None:
        max_steps = 8 * max(n, p)

    theta = np.zeros(p)
    corr = Z.T @ y / n
    gamma = float(np.max(np.abs(corr)))
    knots = [LassoKnot(2 * gamma, theta.copy(), 0, float(y @ y))]
    scale = max(gamma, 1e-300)
    if gamma <= 1e-14 * max(1.0, np.abs(y).max()):
        return LassoPath((LassoKnot(0.0, theta.copy(), 0, float(y @ y)),), n)

    active = [int(np.argmax(np.abs(corr)))]
    truncated = False
    just_dropped = -1
    for _ in range(max_steps):
        A = np.array(active)
        signs = np.sign(corr[A])
        G = Z[:, A].T @ Z[:, A] / n
        try:
            if np.linalg.cond(G) > 1e12:
                raise np.linalg.LinAlgError
            d = np.linalg.solve(G, signs)
        except np.linalg.LinAlgError:
            truncated = True
            break
        a = Z.T @ (Z[:, A] @ d) / n

        step = gamma
        event = ("end", -1)
        inactive = np.ones(p, dtype=bool)
        inactive[A] = False
        idx = np.flatnonzero(inactive)
        if idx.size and len(active) < n:
            cj, aj = corr[idx], a[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = np.where(1 - aj > 1e-12, (gamma - cj) / (1 - aj), np.inf)
                t2 = np.where(1 + aj > 1e-12, (gamma + cj) / (1 + aj), np.inf)
            # a just-dropped variable sits on the boundary it left; only the
            # opposite-sign crossing is a genuine re-entry
            back = idx == just_dropped
            if back.any():
                if corr[just_dropped] > 0:
                    t1[back] = np.inf
                else:
                    t2[back] = np.inf
            t = np.minimum(t1, t2)
            t[t <= 1e-14 * scale] = np.inf
            k = int(np.argmin(t))
            if t[k] < step:
                step, event = float(t[k]), ("join", int(idx[k]))
        with np.errstate(divide="ignore", invalid="ignore"):
            td = np.where(d != 0, -theta[A] / d, np.inf)
        td[td <= 1e-14 * scale] = np.inf
        if td.size:
            k = int(np.argmin(td))
            if td[k] < step:
                step, event = float(td[k]), ("drop", int(A[k]))

        theta[A] += step * d
        if event[0] == "drop":
            theta[event[1]] = 0.0
        resid = y - Z @ theta
        corr = Z.T @ resid / n
        gamma = max(gamma - step, 0.0)
        just_dropped = -1
        if event[0] == "join":
            active.append(event[1])
        elif event[0] == "drop":
            active.remove(event[1])
            just_dropped = event[1]
        if event[0] == "end" or gamma <= 1e-14 * scale:
            knots.append(LassoKnot(0.0, theta.copy(), int(np.count_nonzero(theta)), float(resid @ resid)))
            break
        knots.append(LassoKnot(2 * gamma, theta.copy(), len(active), float(resid @ resid)))
        if len(active) >= n:
            knots_end = _final_step(Z, y, theta, active, n)
            if knots_end is None:
                truncated = True
            else:
                knots.append(knots_end)
            break
    else:
        truncated = True
    return LassoPath(tuple(knots), n, truncated)


def _final_step(Z, y, theta, active, n):
    """With ``n`` active columns, follow the last segment to ``lam = 0`` if no sign flips."""
    A = np.array(active)
    ZA = Z[:, A]
    try:
        if np.linalg.cond(ZA) > 1e12:
            return None
        sol = np.linalg.solve(ZA, y)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.sign(sol) != np.sign(theta[A])):
        return None
    out = np.zeros_like(theta)
    out[A] = sol
    resid = y - Z @ out
    return LassoKnot(0.0, out, len(active), float(resid @ resid))


def cp_scores(path, sigma, n):
    """Mallows ``Cp = RSS / sigma^2 - n + 2 df`` at every knot."""
    rss = np.array([k.rss for k in path.knots])
    df = np.array([k.df for k in path.knots])
    return rss / sigma**2 - n + 2 * df


def ls_sigma(Z, y, support_idx):
    """Residual standard deviation of the least-squares refit on ``support_idx``."""
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    k = len(support_idx)
    if k >= n:
        raise ValueError("support too large for a variance estimate")
    if k:
        coef, *_ = np.linalg.lstsq(Z[:, support_idx], y, rcond=None)
        r = y - Z[:, support_idx] @ coef
    else:
        r = np.asarray(y, dtype=float)
    return float(np.sqrt(r @ r / (n - k)))


def lasso_cp(path, sigma=None, n=None, Z=None, y=None):
    """Pick the knot with the smallest Mallows Cp; ties go to the sparser model.

    When ``sigma`` is None it is estimated by a least-squares refit on the
    support of the largest path model with fewer than ``n`` variables; this
    needs ``Z`` and ``y``.
    """
    if not path.knots:
        raise ValueError("empty path")
    n = path.n if n is None else n
    if sigma is None:
        if Z is None or y is None:
            raise ValueError("sigma=None needs Z and y for the plug-in estimate")
        fits = [k for k in path.knots if k.df < n - 1]
        sigma = ls_sigma(Z, y, np.flatnonzero(fits[-1].theta))
    scores = cp_scores(path, sigma, n)
    df = np.array([k.df for k in path.knots])
    best = scores.min()
    tied = np.flatnonzero(scores <= best + 1e-9 * max(1.0, abs(best)))
    pick = int(tied[np.argmin(df[tied])])
    knot = path.knots[pick]
    return Estimate(knot.theta, "Lasso", lam=knot.lam, objective_value=float("nan"))
