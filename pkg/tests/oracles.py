"""Independent reference implementations used to check the library.

None of these import from ``muselect``; they are slow, direct translations of
the definitions.
"""

from itertools import combinations

import numpy as np


# LP by vertex enumeration -------------------------------------------------------------

def _vertices(c, A_ub, b_ub, A_eq, b_eq, boxes, tol=1e-9):
    """Best objective over the vertices of each bounded polyhedron in ``boxes``.

    The polyhedron is ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lo <= x <= hi``
    for each ``(lo, hi)`` pair of finite bounds; ``None`` where empty.  A vertex
    is fixed by choosing some inequality rows to be tight (together with all
    equality rows) and pinning every remaining variable at one of its bounds.
    """
    N = c.size
    m_ub = b_ub.size
    best = [None] * len(boxes)
    for k_ub in range(0, min(m_ub, N) + 1):
        k = k_ub + b_eq.size
        if k > N:
            break
        for S in combinations(range(m_ub), k_ub):
            rows = np.vstack([A_ub[list(S)], A_eq]) if k else np.zeros((0, N))
            rhs = np.concatenate([b_ub[list(S)], b_eq])
            for F in combinations(range(N), k):
                F = list(F)
                fixed = [j for j in range(N) if j not in F]
                B = rows[:, F]
                if k and abs(np.linalg.det(B)) < 1e-10:
                    continue
                # every lower/upper pattern for the pinned variables at once
                nf = len(fixed)
                pats = ((np.arange(1 << nf)[:, None] >> np.arange(nf)) & 1).astype(bool)
                for i, (lo, hi) in enumerate(boxes):
                    scale = 1.0 + np.abs(hi).max() + np.abs(lo).max()
                    xs = np.empty((pats.shape[0], N))
                    xs[:, fixed] = np.where(pats, hi[fixed], lo[fixed])
                    if k:
                        r = rhs[None, :] - xs[:, fixed] @ rows[:, fixed].T
                        xs[:, F] = np.linalg.solve(B, r.T).T
                    ok = np.all(xs @ A_ub.T <= b_ub + tol * scale, axis=1)
                    if b_eq.size:
                        ok &= np.all(np.abs(xs @ A_eq.T - b_eq) <= tol * scale, axis=1)
                    ok &= np.all(xs >= lo - tol * scale, axis=1) & np.all(xs <= hi + tol * scale, axis=1)
                    if ok.any():
                        v = float((xs[ok] @ c).min())
                        best[i] = v if best[i] is None else min(best[i], v)
    return best


def lp_oracle(c, A, senses, b, lower, upper, box=1e4):
    """``(status, objective)`` by vertex enumeration.

    Infinite bounds are replaced by ``+-box`` and ``+-10 box``; a drop in the
    optimum between the two boxes means the LP is unbounded.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(-1, c.size)
    b = np.asarray(b, float)
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for a, s, r in zip(A, senses, b):
        if s == "<=":
            ub_rows.append(a), ub_rhs.append(r)
        elif s == ">=":
            ub_rows.append(-a), ub_rhs.append(-r)
        else:
            eq_rows.append(a), eq_rhs.append(r)
    A_ub = np.array(ub_rows).reshape(-1, c.size)
    A_eq = np.array(eq_rows).reshape(-1, c.size)
    b_ub, b_eq = np.array(ub_rhs, float), np.array(eq_rhs, float)
    boxes = [(np.where(np.isinf(lower), -M, lower), np.where(np.isinf(upper), M, upper))
             for M in (box, 10 * box)]
    vals = _vertices(c, A_ub, b_ub, A_eq, b_eq, boxes)
    if vals[0] is None and vals[1] is None:
        return "infeasible", None
    if vals[0] is None or vals[1] < vals[0] - 1e-6 * (1 + abs(vals[0])):
        return "unbounded", None
    return "optimal", vals[0]


def random_lp(rng, max_vars=8, max_rows=8):
    """Small integer LP with mixed senses and bounds."""
    N = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    c = rng.integers(-2, 6, N).astype(float)
    A = rng.integers(-3, 6, (m, N)).astype(float)
    b = rng.integers(-2, 11, m).astype(float)
    senses = tuple(rng.choice(["<=", "<=", "<=", ">=", "="], m))
    lower = np.where(rng.random(N) < 0.8, 0.0, -np.inf)
    upper = np.where(rng.random(N) < 0.2, rng.integers(1, 6, N).astype(float), np.inf)
    return c, A, senses, b, lower, upper


# Lasso by coordinate descent -------------------------------------------------------------

def lasso_cd(Z, y, lam, tol=1e-13, max_sweeps=200000):
    """Minimize ``(1/n)|y - Z theta|^2 + lam |theta|_1`` by cyclic coordinate descent."""
    Z = np.asarray(Z, float)
    n, p = Z.shape
    theta = np.zeros(p)
    r = y.astype(float).copy()
    col_sq = (Z * Z).sum(axis=0) / n
    for _ in range(max_sweeps):
        biggest = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            rho = Z[:, j] @ r / n + col_sq[j] * theta[j]
            new = np.sign(rho) * max(abs(rho) - lam / 2, 0.0) / col_sq[j]
            d = new - theta[j]
            if d:
                r -= d * Z[:, j]
                theta[j] = new
                biggest = max(biggest, abs(d))
        if biggest < tol:
            break
    return theta


def lasso_objective(Z, y, theta, lam):
    r = y - Z @ theta
    return r @ r / len(y) + lam * np.abs(theta).sum()


# naive loops --------------------------------------------------------------------------------

def naive_gram(X):
    n, p = len(X), len(X[0])
    return [[sum(X[i][j] * X[i][k] for i in range(n)) / n for k in range(p)] for j in range(p)]


def naive_coherence(X):
    G = naive_gram(X)
    p = len(G)
    return max(abs(G[j][k]) for j in range(p) for k in range(p) if j != k)


def naive_mean_std(vals):
    m = sum(vals) / len(vals)
    v = sum((x - m) ** 2 for x in vals) / (len(vals) - 1)
    return m, v ** 0.5
