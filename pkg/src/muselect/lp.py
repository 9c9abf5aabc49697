"""Dense two-phase simplex solver and the LP encodings of the l1 selectors.

Every estimator in this package is an l1 minimization whose constraints are
linear once ``theta`` is split as ``u - v`` with ``u, v >= 0``.  The solver
below is a full-tableau simplex; it is meant for desk-scale problems (a few
thousand variables) and keeps no state between calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import blas

__all__ = [
    "LpProblem",
    "LpSolution",
    "IterationLimitError",
    "solve_lp",
    "build_l1_lp",
    "dump_lp",
    "PIVOT_TOL",
    "FEAS_TOL",
    "OPT_TOL",
]

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
OPT_TOL = 1e-9

_SENSES = ("<=", "=", ">=")


class IterationLimitError(RuntimeError):
    """The simplex pivot budget ran out before termination."""


@dataclass(frozen=True)
class LpProblem:
    """``min c.x`` subject to ``A[i].x (<=|=|>=) b[i]`` and simple bounds.

    Parameters
    ----------
    c : ndarray, shape (N,)
    A : ndarray, shape (m, N)
    senses : tuple of str
        One of ``'<='``, ``'='``, ``'>='`` per row.
    b : ndarray, shape (m,)
    lower : ndarray, shape (N,)
        Each entry is ``0`` or ``-inf``.
    upper : ndarray, shape (N,)
        Each entry is ``+inf`` or finite.
    labels : dict
        Free-form metadata (the l1 builders record the variable layout here).
    """

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        nvar = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, nvar) if np.size(self.A) else np.zeros((0, nvar))
        b = np.asarray(self.b, dtype=float).ravel()
        senses = tuple(self.senses)
        if A.shape[0] != b.size or len(senses) != b.size:
            raise ValueError("A, senses and b disagree on the number of rows")
        bad = [s for s in senses if s not in _SENSES]
        if bad:
            raise ValueError(f"unknown constraint relation {bad[0]!r}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        lower = np.zeros(nvar) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        upper = np.full(nvar, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lower.size != nvar or upper.size != nvar:
            raise ValueError("bounds must have one entry per variable")
        if not np.all((lower == 0.0) | (lower == -np.inf)):
            raise ValueError("lower bounds must be 0 or -inf")
        if np.any(upper == -np.inf) or np.any(np.isnan(upper)):
            raise ValueError("upper bounds must be finite or +inf")
        for name, val in (("c", c), ("A", A), ("b", b), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "senses", senses)

    @property
    def num_vars(self):
        return self.c.size

    @property
    def num_rows(self):
        return self.b.size

    def violation(self, x):
        """Largest constraint or bound violation at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.num_rows:
            ax = self.A @ x - self.b
            s = np.array(self.senses)
            worst = max(
                worst,
                float(np.max(ax[s == "<="], initial=0.0)),
                float(np.max(-ax[s == ">="], initial=0.0)),
                float(np.max(np.abs(ax[s == "="]), initial=0.0)),
            )
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    iterations: int

    @property
    def optimal(self):
        return self.status == "optimal"


class _Tableau:
    """Fortran-ordered tableau with in-place rank-one pivots.

    Layout: rows ``0..m-1`` are constraints, row ``m`` is the phase-2 cost and
    row ``m+1`` the phase-1 cost.  The last column is the right-hand side.
    """

    def __init__(self, T, basis):
        self.T = np.asfortranarray(T)
        self.basis = basis
        self.m = T.shape[0] - 2
        self.pivots = 0

    def pivot(self, r, col):
        T = self.T
        piv = T[r, col]
        row = T[r, :] / piv
        colv = T[:, col].copy()
        colv[r] = 0.0
        # T <- T - colv * row^T, in place
        blas.dger(-1.0, colv, row, a=T, overwrite_a=True)
        T[r, :] = row
        T[:, col] = 0.0
        T[r, col] = 1.0
        self.basis[r] = col
        self.pivots += 1

    def run(self, cost_row, allowed, max_iter, bland_after=50):
        """Iterate until optimal. Returns 'optimal' or 'unbounded'.

        Pricing is Dantzig's largest-coefficient rule; after ``bland_after``
        consecutive degenerate pivots it switches to Bland's rule until the
        objective moves again, which rules out cycling.
        """
        T = self.T
        m = self.m
        degenerate_run = 0
        while True:
            if self.pivots >= max_iter:
                raise IterationLimitError(f"simplex exceeded {max_iter} pivots")
            d = T[cost_row, :-1]
            cand = np.flatnonzero((d < -OPT_TOL) & allowed)
            if cand.size == 0:
                return "optimal"
            use_bland = degenerate_run >= bland_after
            col = int(cand[0]) if use_bland else int(cand[np.argmin(d[cand])])
            a = T[:m, col]
            rhs = T[:m, -1]
            pos = np.flatnonzero(a > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = np.maximum(rhs[pos], 0.0) / a[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, best)]
            if use_bland or ties.size == 1:
                r = int(ties[np.argmin(self.basis[ties])]) if ties.size > 1 else int(ties[0])
            else:
                r = int(ties[np.argmax(a[ties])])
            degenerate_run = degenerate_run + 1 if best <= FEAS_TOL else 0
            self.pivot(r, col)


def solve_lp(problem, max_iter=1_000_000):
    """Solve an :class:`LpProblem` with a two-phase tableau simplex.

    Returns an :class:`LpSolution` whose ``status`` is ``'optimal'``,
    ``'infeasible'`` or ``'unbounded'``.

    Raises
    ------
    IterationLimitError
        If ``max_iter`` pivots are used without reaching a verdict.
    """
    p = problem
    nvar = p.num_vars

    # standard form: columns for x (free ones split) then slacks, artificials
    free = np.flatnonzero(p.lower == -np.inf)
    ncols_x = nvar + free.size
    A = p.A
    A_x = np.hstack([A, -A[:, free]]) if free.size else A.copy()
    c_x = np.concatenate([p.c, -p.c[free]])
    senses = list(p.senses)
    b = p.b.copy()

    ub = np.flatnonzero(np.isfinite(p.upper))
    if ub.size:
        rows = np.zeros((ub.size, ncols_x))
        rows[np.arange(ub.size), ub] = 1.0
        for k, j in enumerate(ub):
            hit = np.flatnonzero(free == j)
            if hit.size:
                rows[k, nvar + hit[0]] = -1.0
        A_x = np.vstack([A_x, rows])
        b = np.concatenate([b, p.upper[ub]])
        senses += ["<="] * ub.size

    m = b.size
    slack_sign = np.array([1.0 if s == "<=" else (-1.0 if s == ">=" else 0.0) for s in senses])
    flip = b < 0
    sign = np.where(flip, -1.0, 1.0)
    A_x = A_x * sign[:, None]
    b = b * sign
    slack_sign = slack_sign * sign
    has_slack = slack_sign != 0.0
    slack_rows = np.flatnonzero(has_slack)
    nslack = slack_rows.size
    needs_art = ~(slack_sign > 0)
    art_rows = np.flatnonzero(needs_art)
    nart = art_rows.size

    ncols = ncols_x + nslack + nart
    T = np.zeros((m + 2, ncols + 1), order="F")
    T[:m, :ncols_x] = A_x
    T[slack_rows, ncols_x + np.arange(nslack)] = slack_sign[slack_rows]
    T[art_rows, ncols_x + nslack + np.arange(nart)] = 1.0
    T[:m, -1] = b
    T[m, :ncols_x] = c_x

    basis = np.empty(m, dtype=np.int64)
    slack_col = np.full(m, -1)
    slack_col[slack_rows] = ncols_x + np.arange(nslack)
    basis[~needs_art] = slack_col[~needs_art]
    basis[art_rows] = ncols_x + nslack + np.arange(nart)

    tab = _Tableau(T, basis)
    art_start = ncols_x + nslack
    allowed = np.ones(ncols, dtype=bool)

    if nart:
        T[m + 1, art_start:ncols] = 1.0
        # price out basic artificials
        T[m + 1, :] -= T[art_rows, :].sum(axis=0)
        T[m + 1, art_start:ncols] = 0.0
        tab.run(m + 1, allowed, max_iter)
        if -T[m + 1, -1] > FEAS_TOL * max(1.0, np.abs(b).max()):
            return LpSolution("infeasible", np.full(nvar, np.nan), float("nan"), tab.pivots)
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= art_start:
                row = T[r, :art_start]
                cand = np.flatnonzero(np.abs(row) > 1e-9)
                if cand.size:
                    tab.pivot(r, int(cand[0]))
                else:
                    keep[r] = False
        allowed[art_start:] = False
        if not keep.all():
            rows = np.concatenate([np.flatnonzero(keep), [m, m + 1]])
            tab = _Tableau(T[rows, :], tab.basis[keep].copy())
            tab.pivots = 0
            T = tab.T
            m = tab.m

    status = tab.run(m, allowed, max_iter)
    iterations = tab.pivots
    if status == "unbounded":
        return LpSolution("unbounded", np.full(nvar, np.nan), float("-inf"), iterations)

    z = np.zeros(ncols)
    z[tab.basis] = np.maximum(T[:m, -1], 0.0)
    z = _refine(A_x, slack_rows, slack_sign, ncols_x, nslack, b, tab.basis, z)
    x = z[:nvar].copy()
    if free.size:
        x[free] -= z[nvar : nvar + free.size]
    return LpSolution("optimal", x, float(p.c @ x), iterations)


def _refine(A_x, slack_rows, slack_sign, ncols_x, nslack, b, basis, z):
    """Recompute basic values from the original data to shed pivot drift."""
    m = A_x.shape[0]
    basis = np.asarray(basis)
    if basis.size != m or np.any(basis >= ncols_x + nslack):
        return z
    B = np.zeros((m, m))
    is_x = basis < ncols_x
    B[:, is_x] = A_x[:, basis[is_x]]
    for k in np.flatnonzero(~is_x):
        r = slack_rows[basis[k] - ncols_x]
        B[r, k] = slack_sign[r]
    try:
        xb = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return z
    if not np.all(np.isfinite(xb)) or xb.min() < -FEAS_TOL:
        return z
    out = np.zeros_like(z)
    out[basis] = np.maximum(xb, 0.0)
    return out


def dump_lp(problem):
    """Plain-text rendering: objective line, then one constraint per line."""
    fmt = lambda v: " ".join(repr(float(t)) for t in v)  # noqa: E731
    lines = [f"min {fmt(problem.c)}"]
    for a, s, rhs in zip(problem.A, problem.senses, problem.b):
        lines.append(f"{fmt(a)} {s} {float(rhs)!r}")
    lines.append(f"lower {fmt(problem.lower)}")
    lines.append(f"upper {fmt(problem.upper)}")
    return "\n".join(lines) + "\n"


def build_l1_lp(Z, y, cfg):
    """Encode an l1 selector as an :class:`LpProblem`.

    ``theta = u - v`` with ``u, v >= 0`` and ``|theta|_1`` represented by
    ``sum(u + v)``.  For a nonnegative feasible set the ``v`` block is
    omitted.  The variable layout is recorded in ``labels``.
    """
    from .selectors import FeasibleSet, SelectorConfig  # local: avoids an import cycle

    if not isinstance(cfg, SelectorConfig):
        raise TypeError("cfg must be a SelectorConfig")
    Z = np.asarray(Z.matrix if hasattr(Z, "matrix") else Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = Z.shape
    if y.size != n:
        raise ValueError(f"y has length {y.size}, expected {n}")
    ts = cfg.theta_set
    if not isinstance(ts, FeasibleSet):
        raise ValueError(f"unsupported feasible set {ts!r}")
    nonneg = ts.kind == "nonneg" or (ts.kind == "simplex" and ts.nonneg)
    ones = np.ones(p)

    if cfg.variant == "MU1":
        M, rhs_vec, slope, tol = Z, y, cfg.delta, 0.0
    elif cfg.variant in ("MU2", "Dantzig"):
        M = Z.T @ Z / n
        M = (M + M.T) / 2.0
        rhs_vec = Z.T @ y / n
        slope, tol = cfg.lam, cfg.epsilon
    else:
        raise ValueError(f"variant {cfg.variant!r} has no LP encoding")

    # rhs_vec - M theta <= slope*|theta|_1 + tol  and  M theta - rhs_vec <= same
    k = M.shape[0]
    pen = np.outer(np.ones(k), ones) * slope
    if nonneg:
        upper_rows = -M - pen
        lower_rows = M - pen
        nblk = 1
    else:
        upper_rows = np.hstack([-M - pen, M - pen])
        lower_rows = np.hstack([M - pen, -M - pen])
        nblk = 2
    A = np.vstack([upper_rows, lower_rows])
    b = np.concatenate([tol - rhs_vec, tol + rhs_vec])
    senses = ["<="] * (2 * k)

    if ts.kind == "l1ball":
        A = np.vstack([A, np.ones(nblk * p)])
        b = np.append(b, ts.radius)
        senses.append("<=")
    elif ts.kind == "simplex":
        row = ones if nonneg else np.concatenate([ones, -ones])
        A = np.vstack([A, row])
        b = np.append(b, 1.0)
        senses.append("=")
    elif ts.kind not in ("all", "nonneg"):
        raise ValueError(f"unsupported feasible set {ts.kind!r}")

    return LpProblem(
        c=np.ones(nblk * p),
        A=A,
        senses=tuple(senses),
        b=b,
        labels={"p": p, "split": not nonneg, "rows_per_side": k},
    )
