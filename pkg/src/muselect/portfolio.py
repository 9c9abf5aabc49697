"""Portfolio replication from daily open/close prices.

A portfolio's daily absolute return is observed; the holdings are recovered
with the second MU-selector from a design matrix in which one held asset's
column has been zeroed (the asset is outside the investable universe).
"""

from __future__ import annotations

import csv
import datetime as _dt
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector, normalize_design
from .selectors import FeasibleSet, SelectorConfig, epsilon_rule, mu_selector_2
from .sim import DEFAULT_SIGMA, box_muller, stream

__all__ = [
    "PricePanel",
    "ReplicationResult",
    "PriceDataError",
    "load_prices",
    "write_prices",
    "returns_design",
    "build_portfolio",
    "suppress_asset",
    "suppression_scenario",
    "replicate",
    "synthetic_panel",
]


class PriceDataError(ValueError):
    """Malformed price file."""


@dataclass(frozen=True)
class PricePanel:
    tickers: tuple
    dates: tuple
    open: np.ndarray
    close: np.ndarray
    dropped: tuple = ()

    def __post_init__(self):
        if self.open.shape != (len(self.dates), len(self.tickers)) or self.close.shape != self.open.shape:
            raise ValueError("price matrices must be dates x tickers")
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not (np.all(np.isfinite(self.open)) and np.all(np.isfinite(self.close))):
            raise ValueError("panel has missing cells")

    def index(self, ticker):
        try:
            return self.tickers.index(ticker)
        except ValueError:
            raise KeyError(f"unknown ticker {ticker!r}") from None


def load_prices(path):
    """Read a ``date,ticker,open,close`` CSV (with header) into a complete panel.

    Tickers missing any trading day are dropped with a warning.
    """
    cells = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "ticker", "open", "close"]:
            raise PriceDataError(f"{path}:1: expected header date,ticker,open,close")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                d, tk, o, c = (x.strip() for x in row)
                key = (_dt.date.fromisoformat(d), tk)
                vals = (float(o), float(c))
            except ValueError:
                raise PriceDataError(f"{path}:{lineno}: cannot parse {row!r}") from None
            if not tk or not all(np.isfinite(vals)):
                raise PriceDataError(f"{path}:{lineno}: cannot parse {row!r}")
            if key in cells:
                raise PriceDataError(f"{path}:{lineno}: duplicate row for {d} {tk}")
            cells[key] = vals
    if not cells:
        raise PriceDataError(f"{path}: no data rows")
    dates = sorted({d for d, _ in cells})
    order = []
    seen = set()
    for _, t in cells:
        if t not in seen:
            seen.add(t)
            order.append(t)
    complete = [t for t in order if all((d, t) in cells for d in dates)]
    dropped = tuple(t for t in order if t not in complete)
    if dropped:
        warnings.warn(f"dropping tickers with missing days: {', '.join(dropped)}", stacklevel=2)
    if not complete:
        raise PriceDataError(f"{path}: no ticker covers every date")
    op = np.array([[cells[(d, t)][0] for t in complete] for d in dates])
    cl = np.array([[cells[(d, t)][1] for t in complete] for d in dates])
    return PricePanel(tuple(complete), tuple(dates), op, cl, dropped)


def write_prices(path, panel):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "open", "close"])
        for i, d in enumerate(panel.dates):
            for j, t in enumerate(panel.tickers):
                w.writerow([d.isoformat(), t, repr(float(panel.open[i, j])), repr(float(panel.close[i, j]))])


def returns_design(panel):
    """Normalized matrix of daily absolute returns ``close - open``."""
    return normalize_design(panel.close - panel.open)


def build_portfolio(panel, tickers, sigma_noise=DEFAULT_SIGMA, seed=0, X=None):
    """Equal-weight holdings on ``tickers`` and the noisy portfolio returns.

    Returns ``(theta_star, y)`` with ``y = X theta_star + xi``,
    ``xi ~ N(0, sigma_noise^2 I)``.
    """
    if not tickers:
        raise ValueError("portfolio needs at least one ticker")
    X = returns_design(panel) if X is None else X
    Xm = X.matrix if hasattr(X, "matrix") else as_matrix(X)
    theta = np.zeros(len(panel.tickers))
    for t in tickers:
        theta[panel.index(t)] = 1.0 / len(tickers)
    xi = sigma_noise * box_muller(stream(seed, 0, "noise"), Xm.shape[0]) if sigma_noise > 0 else 0.0
    return theta, Xm @ theta + xi


def suppress_asset(X, tickers, ticker):
    """Copy of ``X`` with the column of ``ticker`` replaced by zeros."""
    Z = np.array(X.matrix if hasattr(X, "matrix") else X, dtype=float)
    Z[:, list(tickers).index(ticker)] = 0.0
    return Z


@dataclass(frozen=True)
class ReplicationResult:
    retrieved: dict
    delta: float
    epsilon: float
    estimate: object
    theta_set: str = "all"
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "retrieved": [{"ticker": t, "weight": w} for t, w in self.retrieved.items()],
            "config": {"delta": self.delta, "epsilon": self.epsilon, "theta_set": self.theta_set, **self.extra},
            "solver": {"iterations": self.estimate.iterations, "objective": self.estimate.objective_value,
                       "l1_norm": self.estimate.l1_norm},
        }


def replicate(Z, y, tickers, delta=0.5, epsilon=None, theta_set=None, sigma=DEFAULT_SIGMA):
    """Recover holdings with the second MU-selector and name the selected assets.

    ``epsilon=None`` applies the default rule with ``sigma``.
    """
    Z = as_matrix(Z)
    y = as_vector(y)
    n, p = Z.shape
    if len(tickers) != p:
        raise ValueError("one ticker per column required")
    if epsilon is None:
        epsilon = epsilon_rule(delta, sigma, n, p)
    theta_set = theta_set or FeasibleSet()
    est = mu_selector_2(Z, y, SelectorConfig("MU2", delta=delta, epsilon=epsilon, theta_set=theta_set))
    retrieved = {tickers[j]: float(est.theta_hat[j]) for j in est.support}
    return ReplicationResult(retrieved, float(delta), float(epsilon), est, str(theta_set))


def synthetic_panel(n_days=251, sectors=12, per_sector=4, seed=0, within=0.9, start=None):
    """Correlated factor-model prices: assets in a sector share one daily factor.

    ``within`` is the share of each asset's return variance explained by its
    sector factor.  Tickers are named ``S{sector}A{asset}``.
    """
    g = stream(seed, 0, "design")
    p = sectors * per_sector
    factors = box_muller(g, (n_days, sectors))
    idio = box_muller(g, (n_days, p))
    vol = 0.5 + g.random(p)
    sector_of = np.repeat(np.arange(sectors), per_sector)
    change = vol * (np.sqrt(within) * factors[:, sector_of] + np.sqrt(1 - within) * idio)
    level = 40.0 + 60.0 * g.random(p)
    overnight = 0.3 * box_muller(g, (n_days, p))
    opens = level + np.cumsum(overnight, axis=0) + np.vstack([np.zeros(p), np.cumsum(change, axis=0)[:-1]])
    closes = opens + change
    start = start or _dt.date(2007, 1, 2)
    dates, d = [], start
    while len(dates) < n_days:
        if d.weekday() < 5:
            dates.append(d)
        d += _dt.timedelta(days=1)
    tickers = tuple(f"S{sector_of[j]}A{j % per_sector}" for j in range(p))
    return PricePanel(tickers, tuple(dates), opens, closes)


def suppression_scenario(seed, s=3, delta=0.5, sigma=DEFAULT_SIGMA, theta_set=None, panel=None):
    """One seed-pinned replication run on a synthetic panel.

    Picks ``s`` assets from distinct sectors, builds the equal-weight
    portfolio, zeroes the column of the first chosen asset and replicates.
    Returns ``(result, chosen, suppressed)``.
    """
    panel = panel or synthetic_panel(seed=seed)
    g = stream(seed, 0, "perturb")
    sectors = sorted({t.split("A")[0] for t in panel.tickers})
    picked = g.choice(len(sectors), size=s, replace=False)
    chosen = []
    for k in picked:
        members = [t for t in panel.tickers if t.split("A")[0] == sectors[k]]
        chosen.append(members[int(g.integers(len(members)))])
    X = returns_design(panel)
    _, y = build_portfolio(panel, chosen, sigma, seed=seed, X=X)
    Z = suppress_asset(X, panel.tickers, chosen[0])
    res = replicate(Z, y, panel.tickers, delta=delta, theta_set=theta_set, sigma=sigma)
    return res, chosen, chosen[0]
