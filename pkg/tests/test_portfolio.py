import datetime as dt

import numpy as np
import pytest

from muselect.linalg import DegenerateColumnError
from muselect.portfolio import (
    PriceDataError,
    PricePanel,
    build_portfolio,
    load_prices,
    replicate,
    returns_design,
    suppress_asset,
    suppression_scenario,
    synthetic_panel,
    write_prices,
)
from muselect.selectors import FeasibleSet


def _write(tmp_path, lines):
    path = tmp_path / "prices.csv"
    path.write_text("date,ticker,open,close\n" + "\n".join(lines) + "\n")
    return path


def test_load_complete_panel(tmp_path):
    rows = [f"2007-01-0{d},{t},{10 + d}.0,{11 + d}.5" for d in (2, 3, 4) for t in ("AA", "BB")]
    panel = load_prices(_write(tmp_path, rows))
    assert panel.open.shape == (3, 2) and panel.tickers == ("AA", "BB")
    assert panel.dates[0] == dt.date(2007, 1, 2)


def test_gap_drops_ticker_with_warning(tmp_path):
    rows = [f"2007-01-0{d},{t},1.0,2.0" for d in (2, 3, 4) for t in ("AA", "BB")]
    rows.remove("2007-01-03,BB,1.0,2.0")
    with pytest.warns(UserWarning, match="BB"):
        panel = load_prices(_write(tmp_path, rows))
    assert panel.tickers == ("AA",) and panel.dropped == ("BB",)


def test_duplicate_row_is_error(tmp_path):
    rows = ["2007-01-02,AA,1.0,2.0", "2007-01-02,AA,1.5,2.0"]
    with pytest.raises(PriceDataError, match=":3:"):
        load_prices(_write(tmp_path, rows))


@pytest.mark.parametrize("bad", ["2007-13-02,AA,1.0,2.0", "2007-01-02,AA,one,2.0", "2007-01-02,AA,1.0"])
def test_unparseable_row_names_line(tmp_path, bad):
    with pytest.raises(PriceDataError, match=":3:"):
        load_prices(_write(tmp_path, ["2007-01-02,AA,1.0,2.0", bad]))


def test_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("day,sym,o,c\n")
    with pytest.raises(PriceDataError, match=":1:"):
        load_prices(path)


def test_round_trip(tmp_path):
    panel = synthetic_panel(n_days=5, sectors=2, per_sector=2, seed=1)
    write_prices(tmp_path / "p.csv", panel)
    back = load_prices(tmp_path / "p.csv")
    assert back.tickers == panel.tickers and back.dates == panel.dates
    np.testing.assert_array_equal(back.close, panel.close)


def _panel(opens, closes):
    opens = np.asarray(opens, float).reshape(len(opens), -1)
    closes = np.asarray(closes, float).reshape(opens.shape)
    dates = tuple(dt.date(2007, 1, 2) + dt.timedelta(days=i) for i in range(opens.shape[0]))
    return PricePanel(tuple(f"T{j}" for j in range(opens.shape[1])), dates, opens, closes)


def test_returns_design_examples():
    with pytest.raises(DegenerateColumnError):
        returns_design(_panel([1.0, 1.0, 1.0], [2.0, 2.0, 2.0]))
    X = returns_design(_panel([1.0, 3.0], [2.0, 2.0]))
    np.testing.assert_allclose(X.matrix[:, 0], [1.0, -1.0])
    X = returns_design(synthetic_panel(seed=2))
    assert np.allclose(np.einsum("ij,ij->j", X.matrix, X.matrix) / X.n, 1.0, atol=1e-9)


def test_build_portfolio_examples():
    panel = synthetic_panel(n_days=30, seed=3)
    theta, y = build_portfolio(panel, ["S1A1"], 0.0)
    assert theta.sum() == 1.0 and np.count_nonzero(theta) == 1
    X = returns_design(panel).matrix
    np.testing.assert_allclose(y, X @ theta)
    theta2, _ = build_portfolio(panel, ["S1A1", "S2A0"], 0.1)
    assert theta2.sum() == pytest.approx(1.0) and sorted(set(theta2[theta2 > 0])) == [0.5]
    with pytest.raises(KeyError):
        build_portfolio(panel, ["NOPE"], 0.0)


def test_suppress_asset():
    X = returns_design(synthetic_panel(n_days=20, seed=4))
    tickers = synthetic_panel(n_days=20, seed=4).tickers
    Z = suppress_asset(X, tickers, tickers[3])
    assert not Z[:, 3].any()
    np.testing.assert_array_equal(np.delete(Z, 3, axis=1), np.delete(X.matrix, 3, axis=1))


def test_exact_noiseless_recovery():
    panel = synthetic_panel(n_days=40, sectors=3, per_sector=1, seed=5)
    X = returns_design(panel)
    theta, y = build_portfolio(panel, list(panel.tickers[:2]), 0.0, X=X)
    res = replicate(X.matrix, y, panel.tickers, delta=0.0, epsilon=0.0)
    assert set(res.retrieved) == set(panel.tickers[:2])


def test_replicate_feasible_and_simplex():
    panel = synthetic_panel(seed=6)
    X = returns_design(panel)
    _, y = build_portfolio(panel, ["S0A0", "S4A1"], seed=6, X=X)
    Z = suppress_asset(X, panel.tickers, "S4A1")
    res = replicate(Z, y, panel.tickers)
    th = res.estimate.theta_hat
    lhs = np.abs(Z.T @ (y - Z @ th)).max() / len(y)
    assert lhs <= (1.5 * 0.5) * res.estimate.l1_norm + res.epsilon + 1e-9
    assert "S4A1" not in res.retrieved
    res_s = replicate(Z, y, panel.tickers, theta_set=FeasibleSet.simplex())
    assert res_s.estimate.theta_hat.sum() == pytest.approx(1.0, abs=1e-9)
    d = res.to_dict()
    assert d["config"]["delta"] == 0.5 and {"ticker", "weight"} <= set(d["retrieved"][0])


def test_suppressing_non_portfolio_asset_noiseless():
    panel = synthetic_panel(seed=7)
    X = returns_design(panel)
    chosen = ["S2A0", "S7A3"]
    theta, y = build_portfolio(panel, chosen, 0.0, X=X)
    Z = suppress_asset(X, panel.tickers, "S9A1")
    res = replicate(Z, y, panel.tickers, delta=0.5, epsilon=0.0)
    assert set(chosen) <= set(res.retrieved)


@pytest.mark.parametrize("seed", range(50))
def test_scenario_size_band(seed):
    res, chosen, suppressed = suppression_scenario(seed)
    assert len(chosen) - 2 <= len(res.retrieved) <= len(chosen) + 2
    assert suppressed not in res.retrieved
