"""Command-line entry point: ``muselect {simulate,elbow,verify,portfolio,estimate}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 infeasible or
unbounded estimator, 5 bound violation (``verify``).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import warnings
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import portfolio as pf
from .linalg import read_csv_matrix
from .selectors import (
    FeasibleSet,
    SelectorConfig,
    SelectorInfeasibleError,
    estimate,
    parse_theta_set,
)
from .sim import (
    DEFAULT_SIGMA,
    ConfigError,
    EstimatorSpec,
    ExperimentSpec,
    elbow_scan,
    load_experiment,
    parse_estimators,
    parse_threshold,
    run_monte_carlo,
)
from .suite import SuiteSettings, run_bound_suite

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE, EXIT_VIOLATION = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, msg):
        self.code = code
        super().__init__(msg)


def _config_path(name):
    """A file path, or the name of a bundled config (``table1``, ``elbow_s1``...)."""
    p = Path(name)
    if p.exists():
        return p
    stem = name[:-4] if name.endswith(".cfg") else name
    bundled = resources.files("muselect") / "configs" / f"{stem}.cfg"
    if bundled.is_file():
        return bundled
    raise CliError(EXIT_CONFIG, f"--config: no such file or bundled config {name!r}")


def _read_text(path):
    return path.read_text()


def _write(out, text):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _epsilon_arg(text):
    if text == "auto":
        return "auto"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("epsilon must be nonnegative")
    return v


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("value must be nonnegative")
    return v


def _checked(fn):
    def wrap(text):
        try:
            return fn(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return wrap


def _experiment(args, need_estimators=True):
    if args.config is None:
        text = "[experiment]\n"
    else:
        text = _read_text(_config_path(args.config))
    overrides = {"seed": args.seed, "reps": args.reps}
    if getattr(args, "threshold", None) is not None:
        overrides["threshold"] = str(args.threshold)
    if getattr(args, "theta_set", None) is not None:
        overrides["theta_set"] = str(args.theta_set)
    if getattr(args, "epsilon", None) is not None:
        overrides["epsilon"] = str(args.epsilon)
    try:
        spec, extras = load_experiment(text, overrides)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
    except configparser.Error as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
    return spec, extras


def cmd_simulate(args):
    spec, extras = _experiment(args)
    if args.delta:
        keep = [e for e in spec.estimators if e.config.variant not in ("MU1", "MU2")]
        rule = args.threshold or next((e.threshold for e in spec.estimators if e.threshold.kind != "none"), None)
        head = args.variant if args.variant in ("mu1", "mu2") else "mu2"
        text = ", ".join(f"{head}:{d!r}" for d in args.delta)
        eps = None if args.epsilon in (None, "auto") else args.epsilon
        extra = parse_estimators(text, rule or parse_threshold("none"), extras["theta_set"], eps)
        spec = replace(spec, estimators=tuple(keep) + extra)
    report = run_monte_carlo(spec, workers=args.workers or extras["workers"])
    _write(args.out, report.to_markdown() if args.format == "markdown" else report.to_json())
    return EXIT_OK


def cmd_elbow(args):
    spec, extras = _experiment(args)
    grid = args.delta or extras["deltas"]
    if not grid:
        raise CliError(EXIT_CONFIG, "--delta: no delta grid given (flag or 'deltas' config key)")
    variant = "MU1" if args.variant == "mu1" else "MU2"
    curve = elbow_scan(spec, grid, variant=variant, theta_set=extras["theta_set"], workers=args.workers or extras["workers"])
    lines = ["delta,mean_nb1"] + [f"{d!r},{m!r}" for d, m in curve]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


_VERIFY_KEYS = {"count", "seed", "n_min", "n_max", "s_max", "delta_max", "sigma", "theorems", "perturb", "q"}


def _verify_settings(args):
    raw = {}
    if args.config is not None:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(_read_text(_config_path(args.config)))
        except configparser.Error as exc:
            raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
        if "verify" not in cp:
            raise CliError(EXIT_CONFIG, "config error: missing [verify] section")
        raw = dict(cp["verify"])
    for k in raw:
        if k not in _VERIFY_KEYS:
            raise CliError(EXIT_CONFIG, f"config error: {k}: unknown key")
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    if args.reps is not None:
        raw["count"] = str(args.reps)
    try:
        count = int(raw.get("count", 500))
        if count < 1:
            raise CliError(EXIT_CONFIG, "config error: count: verification suite is empty")
        return SuiteSettings(
            count=count,
            seed=int(raw.get("seed", 0)),
            n_range=(int(raw.get("n_min", 8)), int(raw.get("n_max", 64))),
            s_max=int(raw.get("s_max", 3)),
            delta_max=float(raw.get("delta_max", 0.05)),
            sigma=float(raw.get("sigma", 0.01)),
            theorems=tuple(int(t) for t in raw.get("theorems", "1,3,5").split(",")),
            q_list=tuple(float(q) for q in raw.get("q", "1.5,2").split(",")),
            perturb=raw.get("perturb", "bounded").strip(),
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None


def cmd_verify(args):
    settings = _verify_settings(args)
    cases = run_bound_suite(settings)
    violations = [
        {"instance": c.index, "bound": r.bound_id, "lhs": r.lhs, "rhs": r.rhs}
        for c in cases
        for rep in c.reports.values()
        for r in rep.violations
    ]
    applicable = sum(r.applicable for c in cases for rep in c.reports.values() for r in rep.records)
    doc = {
        "instances": len(cases),
        "applicable_bounds": applicable,
        "violations": violations,
        "cases": [c.to_dict() for c in cases],
    }
    _write(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_VIOLATION if violations else EXIT_OK


_PORTFOLIO_KEYS = {"prices", "synthetic_seed", "tickers", "suppress", "delta", "epsilon", "sigma",
                   "noise_seed", "theta_set"}


def cmd_portfolio(args):
    raw = {}
    if args.config is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cfg_path = _config_path(args.config)
        try:
            cp.read_string(_read_text(cfg_path))
        except configparser.Error as exc:
            raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
        if "portfolio" not in cp:
            raise CliError(EXIT_CONFIG, "config error: missing [portfolio] section")
        raw = dict(cp["portfolio"])
        for k in raw:
            if k not in _PORTFOLIO_KEYS:
                raise CliError(EXIT_CONFIG, f"config error: {k}: unknown key")
    prices = args.prices or raw.get("prices")
    try:
        if prices:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                panel = pf.load_prices(prices)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
        else:
            panel = pf.synthetic_panel(seed=int(raw.get("synthetic_seed", 0)))
    except FileNotFoundError:
        raise CliError(EXIT_DATA, f"--prices: file not found: {prices}") from None
    except pf.PriceDataError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None

    tickers = args.tickers or [t.strip() for t in raw.get("tickers", "").split(",") if t.strip()]
    if not tickers:
        raise CliError(EXIT_CONFIG, "--tickers: portfolio is empty")
    suppress = args.suppress if args.suppress is not None else raw.get("suppress")
    delta = args.delta[-1] if args.delta else float(raw.get("delta", 0.5))
    eps_text = args.epsilon if args.epsilon is not None else raw.get("epsilon", "auto")
    epsilon = None if eps_text == "auto" else float(eps_text)
    sigma = float(raw.get("sigma", DEFAULT_SIGMA))
    seed = args.seed if args.seed is not None else int(raw.get("noise_seed", 0))
    theta_set = args.theta_set or parse_theta_set(raw.get("theta_set", "all"))

    try:
        X = pf.returns_design(panel)
        theta, y = pf.build_portfolio(panel, tickers, sigma, seed=seed, X=X)
        Z = pf.suppress_asset(X, panel.tickers, suppress) if suppress else np.array(X.matrix)
    except (KeyError, ValueError) as exc:
        raise CliError(EXIT_DATA, f"data error: {exc}") from None
    res = pf.replicate(Z, y, panel.tickers, delta=delta, epsilon=epsilon, theta_set=theta_set, sigma=sigma)
    doc = res.to_dict()
    doc["initial"] = tickers
    doc["suppressed"] = suppress
    _write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_estimate(args):
    if args.Z is None or args.y is None:
        raise CliError(EXIT_CONFIG, "--Z and --y are required")
    try:
        Z = read_csv_matrix(args.Z, header=args.header)
        y = read_csv_matrix(args.y, header=args.header)
    except FileNotFoundError as exc:
        raise CliError(EXIT_DATA, f"data error: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_DATA, f"data error: {exc}") from None
    if y.shape[1] == 1:
        y = y[:, 0]
    elif y.shape[0] == 1:
        y = y[0]
    else:
        raise CliError(EXIT_DATA, "data error: y must be a single row or column")
    if y.size != Z.shape[0]:
        raise CliError(EXIT_DATA, f"data error: dimension mismatch: Z has {Z.shape[0]} rows, y has {y.size}")
    variant = {"mu1": "MU1", "mu2": "MU2", "dantzig": "Dantzig", "lasso": "Lasso"}[args.variant or "mu2"]
    delta = args.delta[-1] if args.delta else 0.0
    eps = args.epsilon
    if eps in (None, "auto"):
        if variant in ("MU2", "Dantzig") and eps == "auto":
            from .selectors import epsilon_rule

            eps = epsilon_rule(delta, args.sigma, Z.shape[0], max(Z.shape[1], 2))
        else:
            eps = 0.0
    cfg = SelectorConfig(variant, delta=delta, epsilon=eps, theta_set=args.theta_set or FeasibleSet())
    est = estimate(Z, y, cfg, sigma=args.sigma if variant == "Lasso" else None)
    _write(args.out, json.dumps(est.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="muselect", description="Sparse recovery with a noisy design: simulations, bound checks, "
                                     "portfolio replication and one-off fits.",
                                     epilog="exit codes: 0 ok, 2 config error, 3 data error, "
                                     "4 infeasible estimator, 5 bound violation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file or bundled config name")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--delta", type=_nonneg_float, action="append")
        p.add_argument("--epsilon", type=_epsilon_arg)
        p.add_argument("--theta-set", type=_checked(parse_theta_set))
        p.add_argument("--variant", choices=("mu1", "mu2", "dantzig", "lasso"))
        p.add_argument("--format", choices=("json", "markdown"), default="json")
        p.add_argument("--out")
        p.add_argument("--workers", type=int)

    ps = sub.add_parser("simulate", help="regenerate a simulation table")
    common(ps)
    ps.add_argument("--threshold", type=_checked(parse_threshold))
    ps.set_defaults(func=cmd_simulate)

    pe = sub.add_parser("elbow", help="mean number of selected coefficients per delta (CSV)")
    common(pe)
    pe.set_defaults(func=cmd_elbow)

    pv = sub.add_parser("verify", help="check the error bounds on random instances")
    common(pv)
    pv.set_defaults(func=cmd_verify)

    pp = sub.add_parser("portfolio", help="portfolio replication with one suppressed asset")
    common(pp)
    pp.add_argument("--prices", help="CSV with columns date,ticker,open,close")
    pp.add_argument("--tickers", nargs="+")
    pp.add_argument("--suppress")
    pp.set_defaults(func=cmd_portfolio)

    pt = sub.add_parser("estimate", help="fit one estimator on CSV data")
    common(pt)
    pt.add_argument("--Z", help="design CSV")
    pt.add_argument("--y", help="response CSV (one column or one row)")
    pt.add_argument("--sigma", type=_nonneg_float, default=DEFAULT_SIGMA)
    pt.add_argument("--header", action="store_true", help="skip a header line in the CSV files")
    pt.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return args.func(args)
    except CliError as exc:
        print(f"muselect: {exc}", file=sys.stderr)
        return exc.code
    except SelectorInfeasibleError as exc:
        print(f"muselect: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
