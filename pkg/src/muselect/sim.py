"""Synthetic experiments: generators, error metrics and the Monte Carlo driver.

Random streams
--------------
Every random draw comes from a Philox (counter-based) generator keyed by
``(base_seed, rep << 8 | role)``, so any single replicate can be rebuilt in
isolation and the roles (design, support, noise, mask) never share a stream.
Normal variates use the Box-Muller transform on the stream's uniforms.
"""

from __future__ import annotations

import configparser
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import compare_signs
from .linalg import DesignMatrix, as_matrix, normalize_design
from .selectors import (
    FeasibleSet,
    SelectorConfig,
    SelectorInfeasibleError,
    c_star,
    epsilon_rule,
    estimate,
    parse_theta_set,
    support,
    tau1,
    threshold,
)

__all__ = [
    "ROLES",
    "stream",
    "box_muller",
    "Truth",
    "Instance",
    "ThresholdRule",
    "EstimatorSpec",
    "ExperimentSpec",
    "MetricsRow",
    "TableRow",
    "TableReport",
    "ConfigError",
    "DEFAULT_SIGMA",
    "gen_design",
    "gen_theta",
    "gen_noise",
    "censor",
    "mask_missing",
    "make_instance",
    "metrics",
    "run_monte_carlo",
    "elbow_scan",
    "parse_estimators",
    "parse_threshold",
    "load_experiment",
]

DEFAULT_SIGMA = 0.05 / 1.96
ROLES = {"design": 1, "theta": 2, "noise": 3, "mask": 4, "perturb": 5}
_MASK64 = (1 << 64) - 1


def stream(base_seed, rep=0, role="design"):
    """Independent Philox generator for ``(base_seed, rep, role)``."""
    rid = ROLES[role] if isinstance(role, str) else int(role)
    if not 0 <= rid < 256 or rep < 0 or rep >= 1 << 56:
        raise ValueError("role id must fit in 8 bits and rep in 56 bits")
    key = np.array([int(base_seed) & _MASK64, (int(rep) << 8) | rid], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _rng(seed, role):
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, 0, role)


def box_muller(rng, size):
    """Standard normal draws via Box-Muller on ``rng``'s uniforms."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    k = int(np.prod(shape))
    m = (k + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:k].reshape(shape)


def gen_design(n, p, seed):
    """Normalized i.i.d. Gaussian design."""
    return normalize_design(box_muller(_rng(seed, "design"), (n, p)))


def gen_theta(p, s, value=0.5, seed=0):
    """``s`` coordinates chosen uniformly without replacement, all set to ``value``."""
    if not 0 <= s <= p:
        raise ValueError("need 0 <= s <= p")
    theta = np.zeros(p)
    if s:
        idx = _rng(seed, "theta").choice(p, size=s, replace=False)
        theta[idx] = value
    return theta


def gen_noise(n, sigma, seed):
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    z = box_muller(_rng(seed, "noise"), n)
    return sigma * z


def censor(X, t):
    """Clamp every entry to ``[-t, t]``."""
    if t <= 0:
        raise ValueError("censoring level must be positive")
    return np.clip(as_matrix(X.matrix if hasattr(X, "matrix") else X), -t, t)


def mask_missing(X, pi, seed, rescaled=False):
    """Zero each entry independently with probability ``pi``.

    Returns ``(Z, Xi)`` with ``Z = X + Xi``.  With ``rescaled=True`` the
    observed matrix is divided by ``1 - pi`` so that it is unbiased for ``X``.
    """
    X = as_matrix(X.matrix if hasattr(X, "matrix") else X)
    if not 0 <= pi <= 1:
        raise ValueError("pi must be a probability")
    keep = _rng(seed, "mask").random(X.shape) >= pi
    Z = np.where(keep, X, 0.0)
    if rescaled:
        if pi >= 1:
            raise ValueError("cannot rescale with pi = 1")
        Z = Z / (1.0 - pi)
    return Z, Z - X


@dataclass(frozen=True)
class Truth:
    X: DesignMatrix
    theta_star: np.ndarray
    xi: np.ndarray
    Xi: np.ndarray


@dataclass(frozen=True)
class Instance:
    """Observed ``(y, Z)`` and, for simulated data, the ground truth."""

    y: np.ndarray
    Z: np.ndarray
    truth: Truth = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = self.truth
        if t is None:
            return
        X = t.X.matrix
        scale = max(1.0, float(np.abs(self.y).max()), float(np.abs(X).max()))
        if np.max(np.abs(self.y - X @ t.theta_star - t.xi)) > 1e-12 * scale * max(1.0, np.abs(t.theta_star).sum()):
            raise ValueError("instance violates y = X theta* + xi")
        if np.max(np.abs(self.Z - X - t.Xi)) > 1e-12 * scale:
            raise ValueError("instance violates Z = X + Xi")


@dataclass(frozen=True)
class ThresholdRule:
    """``kind`` in ``none``, ``fixed`` (``tau``), ``b1`` (``a``, ``alpha``), ``b2``, ``star``."""

    kind: str = "none"
    tau: float = 0.0
    a: float = None
    alpha: float = 2.0

    def value(self, est):
        if self.kind == "none":
            return None
        if self.kind == "fixed":
            return self.tau
        if self.kind == "star":
            return c_star(self.alpha) * est.delta * est.l1_norm
        if self.kind == "b1":
            return tau1("b1", est.epsilon, est.delta, self.alpha, a=self.a)
        if self.kind == "b2":
            return tau1("b2", est.epsilon, est.delta, self.alpha, l1_of_estimate=est.l1_norm)
        raise ValueError(f"unknown threshold kind {self.kind!r}")

    def apply(self, est):
        tau = self.value(est)
        return est if tau is None else threshold(est, tau)

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.tau:g}"
        if self.kind == "b1":
            return f"b1:{self.a:g}:{self.alpha:g}"
        if self.kind in ("b2", "star"):
            return f"{self.kind}:{self.alpha:g}"
        return "none"


@dataclass(frozen=True)
class EstimatorSpec:
    """One table row: a selector, how to pick epsilon, and an optional threshold.

    ``epsilon=None`` means the default rule evaluated at the selector's delta.
    """

    label: str
    config: SelectorConfig
    threshold: ThresholdRule = ThresholdRule()
    epsilon: float = None


@dataclass(frozen=True)
class ExperimentSpec:
    model: tuple = ("censored", 0.9, False)
    n: int = 100
    p: int = 500
    s: int = 1
    theta_value: float = 0.5
    sigma: float = DEFAULT_SIGMA
    estimators: tuple = ()
    reps: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 <= self.s <= self.p:
            raise ValueError("need 0 <= s <= p")
        if self.model[0] not in ("censored", "missing"):
            raise ValueError(f"unknown model {self.model[0]!r}")


@dataclass(frozen=True)
class MetricsRow:
    err1: float
    err2: float
    nb1: int
    nb2: int
    exact: int
    sign_ok: int


METRIC_NAMES = ("err1", "err2", "nb1", "nb2", "exact", "sign_ok")


def metrics(theta_hat, theta_star, X, tol=None):
    """Squared estimation error, squared prediction error and support counts."""
    theta_hat = np.asarray(theta_hat.theta_hat if hasattr(theta_hat, "theta_hat") else theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    X = as_matrix(X.matrix if hasattr(X, "matrix") else X)
    kw = {} if tol is None else {"tol": tol}
    d = theta_hat - theta_star
    S_hat = set(support(theta_hat, **kw).tolist())
    S_true = set(support(theta_star, **kw).tolist())
    fit = X @ d
    return MetricsRow(
        err1=float(d @ d),
        err2=float(fit @ fit),
        nb1=len(S_hat),
        nb2=len(S_hat & S_true),
        exact=int(S_hat == S_true),
        sign_ok=int(compare_signs(theta_hat, theta_star, **kw)[0]),
    )


def make_instance(spec, rep):
    """Draw replicate ``rep`` of an experiment; depends only on ``(base_seed, rep)``."""
    seed = spec.base_seed
    X = normalize_design(box_muller(stream(seed, rep, "design"), (spec.n, spec.p)))
    theta = gen_theta(spec.p, spec.s, spec.theta_value, stream(seed, rep, "theta"))
    xi = spec.sigma * box_muller(stream(seed, rep, "noise"), spec.n)
    kind, param, rescaled = spec.model
    meta = {"n": spec.n, "p": spec.p, "s": spec.s, "sigma": spec.sigma, "seed": seed, "rep": rep,
            "model": kind}
    if kind == "censored":
        Z = censor(X, param)
        meta["effective_delta"] = max(0.0, float(np.abs(X.matrix).max()) - param)
    else:
        Z, _ = mask_missing(X, param, stream(seed, rep, "mask"), rescaled=rescaled)
    Xi = Z - X.matrix
    y = X.matrix @ theta + xi
    return Instance(y, Z, Truth(X, theta, xi, Xi), meta)


def _resolve(est_spec, spec):
    cfg = est_spec.config
    if cfg.variant == "Lasso":
        return cfg
    eps = est_spec.epsilon
    if eps is None:
        eps = epsilon_rule(cfg.delta, spec.sigma, spec.n, spec.p)
    return replace(cfg, epsilon=eps)


def _run_rep(args):
    spec, rep = args
    inst = make_instance(spec, rep)
    fits = {}
    out = []
    for es in spec.estimators:
        cfg = _resolve(es, spec)
        if cfg not in fits:
            try:
                with warnings.catch_warnings():
                    # the observed Z is deliberately left unnormalized
                    warnings.filterwarnings("ignore", "lasso_path: design columns", UserWarning)
                    fits[cfg] = estimate(inst.Z, inst.y, cfg, sigma=spec.sigma)
            except SelectorInfeasibleError as exc:
                fits[cfg] = exc.status
        fit = fits[cfg]
        if isinstance(fit, str):
            out.append(fit)
        else:
            out.append(metrics(es.threshold.apply(fit), inst.truth.theta_star, inst.truth.X))
    return out


@dataclass(frozen=True)
class TableRow:
    label: str
    mean: dict
    std: dict
    exact: int
    reps_ok: int
    failures: dict


@dataclass(frozen=True)
class TableReport:
    rows: tuple
    reps: int
    meta: dict = field(default_factory=dict)

    def __getitem__(self, label):
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self):
        return {
            "meta": self.meta,
            "reps": self.reps,
            "rows": [
                {"label": r.label, "mean": r.mean, "std": r.std, "exact": r.exact,
                 "reps_ok": r.reps_ok, "failures": r.failures}
                for r in self.rows
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self):
        lines = ["| | Err1 | Err2 | Nb1 | Nb2 | Exact |", "|---|---|---|---|---|---|"]
        for r in self.rows:
            m, s = r.mean, r.std
            lines.append(f"| {r.label} | {_fmt(m['err1'])} | {_fmt(m['err2'])} | {_fmt(m['nb1'])} "
                         f"| {_fmt(m['nb2'])} | {r.exact} |")
            lines.append(f"| | ({_fmt(s['err1'])}) | ({_fmt(s['err2'])}) | ({_fmt(s['nb1'])}) "
                         f"| ({_fmt(s['nb2'])}) | |")
        return "\n".join(lines) + "\n"


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.4g}"


def _aggregate(label, results, reps):
    ok = [r for r in results if isinstance(r, MetricsRow)]
    failures = {}
    for r in results:
        if isinstance(r, str):
            failures[r] = failures.get(r, 0) + 1
    mean, std = {}, {}
    for name in METRIC_NAMES:
        vals = [float(getattr(r, name)) for r in ok]
        if not vals:
            mean[name] = std[name] = float("nan")
            continue
        mu = math.fsum(vals) / len(vals)
        mean[name] = mu
        std[name] = math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
    return TableRow(label, mean, std, int(sum(r.exact for r in ok)), len(ok), failures)


def run_monte_carlo(spec, workers=1, progress=None):
    """Run every estimator of ``spec`` on ``spec.reps`` fresh replicates.

    Replicates are independent given ``base_seed``; ``workers > 1`` runs them
    in a process pool and gives identical output.
    """
    if not spec.estimators:
        raise ValueError("experiment has no estimators")
    jobs = [(spec, k) for k in range(spec.reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            per_rep = list(pool.map(_run_rep, jobs))
    else:
        per_rep = []
        for job in jobs:
            per_rep.append(_run_rep(job))
            if progress:
                progress(job[1] + 1, spec.reps)
    rows = tuple(
        _aggregate(es.label, [res[i] for res in per_rep], spec.reps)
        for i, es in enumerate(spec.estimators)
    )
    meta = {
        "model": list(spec.model),
        "n": spec.n,
        "p": spec.p,
        "s": spec.s,
        "sigma": spec.sigma,
        "theta_value": spec.theta_value,
        "base_seed": spec.base_seed,
    }
    return TableReport(rows, spec.reps, meta)


def elbow_scan(spec, delta_grid, variant="MU2", theta_set=None, workers=1):
    """Mean number of selected coefficients as a function of delta.

    All grid points share the same replicates (same ``base_seed``).
    """
    grid = [float(d) for d in delta_grid]
    if not grid:
        raise ValueError("empty delta grid")
    if theta_set is None:
        theta_set = FeasibleSet("nonneg")
    ests = tuple(
        EstimatorSpec(f"delta={d:g}", SelectorConfig(variant, delta=d, theta_set=theta_set)) for d in grid
    )
    report = run_monte_carlo(replace(spec, estimators=ests), workers=workers)
    return [(d, row.mean["nb1"]) for d, row in zip(grid, report.rows)]


# configuration files -----------------------------------------------------------------

class ConfigError(ValueError):
    """Bad experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, msg):
        self.key = key
        super().__init__(f"{key}: {msg}")


_KEYS = {"model", "n", "p", "s", "theta_value", "sigma", "reps", "seed", "estimators", "threshold",
         "theta_set", "epsilon", "deltas", "workers"}


def parse_threshold(text):
    """``none | fixed:t | b1:a:alpha | b2:alpha | star:alpha``."""
    parts = text.strip().split(":")
    kind = parts[0]
    try:
        if kind == "none" and len(parts) == 1:
            return ThresholdRule()
        if kind == "fixed" and len(parts) == 2:
            return ThresholdRule("fixed", tau=float(parts[1]))
        if kind == "b1" and len(parts) == 3:
            return ThresholdRule("b1", a=float(parts[1]), alpha=float(parts[2]))
        if kind in ("b2", "star") and len(parts) == 2:
            return ThresholdRule(kind, alpha=float(parts[1]))
    except ValueError:
        pass
    raise ValueError(f"bad threshold {text!r}")


def _delta_label(d):
    return f"δ={d:g}"


def parse_estimators(text, threshold_rule=ThresholdRule(), theta_set=None, epsilon=None):
    """Comma list of ``lasso``, ``dantzig``, ``mu1:delta``, ``mu2:delta``.

    Each estimator yields a raw row and, unless ``threshold_rule`` is none, a
    thresholded ``T-`` row.  ``theta_set`` applies to the MU selectors; the
    Dantzig selector is always unconstrained.
    """
    theta_set = theta_set or FeasibleSet("nonneg")
    out = []
    for item in (t.strip() for t in text.split(",")):
        if not item:
            continue
        head, _, rest = item.partition(":")
        head = head.lower()
        if head == "lasso" and not rest:
            label, cfg = "Lasso", SelectorConfig("Lasso")
        elif head == "dantzig" and not rest:
            label, cfg = "Dantzig", SelectorConfig("Dantzig")
        elif head in ("mu1", "mu2") and rest:
            d = float(rest)
            label = _delta_label(d) if head == "mu2" else f"MU1 {_delta_label(d)}"
            cfg = SelectorConfig(head.upper(), delta=d, theta_set=theta_set)
        else:
            raise ValueError(f"bad estimator {item!r}")
        out.append(EstimatorSpec(label, cfg, ThresholdRule(), epsilon))
        if threshold_rule.kind != "none":
            out.append(EstimatorSpec(f"T-{label}", cfg, threshold_rule, epsilon))
    if not out:
        raise ValueError("no estimators given")
    return tuple(out)


def _parse_model(text):
    parts = text.strip().split(":")
    if parts[0] == "censored" and len(parts) == 2:
        return ("censored", float(parts[1]), False)
    if parts[0] == "missing" and len(parts) in (2, 3):
        rescaled = len(parts) == 3
        if rescaled and parts[2] != "rescaled":
            raise ValueError(text)
        return ("missing", float(parts[1]), rescaled)
    raise ValueError(text)


def load_experiment(source, overrides=None):
    """Read an experiment from a ``[experiment]`` INI file or string.

    Returns ``(spec, extras)`` where ``extras`` holds keys that are not part
    of :class:`ExperimentSpec` (``deltas``, ``workers``).  See README for the
    schema.
    """
    cp = configparser.ConfigParser(interpolation=None)
    if "\n" in str(source) or str(source).lstrip().startswith("["):
        cp.read_string(str(source))
    else:
        with open(source) as fh:
            cp.read_file(fh)
    if "experiment" not in cp:
        raise ConfigError("[experiment]", "missing section")
    raw = dict(cp["experiment"])
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = str(v)
    for k in raw:
        if k not in _KEYS:
            raise ConfigError(k, "unknown key")

    def get(key, conv, default):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"bad value {raw[key]!r} ({exc})") from None

    theta_set = get("theta_set", parse_theta_set, FeasibleSet("nonneg"))
    rule = get("threshold", parse_threshold, ThresholdRule())
    eps_text = raw.get("epsilon", "auto").strip()
    if eps_text == "auto":
        eps = None
    else:
        eps = get("epsilon", float, None)
    try:
        ests = parse_estimators(raw.get("estimators", "lasso, dantzig, mu2:0.1"), rule, theta_set, eps)
    except ValueError as exc:
        raise ConfigError("estimators", str(exc)) from None
    try:
        spec = ExperimentSpec(
            model=get("model", _parse_model, ("censored", 0.9, False)),
            n=get("n", int, 100),
            p=get("p", int, 500),
            s=get("s", int, 1),
            theta_value=get("theta_value", float, 0.5),
            sigma=get("sigma", float, DEFAULT_SIGMA),
            estimators=ests,
            reps=get("reps", int, 100),
            base_seed=get("seed", int, 0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("experiment", str(exc)) from None
    extras = {
        "deltas": get("deltas", lambda t: [float(x) for x in t.replace(",", " ").split()], None),
        "workers": get("workers", int, 1),
        "theta_set": theta_set,
    }
    return spec, extras


def orthogonal_design(n, p, seed):
    """``sqrt(n) Q`` with ``Q`` a random n x p matrix with orthonormal columns."""
    if p > n:
        raise ValueError("orthogonal design needs p <= n")
    q, r = np.linalg.qr(box_muller(_rng(seed, "design"), (n, p)))
    q = q * np.sign(np.diag(r))
    return DesignMatrix(np.sqrt(n) * q, centered=False, gram_diag_unit=True)
