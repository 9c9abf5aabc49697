"""Dense vector and matrix kernels shared by the estimators and verifiers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DegenerateColumnError",
    "DesignMatrix",
    "UNIT_DIAG_TOL",
    "as_vector",
    "as_matrix",
    "norm",
    "normalize_design",
    "gram",
    "residual_corr",
    "read_csv_matrix",
    "write_csv_matrix",
]

UNIT_DIAG_TOL = 1e-9


class DegenerateColumnError(ValueError):
    """Raised when a design column has zero variance and cannot be scaled."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} is constant and cannot be normalized")


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(a, name="matrix"):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class DesignMatrix:
    """An n x p design together with its normalization metadata.

    Attributes
    ----------
    matrix : ndarray, shape (n, p)
    centered : bool
        Every column has zero mean.
    gram_diag_unit : bool
        Every diagonal entry of ``X.T @ X / n`` equals 1 within ``UNIT_DIAG_TOL``.
    """

    matrix: np.ndarray
    centered: bool = False
    gram_diag_unit: bool = False

    def __post_init__(self):
        m = as_matrix(self.matrix, "design")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.gram_diag_unit:
            diag = np.einsum("ij,ij->j", m, m) / m.shape[0]
            if np.max(np.abs(diag - 1.0)) > UNIT_DIAG_TOL:
                raise ValueError("gram_diag_unit set but diag(X'X/n) is not 1")

    @classmethod
    def from_array(cls, a):
        """Wrap an arbitrary array, detecting the flags from the data."""
        m = as_matrix(a, "design")
        n = m.shape[0]
        centered = bool(np.all(np.abs(m.mean(axis=0)) <= 1e-12 * max(1.0, np.abs(m).max())))
        diag = np.einsum("ij,ij->j", m, m) / n
        unit = bool(np.max(np.abs(diag - 1.0)) <= UNIT_DIAG_TOL)
        return cls(m, centered=centered, gram_diag_unit=unit)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def p(self):
        return self.matrix.shape[1]


def _raw(a):
    return a.matrix if isinstance(a, DesignMatrix) else np.asarray(a, dtype=float)


def norm(v, kind="l2", q=None):
    """Vector norm.

    Parameters
    ----------
    v : array_like
        Nonempty vector with finite entries.
    kind : {'l1', 'l2', 'linf', 'lq'}
    q : float, optional
        Exponent for ``kind='lq'``; must lie in (1, 2].
    """
    v = as_vector(v)
    a = np.abs(v)
    if kind == "l1":
        return float(a.sum())
    if kind == "l2":
        return float(np.sqrt(np.dot(a, a)))
    if kind == "linf":
        return float(a.max())
    if kind == "lq":
        if q is None or not (1.0 < q <= 2.0):
            raise ValueError(f"q must lie in (1, 2], got {q}")
        scale = a.max()
        if scale == 0.0:
            return 0.0
        return float(scale * np.sum((a / scale) ** q) ** (1.0 / q))
    raise ValueError(f"unknown norm kind {kind!r}")


def normalize_design(raw):
    """Center each column and scale it so that ``diag(X.T @ X / n) == 1``.

    Raises
    ------
    DegenerateColumnError
        If some column is constant.
    """
    m = as_matrix(_raw(raw), "raw design")
    n = m.shape[0]
    if n < 2:
        raise ValueError("normalization needs at least two rows")
    centered = m - m.mean(axis=0)
    col_norm = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    scale = np.abs(m).max(axis=0)
    bad = np.flatnonzero(col_norm <= 1e-12 * np.maximum(scale, 1e-300))
    if bad.size:
        raise DegenerateColumnError(int(bad[0]))
    out = centered / (col_norm / np.sqrt(n))
    return DesignMatrix(out, centered=True, gram_diag_unit=True)


def gram(X):
    """Return ``X.T @ X / n`` as a symmetric p x p array."""
    m = as_matrix(_raw(X), "design")
    g = m.T @ m / m.shape[0]
    return (g + g.T) / 2.0


def residual_corr(Z, y, theta):
    """``|Z.T (y - Z theta) / n|_inf``."""
    Z = as_matrix(_raw(Z), "Z")
    y = as_vector(y, "y")
    theta = as_vector(theta, "theta")
    n, p = Z.shape
    if y.size != n or theta.size != p:
        raise ValueError(f"dimension mismatch: Z is {n}x{p}, y has {y.size}, theta has {theta.size}")
    return float(np.max(np.abs(Z.T @ (y - Z @ theta))) / n)


def read_csv_matrix(path, header=False):
    """Read a comma-separated numeric matrix, one row per line."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if header:
        rows = rows[1:]
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    out = []
    for lineno, r in enumerate(rows, start=2 if header else 1):
        if len(r) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(r)}")
        try:
            out.append([float(c) for c in r])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return as_matrix(np.array(out), str(path))


def write_csv_matrix(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in a:
            w.writerow([repr(float(x)) for x in row])
