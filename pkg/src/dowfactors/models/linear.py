"""Least-squares regression and the three-factor excess-return fit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionMismatch, RankDeficient, TooFewRows
from ..features import FactorSeries, ReturnMatrix

# |R_jj| / ||a_j|| below this means column j is (nearly) in the span of the
# columns before it.
RANK_TOL = 1e-10

FACTOR_NAMES = ("mkt_excess", "smb", "hml")


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: tuple[float, ...]
    names: tuple[str, ...]
    residual_variance: float
    # factor columns dropped because the factor series was identically zero
    undefined: tuple[str, ...] = field(default=())

    kind = "linear"

    def coef(self, name: str) -> Optional[float]:
        """Coefficient by column name; ``None`` for a dropped zero factor."""
        if name in self.undefined:
            return None
        return self.coefficients[self.names.index(name)]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.coefficients):
            raise DimensionMismatch(
                f"expected {len(self.coefficients)} columns, got shape {X.shape}")
        return self.intercept + X @ np.asarray(self.coefficients)


def _back_substitute(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = R.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def fit_ols(X, y, names: Optional[Sequence[str]] = None) -> LinearModel:
    """Least-squares fit of ``y`` on ``[1, X]`` via Householder QR.

    Raises RankDeficient naming the first column that is (nearly) a linear
    combination of the intercept and the columns before it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if y.shape != (n,):
        raise DimensionMismatch(f"X has {n} rows but y has shape {y.shape}")
    if n <= p + 1:
        raise TooFewRows(f"need more than {p + 1} rows for {p} features, got {n}")
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(p))
    if len(names) != p:
        raise DimensionMismatch("names do not match the column count")

    A = np.column_stack([np.ones(n), X])
    Q, R = np.linalg.qr(A, mode="reduced")
    col_norms = np.linalg.norm(A, axis=0)
    for j in range(p + 1):
        if col_norms[j] == 0 or abs(R[j, j]) <= RANK_TOL * col_norms[j]:
            raise RankDeficient("intercept" if j == 0 else names[j - 1])
    beta = _back_substitute(R, Q.T @ y)

    resid = y - A @ beta
    dof = n - p - 1
    return LinearModel(
        intercept=float(beta[0]),
        coefficients=tuple(float(b) for b in beta[1:]),
        names=names,
        residual_variance=math.fsum(resid * resid) / dof,
    )


def fit_fama_french(r: ReturnMatrix, f: FactorSeries, ticker: str) -> LinearModel:
    """Regress the ticker's excess return on market excess return, SMB, HML.

    The intercept is the stock's alpha. A factor series that is identically
    zero carries no information; its column is dropped and its beta reported
    as undefined.
    """
    if f.dates != r.dates:
        raise ValueError("factor series and return matrix are not aligned")
    y = r.row(ticker) - f.risk_free
    cols = {
        "mkt_excess": f.mkt - f.risk_free,
        "smb": np.asarray(f.smb, dtype=float),
        "hml": np.asarray(f.hml, dtype=float),
    }
    used = [name for name in FACTOR_NAMES if np.any(cols[name] != 0)]
    undefined = tuple(name for name in FACTOR_NAMES if name not in used)
    X = np.column_stack([cols[name] for name in used]) if used else np.empty((len(y), 0))
    m = fit_ols(X, y, names=used)
    return LinearModel(m.intercept, m.coefficients, m.names, m.residual_variance, undefined)
