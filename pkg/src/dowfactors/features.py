"""
Return matrix, market values, common factors and EDA transforms.

Market value is proxied by dollar trading value (close x volume) because the
dataset carries no shares-outstanding figure. MKT is the value-weighted
cross-sectional mean return; SMB splits each week at the median market value
and takes equal-weighted group means.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateWeek,
    EmptySeries,
    FactorFileError,
    MissingCell,
    NonPositiveInput,
    UnknownTicker,
)
from .ingest import Dataset, parse_date

DESIGN_COLUMNS = ("index_return", "total_volume", "smb", "mkt", "cluster")


@dataclass(frozen=True)
class ReturnMatrix:
    """Weekly percent price changes, one row per ticker, one column per week.

    ``forward`` holds each cell's ``percent_change_next_weeks_price`` (the
    prediction target) and ``quarters`` the quarter label of each week.
    """

    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray
    forward: Optional[np.ndarray] = None
    quarters: Optional[tuple[int, ...]] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row(self, ticker: str) -> np.ndarray:
        try:
            return self.values[self.tickers.index(ticker)]
        except ValueError:
            raise UnknownTicker(f"unknown ticker {ticker!r}") from None


@dataclass(frozen=True)
class MarketValueTable:
    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray


@dataclass(frozen=True)
class FactorSeries:
    dates: tuple[date, ...]
    mkt: np.ndarray
    smb: np.ndarray
    hml: np.ndarray
    index_return: np.ndarray
    total_volume: np.ndarray
    risk_free: np.ndarray


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    dates: tuple[date, ...]
    quarters: tuple[int, ...]
    target: str


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _grid(d: Dataset, attr: str) -> np.ndarray:
    tickers, dates = d.tickers, d.dates
    ti = {t: i for i, t in enumerate(tickers)}
    di = {dt: j for j, dt in enumerate(dates)}
    out = np.full((len(tickers), len(dates)), np.nan)
    filled = np.zeros(out.shape, dtype=bool)
    for rec in d.records:
        i, j = ti[rec.stock], di[rec.date]
        out[i, j] = float(getattr(rec, attr))
        filled[i, j] = True
    if not filled.all():
        i, j = np.argwhere(~filled)[0]
        raise MissingCell(f"no record for {tickers[i]} on {dates[j].isoformat()}")
    return out


def pivot_returns(d: Dataset) -> ReturnMatrix:
    if not d.records:
        raise MissingCell("dataset has no records")
    values = _grid(d, "percent_change_price")
    forward = _grid(d, "percent_change_next_weeks_price")
    by_date = {}
    for rec in d.records:
        by_date.setdefault(rec.date, rec.quarter)
    dates = d.dates
    return ReturnMatrix(d.tickers, dates, _readonly(values), _readonly(forward),
                        tuple(by_date[dt] for dt in dates))


def market_values(d: Dataset) -> MarketValueTable:
    close = _grid(d, "close")
    volume = _grid(d, "volume")
    return MarketValueTable(d.tickers, d.dates, _readonly(close * volume))


def _check_aligned(r: ReturnMatrix, mv: MarketValueTable) -> None:
    if r.tickers != mv.tickers or r.dates != mv.dates:
        raise ValueError("return matrix and market value table are not aligned")


def compute_mkt(r: ReturnMatrix, mv: MarketValueTable) -> np.ndarray:
    """Value-weighted cross-sectional mean return per week."""
    _check_aligned(r, mv)
    totals = mv.values.sum(axis=0)
    bad = np.flatnonzero(totals <= 0)
    if bad.size:
        raise DegenerateWeek(f"total market value is zero on {r.dates[bad[0]].isoformat()}")
    weights = mv.values / totals
    return (weights * r.values).sum(axis=0)


def compute_smb(r: ReturnMatrix, mv: MarketValueTable) -> np.ndarray:
    """Small-minus-big return spread per week.

    Stocks strictly below the week's median market value form the small
    group, those strictly above form the big group; stocks sitting exactly
    on the median belong to neither.
    """
    _check_aligned(r, mv)
    if len(r.tickers) < 2:
        raise ValueError("SMB needs at least two tickers")
    out = np.empty(len(r.dates))
    for j in range(len(r.dates)):
        col = mv.values[:, j]
        med = np.median(col)
        small, big = col < med, col > med
        if not small.any() or not big.any():
            raise DegenerateWeek(
                f"cannot split by size on {r.dates[j].isoformat()}: market values do not "
                "straddle the median")
        out[j] = r.values[small, j].mean() - r.values[big, j].mean()
    return out


def compute_index_and_volume(d: Dataset, mv: MarketValueTable,
                             external_index: Optional[np.ndarray] = None):
    """Return ``(index_return, total_volume)``.

    Without an external index series the index return is the price-weighted
    weekly return of the constituents, ``100 * (sum(close) / sum(open) - 1)``,
    which is how the Dow Jones Industrial Average itself is weighted. It is
    deliberately not the value-weighted MKT factor, which sits beside it in
    the design matrix.
    """
    volume = _grid(d, "volume")
    total_volume = volume.sum(axis=0)
    if external_index is not None:
        index_return = np.asarray(external_index, dtype=float).copy()
        if index_return.shape != (len(mv.dates),):
            raise ValueError("external index series does not match the week axis")
    else:
        opens = _grid(d, "open").sum(axis=0)
        closes = _grid(d, "close").sum(axis=0)
        index_return = 100.0 * (closes - opens) / opens
    return index_return, total_volume


def read_factor_file(path, dates: Sequence[date]) -> np.ndarray:
    """Read a two-column ``date,value`` file and align it to ``dates``.

    A non-numeric first row is taken as a header. Dates may be ISO or
    month/day/year. Every requested date must be present.
    """
    path = Path(path)
    table: dict[date, float] = {}
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise FactorFileError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            raw_date, raw_value = row[0].strip(), row[1].strip()
            try:
                dt = _parse_any_date(raw_date)
                value = float(raw_value)
            except ValueError:
                if lineno == 1:
                    continue
                raise FactorFileError(f"{path}:{lineno}: cannot parse {row!r}") from None
            table[dt] = value
    missing = [dt for dt in dates if dt not in table]
    if missing:
        raise FactorFileError(f"{path}: no value for {missing[0].isoformat()} "
                              f"({len(missing)} date(s) missing)")
    return np.array([table[dt] for dt in dates])


def _parse_any_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        return parse_date(text)


def build_factors(d: Dataset, r: ReturnMatrix, mv: MarketValueTable, *,
                  hml: Optional[np.ndarray] = None,
                  risk_free: Optional[np.ndarray] = None,
                  index: Optional[np.ndarray] = None) -> FactorSeries:
    """Assemble every common factor on the return matrix's week axis.

    HML and the risk-free rate default to zero when no series is supplied.
    """
    n = len(r.dates)
    mkt = compute_mkt(r, mv)
    smb = compute_smb(r, mv)
    index_return, total_volume = compute_index_and_volume(d, mv, index)

    def series(x):
        if x is None:
            return np.zeros(n)
        x = np.asarray(x, dtype=float)
        if x.shape != (n,):
            raise ValueError(f"factor series has shape {x.shape}, expected ({n},)")
        return x.copy()

    return FactorSeries(
        dates=r.dates,
        mkt=_readonly(mkt),
        smb=_readonly(smb),
        hml=_readonly(series(hml)),
        index_return=_readonly(index_return),
        total_volume=_readonly(total_volume),
        risk_free=_readonly(series(risk_free)),
    )


def log_transform(prices) -> np.ndarray:
    x = np.asarray(prices, dtype=float)
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        i = int(bad[0])
        raise NonPositiveInput(i, float(x.flat[i]))
    return np.log(x)


def histogram(series, bin_count: int) -> list[tuple[float, float, int]]:
    """Equal-width histogram over ``[min, max]`` with right-closed bins.

    A value on an interior edge counts toward the lower bin; the maximum
    lands in the last bin. A constant series gets a single
    zero-width bin holding every value.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise EmptySeries("histogram of an empty series")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return [(lo, hi, int(x.size))]
    width = (hi - lo) / bin_count
    edges = [lo + i * width for i in range(bin_count)] + [hi]
    # Bins are closed on the right: [e0, e1], (e1, e2], ..., (e_{n-1}, e_n].
    idx = np.searchsorted(np.asarray(edges[1:-1]), x, side="left")
    counts = np.bincount(idx, minlength=bin_count)
    return [(edges[i], edges[i + 1], int(counts[i])) for i in range(bin_count)]


def build_design_matrix(r: ReturnMatrix, f: FactorSeries, cluster_feature,
                        target_ticker: str,
                        standardize_rows: Optional[Sequence[int]] = None) -> DesignMatrix:
    """Feature rows for predicting ``target_ticker``'s next-week return.

    Columns are fixed to ``DESIGN_COLUMNS``. Total volume is standardized with
    the mean and standard deviation of ``standardize_rows`` (all rows when
    omitted); row indices refer to the rows kept after dropping weeks whose
    target is undefined.
    """
    if target_ticker not in r.tickers:
        raise UnknownTicker(f"unknown ticker {target_ticker!r}")
    if r.forward is None:
        raise ValueError("return matrix carries no forward returns")
    if f.dates != r.dates:
        raise ValueError("factor series and return matrix are not aligned")
    cluster_feature = np.asarray(cluster_feature, dtype=float)
    if cluster_feature.shape != (len(r.dates),):
        raise ValueError("cluster feature does not match the week axis")

    y_all = r.forward[r.tickers.index(target_ticker)]
    keep = np.flatnonzero(np.isfinite(y_all))

    volume = f.total_volume[keep].astype(float)
    ref = volume if standardize_rows is None else volume[np.asarray(standardize_rows, dtype=int)]
    mu = ref.mean()
    sd = ref.std()
    volume_z = (volume - mu) / (sd if sd > 0 else 1.0)

    X = np.column_stack([
        f.index_return[keep],
        volume_z,
        f.smb[keep],
        f.mkt[keep],
        cluster_feature[keep],
    ])
    quarters = r.quarters or (0,) * len(r.dates)
    return DesignMatrix(
        X=_readonly(np.ascontiguousarray(X)),
        y=_readonly(y_all[keep].copy()),
        columns=DESIGN_COLUMNS,
        dates=tuple(r.dates[j] for j in keep),
        quarters=tuple(quarters[j] for j in keep),
        target=target_ticker,
    )

