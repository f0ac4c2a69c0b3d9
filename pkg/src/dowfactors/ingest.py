"""
Loading and cleaning of the weekly Dow Jones Index file.

The raw file is comma separated with a header row naming 16 attributes.
Dollar fields carry a leading ``$``, dates are written month/day/year and the
two "previous week" fields are blank on a stock's first observed week.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Optional

from .errors import MalformedRow, MissingColumn, SchemaViolation

logger = logging.getLogger(__name__)

COLUMNS = (
    "quarter",
    "stock",
    "date",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "percent_change_price",
    "percent_change_volume_over_last_wk",
    "previous_weeks_volume",
    "next_weeks_open",
    "next_weeks_close",
    "percent_change_next_weeks_price",
    "days_to_next_dividend",
    "percent_return_next_dividend",
)
N_ATTRIBUTES = len(COLUMNS)

DOLLAR_FIELDS = ("open", "high", "low", "close", "next_weeks_open", "next_weeks_close")
PERCENT_FIELDS = (
    "percent_change_price",
    "percent_change_next_weeks_price",
    "percent_return_next_dividend",
)
OPTIONAL_FIELDS = ("percent_change_volume_over_last_wk", "previous_weeks_volume")

# Price-vs-percent consistency tolerance, in percentage points.
CONSISTENCY_TOL = 0.05

_DOLLAR_RE = re.compile(r"^\$?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$")
_INT_RE = re.compile(r"^(\d{1,3}(,\d{3})+|\d+)$")
_DATE_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")


@dataclass(frozen=True)
class WeeklyRecord:
    quarter: int
    stock: str
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int
    percent_change_price: float
    percent_change_volume_over_last_wk: Optional[float]
    previous_weeks_volume: Optional[int]
    next_weeks_open: float
    next_weeks_close: float
    percent_change_next_weeks_price: float
    days_to_next_dividend: int
    percent_return_next_dividend: float


@dataclass(frozen=True)
class Dataset:
    """Parsed records sorted by (stock, date).

    ``attribute_count`` is the header width and ``ragged_rows`` lists
    ``(row index, field count)`` for data rows whose width disagrees with the
    header; such rows are kept out of ``records`` and rejected by
    :func:`validate`.
    """

    records: tuple[WeeklyRecord, ...]
    attribute_count: int = N_ATTRIBUTES
    ragged_rows: tuple[tuple[int, int], ...] = ()
    duplicates_removed: int = 0
    source: str = ""

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(sorted({r.stock for r in self.records}))

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(sorted({r.date for r in self.records}))

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class ValidationReport:
    row_count: int
    ticker_count: int
    week_count: int
    attribute_count: int
    duplicates_removed: int
    warnings: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            "Dataset validation",
            f"  rows               {self.row_count}",
            f"  tickers            {self.ticker_count}",
            f"  weeks              {self.week_count}",
            f"  attributes         {self.attribute_count}",
            f"  duplicates removed {self.duplicates_removed}",
            f"  warnings           {len(self.warnings)}",
        ]
        lines += [f"    - {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        pairs = [
            ("row_count", self.row_count),
            ("ticker_count", self.ticker_count),
            ("week_count", self.week_count),
            ("attribute_count", self.attribute_count),
            ("duplicates_removed", self.duplicates_removed),
            ("warning_count", len(self.warnings)),
        ]
        pairs += [(f"warning.{i}", w) for i, w in enumerate(self.warnings)]
        return "".join(f"{k}={v}\n" for k, v in pairs)


def parse_dollar(text: str) -> float:
    """Parse ``"$1,234.56"`` style text. Raises ValueError on anything else."""
    s = text.strip()
    if not _DOLLAR_RE.match(s):
        raise ValueError("not a dollar amount")
    return float(s.lstrip("$").replace(",", ""))


def parse_date(text: str) -> date:
    m = _DATE_RE.match(text.strip())
    if not m:
        raise ValueError("expected month/day/year")
    month, day, year = (int(g) for g in m.groups())
    return date(year, month, day)


def _parse_int(text: str) -> int:
    s = text.strip()
    if not _INT_RE.match(s):
        raise ValueError("not a non-negative integer")
    return int(s.replace(",", ""))


def _parse_signed_int(text: str) -> int:
    s = text.strip()
    neg = s.startswith("-")
    value = _parse_int(s[1:] if neg else s)
    return -value if neg else value


def _parse_row(row: dict[str, str], index: int) -> WeeklyRecord:
    values: dict[str, object] = {}

    def get(name, parser, optional=False):
        raw = row[name]
        if raw is None or raw.strip() == "":
            if optional:
                return None
            raise MalformedRow(index, name, raw or "", "required field is blank")
        try:
            return parser(raw)
        except ValueError as exc:
            raise MalformedRow(index, name, raw, str(exc)) from None

    values["quarter"] = get("quarter", _parse_int)
    values["stock"] = get("stock", lambda s: s.strip())
    values["date"] = get("date", parse_date)
    for name in DOLLAR_FIELDS:
        values[name] = get(name, parse_dollar)
    values["volume"] = get("volume", _parse_int)
    for name in PERCENT_FIELDS:
        values[name] = get(name, float)
    values["percent_change_volume_over_last_wk"] = get(
        "percent_change_volume_over_last_wk", float, optional=True)
    values["previous_weeks_volume"] = get("previous_weeks_volume", _parse_int, optional=True)
    values["days_to_next_dividend"] = get("days_to_next_dividend", _parse_signed_int)

    rec = WeeklyRecord(**values)
    if rec.quarter not in (1, 2):
        raise MalformedRow(index, "quarter", row["quarter"], "quarter must be 1 or 2")
    if rec.low > rec.high:
        raise MalformedRow(index, "low", row["low"], "low exceeds high")
    if rec.open <= 0:
        raise MalformedRow(index, "open", row["open"], "price must be positive")
    if rec.close <= 0:
        raise MalformedRow(index, "close", row["close"], "price must be positive")
    return rec


def _sort_key(r: WeeklyRecord):
    return (r.stock, r.date)


def read_records(lines: Iterable[str], source: str = "") -> Dataset:
    """Parse CSV text lines (header first) into a :class:`Dataset`."""
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn(f"{source or 'input'}: empty file, no header row") from None
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise MissingColumn(f"header lacks expected attribute(s): {', '.join(missing)}")
    pos = {name: header.index(name) for name in COLUMNS}

    records = []
    ragged = []
    # Row indices count data rows from 1, i.e. file line number minus one.
    for index, fields_ in enumerate(reader, start=1):
        if not fields_ or all(not f.strip() for f in fields_):
            continue
        if len(fields_) != len(header):
            ragged.append((index, len(fields_)))
            continue
        row = {name: fields_[pos[name]] for name in COLUMNS}
        records.append(_parse_row(row, index))

    records.sort(key=_sort_key)
    return Dataset(tuple(records), attribute_count=len(header),
                   ragged_rows=tuple(ragged), source=source)


def parse_dataset(path) -> Dataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        return read_records(fh, source=str(path))


def dedup(d: Dataset) -> Dataset:
    """Drop exact duplicate records, keeping the first occurrence."""
    seen = set()
    kept = []
    for rec in d.records:
        if rec in seen:
            continue
        seen.add(rec)
        kept.append(rec)
    kept.sort(key=_sort_key)
    removed = len(d.records) - len(kept)
    if removed:
        logger.info("removed %d duplicate record(s)", removed)
    return Dataset(tuple(kept), attribute_count=d.attribute_count, ragged_rows=d.ragged_rows,
                   duplicates_removed=d.duplicates_removed + removed, source=d.source)


def validate(d: Dataset) -> ValidationReport:
    """Check the schema and the full ticker x week grid.

    Raises SchemaViolation when the attribute count is not 16, when a row has
    the wrong width, or when some (ticker, date) pair is missing or carries
    two conflicting records. Softer problems are returned as warnings.
    """
    if d.attribute_count != N_ATTRIBUTES:
        raise SchemaViolation(
            f"expected {N_ATTRIBUTES} attributes, header has {d.attribute_count}")
    if d.ragged_rows:
        idx, width = d.ragged_rows[0]
        raise SchemaViolation(
            f"row {idx} has {width} fields, expected {N_ATTRIBUTES} "
            f"({len(d.ragged_rows)} ragged row(s) in total)")

    tickers, dates = d.tickers, d.dates
    cells: dict[tuple[str, date], WeeklyRecord] = {}
    for rec in d.records:
        key = (rec.stock, rec.date)
        if key in cells:
            raise SchemaViolation(
                f"conflicting records for {rec.stock} on {rec.date.isoformat()}")
        cells[key] = rec
    if len(cells) != len(tickers) * len(dates):
        absent = [(t, dt) for t in tickers for dt in dates if (t, dt) not in cells]
        t, dt = absent[0]
        raise SchemaViolation(
            f"{len(absent)} (ticker, date) pair(s) missing, first: {t} {dt.isoformat()}")

    warnings: list[str] = []
    first_week = {}
    for rec in d.records:
        first_week.setdefault(rec.stock, rec.date)
    for rec in d.records:
        implied = 100.0 * (rec.close - rec.open) / rec.open
        if abs(implied - rec.percent_change_price) > CONSISTENCY_TOL:
            warnings.append(
                f"{rec.stock} {rec.date.isoformat()}: percent_change_price "
                f"{rec.percent_change_price:g} disagrees with open/close ({implied:.5f})")
        if rec.date != first_week[rec.stock]:
            for name in OPTIONAL_FIELDS:
                if getattr(rec, name) is None:
                    warnings.append(f"{rec.stock} {rec.date.isoformat()}: {name} is blank")

    for w in warnings:
        logger.warning(w)
    return ValidationReport(
        row_count=len(d.records),
        ticker_count=len(tickers),
        week_count=len(dates),
        attribute_count=d.attribute_count,
        duplicates_removed=d.duplicates_removed,
        warnings=warnings,
    )


def load(path) -> tuple[Dataset, ValidationReport]:
    """Parse, deduplicate and validate in one call."""
    d = dedup(parse_dataset(path))
    return d, validate(d)

