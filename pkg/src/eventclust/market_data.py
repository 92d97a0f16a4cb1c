"""Daily OHLCV ingestion, trading-calendar alignment, and return construction.

The trading calendar is induced from the market index series: a date counts
as a trading day iff the index traded on it. All relative-day arithmetic
(day 0 = event date, day -1 = previous trading day, ...) runs against that
calendar.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

PRICE_HEADER = ["date", "ticker", "open", "high", "low", "close", "volume"]
FACTOR_HEADER = ["date", "mkt_rf", "smb", "hml", "rf"]

# |daily rate| above this is almost certainly an unconverted percent or a
# broken row; load_factors warns but does not fail.
PLAUSIBLE_DAILY_RATE = 0.5


def _parse_iso_date(text: str) -> date:
    return date.fromisoformat(text.strip())


def _parse_factor_date(text: str) -> date:
    """Accept either ISO-8601 (2018-03-19) or compact (20180319) dates."""
    text = text.strip()
    if "-" in text:
        return date.fromisoformat(text)
    return datetime.strptime(text, "%Y%m%d").date()


@dataclass(frozen=True)
class TradingCalendar:
    """Strictly increasing sequence of trading dates with O(1) lookup."""

    dates: tuple[date, ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self.dates:
            raise DataError("trading calendar is empty")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"calendar dates not strictly increasing at {a} -> {b}")
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(self.dates)})

    def __len__(self) -> int:
        return len(self.dates)

    def __contains__(self, d: date) -> bool:
        return d in self._index

    def index(self, d: date) -> int:
        try:
            return self._index[d]
        except KeyError:
            raise DataError(f"{d} is not a trading day in the calendar") from None

    def shift(self, d: date, offset: int) -> date:
        """Trading date `offset` positions away from `d` (offset 0 -> `d`)."""
        i = self.index(d) + offset
        if i < 0 or i >= len(self.dates):
            raise DataError(
                f"offset {offset:+d} from {d} walks off the calendar "
                f"({self.dates[0]}..{self.dates[-1]})"
            )
        return self.dates[i]

    def window(self, anchor: date, start_offset: int, end_offset: int) -> tuple[date, ...]:
        """Inclusive run of trading dates [anchor+start_offset, anchor+end_offset]."""
        if start_offset > end_offset:
            raise DataError(f"window offsets out of order: {start_offset} > {end_offset}")
        lo = self.shift(anchor, start_offset)
        hi = self.shift(anchor, end_offset)
        return self.dates[self.index(lo): self.index(hi) + 1]


def relative_index(calendar: TradingCalendar, event_date: date, offset: int) -> date:
    """Trading date `offset` trading days from `event_date` on `calendar`."""
    return calendar.shift(event_date, offset)


@dataclass(frozen=True)
class PriceSeries:
    """Daily bars for one security. Arrays are aligned with `dates`."""

    ticker: str
    dates: tuple[date, ...]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        for arr in (self.open, self.high, self.low, self.close, self.volume):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.dates)

    def row(self, d: date) -> tuple[float, float, float, float, float] | None:
        try:
            i = self.dates.index(d)
        except ValueError:
            return None
        return (self.open[i], self.high[i], self.low[i], self.close[i], self.volume[i])


@dataclass(frozen=True)
class PricePanel:
    """Validated OHLCV series for a universe of securities."""

    series: dict  # ticker -> PriceSeries
    calendar: TradingCalendar
    calendar_source: str

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(self.series)

    def __contains__(self, ticker: str) -> bool:
        return ticker in self.series

    def __getitem__(self, ticker: str) -> PriceSeries:
        try:
            return self.series[ticker]
        except KeyError:
            raise DataError(f"ticker {ticker!r} not in panel") from None

    def close(self, ticker: str, d: date) -> float | None:
        s = self[ticker]
        row = s.row(d)
        return None if row is None else row[3]


@dataclass(frozen=True)
class ReturnSeries:
    """Daily log returns for one security, keyed by date.

    A return exists at date t only if both t and the preceding calendar
    date have a close; gaps therefore knock out two return days.
    """

    ticker: str
    returns: dict  # date -> float

    def __contains__(self, d: date) -> bool:
        return d in self.returns

    def __getitem__(self, d: date) -> float:
        return self.returns[d]

    def get(self, d: date):
        return self.returns.get(d)

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(frozen=True)
class FactorSeries:
    """Daily market excess return and risk-free rate, decimal units."""

    mkt_rf: dict  # date -> float
    rf: dict  # date -> float
    missing: frozenset  # trading dates with no factor row

    def excess_market(self, d: date):
        return self.mkt_rf.get(d)

    def risk_free(self, d: date):
        return self.rf.get(d)


def _parse_price_row(row: dict, lineno: int):
    try:
        d = _parse_iso_date(row["date"])
        ticker = row["ticker"].strip()
        o = float(row["open"])
        h = float(row["high"])
        lo = float(row["low"])
        c = float(row["close"])
        v = float(row["volume"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"line {lineno}: malformed price row ({exc})") from None
    if not ticker:
        raise DataError(f"line {lineno}: empty ticker")
    for name, px in (("open", o), ("high", h), ("low", lo), ("close", c)):
        if not math.isfinite(px) or px <= 0:
            raise DataError(f"line {lineno}: non-positive {name} price {px} for {ticker}")
    if not math.isfinite(v) or v < 0:
        raise DataError(f"line {lineno}: negative volume {v} for {ticker}")
    if h < lo:
        raise DataError(f"line {lineno}: high {h} < low {lo} for {ticker} on {d}")
    if h < max(o, c) or lo > min(o, c):
        raise DataError(
            f"line {lineno}: open/close outside [low, high] for {ticker} on {d}"
        )
    return d, ticker, (o, h, lo, c, v)


def load_panel(path, calendar_source: str) -> PricePanel:
    """Load a price CSV and build the trading calendar from `calendar_source`.

    The CSV schema is `date,ticker,open,high,low,close,volume` with ISO dates.
    Every (ticker, date) pair must be unique; every security's dates must be
    a subset of the calendar source's dates.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"price file not found: {path}")
    per_ticker: dict = {}
    seen: set = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != PRICE_HEADER:
            raise DataError(
                f"{path}: expected header {','.join(PRICE_HEADER)!r}, "
                f"got {reader.fieldnames!r}"
            )
        for row in reader:
            lineno = reader.line_num
            d, ticker, bar = _parse_price_row(row, lineno)
            key = (ticker, d)
            if key in seen:
                raise DataError(f"line {lineno}: duplicate (ticker, date) {key}")
            seen.add(key)
            per_ticker.setdefault(ticker, []).append((d, bar))
    if calendar_source not in per_ticker:
        raise DataError(f"calendar source ticker {calendar_source!r} not in {path}")

    calendar = TradingCalendar(
        tuple(sorted(d for d, _ in per_ticker[calendar_source]))
    )

    series: dict = {}
    for ticker in sorted(per_ticker):
        rows = sorted(per_ticker[ticker], key=lambda item: item[0])
        dates = tuple(d for d, _ in rows)
        off_calendar = [d for d in dates if d not in calendar]
        if off_calendar:
            raise DataError(
                f"{ticker} trades on {off_calendar[0]} which is not a calendar "
                f"date of {calendar_source}"
            )
        cols = np.array([bar for _, bar in rows], dtype=float)
        series[ticker] = PriceSeries(
            ticker=ticker,
            dates=dates,
            open=cols[:, 0].copy(),
            high=cols[:, 1].copy(),
            low=cols[:, 2].copy(),
            close=cols[:, 3].copy(),
            volume=cols[:, 4].copy(),
        )
    log.info("loaded %d securities, %d trading days from %s",
             len(series), len(calendar), path)
    return PricePanel(series=series, calendar=calendar, calendar_source=calendar_source)


def write_panel(panel: PricePanel, path) -> None:
    """Serialize a panel back to the price CSV schema (canonical form)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PRICE_HEADER)
        for ticker in panel.tickers:
            s = panel[ticker]
            for i, d in enumerate(s.dates):
                writer.writerow([
                    d.isoformat(), ticker,
                    repr(float(s.open[i])), repr(float(s.high[i])),
                    repr(float(s.low[i])), repr(float(s.close[i])),
                    repr(float(s.volume[i])),
                ])


def log_returns(panel: PricePanel) -> dict:
    """Daily log returns per security: ln(close_t / close_{t-1}).

    The previous day is the previous *calendar* date, so a security that
    skipped a trading day has no return on the skipped day or the day after.
    """
    out: dict = {}
    cal = panel.calendar.dates
    for ticker in panel.tickers:
        s = panel[ticker]
        closes = dict(zip(s.dates, s.close))
        rets: dict = {}
        for prev, cur in zip(cal, cal[1:]):
            if cur in closes and prev in closes:
                rets[cur] = math.log(closes[cur] / closes[prev])
        out[ticker] = ReturnSeries(ticker=ticker, returns=rets)
    return out


def load_factors(path, calendar: TradingCalendar) -> FactorSeries:
    """Load a daily factor CSV (`date,mkt_rf,smb,hml,rf`); consume mkt_rf and rf.

    Source values are percents (the usual distribution convention) and are
    converted to decimal daily rates here. Trading dates with no factor row
    are flagged as missing rather than interpolated.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"factor file not found: {path}")
    mkt_rf: dict = {}
    rf: dict = {}
    first, last = calendar.dates[0], calendar.dates[-1]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != FACTOR_HEADER:
            raise DataError(
                f"{path}: expected header {','.join(FACTOR_HEADER)!r}, "
                f"got {reader.fieldnames!r}"
            )
        for row in reader:
            lineno = reader.line_num
            try:
                d = _parse_factor_date(row["date"])
                mkt = float(row["mkt_rf"]) / 100.0
                r = float(row["rf"]) / 100.0
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"line {lineno}: malformed factor row ({exc})") from None
            if not (first <= d <= last):
                raise DataError(
                    f"line {lineno}: factor date {d} outside calendar span "
                    f"{first}..{last}"
                )
            if abs(mkt) >= PLAUSIBLE_DAILY_RATE or abs(r) >= PLAUSIBLE_DAILY_RATE:
                log.warning("line %d: implausible daily rate (mkt_rf=%s, rf=%s); "
                            "check percent/decimal convention", lineno, mkt, r)
            if d in mkt_rf:
                raise DataError(f"line {lineno}: duplicate factor date {d}")
            mkt_rf[d] = mkt
            rf[d] = r
    if not mkt_rf:
        raise DataError(f"{path}: no factor rows")
    missing = frozenset(d for d in calendar.dates if d not in mkt_rf)
    if missing:
        log.warning("%d trading dates have no factor row (first: %s)",
                    len(missing), min(missing))
    log.info("loaded %d factor rows from %s (percent -> decimal)", len(mkt_rf), path)
    return FactorSeries(mkt_rf=mkt_rf, rf=rf, missing=missing)
