"""Per-security clustering features over a pre- or post-event window.

Five variables per security: mean daily high-low spread (price units), sum
of squared daily log returns, volume-weighted window return (percent),
excess-return beta against the factor series, and the window's cumulative
abnormal return. Columns are normalized cross-sectionally by their mean
(X / Xbar) so no single variable dominates by scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import DataError, InsufficientDataError, NumericsError
from .market_data import FactorSeries, PricePanel, PriceSeries, ReturnSeries, TradingCalendar
from .market_model import AbnormalReturnMatrix

log = logging.getLogger(__name__)

MIN_BETA_OBS = 10

# X/Xbar is undefined near a zero column mean; below this relative threshold
# the column is left unscaled and a warning is emitted.
NORMALIZATION_GUARD = 1e-9

FOUR_VARIABLE = ("spread", "volatility", "vw_return", "capm_beta")
FIVE_VARIABLE = FOUR_VARIABLE + ("pre_car",)


@dataclass(frozen=True)
class FeatureWindow:
    """Feature window relative to an anchor event date.

    side="before" covers relative days [-length, -1]; side="after" covers
    [+1, +length].
    """

    anchor: date
    length: int
    side: str = "before"

    def __post_init__(self):
        if self.length < 2:
            raise DataError(f"feature window length must be >= 2, got {self.length}")
        if self.side not in ("before", "after"):
            raise DataError(f"feature window side must be before/after, got {self.side!r}")

    @property
    def offsets(self) -> tuple[int, ...]:
        if self.side == "before":
            return tuple(range(-self.length, 0))
        return tuple(range(1, self.length + 1))

    def resolve(self, calendar: TradingCalendar) -> tuple[date, ...]:
        off = self.offsets
        return calendar.window(self.anchor, off[0], off[-1])


def daily_spread(series: PriceSeries, dates) -> float:
    """Mean over the window of each day's high minus low."""
    diffs = [series.high[series.dates.index(d)] - series.low[series.dates.index(d)]
             for d in dates if d in series.dates]
    if not diffs:
        raise InsufficientDataError(f"{series.ticker}: no bars in feature window")
    return float(np.mean(diffs))


def realized_volatility(returns) -> float:
    """Sum of squared daily log returns over the window (a sum, not a mean)."""
    arr = np.asarray(list(returns), dtype=float)
    if arr.size == 0:
        raise InsufficientDataError("no returns in feature window")
    return float(np.sum(arr ** 2))


def volume_weighted_return(returns, volumes) -> float:
    """Window return with each day weighted by its share of total volume, x100."""
    r = np.asarray(list(returns), dtype=float)
    v = np.asarray(list(volumes), dtype=float)
    if r.shape != v.shape:
        raise DataError("returns and volumes must align one-to-one")
    total = float(v.sum())
    if total <= 0:
        raise NumericsError("zero total volume in feature window")
    return float(np.sum((v / total) * r) * 100.0)


def capm_beta(security: ReturnSeries, factors: FactorSeries, dates) -> tuple[float, float]:
    """OLS slope (and intercept) of security excess returns on market excess returns.

    Returns (beta, alpha). Equals the covariance/variance ratio exactly.
    """
    xs, ys = [], []
    for d in dates:
        ri = security.get(d)
        mkt = factors.excess_market(d)
        rf = factors.risk_free(d)
        if ri is None or mkt is None or rf is None:
            continue
        xs.append(mkt)
        ys.append(ri - rf)
    n = len(xs)
    if n < MIN_BETA_OBS:
        raise InsufficientDataError(
            f"{security.ticker}: only {n} paired excess-return observations "
            f"(need >= {MIN_BETA_OBS})"
        )
    x = np.asarray(xs)
    y = np.asarray(ys)
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx <= 1e-24 * float(np.sum(x ** 2)):
        raise NumericsError("zero excess-market variance in feature window")
    beta = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    alpha = float(y.mean() - beta * x.mean())
    return beta, alpha


def pre_event_car(ar_matrix: AbnormalReturnMatrix, offsets, ticker: str) -> float | None:
    """Sum of abnormal returns over the feature window; None if any cell missing."""
    vals = [ar_matrix.get(ticker, day) for day in offsets]
    if any(v is None for v in vals):
        return None
    return float(sum(vals))


@dataclass(frozen=True)
class FeatureMatrix:
    """Raw and X/Xbar-normalized feature vectors for the included universe."""

    tickers: tuple[str, ...]
    feature_names: tuple[str, ...]
    raw: np.ndarray          # shape (n_tickers, n_features)
    normalized: np.ndarray   # same shape
    guard_fired: tuple[bool, ...]
    excluded: tuple  # of (ticker, reason)
    mode: str
    window: FeatureWindow

    def __post_init__(self):
        self.raw.setflags(write=False)
        self.normalized.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tickers)

    def vector(self, ticker: str) -> np.ndarray:
        return self.normalized[self.tickers.index(ticker)]


def normalize_columns(raw: np.ndarray) -> tuple[np.ndarray, tuple[bool, ...]]:
    """Scale each column by its cross-sectional mean, guarding near-zero means."""
    normalized = raw.astype(float).copy()
    fired = []
    for j in range(raw.shape[1]):
        col = raw[:, j]
        mean = float(col.mean())
        scale_ref = float(np.abs(col).mean())
        if abs(mean) < NORMALIZATION_GUARD * scale_ref or mean == 0.0:
            fired.append(True)
            log.warning("feature column %d left unscaled: cross-sectional mean "
                        "%.3g too close to zero for X/Xbar", j, mean)
            continue
        fired.append(False)
        normalized[:, j] = col / mean
    return normalized, tuple(fired)


def build_feature_matrix(
    panel: PricePanel,
    returns: dict,
    factors: FactorSeries,
    ar_matrix: AbnormalReturnMatrix,
    window: FeatureWindow,
    mode: str = "five_variable",
    universe=None,
) -> FeatureMatrix:
    """Compute raw feature vectors for every security with full window coverage.

    Securities missing a bar, a return, factor pairing, or (in five-variable
    mode) an abnormal-return cell inside the window are excluded and logged
    with a reason, keeping the cross-section honest.
    """
    if mode not in ("four_variable", "five_variable"):
        raise DataError(f"unknown feature mode {mode!r}")
    names = FIVE_VARIABLE if mode == "five_variable" else FOUR_VARIABLE
    dates = window.resolve(panel.calendar)
    offsets = window.offsets
    if universe is None:
        universe = [t for t in panel.tickers]
    included, rows, excluded = [], [], []
    for ticker in universe:
        series = panel[ticker]
        have_dates = set(series.dates)
        missing_bars = [d for d in dates if d not in have_dates]
        if missing_bars:
            excluded.append((ticker, f"missing bar on {missing_bars[0]} in feature window"))
            continue
        ret_series = returns[ticker]
        day_returns = [ret_series.get(d) for d in dates]
        if any(r is None for r in day_returns):
            bad = dates[day_returns.index(None)]
            excluded.append((ticker, f"missing return on {bad} in feature window"))
            continue
        volumes = [series.volume[series.dates.index(d)] for d in dates]
        try:
            spread = daily_spread(series, dates)
            vol = realized_volatility(day_returns)
            vwr = volume_weighted_return(day_returns, volumes)
            beta, _ = capm_beta(ret_series, factors, dates)
        except (InsufficientDataError, NumericsError) as exc:
            excluded.append((ticker, str(exc)))
            continue
        row = [spread, vol, vwr, beta]
        if mode == "five_variable":
            car = pre_event_car(ar_matrix, offsets, ticker)
            if car is None:
                excluded.append((ticker, "missing abnormal return in feature window"))
                continue
            row.append(car)
        if not all(math.isfinite(v) for v in row):
            excluded.append((ticker, "non-finite feature value"))
            continue
        included.append(ticker)
        rows.append(row)
    if not included:
        raise InsufficientDataError("no securities with full feature-window coverage")
    if mode == "five_variable":
        log.info("cumulative-AR feature for %s/%s uses %d window days",
                 window.anchor, window.side, len(offsets))
    raw = np.array(rows, dtype=float)
    normalized, fired = normalize_columns(raw)
    for ticker, reason in excluded:
        log.info("feature window %s/%s: excluded %s (%s)",
                 window.anchor, window.side, ticker, reason)
    return FeatureMatrix(
        tickers=tuple(included),
        feature_names=names,
        raw=raw,
        normalized=normalized,
        guard_fired=fired,
        excluded=tuple(excluded),
        mode=mode,
        window=window,
    )
