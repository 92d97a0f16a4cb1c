"""Event windows and cumulative (average) abnormal-return aggregation.

Per-security CARs sum abnormal returns over an inclusive relative-day
range; CAARs are their cross-sectional means. Pre-event rows accumulate
from the pre-window start, post-event rows from day 0, mirroring the
usual two-panel report layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import ConfigError, DataError, InsufficientDataError
from .features import FeatureWindow
from .market_model import AbnormalReturnMatrix


@dataclass(frozen=True)
class EventSpec:
    """One study event: announcement day plus pre/post windows."""

    name: str
    event_date: date
    pre_window: tuple[int, int] = (-5, -1)
    post_window: tuple[int, int] = (0, 20)
    feature_length: int = 20
    feature_side: str = "before"

    def __post_init__(self):
        ps, pe = self.pre_window
        qs, qe = self.post_window
        if not ps <= pe <= -1:
            raise ConfigError(
                f"{self.name}: pre window must satisfy start <= end <= -1, got {self.pre_window}"
            )
        if not (qs == 0 and qe >= 0):
            raise ConfigError(
                f"{self.name}: post window must start at 0, got {self.post_window}"
            )

    def feature_window(self) -> FeatureWindow:
        return FeatureWindow(
            anchor=self.event_date, length=self.feature_length, side=self.feature_side
        )

    def ar_day_range(self) -> tuple[int, int]:
        """Relative-day range the abnormal-return matrix must cover."""
        lo = min(self.pre_window[0], self.feature_window().offsets[0])
        hi = max(self.post_window[1], self.feature_window().offsets[-1])
        return lo, hi


@dataclass(frozen=True)
class SampleCategory:
    """A named cross-section of tickers (full universe or a cluster)."""

    name: str
    tickers: tuple[str, ...]

    def __post_init__(self):
        if not self.tickers:
            raise DataError(f"sample category {self.name!r} is empty")


def car(ar_matrix: AbnormalReturnMatrix, ticker: str, t1: int, t2: int) -> float:
    """Cumulative abnormal return over relative days t1..t2 inclusive.

    Every cell in the range must be present; a gap raises so callers can
    exclude the security rather than silently zero-fill.
    """
    row = ar_matrix.row(ticker)
    i1 = ar_matrix.rel_days.index(t1) if t1 in ar_matrix.rel_days else None
    i2 = ar_matrix.rel_days.index(t2) if t2 in ar_matrix.rel_days else None
    if i1 is None or i2 is None or t1 > t2:
        raise DataError(f"day range ({t1}, {t2}) outside matrix for {ticker}")
    window = row[i1: i2 + 1]
    if np.isnan(window).any():
        missing_day = ar_matrix.rel_days[i1 + int(np.where(np.isnan(window))[0][0])]
        raise DataError(f"{ticker}: missing abnormal return at day {missing_day}")
    return float(window.sum())


@dataclass(frozen=True)
class CaarPoint:
    """Cross-sectional CAAR at one relative day, with its contributing CARs."""

    rel_day: int
    caar: float
    n_securities: int
    cars: np.ndarray
    tickers: tuple[str, ...]
    excluded: tuple = field(default_factory=tuple)  # of (ticker, reason)

    def __post_init__(self):
        self.cars.setflags(write=False)


def caar(
    ar_matrix: AbnormalReturnMatrix, category: SampleCategory, t1: int, t2: int
) -> CaarPoint:
    """Mean CAR(t1, t2) across the category's securities.

    Securities with any missing cell in the range are dropped from the
    cross-section and reported in the point's exclusion list.
    """
    cars, kept, excluded = [], [], []
    for ticker in category.tickers:
        try:
            cars.append(car(ar_matrix, ticker, t1, t2))
            kept.append(ticker)
        except DataError as exc:
            excluded.append((ticker, str(exc)))
    if not kept:
        raise InsufficientDataError(
            f"category {category.name!r}: no securities with full coverage "
            f"over days ({t1}, {t2})"
        )
    arr = np.asarray(cars)
    return CaarPoint(
        rel_day=t2,
        caar=float(arr.mean()),
        n_securities=len(kept),
        cars=arr,
        tickers=tuple(kept),
        excluded=tuple(excluded),
    )


@dataclass(frozen=True)
class CaarSeries:
    """Per-day CAAR points for one window of one (event, category) pair."""

    event: str
    category: str
    window: str  # "pre" | "post"
    points: tuple  # of CaarPoint

    def __iter__(self):
        return iter(self.points)


def caar_series(
    ar_matrix: AbnormalReturnMatrix,
    category: SampleCategory,
    event: EventSpec,
    pre_mode: str = "accumulated",
) -> tuple[CaarSeries, CaarSeries]:
    """Pre- and post-window CAAR series for one event and category.

    Post rows always accumulate from day 0. Pre rows accumulate from the
    pre-window start by default; pre_mode="per_day" reports each pre day's
    own mean abnormal return instead.
    """
    if pre_mode not in ("accumulated", "per_day"):
        raise ConfigError(f"unknown pre_window mode {pre_mode!r}")
    ps, pe = event.pre_window
    qs, qe = event.post_window
    pre_points = []
    for d in range(ps, pe + 1):
        start = ps if pre_mode == "accumulated" else d
        point = caar(ar_matrix, category, start, d)
        pre_points.append(point)
    post_points = [caar(ar_matrix, category, qs, d) for d in range(qs, qe + 1)]
    pre = CaarSeries(event=event.name, category=category.name, window="pre",
                     points=tuple(pre_points))
    post = CaarSeries(event=event.name, category=category.name, window="post",
                      points=tuple(post_points))
    return pre, post
