"""Single-index market model: estimation, expected returns, abnormal returns.

The model is R_it = alpha_i + beta_i * R_mt + eps_i, fitted by OLS over an
estimation window of trading days. Beta is the ratio of the security/market
return covariance to the market return variance (same divisor in both, so
the choice of divisor cancels); residual variance uses n - 2 degrees of
freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import DataError, InsufficientDataError, NumericsError
from .market_data import ReturnSeries, TradingCalendar

MIN_ESTIMATION_OBS = 10


@dataclass(frozen=True)
class EstimationWindow:
    """Trading-day window [anchor+start_offset, anchor+end_offset], both pre-event."""

    anchor: date
    start_offset: int = -52
    end_offset: int = -1

    def __post_init__(self):
        if not self.start_offset < self.end_offset <= -1:
            raise DataError(
                f"estimation window offsets must satisfy start < end <= -1, "
                f"got ({self.start_offset}, {self.end_offset})"
            )

    def resolve(self, calendar: TradingCalendar) -> tuple[date, ...]:
        return calendar.window(self.anchor, self.start_offset, self.end_offset)


@dataclass(frozen=True)
class MarketModelFit:
    ticker: str
    alpha: float
    beta: float
    residual_variance: float
    r_squared: float
    n_obs: int


def _paired(security: ReturnSeries, market: ReturnSeries, dates) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for d in dates:
        rm = market.get(d)
        ri = security.get(d)
        if rm is not None and ri is not None:
            xs.append(rm)
            ys.append(ri)
    return np.asarray(xs), np.asarray(ys)


def fit_market_model(security: ReturnSeries, market: ReturnSeries, dates) -> MarketModelFit:
    """OLS fit of security returns on market returns over `dates`.

    `dates` is the resolved estimation window (see EstimationWindow.resolve);
    only days where both return series exist contribute.
    """
    x, y = _paired(security, market, dates)
    n = len(x)
    if n < MIN_ESTIMATION_OBS:
        raise InsufficientDataError(
            f"{security.ticker}: only {n} paired observations in estimation "
            f"window (need >= {MIN_ESTIMATION_OBS})"
        )
    xbar = x.mean()
    ybar = y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    # relative guard: exact-constant inputs leave ~1e-35 of summation noise
    if sxx <= 1e-24 * float(np.sum(x ** 2)):
        raise NumericsError(
            f"{security.ticker}: zero market-return variance in estimation window"
        )
    sxy = float(np.sum((x - xbar) * (y - ybar)))
    beta = sxy / sxx
    alpha = ybar - beta * xbar
    resid = y - alpha - beta * x
    ssr = float(np.sum(resid ** 2))
    sst = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    # guard the [0, 1] invariant against rounding at the boundaries
    r2 = min(1.0, max(0.0, r2))
    return MarketModelFit(
        ticker=security.ticker,
        alpha=float(alpha),
        beta=float(beta),
        residual_variance=ssr / (n - 2),
        r_squared=r2,
        n_obs=n,
    )


def expected_return(fit: MarketModelFit, market_return: float) -> float:
    """Model-implied return: alpha + beta * market_return."""
    return fit.alpha + fit.beta * market_return


@dataclass(frozen=True)
class AbnormalReturnMatrix:
    """Per-security abnormal returns over a run of relative days.

    A cell is present iff the security return, the market return, and a
    valid fit all exist for that date; missing cells are NaN, never zero.
    """

    tickers: tuple[str, ...]
    rel_days: tuple[int, ...]
    dates: tuple[date, ...]
    values: np.ndarray  # shape (n_tickers, n_days), NaN = missing

    def __post_init__(self):
        self.values.setflags(write=False)

    def _t_index(self, ticker: str) -> int:
        try:
            return self.tickers.index(ticker)
        except ValueError:
            raise DataError(f"ticker {ticker!r} not in abnormal-return matrix") from None

    def _d_index(self, rel_day: int) -> int:
        try:
            return self.rel_days.index(rel_day)
        except ValueError:
            raise DataError(
                f"relative day {rel_day} outside matrix range "
                f"[{self.rel_days[0]}, {self.rel_days[-1]}]"
            ) from None

    def get(self, ticker: str, rel_day: int) -> float | None:
        v = self.values[self._t_index(ticker), self._d_index(rel_day)]
        return None if math.isnan(v) else float(v)

    def row(self, ticker: str) -> np.ndarray:
        return self.values[self._t_index(ticker)]

    def slice_days(self, t1: int, t2: int) -> np.ndarray:
        """Columns for relative days t1..t2 inclusive."""
        if t1 > t2:
            raise DataError(f"day range out of order: ({t1}, {t2})")
        return self.values[:, self._d_index(t1): self._d_index(t2) + 1]


def abnormal_returns(
    returns: dict,
    market: ReturnSeries,
    fits: dict,
    calendar: TradingCalendar,
    anchor: date,
    start_day: int,
    end_day: int,
    tickers=None,
) -> AbnormalReturnMatrix:
    """Abnormal returns AR = R_it - (alpha + beta * R_mt) over relative days.

    Parameters
    ----------
    returns : dict of ticker -> ReturnSeries
    market : ReturnSeries for the index
    fits : dict of ticker -> MarketModelFit (securities without a fit get
        all-missing rows only if explicitly listed in `tickers`)
    anchor : event date (relative day 0)
    start_day, end_day : inclusive relative-day bounds
    """
    if tickers is None:
        tickers = tuple(t for t in returns if t in fits)
    tickers = tuple(tickers)
    dates = calendar.window(anchor, start_day, end_day)
    rel_days = tuple(range(start_day, end_day + 1))
    values = np.full((len(tickers), len(dates)), np.nan)
    for i, ticker in enumerate(tickers):
        fit = fits.get(ticker)
        if fit is None:
            continue
        series = returns[ticker]
        for j, d in enumerate(dates):
            ri = series.get(d)
            rm = market.get(d)
            if ri is None or rm is None:
                continue
            values[i, j] = ri - expected_return(fit, rm)
    return AbnormalReturnMatrix(
        tickers=tickers, rel_days=rel_days, dates=tuple(dates), values=values
    )


def estimation_abnormal_returns(
    security: ReturnSeries, market: ReturnSeries, fit: MarketModelFit, dates
) -> np.ndarray:
    """In-window abnormal returns (the OLS residuals when the fit used `dates`)."""
    out = []
    for d in dates:
        ri = security.get(d)
        rm = market.get(d)
        if ri is not None and rm is not None:
            out.append(ri - expected_return(fit, rm))
    return np.asarray(out)
