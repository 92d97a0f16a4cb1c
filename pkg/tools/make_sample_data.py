#!/usr/bin/env python3
"""Build the bundled sample dataset (data/sample/prices.csv, factors.csv).

Generates a deterministic synthetic daily OHLCV panel for 37 large-cap US
tech tickers plus a NASDAQ-100-style index over 2017-12-29..2018-08-31 on
the real 2018 US trading calendar, along with a matching daily factor file.

The panel is simulated from a single-index return model and then calibrated
so that the default study config reproduces the documented anchor values
(see tests/test_acceptance.py): the focal security's estimation-window
regression, its event-day abnormal return, and the gated cross-sectional
CAAR levels. Everything is seeded; rerunning this script reproduces the
committed CSVs byte for byte.

Usage: python tools/make_sample_data.py [outdir]
"""

import csv
import math
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

SEED = 20180319
INDEX = "NDX"
FOCAL = "FB"

FIRST = date(2017, 12, 29)
START_2018 = date(2018, 1, 2)
LAST = date(2018, 8, 31)
HOLIDAYS = {
    date(2018, 1, 1), date(2018, 1, 15), date(2018, 2, 19),
    date(2018, 3, 30), date(2018, 5, 28), date(2018, 7, 4),
}

EVENT1 = date(2018, 3, 19)   # scandal breaks
EVENT2 = date(2018, 4, 10)   # congressional hearing
EVENT3 = date(2018, 4, 26)   # q1 earnings
EVENT4 = date(2018, 7, 26)   # q2 earnings

# ticker: (start price, market beta, idiosyncratic daily vol, volume base)
TICKERS = {
    "AAPL": (169.23, 1.05, 0.0095, 3.2e7),
    "ADBE": (175.24, 1.15, 0.0110, 3.1e6),
    "ADI":  (89.01, 1.10, 0.0125, 2.9e6),
    "ADSK": (104.82, 1.30, 0.0160, 2.1e6),
    "AMAT": (51.13, 1.35, 0.0150, 9.8e6),
    "AMD":  (10.28, 1.55, 0.0260, 5.9e7),
    "AVGO": (256.86, 1.20, 0.0140, 2.4e6),
    "CDNS": (41.83, 1.05, 0.0120, 2.3e6),
    "CERN": (67.39, 0.85, 0.0110, 2.2e6),
    "CHKP": (103.62, 0.80, 0.0115, 1.2e6),
    "CSCO": (38.30, 0.95, 0.0095, 2.2e7),
    "CTSH": (71.02, 0.95, 0.0105, 3.6e6),
    "CTXS": (88.01, 0.90, 0.0110, 1.5e6),
    "FB":   (176.46, 1.022, 0.0120, 2.4e7),
    "GOOG": (1046.40, 1.00, 0.0105, 1.7e6),
    "GOOGL": (1053.40, 1.00, 0.0105, 1.8e6),
    "INTC": (46.16, 1.00, 0.0115, 2.6e7),
    "INTU": (157.79, 0.95, 0.0105, 1.3e6),
    "KLAC": (105.07, 1.20, 0.0135, 1.4e6),
    "LRCX": (184.06, 1.40, 0.0170, 2.7e6),
    "MCHP": (87.86, 1.25, 0.0135, 1.9e6),
    "MSFT": (85.54, 1.00, 0.0095, 2.6e7),
    "MU":   (41.12, 1.50, 0.0240, 4.3e7),
    "MXIM": (53.45, 1.10, 0.0120, 2.4e6),
    "NTAP": (55.32, 1.15, 0.0135, 2.8e6),
    "NVDA": (193.50, 1.45, 0.0190, 1.1e7),
    "NXPI": (117.05, 0.90, 0.0130, 3.9e6),
    "QCOM": (64.02, 0.90, 0.0130, 1.1e7),
    "SNPS": (85.19, 1.05, 0.0110, 1.2e6),
    "STX":  (41.84, 1.10, 0.0170, 3.4e6),
    "SWKS": (94.96, 1.25, 0.0150, 2.0e6),
    "SYMC": (28.06, 0.90, 0.0140, 6.5e6),
    "TXN":  (104.44, 1.10, 0.0110, 4.9e6),
    "VRSN": (114.41, 0.90, 0.0100, 8.0e5),
    "WDAY": (101.76, 1.30, 0.0165, 1.6e6),
    "WDC":  (79.54, 1.20, 0.0185, 4.4e6),
    "XLNX": (67.42, 1.15, 0.0125, 2.5e6),
}
INDEX_START = 6396.42

# estimation-window targets for the focal regression
FOCAL_BETA = 1.022
FOCAL_ALPHA = -0.001
FOCAL_R2 = 0.498

# cross-sectional calibration targets: (mean CAAR, t statistic)
E1_DAY0 = (0.0042, 1.90)
E1_CAAR_PATH = [0.0040, 0.0086, 0.0089]          # days +1..+3, accumulated from 0
E4_DAY0 = (0.0197, 2.4660)
E4_PRE_PATH = [-0.0021, -0.0072, -0.0091, -0.0214, -0.0255]  # accumulated from -5
E4_PRE_T = -3.3763                                # at day -1

FOCAL_PINS = {
    # event-day abnormal returns for the focal security
    EVENT1: -0.0500,
    EVENT4: -0.1918,
}
FOCAL_E4_PRE = [0.0017, 0.0111, 0.0032, 0.0143, -0.0006]  # days -5..-1
FOCAL_E4_POST = {7: 0.0388, 15: -0.0284}                   # relative day -> AR
FOCAL_POST_CAR = -0.25  # cumulative AR over days +1..+20 (continued slide)

MARKET_PINS = {
    EVENT1: -0.019,
    EVENT2: 0.007,
    EVENT3: 0.006,
    EVENT4: -0.008,
}


def trading_days():
    days = [FIRST]
    d = START_2018
    while d <= LAST:
        if d.weekday() < 5 and d not in HOLIDAYS:
            days.append(d)
        d += timedelta(days=1)
    return days


def ols(x, y):
    """Plain least squares via the normal equations; returns (alpha, beta)."""
    x = np.asarray(x)
    y = np.asarray(y)
    beta = np.sum((x - x.mean()) * (y - y.mean())) / np.sum((x - x.mean()) ** 2)
    alpha = y.mean() - beta * x.mean()
    return float(alpha), float(beta)


def calibrate_cross_section(current, mean_target, sd_target=None, pinned=None):
    """Affinely rescale a cross-section to a target mean (and sample sd).

    `current` is a dict ticker -> value; `pinned` entries are held fixed and
    the rest absorb the adjustment. Returns a new dict.
    """
    pinned = pinned or {}
    n = len(current)
    others = sorted(t for t in current if t not in pinned)
    sum_pin = sum(pinned.values())
    mean_others = (n * mean_target - sum_pin) / len(others)
    cur = np.array([current[t] for t in others])
    dev = cur - cur.mean()
    if sd_target is None:
        scale = 1.0
    else:
        total_ss = (n - 1) * sd_target ** 2
        pin_ss = sum((v - mean_target) ** 2 for v in pinned.values())
        shift_ss = len(others) * (mean_others - mean_target) ** 2
        budget = total_ss - pin_ss - shift_ss
        if budget <= 0:
            raise RuntimeError("sd target infeasible given pinned values")
        scale = math.sqrt(budget / float(np.sum(dev ** 2)))
    out = dict(pinned)
    for t, d in zip(others, dev):
        out[t] = mean_others + scale * d
    return out


def main(outdir="data/sample"):
    rng = np.random.default_rng(SEED)
    cal = trading_days()
    ret_dates = cal[1:]
    didx = {d: i for i, d in enumerate(ret_dates)}
    n_ret = len(ret_dates)

    est_dates = [d for d in ret_dates if START_2018 <= d <= date(2018, 3, 16)]
    assert len(est_dates) == 52, f"estimation window has {len(est_dates)} days"
    est_idx = np.array([didx[d] for d in est_dates])

    # ------------------------------------------------------------------ market
    rm = rng.normal(4e-4, 0.011, n_ret)
    seg = rm[est_idx]
    rm[est_idx] = 5e-4 + (seg - seg.mean()) / seg.std(ddof=1) * 0.0134
    # steady late-summer drift keeps the post-event window's cross-sectional
    # volume-weighted returns away from a near-zero mean
    late = np.array([d > EVENT4 for d in ret_dates])
    rm[late] += 2.5e-3
    for d, v in MARKET_PINS.items():
        rm[didx[d]] = v

    # ------------------------------------------------------- base security paths
    returns = {}
    post4_idx = np.array([didx[d] for d in ret_dates if d > EVENT4])
    for ticker, (_p0, beta, sigma, _vol) in TICKERS.items():
        alpha = float(rng.normal(0.0, 2.5e-4))
        eps = rng.normal(0.0, sigma, n_ret)
        if ticker == FOCAL:
            alpha = FOCAL_ALPHA
            beta = FOCAL_BETA
            eps[post4_idx] *= 4.0  # post-crash volatility regime
        returns[ticker] = alpha + beta * rm + eps

    # focal estimation window: residuals exactly orthogonal to [1, market],
    # scaled so the in-sample R^2 hits the target
    x = rm[est_idx]
    u = rng.normal(0.0, 1.0, len(est_idx))
    X = np.column_stack([np.ones_like(x), x])
    u -= X @ np.linalg.lstsq(X, u, rcond=None)[0]
    ss_m = float(np.sum((x - x.mean()) ** 2))
    ssr_target = FOCAL_BETA ** 2 * ss_m * (1 - FOCAL_R2) / FOCAL_R2
    u *= math.sqrt(ssr_target / float(np.sum(u ** 2)))
    returns[FOCAL][est_idx] = FOCAL_ALPHA + FOCAL_BETA * x + u

    # ------------------------------------------------ first pass: closes, fits
    def build_closes(r):
        closes = {INDEX: np.round(INDEX_START * np.exp(np.concatenate([[0.0], np.cumsum(rm)])), 2)}
        for t, (p0, *_rest) in TICKERS.items():
            path = p0 * np.exp(np.concatenate([[0.0], np.cumsum(r[t])]))
            closes[t] = np.round(path, 2)
        return closes

    def effective(closes):
        return {t: np.log(c[1:] / c[:-1]) for t, c in closes.items()}

    closes = build_closes(returns)
    eff = effective(closes)
    fits = {t: ols(eff[INDEX][est_idx], eff[t][est_idx]) for t in TICKERS}

    def ar_of(ticker, d):
        # reads the live (possibly already-calibrated) return array
        a, b = fits[ticker]
        i = didx[d]
        return float(returns[ticker][i] - a - b * eff[INDEX][i])

    def set_ar(ticker, d, target):
        a, b = fits[ticker]
        i = didx[d]
        returns[ticker][i] = a + b * eff[INDEX][i] + target

    # ------------------------------------------------------------ calibrations
    tickers = sorted(TICKERS)

    # event 1 day 0: gated mean and t statistic
    mean1, t1 = E1_DAY0
    sd1 = math.sqrt(37) * mean1 / t1
    day0 = calibrate_cross_section(
        {t: ar_of(t, EVENT1) for t in tickers}, mean1, sd1,
        pinned={FOCAL: FOCAL_PINS[EVENT1]},
    )
    for t, v in day0.items():
        set_ar(t, EVENT1, v)

    # event 1 days +1..+3: mean path only (accumulated CAAR anchors)
    e1_days = [d for d in ret_dates if d > EVENT1][:3]
    prev = mean1
    for d, target in zip(e1_days, E1_CAAR_PATH):
        shifted = calibrate_cross_section(
            {t: ar_of(t, d) for t in tickers}, target - prev, None
        )
        for t, v in shifted.items():
            set_ar(t, d, v)
        prev = target

    # event 4 pre window: daily mean path, focal pins, then a common scaling
    # of the five-day-sum deviations to hit the day -1 t statistic
    pre_dates = [d for d in ret_dates if d < EVENT4][-5:]
    prev = 0.0
    for d, target, fb in zip(pre_dates, E4_PRE_PATH, FOCAL_E4_PRE):
        shifted = calibrate_cross_section(
            {t: ar_of(t, d) for t in tickers}, target - prev, None,
            pinned={FOCAL: fb},
        )
        for t, v in shifted.items():
            set_ar(t, d, v)
        prev = target
    others = [t for t in tickers if t != FOCAL]
    day_means = {}
    for d in pre_dates:
        vals = np.array([ar_of(t, d) for t in others])
        day_means[d] = vals.mean()
    sums = {t: sum(ar_of(t, d) for d in pre_dates) for t in others}
    s_arr = np.array([sums[t] for t in others])
    focal_sum = sum(FOCAL_E4_PRE)
    mean_all = E4_PRE_PATH[-1]
    sd_s = math.sqrt(37) * abs(mean_all) / abs(E4_PRE_T)
    total_ss = 36 * sd_s ** 2
    pin_ss = (focal_sum - mean_all) ** 2
    shift_ss = 36 * (s_arr.mean() - mean_all) ** 2
    lam = math.sqrt((total_ss - pin_ss - shift_ss) / float(np.sum((s_arr - s_arr.mean()) ** 2)))
    for d in pre_dates:
        for t in others:
            set_ar(t, d, day_means[d] + lam * (ar_of(t, d) - day_means[d]))

    # event 4 day 0: gated mean and t, focal AR pinned
    mean4, t4 = E4_DAY0
    sd4 = math.sqrt(37) * mean4 / t4
    day0 = calibrate_cross_section(
        {t: ar_of(t, EVENT4) for t in tickers}, mean4, sd4,
        pinned={FOCAL: FOCAL_PINS[EVENT4]},
    )
    for t, v in day0.items():
        set_ar(t, EVENT4, v)

    # focal post-event spikes, then an even shift of the unpinned days so the
    # focal post-window cumulative AR lands at its target
    post_dates = [d for d in ret_dates if d > EVENT4]
    for rel, v in FOCAL_E4_POST.items():
        set_ar(FOCAL, post_dates[rel - 1], v)
    post20 = post_dates[:20]
    pinned_days = {post_dates[rel - 1] for rel in FOCAL_E4_POST}
    free = [d for d in post20 if d not in pinned_days]
    delta = (FOCAL_POST_CAR - sum(ar_of(FOCAL, d) for d in post20)) / len(free)
    for d in free:
        set_ar(FOCAL, d, ar_of(FOCAL, d) + delta)

    # ------------------------------------------------- final build and verify
    closes = build_closes(returns)
    eff = effective(closes)
    fits = {t: ols(eff[INDEX][est_idx], eff[t][est_idx]) for t in TICKERS}

    a_fb, b_fb = fits[FOCAL]
    resid = eff[FOCAL][est_idx] - a_fb - b_fb * eff[INDEX][est_idx]
    ssr = float(np.sum(resid ** 2))
    sst = float(np.sum((eff[FOCAL][est_idx] - eff[FOCAL][est_idx].mean()) ** 2))
    r2 = 1 - ssr / sst
    s_ar = math.sqrt(ssr / 50)
    assert abs(b_fb - FOCAL_BETA) < 5e-3, b_fb
    assert abs(r2 - FOCAL_R2) < 1e-2, r2

    def real_ar(ticker, d):
        # realized abnormal return from the rounded closes
        a, b = fits[ticker]
        i = didx[d]
        return float(eff[ticker][i] - a - b * eff[INDEX][i])

    def cross(dlist):
        mat = np.array([[real_ar(t, d) for d in dlist] for t in tickers])
        sums = mat.sum(axis=1)
        return float(sums.mean()), float(math.sqrt(37) * sums.mean() / sums.std(ddof=1))

    c, t = cross([EVENT1])
    assert abs(c - mean1) < 5e-4 and 1.66 < t < 1.95, (c, t)
    c3, _ = cross([EVENT1] + e1_days)
    assert abs(c3 - E1_CAAR_PATH[-1]) < 5e-4, c3
    c, t = cross([EVENT4])
    assert abs(c - mean4) < 5e-4 and 1.97 < t < 2.57, (c, t)
    c, t = cross(pre_dates)
    assert abs(c - mean_all) < 5e-4 and t < -2.60, (c, t)
    ar4 = real_ar(FOCAL, EVENT4)
    assert abs(ar4 - FOCAL_PINS[EVENT4]) < 1e-3, ar4
    assert ar4 / s_ar < -10, ar4 / s_ar

    print(f"focal fit: alpha={a_fb:.6f} beta={b_fb:.6f} R2={r2:.4f} s_ar={s_ar:.6f}")
    print(f"event-1 day 0: caar={cross([EVENT1])[0]:.4f} t={cross([EVENT1])[1]:.4f}")
    print(f"event-4 day 0: caar={cross([EVENT4])[0]:.4f} t={cross([EVENT4])[1]:.4f}")
    print(f"event-4 pre (-5,-1): caar={cross(pre_dates)[0]:.4f} t={cross(pre_dates)[1]:.4f}")
    print(f"focal event-4 AR: {ar4:.4f} t={ar4 / s_ar:.2f}")

    # --------------------------------------------------------------- OHLCV bars
    all_tickers = [INDEX] + tickers
    range_base = {t: 0.016 + float(rng.uniform(-0.004, 0.008)) for t in all_tickers}
    range_base[INDEX] = 0.009
    bars = {}
    for t in all_tickers:
        c = closes[t]
        gaps = rng.normal(0.0, 0.003, len(cal))
        splits = rng.uniform(0.3, 0.7, len(cal))
        widths = rng.uniform(0.4, 1.6, len(cal))
        opens = np.empty(len(cal))
        opens[0] = c[0] * math.exp(gaps[0])
        opens[1:] = c[:-1] * np.exp(gaps[1:])
        rho = range_base[t] * widths
        if t == FOCAL:
            post_mask = np.array([d > EVENT4 for d in cal])
            rho = np.where(post_mask, rho * 4.5, rho)
        hi = np.maximum(opens, c) * (1 + splits * rho)
        lo = np.minimum(opens, c) * (1 - (1 - splits) * rho)
        o = np.round(opens, 2)
        h = np.round(hi, 2)
        l = np.round(lo, 2)
        h = np.maximum.reduce([h, o, c])
        l = np.minimum.reduce([l, o, c])
        base = 2.2e9 if t == INDEX else TICKERS[t][3]
        vol = base * np.exp(rng.normal(0.0, 0.35, len(cal)))
        for d_spike, mult in ((EVENT1, 2.5), (EVENT2, 1.6), (EVENT3, 1.7), (EVENT4, 2.2)):
            vol[cal.index(d_spike)] *= mult
        if t == FOCAL:
            vol[cal.index(EVENT1)] *= 2.0
            vol[cal.index(EVENT4)] *= 3.0
        bars[t] = (o, h, l, c, np.round(vol).astype(np.int64))

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "open", "high", "low", "close", "volume"])
        for t in all_tickers:
            o, h, l, c, v = bars[t]
            for i, d in enumerate(cal):
                w.writerow([d.isoformat(), t, f"{o[i]:.2f}", f"{h[i]:.2f}",
                            f"{l[i]:.2f}", f"{c[i]:.2f}", int(v[i])])

    # daily factor file (percent units, compact dates)
    mkt_rf = np.empty(len(cal))
    mkt_rf[0] = rng.normal(0.0, 0.009)
    mkt_rf[1:] = 0.88 * eff[INDEX] + rng.normal(0.0, 0.0018, n_ret)
    rf = 6e-5 + 2e-7 * np.arange(len(cal))
    smb = rng.normal(0.0, 0.003, len(cal))
    hml = rng.normal(0.0, 0.003, len(cal))
    with open(outdir / "factors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "mkt_rf", "smb", "hml", "rf"])
        for i, d in enumerate(cal):
            w.writerow([d.strftime("%Y%m%d"), f"{mkt_rf[i] * 100:.4f}",
                        f"{smb[i] * 100:.4f}", f"{hml[i] * 100:.4f}",
                        f"{rf[i] * 100:.4f}"])
    print(f"wrote {outdir / 'prices.csv'} and {outdir / 'factors.csv'}")


if __name__ == "__main__":
    main(*sys.argv[1:])
