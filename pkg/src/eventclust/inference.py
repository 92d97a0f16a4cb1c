"""Parametric and nonparametric significance tests for abnormal returns.

All statistics are referred to the standard normal for star annotation
(two-sided 10/5/1 percent critical values 1.645 / 1.960 / 2.576), relying
on the asymptotic normality of both the cross-sectional t and the
signed-rank Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NumericsError

P10, P5, P1 = 1.645, 1.960, 2.576

WILCOXON_MODES = ("standard", "paper_literal")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    n: int
    significance: str  # "none" | "p10" | "p5" | "p1"
    method: str

    @property
    def stars(self) -> str:
        return {"none": "", "p10": "*", "p5": "**", "p1": "***"}[self.significance]


def annotate(statistic: float) -> str:
    """Two-sided normal significance bucket for a test statistic."""
    if not math.isfinite(statistic):
        raise NumericsError(f"cannot annotate non-finite statistic {statistic}")
    a = abs(statistic)
    if a >= P1:
        return "p1"
    if a >= P5:
        return "p5"
    if a >= P10:
        return "p10"
    return "none"


def t_caar(cars) -> TestResult:
    """Cross-sectional t: sqrt(N) * mean(CAR) / sample stddev(CAR)."""
    arr = np.asarray(list(cars), dtype=float)
    n = arr.size
    if n < 2:
        raise InsufficientDataError(f"t test needs >= 2 securities, got {n}")
    mean = float(arr.mean())
    s = float(arr.std(ddof=1))
    if s == 0.0:
        raise NumericsError("zero cross-sectional variance: all CARs equal")
    stat = math.sqrt(n) * mean / s
    return TestResult(statistic=stat, n=n, significance=annotate(stat), method="t_caar")


def t_ar(ar: float, estimation_ars) -> TestResult:
    """Single-security t: AR divided by the estimation-period AR scale.

    The scale is sqrt(sum of squared estimation-window ARs / (M - 2)),
    M being the number of non-missing estimation observations.
    """
    est = np.asarray(list(estimation_ars), dtype=float)
    m = est.size
    if m < 3:
        raise InsufficientDataError(f"t_ar needs >= 3 estimation ARs, got {m}")
    s2 = float(np.sum(est ** 2)) / (m - 2)
    if s2 == 0.0:
        raise NumericsError("degenerate estimation window: all ARs zero")
    stat = ar / math.sqrt(s2)
    return TestResult(statistic=stat, n=m, significance=annotate(stat), method="t_ar")


def _signed_ranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks of |values| and the sign pattern, zeros already removed."""
    magnitudes = np.abs(values)
    order = np.argsort(magnitudes, kind="stable")
    ranks = np.empty(len(values))
    sorted_mags = magnitudes[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_mags[j + 1] == sorted_mags[i]:
            j += 1
        # tied block gets the average of ranks i+1..j+1
        ranks[order[i: j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks, np.sign(values)


def wilcoxon_signed_rank(values, mode: str = "standard") -> TestResult:
    """Signed-rank Z for median-zero symmetry.

    W is the sum of ranks of the positive values, ranking |values| with
    average ranks on ties and dropping exact zeros (N shrinks). The
    normal approximation is Z = (W - N(N+1)/4) / sqrt(sum(rank^2) / 4);
    the variance term reduces to N(N+1)(2N+1)/24 when there are no ties.
    mode="paper_literal" centers at N(N-1)/4 instead.
    """
    if mode not in WILCOXON_MODES:
        raise NumericsError(f"unknown wilcoxon mode {mode!r}")
    arr = np.asarray(list(values), dtype=float)
    arr = arr[arr != 0.0]
    n = arr.size
    if n == 0:
        raise NumericsError("wilcoxon undefined: all values are exactly zero")
    if n < 2:
        raise InsufficientDataError(f"wilcoxon needs >= 2 nonzero values, got {n}")
    ranks, signs = _signed_ranks(arr)
    w = float(ranks[signs > 0].sum())
    center = n * (n - 1) / 4.0 if mode == "paper_literal" else n * (n + 1) / 4.0
    variance = float(np.sum(ranks ** 2)) / 4.0
    if variance == 0.0:
        raise NumericsError("wilcoxon variance degenerate")
    z = (w - center) / math.sqrt(variance)
    return TestResult(statistic=z, n=n, significance=annotate(z), method="wilcoxon")
