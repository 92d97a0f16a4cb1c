"""File emitters: delimited report tables, plot data, JSON dendrograms, figures.

Everything written here is deterministic for identical inputs: fixed column
orders, fixed float formatting, no timestamps.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .clustering import ClusterAssignment, Dendrogram  # noqa: E402
from .features import FeatureMatrix  # noqa: E402

CATEGORY_COLORS = {
    "all": "tab:red",
    "clustered_4var": "tab:blue",
    "clustered_5var": "tab:green",
}


def _fmt(x) -> str:
    """Full-precision, round-trippable float formatting."""
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_fits(fits: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["ticker", "alpha", "beta", "residual_variance", "r_squared", "n_obs"])
        for ticker in sorted(fits):
            f = fits[ticker]
            w.writerow([ticker, _fmt(f.alpha), _fmt(f.beta),
                        _fmt(f.residual_variance), _fmt(f.r_squared), f.n_obs])


def write_exclusions(rows, path: Path) -> None:
    """rows: iterable of (event, ticker, reason); deduplicated and sorted."""
    unique = sorted(set(rows))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["event", "ticker", "reason"])
        for event, ticker, reason in unique:
            w.writerow([event, ticker, reason])


def write_caar_long(all_series, path: Path) -> None:
    """Long-form CAAR rows across every (event, category) window pair.

    Pre-window rows carry negative relative days, post-window rows start
    at day 0, so the window membership is implicit in the day column.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["event", "category", "relative_day", "caar", "n_securities"])
        for series in all_series:
            for p in series.points:
                w.writerow([series.event, series.category,
                            p.rel_day, _fmt(p.caar), p.n_securities])


def write_report_table(rows, path: Path) -> None:
    """Per-day significance table mirroring the published layout.

    rows: (event, category, rel_day, value, t_stat, t_stars, z, z_stars)
    where the statistics may be None for cross-sections too small to test.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["event", "category", "relative_day", "caar_or_ar",
                    "t_stat", "t_stars", "wilcoxon_z", "wilcoxon_stars"])
        for event, category, day, value, t, t_stars, z, z_stars in rows:
            w.writerow([
                event, category, day, f"{value:.6f}",
                "" if t is None else f"{t:.4f}",
                "" if t_stars is None else t_stars,
                "" if z is None else f"{z:.4f}",
                "" if z_stars is None else z_stars,
            ])


def write_plotdata(points, path: Path) -> None:
    """relative_day,caar pairs for one (event, category) figure line."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["relative_day", "caar"])
        for day, value in points:
            w.writerow([day, _fmt(value)])


def write_features(matrix: FeatureMatrix, path: Path) -> None:
    names = list(matrix.feature_names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["ticker"] + names + [f"norm_{n}" for n in names])
        for i, ticker in enumerate(matrix.tickers):
            w.writerow([ticker]
                       + [_fmt(v) for v in matrix.raw[i]]
                       + [_fmt(v) for v in matrix.normalized[i]])


def write_dendrogram_json(dend: Dendrogram, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dend.to_json_dict(), fh, indent=1)
        fh.write("\n")


def write_assignment(assign: ClusterAssignment, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["ticker", "cluster_label", "is_focal_cluster"])
        for ticker in assign.tickers:
            label = assign.labels[ticker]
            w.writerow([ticker, label,
                        int(assign.focal_cluster is not None
                            and label == assign.focal_cluster)])


def write_focal_membership(rows, path: Path) -> None:
    """rows: (anchor, mode, k, size, members tuple)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["anchor", "mode", "k", "focal_cluster_size", "members"])
        for anchor, mode, k, size, members in rows:
            w.writerow([anchor, mode, k, size, "|".join(members)])


# ---------------------------------------------------------------------------
# figures

def caar_figure(event_name: str, lines: dict, path: Path) -> None:
    """CAAR paths (accumulated from the pre-window start) per category."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for category, points in lines.items():
        days = [d for d, _ in points]
        values = [v for _, v in points]
        ax.plot(days, values, marker="o", markersize=3,
                color=CATEGORY_COLORS.get(category, "tab:gray"),
                label=category)
    ax.axvline(0, color="black", linewidth=0.8, linestyle="--")
    ax.axhline(0, color="black", linewidth=0.5)
    ax.set_xlabel("trading day relative to event")
    ax.set_ylabel("CAAR")
    ax.set_title(f"Cumulative average abnormal return: {event_name}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def focal_ar_figure(event_name: str, focal: str, points, path: Path) -> None:
    """Daily abnormal returns of the focal security around one event."""
    days = [d for d, _ in points]
    values = [v for _, v in points]
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(days, values, marker="o", markersize=3, color="tab:purple")
    ax.axvline(0, color="black", linewidth=0.8, linestyle="--")
    ax.axhline(0, color="black", linewidth=0.5)
    ax.set_xlabel("trading day relative to event")
    ax.set_ylabel("abnormal return")
    ax.set_title(f"{focal} daily abnormal return: {event_name}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _leaf_order(dend: Dendrogram) -> list[int]:
    children = {nid: (l, r) for l, r, _h, nid in dend.merges}

    def walk(node):
        if node < dend.n_leaves:
            return [node]
        l, r = children[node]
        return walk(l) + walk(r)

    return walk(dend.merges[-1][3]) if dend.merges else [0]


def dendrogram_figure(dend: Dendrogram, title: str, path: Path) -> None:
    """Minimal U-link dendrogram rendering of the merge history."""
    order = _leaf_order(dend)
    xpos = {leaf: i for i, leaf in enumerate(order)}
    height = {i: 0.0 for i in range(dend.n_leaves)}
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * dend.n_leaves), 5))
    for left, right, h, new_id in dend.merges:
        xl, xr = xpos[left], xpos[right]
        ax.plot([xl, xl], [height[left], h], color="tab:blue", linewidth=1)
        ax.plot([xr, xr], [height[right], h], color="tab:blue", linewidth=1)
        ax.plot([xl, xr], [h, h], color="tab:blue", linewidth=1)
        xpos[new_id] = 0.5 * (xl + xr)
        height[new_id] = h
    ax.set_xticks(range(dend.n_leaves))
    ax.set_xticklabels([dend.labels[i] for i in order], rotation=90, fontsize=7)
    ax.set_ylabel("merge distance")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
