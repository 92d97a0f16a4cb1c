"""Batch driver: load data, run the per-event analyses, emit the report bundle.

Per-event work (abnormal returns, features, clustering, CAAR tables) is
independent across events, so it can run on a thread pool; all file output
happens serially afterwards in a fixed order, keeping runs byte-identical
regardless of scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import clustering, report
from .config import StudyConfig, resolve_universe, validate_config
from .errors import ConfigError, InsufficientDataError
from .event_study import EventSpec, SampleCategory, caar, caar_series
from .features import FeatureWindow, build_feature_matrix
from .inference import t_ar, t_caar, wilcoxon_signed_rank
from .market_data import load_factors, load_panel, log_returns
from .market_model import (EstimationWindow, abnormal_returns,
                           estimation_abnormal_returns, fit_market_model)

log = logging.getLogger(__name__)

MODE_CATEGORY = {"four_variable": "clustered_4var", "five_variable": "clustered_5var"}


@dataclass
class EventResult:
    event: EventSpec
    ar_matrix: object
    matrices: dict          # mode -> FeatureMatrix
    dendrograms: dict       # mode -> Dendrogram
    assignments: dict       # mode -> ClusterAssignment
    categories: list        # SampleCategory in report order
    series: dict            # category name -> (pre, post) CaarSeries
    figure_lines: dict      # category name -> [(day, caar)] accumulated from pre start
    focal_ar: list          # (rel_day, ar or None)
    exclusions: set         # (event, ticker, reason)


def _feature_exclusion_reason(raw_reason: str) -> str:
    """Collapse detailed messages into stable categories for the exclusion log."""
    for key, label in (
        ("missing bar", "missing_bar_in_feature_window"),
        ("missing return", "missing_return_in_feature_window"),
        ("missing abnormal return", "missing_ar_in_feature_window"),
        ("zero total volume", "zero_volume_in_feature_window"),
        ("paired excess-return", "insufficient_factor_observations"),
        ("non-finite", "non_finite_feature"),
    ):
        if key in raw_reason:
            return label
    return "feature_window_exclusion"


class Study:
    """A loaded study: panel, calendar, factors, fits, and per-event analysis."""

    def __init__(self, config: StudyConfig):
        self.config = config
        errors = validate_config(config)
        if errors:
            raise ConfigError("; ".join(errors))
        self.panel = load_panel(config.prices_path, config.market_index)
        errors = validate_config(config, self.panel)
        if errors:
            raise ConfigError("; ".join(errors))
        self.calendar = self.panel.calendar
        self.factors = load_factors(config.factors_path, self.calendar)
        self.returns = log_returns(self.panel)
        self.market = self.returns[config.market_index]
        self.universe = resolve_universe(config, self.panel)

        anchor = config.event(config.estimation_anchor_event).event_date
        lo, hi = config.estimation_offsets
        self.estimation_window = EstimationWindow(anchor=anchor, start_offset=lo,
                                                  end_offset=hi)
        self.estimation_dates = self.estimation_window.resolve(self.calendar)
        self.fits = {}
        self.fit_exclusions = set()
        for ticker in self.universe:
            try:
                self.fits[ticker] = fit_market_model(
                    self.returns[ticker], self.market, self.estimation_dates
                )
            except InsufficientDataError as exc:
                log.warning("excluding %s from universe: %s", ticker, exc)
                self.fit_exclusions.add((ticker, "insufficient_estimation_observations"))
        if not self.fits:
            raise InsufficientDataError("no security has enough estimation-window data")
        self.fitted_universe = tuple(t for t in self.universe if t in self.fits)
        if config.focal not in self.fits:
            raise InsufficientDataError(
                f"focal {config.focal!r} lacks estimation-window coverage"
            )
        self.focal_estimation_ars = estimation_abnormal_returns(
            self.returns[config.focal], self.market, self.fits[config.focal],
            self.estimation_dates,
        )

    # -- per-event pieces ---------------------------------------------------

    def ar_matrix_for(self, anchor, day_lo: int, day_hi: int):
        return abnormal_returns(
            self.returns, self.market, self.fits, self.calendar,
            anchor, day_lo, day_hi, tickers=self.fitted_universe,
        )

    def cluster_window(self, window: FeatureWindow, ar_matrix, mode: str):
        matrix = build_feature_matrix(
            self.panel, self.returns, self.factors, ar_matrix, window,
            mode=mode, universe=self.fitted_universe,
        )
        dend = clustering.agglomerate(
            matrix.normalized, matrix.tickers,
            self.config.clustering.metric, self.config.clustering.linkage,
        )
        k = min(self.config.clustering.k, len(matrix.tickers))
        assign = clustering.cut(dend, k, focal=self.config.focal)
        return matrix, dend, assign

    def analyze_event(self, event: EventSpec) -> EventResult:
        cfg = self.config
        lo, hi = event.ar_day_range()
        ar_matrix = self.ar_matrix_for(event.event_date, lo, hi)

        matrices, dendrograms, assignments = {}, {}, {}
        categories = [SampleCategory("all", self.fitted_universe)]
        exclusions = {(event.name, t, r) for t, r in self.fit_exclusions}
        for mode in cfg.clustering.modes:
            matrix, dend, assign = self.cluster_window(
                event.feature_window(), ar_matrix, mode
            )
            matrices[mode] = matrix
            dendrograms[mode] = dend
            assignments[mode] = assign
            for ticker, reason in matrix.excluded:
                exclusions.add((event.name, ticker, _feature_exclusion_reason(reason)))
            categories.append(SampleCategory(
                MODE_CATEGORY[mode], clustering.focal_subsample(assign, cfg.focal)
            ))

        series, figure_lines = {}, {}
        ps = event.pre_window[0]
        for category in categories:
            pre, post = caar_series(ar_matrix, category, event,
                                    pre_mode=cfg.pre_window_mode)
            series[category.name] = (pre, post)
            for window in (pre, post):
                for p in window.points:
                    for ticker, _reason in p.excluded:
                        exclusions.add((event.name, ticker, "missing_ar_in_car_range"))
            line = []
            for d in range(ps, event.post_window[1] + 1):
                point = caar(ar_matrix, category, ps, d)
                line.append((d, point.caar))
            figure_lines[category.name] = line

        focal_ar = [(d, ar_matrix.get(cfg.focal, d))
                    for d in range(event.pre_window[0], event.post_window[1] + 1)]
        return EventResult(
            event=event, ar_matrix=ar_matrix, matrices=matrices,
            dendrograms=dendrograms, assignments=assignments,
            categories=categories, series=series, figure_lines=figure_lines,
            focal_ar=focal_ar, exclusions=exclusions,
        )

    def post_study_clustering(self):
        ps = self.config.post_study
        if ps is None:
            return None
        anchor = self.config.event(ps.anchor_event).event_date
        window = FeatureWindow(anchor=anchor, length=ps.length, side=ps.side)
        off = window.offsets
        ar_matrix = self.ar_matrix_for(anchor, min(off[0], 0), off[-1])
        out = {}
        for mode in self.config.clustering.modes:
            out[mode] = self.cluster_window(window, ar_matrix, mode)
        return out

    def focal_membership_rows(self, anchor_name: str, dendrograms: dict):
        rows = []
        for mode, dend in sorted(dendrograms.items()):
            for k in self.config.clustering.report_k:
                if not 1 <= k <= dend.n_leaves:
                    continue
                assign = clustering.cut(dend, k, focal=self.config.focal)
                members = clustering.focal_subsample(assign, self.config.focal)
                rows.append((anchor_name, mode, k, len(members), members))
        return rows


def _test_columns(point, wilcoxon_mode: str):
    """(t, t_stars, z, z_stars) for one CAAR point; None when untestable (N < 2)."""
    if point.n_securities < 2:
        return None, None, None, None
    t = t_caar(point.cars)
    try:
        z = wilcoxon_signed_rank(point.cars, mode=wilcoxon_mode)
        z_stat, z_stars = z.statistic, z.stars
    except InsufficientDataError:
        z_stat, z_stars = None, None
    return t.statistic, t.stars, z_stat, z_stars


def run_study(config: StudyConfig, out_dir, events_filter=None, threads: int = 1) -> Path:
    """Run the full pipeline and write the report bundle under `out_dir`."""
    study = Study(config)
    events = list(config.events)
    if events_filter:
        wanted = set(events_filter)
        unknown = wanted - {ev.name for ev in events}
        if unknown:
            raise ConfigError(f"unknown event(s) requested: {sorted(unknown)}")
        events = [ev for ev in events if ev.name in wanted]

    if threads > 1 and len(events) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(study.analyze_event, events))
    else:
        results = [study.analyze_event(ev) for ev in events]

    post = study.post_study_clustering()

    out_dir = Path(out_dir)
    (out_dir / "plotdata").mkdir(parents=True, exist_ok=True)
    (out_dir / "figures").mkdir(parents=True, exist_ok=True)

    report.write_fits(study.fits, out_dir / "fits.csv")

    all_series, exclusions, membership_rows = [], set(), []
    for res in results:
        ev = res.event
        exclusions |= res.exclusions
        membership_rows += study.focal_membership_rows(ev.name, res.dendrograms)
        for mode in sorted(res.matrices):
            suffix = f"{ev.name}_{mode}"
            report.write_features(res.matrices[mode], out_dir / f"features_{suffix}.csv")
            report.write_dendrogram_json(res.dendrograms[mode],
                                         out_dir / f"dendrogram_{suffix}.json")
            report.write_assignment(res.assignments[mode],
                                    out_dir / f"assignment_{suffix}.csv")
        for category in res.categories:
            pre, post_series = res.series[category.name]
            all_series += [pre, post_series]
            rows = []
            for p in list(pre.points) + list(post_series.points):
                t, t_stars, z, z_stars = _test_columns(p, config.wilcoxon_mode)
                rows.append((ev.name, category.name, p.rel_day, p.caar,
                             t, t_stars, z, z_stars))
            report.write_report_table(
                rows, out_dir / f"report_{ev.name}_{category.name}.csv"
            )
            report.write_plotdata(res.figure_lines[category.name],
                                  out_dir / "plotdata" / f"{ev.name}_{category.name}.csv")
        report.caar_figure(ev.name, res.figure_lines,
                           out_dir / "figures" / f"caar_{ev.name}.png")

        focal_rows = []
        for d, ar in res.focal_ar:
            if ar is None:
                continue
            t = t_ar(ar, study.focal_estimation_ars)
            focal_rows.append((ev.name, f"focal:{config.focal}", d, ar,
                               t.statistic, t.stars, None, None))
        report.write_report_table(focal_rows, out_dir / f"focal_ar_{ev.name}.csv")
        report.focal_ar_figure(ev.name, config.focal,
                               [(d, ar) for d, ar in res.focal_ar if ar is not None],
                               out_dir / "figures" / f"focal_ar_{ev.name}.png")

    if post is not None:
        for mode in sorted(post):
            matrix, dend, assign = post[mode]
            suffix = f"post_study_{mode}"
            report.write_features(matrix, out_dir / f"features_{suffix}.csv")
            report.write_dendrogram_json(dend, out_dir / f"dendrogram_{suffix}.json")
            report.write_assignment(assign, out_dir / f"assignment_{suffix}.csv")
            for ticker, reason in matrix.excluded:
                exclusions.add(("post_study", ticker, _feature_exclusion_reason(reason)))
        membership_rows += study.focal_membership_rows(
            "post_study", {m: post[m][1] for m in post}
        )
        for mode in sorted(post):
            report.dendrogram_figure(
                post[mode][1], f"post-study clustering ({mode})",
                out_dir / "figures" / f"dendrogram_post_study_{mode}.png",
            )

    for res in results:
        for mode in sorted(res.dendrograms):
            report.dendrogram_figure(
                res.dendrograms[mode], f"{res.event.name} ({mode})",
                out_dir / "figures" / f"dendrogram_{res.event.name}_{mode}.png",
            )

    report.write_caar_long(all_series, out_dir / "caar_series.csv")
    report.write_exclusions(exclusions, out_dir / "exclusions.csv")
    report.write_focal_membership(membership_rows, out_dir / "focal_membership.csv")
    log.info("report bundle written to %s", out_dir)
    return out_dir
