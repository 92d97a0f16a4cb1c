"""Command-line driver.

Subcommands: validate, fit, features, cluster, study. Logs go to stderr;
data products go to files under the output directory only. Exit codes:
0 ok, 1 config error, 2 data error, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import date
from pathlib import Path

from . import report
from .config import load_study_config, validate_config, with_wilcoxon_mode
from .errors import ConfigError, DataError, NumericsError
from .pipeline import Study, run_study

log = logging.getLogger("eventclust")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventclust",
        description="Clustering-aware event-study pipeline over daily OHLCV data",
    )
    parser.add_argument("--config", required=True, help="study config (TOML)")
    parser.add_argument("--out", help="output directory (default: dated dir under the "
                                      "config's output root)")
    parser.add_argument("--paper-literal-wilcoxon", action="store_true",
                        help="center the signed-rank statistic at N(N-1)/4")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-event analysis")
    parser.add_argument("--event", action="append",
                        help="restrict to the named event (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("command",
                        choices=["validate", "fit", "features", "cluster", "study"])
    return parser


def _out_dir(args, config, command: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(config.output_dir) / f"{command}-{date.today():%Y%m%d}"


def _cmd_validate(config, args) -> int:
    errors = validate_config(config)
    if not errors:
        from .market_data import load_panel
        panel = load_panel(config.prices_path, config.market_index)
        errors = validate_config(config, panel)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 1
    log.info("config ok")
    return 0


def _cmd_fit(config, args) -> int:
    study = Study(config)
    out = _out_dir(args, config, "fit")
    out.mkdir(parents=True, exist_ok=True)
    report.write_fits(study.fits, out / "fits.csv")
    log.info("wrote %s", out / "fits.csv")
    return 0


def _events(config, args):
    events = list(config.events)
    if args.event:
        wanted = set(args.event)
        unknown = wanted - {ev.name for ev in events}
        if unknown:
            raise ConfigError(f"unknown event(s) requested: {sorted(unknown)}")
        events = [ev for ev in events if ev.name in wanted]
    return events


def _cmd_features(config, args) -> int:
    study = Study(config)
    out = _out_dir(args, config, "features")
    out.mkdir(parents=True, exist_ok=True)
    for ev in _events(config, args):
        lo, hi = ev.ar_day_range()
        ar_matrix = study.ar_matrix_for(ev.event_date, lo, hi)
        for mode in config.clustering.modes:
            matrix, _, _ = study.cluster_window(ev.feature_window(), ar_matrix, mode)
            report.write_features(matrix, out / f"features_{ev.name}_{mode}.csv")
    log.info("features written to %s", out)
    return 0


def _cmd_cluster(config, args) -> int:
    study = Study(config)
    out = _out_dir(args, config, "cluster")
    out.mkdir(parents=True, exist_ok=True)
    membership = []
    for ev in _events(config, args):
        lo, hi = ev.ar_day_range()
        ar_matrix = study.ar_matrix_for(ev.event_date, lo, hi)
        dendrograms = {}
        for mode in config.clustering.modes:
            matrix, dend, assign = study.cluster_window(ev.feature_window(),
                                                        ar_matrix, mode)
            dendrograms[mode] = dend
            suffix = f"{ev.name}_{mode}"
            report.write_features(matrix, out / f"features_{suffix}.csv")
            report.write_dendrogram_json(dend, out / f"dendrogram_{suffix}.json")
            report.write_assignment(assign, out / f"assignment_{suffix}.csv")
        membership += study.focal_membership_rows(ev.name, dendrograms)
    report.write_focal_membership(membership, out / "focal_membership.csv")
    log.info("cluster products written to %s", out)
    return 0


def _cmd_study(config, args) -> int:
    out = _out_dir(args, config, "study")
    out.mkdir(parents=True, exist_ok=True)
    run_study(config, out, events_filter=args.event, threads=args.threads)
    return 0


COMMANDS = {
    "validate": _cmd_validate,
    "fit": _cmd_fit,
    "features": _cmd_features,
    "cluster": _cmd_cluster,
    "study": _cmd_study,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_study_config(args.config)
        if args.paper_literal_wilcoxon:
            config = with_wilcoxon_mode(config, "paper_literal")
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
