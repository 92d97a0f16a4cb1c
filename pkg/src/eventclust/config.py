"""Study configuration: TOML loading and whole-config validation.

Paths inside a config file are resolved relative to the file itself, so a
checked-in config plus its data directory stay relocatable as a unit.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .clustering import LINKAGES, DistanceMetric
from .errors import ConfigError
from .event_study import EventSpec
from .inference import WILCOXON_MODES

FEATURE_MODES = ("four_variable", "five_variable")


@dataclass(frozen=True)
class ClusterSettings:
    metric: DistanceMetric
    linkage: str = "average"
    k: int = 5
    modes: tuple[str, ...] = FEATURE_MODES
    report_k: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)


@dataclass(frozen=True)
class PostStudyClustering:
    anchor_event: str
    length: int = 20
    side: str = "after"


@dataclass(frozen=True)
class StudyConfig:
    prices_path: Path
    factors_path: Path
    market_index: str
    focal: str
    events: tuple  # of EventSpec
    clustering: ClusterSettings
    estimation_anchor_event: str
    estimation_offsets: tuple[int, int] = (-52, -1)
    universe: tuple[str, ...] | None = None  # None = every non-index ticker
    wilcoxon_mode: str = "standard"
    pre_window_mode: str = "accumulated"
    post_study: PostStudyClustering | None = None
    output_dir: Path = Path("out")

    def event(self, name: str) -> EventSpec:
        for ev in self.events:
            if ev.name == name:
                return ev
        raise ConfigError(f"no event named {name!r}")


def _as_date(value, where: str) -> _dt.date:
    if isinstance(value, _dt.datetime):
        return value.date()
    if isinstance(value, _dt.date):
        return value
    if isinstance(value, str):
        return _dt.date.fromisoformat(value)
    raise ConfigError(f"{where}: expected a date, got {value!r}")


def _as_pair(value, where: str) -> tuple[int, int]:
    try:
        a, b = value
        return int(a), int(b)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a two-integer window, got {value!r}") from None


def load_study_config(path) -> StudyConfig:
    """Parse a TOML study config; structural problems raise ConfigError."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    base = path.parent

    def need(table, key, where):
        if key not in table:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return table[key]

    data = need(doc, "data", str(path))
    prices = base / need(data, "prices", "[data]")
    factors = base / need(data, "factors", "[data]")
    market_index = need(data, "market_index", "[data]")
    focal = need(data, "focal", "[data]")
    universe = tuple(data["universe"]) if "universe" in data else None

    events = []
    for i, etab in enumerate(need(doc, "events", str(path))):
        where = f"[[events]] #{i + 1}"
        spec = EventSpec(
            name=need(etab, "name", where),
            event_date=_as_date(need(etab, "date", where), where),
            pre_window=_as_pair(etab.get("pre", (-5, -1)), where),
            post_window=_as_pair(etab.get("post", (0, 20)), where),
            feature_length=int(etab.get("feature_length", 20)),
            feature_side=etab.get("feature_side", "before"),
        )
        events.append(spec)
    if not events:
        raise ConfigError(f"{path}: no events defined")

    est = doc.get("estimation", {})
    anchor_event = est.get("anchor_event", events[0].name)
    offsets = _as_pair(est.get("window", (-52, -1)), "[estimation].window")

    ctab = doc.get("clustering", {})
    clustering = ClusterSettings(
        metric=DistanceMetric.parse(ctab.get("metric", "squared_euclidean")),
        linkage=ctab.get("linkage", "average"),
        k=int(ctab.get("k", 5)),
        modes=tuple(ctab.get("modes", list(FEATURE_MODES))),
        report_k=tuple(int(k) for k in ctab.get("report_k", [2, 3, 4, 5, 6, 7, 8])),
    )

    itab = doc.get("inference", {})
    post_tab = doc.get("post_study_clustering")
    post = None
    if post_tab is not None:
        post = PostStudyClustering(
            anchor_event=need(post_tab, "anchor_event", "[post_study_clustering]"),
            length=int(post_tab.get("length", 20)),
            side=post_tab.get("side", "after"),
        )

    out = doc.get("output", {})
    return StudyConfig(
        prices_path=prices,
        factors_path=factors,
        market_index=market_index,
        focal=focal,
        universe=universe,
        events=tuple(events),
        clustering=clustering,
        estimation_anchor_event=anchor_event,
        estimation_offsets=offsets,
        wilcoxon_mode=itab.get("wilcoxon", "standard"),
        pre_window_mode=itab.get("pre_window_mode", "accumulated"),
        post_study=post,
        output_dir=base / out.get("directory", "out"),
    )


def validate_config(config: StudyConfig, panel=None) -> list[str]:
    """Check every config invariant; returns all violations at once.

    With a loaded panel the data-dependent invariants (tickers present,
    event dates are trading days, k within universe size) are checked too.
    """
    errors: list[str] = []
    if not config.focal or not isinstance(config.focal, str):
        errors.append("data.focal: exactly one focal ticker is required")
    if config.wilcoxon_mode not in WILCOXON_MODES:
        errors.append(f"inference.wilcoxon: unknown mode {config.wilcoxon_mode!r}")
    if config.pre_window_mode not in ("accumulated", "per_day"):
        errors.append(f"inference.pre_window_mode: unknown mode {config.pre_window_mode!r}")
    if config.clustering.linkage not in LINKAGES:
        errors.append(f"clustering.linkage: unknown linkage {config.clustering.linkage!r}")
    if (config.clustering.linkage == "ward"
            and config.clustering.metric.kind != "squared_euclidean"):
        errors.append("clustering: ward linkage requires the squared_euclidean metric")
    if config.clustering.k < 1:
        errors.append(f"clustering.k: must be >= 1, got {config.clustering.k}")
    for mode in config.clustering.modes:
        if mode not in FEATURE_MODES:
            errors.append(f"clustering.modes: unknown mode {mode!r}")
    lo, hi = config.estimation_offsets
    if not lo < hi <= -1:
        errors.append(f"estimation.window: must satisfy start < end <= -1, got ({lo}, {hi})")
    names = [ev.name for ev in config.events]
    if len(set(names)) != len(names):
        errors.append("events: duplicate event names")
    if config.estimation_anchor_event not in names:
        errors.append(
            f"estimation.anchor_event: {config.estimation_anchor_event!r} is not an event"
        )
    if config.post_study is not None:
        if config.post_study.anchor_event not in names:
            errors.append(
                f"post_study_clustering.anchor_event: "
                f"{config.post_study.anchor_event!r} is not an event"
            )
        if config.post_study.side not in ("before", "after"):
            errors.append("post_study_clustering.side: must be before/after")
    if not config.prices_path.exists():
        errors.append(f"data.prices: file not found: {config.prices_path}")
    if not config.factors_path.exists():
        errors.append(f"data.factors: file not found: {config.factors_path}")

    if panel is not None:
        if config.market_index not in panel:
            errors.append(f"data.market_index: {config.market_index!r} not in panel")
        if config.focal not in panel:
            errors.append(f"data.focal: {config.focal!r} not in panel")
        universe = config.universe or tuple(
            t for t in panel.tickers if t != config.market_index
        )
        for t in universe:
            if t not in panel:
                errors.append(f"data.universe: {t!r} not in panel")
        if config.focal not in universe:
            errors.append(f"data.focal: {config.focal!r} not in the study universe")
        if config.clustering.k > len(universe):
            errors.append(
                f"clustering.k: {config.clustering.k} exceeds universe size {len(universe)}"
            )
        for ev in config.events:
            if ev.event_date not in panel.calendar:
                errors.append(
                    f"events.{ev.name}: {ev.event_date} is not a trading day"
                )
    return errors


def resolve_universe(config: StudyConfig, panel) -> tuple[str, ...]:
    if config.universe is not None:
        return tuple(config.universe)
    return tuple(t for t in panel.tickers if t != config.market_index)


def with_wilcoxon_mode(config: StudyConfig, mode: str) -> StudyConfig:
    return replace(config, wilcoxon_mode=mode)
