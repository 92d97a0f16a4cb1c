import csv
from datetime import date, timedelta

import pytest

from eventclust.cli import main
from eventclust.config import load_study_config, validate_config
from eventclust.errors import ConfigError

from conftest import SAMPLE_CONFIG, SAMPLE_FACTORS, SAMPLE_PRICES, write_prices, write_factors


def config_text(prices, factors, k=5, event_date="2018-03-19", extra="",
                window="[-52, -1]", post_study=True):
    post = """
[post_study_clustering]
anchor_event = "q2_earnings"
length = 20
side = "after"
""" if post_study else ""
    return f"""
[data]
prices = "{prices}"
factors = "{factors}"
market_index = "NDX"
focal = "FB"

[estimation]
anchor_event = "scandal_break"
window = {window}

[clustering]
metric = "squared_euclidean"
linkage = "average"
k = {k}
modes = ["four_variable", "five_variable"]

{extra}

[[events]]
name = "scandal_break"
date = {event_date}
pre = [-5, -1]
post = [0, 14]
feature_length = 20

[[events]]
name = "q2_earnings"
date = 2018-07-26
pre = [-5, -1]
post = [0, 20]
feature_length = 20
{post}
"""


def write_config(tmp_path, text):
    path = tmp_path / "study.toml"
    path.write_text(text)
    return path


class TestConfigLoading:
    def test_bundled_config_parses(self, sample_config):
        assert len(sample_config.events) == 4
        assert sample_config.clustering.k == 5
        assert sample_config.focal == "FB"
        assert sample_config.events[1].post_window == (0, 11)
        assert sample_config.events[2].feature_length == 11

    def test_bundled_config_validates(self, sample_config, panel):
        assert validate_config(sample_config) == []
        assert validate_config(sample_config, panel) == []

    def test_missing_key_named(self, tmp_path):
        path = write_config(tmp_path, "[data]\nprices = 'x.csv'\n")
        with pytest.raises(ConfigError, match="factors"):
            load_study_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_study_config(tmp_path / "none.toml")

    def test_all_violations_reported_at_once(self, tmp_path):
        text = config_text("missing_prices.csv", "missing_factors.csv", k=0,
                           extra='[inference]\nwilcoxon = "sideways"\n')
        cfg = load_study_config(write_config(tmp_path, text))
        errors = validate_config(cfg)
        joined = "\n".join(errors)
        assert "data.prices" in joined
        assert "data.factors" in joined
        assert "clustering.k" in joined
        assert "inference.wilcoxon" in joined
        assert len(errors) >= 4

    def test_k_exceeding_universe(self, tmp_path, panel):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, k=100)
        cfg = load_study_config(write_config(tmp_path, text))
        errors = validate_config(cfg, panel)
        assert any("exceeds universe" in e for e in errors)

    def test_weekend_event_date_flagged(self, tmp_path, panel):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, event_date="2018-03-17")
        cfg = load_study_config(write_config(tmp_path, text))
        errors = validate_config(cfg, panel)
        assert any("not a trading day" in e for e in errors)

    def test_universe_filter(self, tmp_path):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, k=2, post_study=False)
        text = text.replace('focal = "FB"',
                            'focal = "FB"\nuniverse = ["FB", "AAPL", "MSFT", "INTC"]')
        path = write_config(tmp_path, text)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "fit"]) == 0
        with open(out / "fits.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert sorted(r["ticker"] for r in rows) == ["AAPL", "FB", "INTC", "MSFT"]

    def test_universe_must_contain_focal(self, tmp_path, panel):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS)
        text = text.replace('focal = "FB"',
                            'focal = "FB"\nuniverse = ["AAPL", "MSFT"]')
        cfg = load_study_config(write_config(tmp_path, text))
        assert any("focal" in e for e in validate_config(cfg, panel))

    def test_ward_with_wrong_metric(self, tmp_path):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS,
                           extra="").replace('metric = "squared_euclidean"',
                                             'metric = "euclidean"')
        text = text.replace('linkage = "average"', 'linkage = "ward"')
        cfg = load_study_config(write_config(tmp_path, text))
        assert any("ward" in e for e in validate_config(cfg))


class TestCli:
    def test_validate_ok(self, capsys):
        assert main(["--config", str(SAMPLE_CONFIG), "validate"]) == 0
        assert capsys.readouterr().out == ""  # data products only, logs on stderr

    def test_validate_bad_config_exit_1(self, tmp_path, capsys):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, event_date="2018-03-17")
        path = write_config(tmp_path, text)
        assert main(["--config", str(path), "validate"]) == 1
        assert "not a trading day" in capsys.readouterr().err

    def test_study_aborts_on_bad_config_before_compute(self, tmp_path):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, event_date="2018-03-17")
        path = write_config(tmp_path, text)
        assert main(["--config", str(path), "--out", str(tmp_path / "o"), "study"]) == 1
        assert not (tmp_path / "o" / "fits.csv").exists()

    def test_unknown_event_exit_1(self, tmp_path):
        assert main(["--config", str(SAMPLE_CONFIG), "--out", str(tmp_path / "o"),
                     "--event", "nope", "study"]) == 1

    def test_data_error_exit_2(self, tmp_path):
        bad = write_prices(tmp_path / "bad.csv", [
            ("2018-03-01", "NDX", 10, 9, 11, 10, 1),
        ])
        text = config_text(bad, SAMPLE_FACTORS)
        path = write_config(tmp_path, text)
        assert main(["--config", str(path), "fit"]) == 2

    def test_numerics_error_exit_3(self, tmp_path):
        # constant market prices: zero estimation-window variance
        days, d = [], date(2018, 1, 2)
        while len(days) < 70:
            if d.weekday() < 5:
                days.append(d)
            d += timedelta(days=1)
        rows = []
        for i, dd in enumerate(days):
            rows.append((dd.isoformat(), "NDX", 10, 10, 10, 10, 1))
            px = 100 + (i % 7)
            rows.append((dd.isoformat(), "FB", px, px + 1, px - 1, px, 1))
        prices = write_prices(tmp_path / "flat.csv", rows)
        factors = write_factors(tmp_path / "f.csv",
                                [(dd.strftime("%Y%m%d"), 0.1, 0, 0, 0.01)
                                 for dd in days])
        text = f"""
[data]
prices = "{prices}"
factors = "{factors}"
market_index = "NDX"
focal = "FB"

[clustering]
k = 1

[[events]]
name = "scandal_break"
date = {days[60].isoformat()}
pre = [-5, -1]
post = [0, 3]
feature_length = 20
"""
        path = write_config(tmp_path, text)
        assert main(["--config", str(path), "fit"]) == 3

    def test_fit_subcommand(self, tmp_path):
        out = tmp_path / "fits"
        assert main(["--config", str(SAMPLE_CONFIG), "--out", str(out), "fit"]) == 0
        with open(out / "fits.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 37
        fb = next(r for r in rows if r["ticker"] == "FB")
        assert int(fb["n_obs"]) == 52

    def test_cluster_subcommand(self, tmp_path):
        out = tmp_path / "cluster"
        rc = main(["--config", str(SAMPLE_CONFIG), "--out", str(out),
                   "--event", "scandal_break", "cluster"])
        assert rc == 0
        assert (out / "dendrogram_scandal_break_five_variable.json").exists()
        assert (out / "assignment_scandal_break_four_variable.csv").exists()
        assert (out / "focal_membership.csv").exists()

    def test_features_subcommand(self, tmp_path):
        out = tmp_path / "features"
        rc = main(["--config", str(SAMPLE_CONFIG), "--out", str(out),
                   "--event", "q2_earnings", "features"])
        assert rc == 0
        with open(out / "features_q2_earnings_five_variable.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 37


@pytest.fixture(scope="module")
def quick_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("quick") / "out"
    rc = main(["--config", str(SAMPLE_CONFIG), "--out", str(out),
               "--event", "scandal_break", "study"])
    assert rc == 0
    return out


class TestStudyRun:
    def test_products_exist(self, quick_run):
        assert (quick_run / "fits.csv").exists()
        assert (quick_run / "caar_series.csv").exists()
        assert (quick_run / "report_scandal_break_all.csv").exists()
        assert (quick_run / "report_scandal_break_clustered_4var.csv").exists()
        assert (quick_run / "report_scandal_break_clustered_5var.csv").exists()
        assert (quick_run / "exclusions.csv").exists()
        assert (quick_run / "figures" / "caar_scandal_break.png").exists()
        assert (quick_run / "figures" / "focal_ar_scandal_break.png").exists()
        assert (quick_run / "plotdata" / "scandal_break_all.csv").exists()

    def test_report_schema(self, quick_run):
        with open(quick_run / "report_scandal_break_all.csv") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames == ["event", "category", "relative_day",
                                         "caar_or_ar", "t_stat", "t_stars",
                                         "wilcoxon_z", "wilcoxon_stars"]
            rows = list(reader)
        days = [int(r["relative_day"]) for r in rows]
        assert days == list(range(-5, 0)) + list(range(0, 15))

    def test_caar_series_schema(self, quick_run):
        with open(quick_run / "caar_series.csv") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames == ["event", "category", "relative_day",
                                         "caar", "n_securities"]
            rows = list(reader)
        all_rows = [r for r in rows if r["category"] == "all"]
        assert len(all_rows) == 20  # 5 pre + 15 post days
        assert all(r["n_securities"] == "37" for r in all_rows)

    def test_plotdata_matches_figure_line(self, quick_run):
        with open(quick_run / "plotdata" / "scandal_break_all.csv") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames == ["relative_day", "caar"]
            rows = list(reader)
        assert [int(r["relative_day"]) for r in rows] == list(range(-5, 15))

    def test_threads_give_identical_output(self, tmp_path):
        out1 = tmp_path / "t1"
        out2 = tmp_path / "t2"
        for out, threads in ((out1, "1"), (out2, "3")):
            rc = main(["--config", str(SAMPLE_CONFIG), "--out", str(out),
                       "--threads", threads, "--event", "scandal_break",
                       "--event", "q2_earnings", "study"])
            assert rc == 0
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_k1_collapses_categories(self, tmp_path):
        text = config_text(SAMPLE_PRICES, SAMPLE_FACTORS, k=1, post_study=False)
        path = write_config(tmp_path, text)
        out = tmp_path / "o"
        rc = main(["--config", str(path), "--out", str(out),
                   "--event", "scandal_break", "study"])
        assert rc == 0
        ref = (out / "plotdata" / "scandal_break_all.csv").read_bytes()
        for cat in ("clustered_4var", "clustered_5var"):
            assert (out / "plotdata" / f"scandal_break_{cat}.csv").read_bytes() == ref

    def test_paper_literal_wilcoxon_changes_reports(self, tmp_path):
        out1 = tmp_path / "std"
        out2 = tmp_path / "lit"
        main(["--config", str(SAMPLE_CONFIG), "--out", str(out1),
              "--event", "scandal_break", "study"])
        main(["--config", str(SAMPLE_CONFIG), "--out", str(out2),
              "--event", "scandal_break", "--paper-literal-wilcoxon", "study"])
        r1 = (out1 / "report_scandal_break_all.csv").read_text()
        r2 = (out2 / "report_scandal_break_all.csv").read_text()
        assert r1 != r2
        # t columns unchanged, wilcoxon column shifted
        for line1, line2 in zip(r1.splitlines()[1:], r2.splitlines()[1:]):
            assert line1.split(",")[:6] == line2.split(",")[:6]

    def test_exclusion_log_contract(self, tmp_path):
        # remove one bar inside event 1's feature window: that security is
        # excluded once per (event, reason)
        with open(SAMPLE_PRICES) as fh:
            rows = [r for r in csv.reader(fh)]
        rows = [r for r in rows if not (r[1] == "INTC" and r[0] == "2018-03-12")]
        prices = tmp_path / "p.csv"
        with open(prices, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        text = config_text(prices, SAMPLE_FACTORS, post_study=False)
        path = write_config(tmp_path, text)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out),
                     "--event", "scandal_break", "study"]) == 0
        with open(out / "exclusions.csv") as fh:
            entries = [(r["event"], r["ticker"], r["reason"])
                       for r in csv.DictReader(fh)]
        intc = [e for e in entries if e[1] == "INTC"]
        assert intc, "expected INTC exclusions"
        assert len(set(intc)) == len(intc)
        with open(out / "report_scandal_break_all.csv") as fh:
            dr = list(csv.DictReader(fh))
        # INTC's return gap also drops it from the event-window cross-section
        assert any(e[2] == "missing_ar_in_car_range" for e in intc)
