import math
from datetime import date

import numpy as np
import pytest

from eventclust.errors import DataError
from eventclust.market_data import (TradingCalendar, load_factors, load_panel,
                                    log_returns, relative_index, write_panel)

from conftest import write_factors, write_prices


def simple_rows():
    return [
        ("2018-03-01", "AAA", 10.0, 10.5, 9.8, 10.2, 1000),
        ("2018-03-02", "AAA", 10.2, 10.6, 10.0, 10.4, 1100),
        ("2018-03-05", "AAA", 10.4, 10.9, 10.3, 10.8, 900),
    ]


class TestLoadPanel:
    def test_minimal_well_formed(self, tmp_path):
        path = write_prices(tmp_path / "p.csv", simple_rows())
        panel = load_panel(path, "AAA")
        assert panel.tickers == ("AAA",)
        assert len(panel["AAA"]) == 3
        assert len(panel.calendar) == 3
        assert panel.calendar.dates[0] == date(2018, 3, 1)

    def test_high_below_low_names_line(self, tmp_path):
        rows = simple_rows()
        rows[1] = ("2018-03-02", "AAA", 9.5, 9.0, 10.0, 9.5, 1100)
        path = write_prices(tmp_path / "p.csv", rows)
        with pytest.raises(DataError, match="line 3.*high"):
            load_panel(path, "AAA")

    def test_nonpositive_price(self, tmp_path):
        rows = simple_rows()
        rows[0] = ("2018-03-01", "AAA", 10.0, 10.5, 9.8, -1.0, 1000)
        path = write_prices(tmp_path / "p.csv", rows)
        with pytest.raises(DataError, match="line 2.*non-positive"):
            load_panel(path, "AAA")

    def test_duplicate_ticker_date(self, tmp_path):
        rows = simple_rows() + [simple_rows()[0]]
        path = write_prices(tmp_path / "p.csv", rows)
        with pytest.raises(DataError, match="duplicate"):
            load_panel(path, "AAA")

    def test_malformed_row_reports_line(self, tmp_path):
        rows = simple_rows()
        rows[2] = ("2018-03-05", "AAA", "oops", 10.9, 10.3, 10.8, 900)
        path = write_prices(tmp_path / "p.csv", rows)
        with pytest.raises(DataError, match="line 4"):
            load_panel(path, "AAA")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(DataError, match="header"):
            load_panel(path, "AAA")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_panel(tmp_path / "nope.csv", "AAA")

    def test_calendar_source_missing(self, tmp_path):
        path = write_prices(tmp_path / "p.csv", simple_rows())
        with pytest.raises(DataError, match="calendar source"):
            load_panel(path, "ZZZ")

    def test_security_off_calendar(self, tmp_path):
        rows = simple_rows() + [("2018-03-03", "BBB", 5, 5.2, 4.9, 5.1, 10)]
        path = write_prices(tmp_path / "p.csv", rows)
        with pytest.raises(DataError, match="BBB.*not a calendar date"):
            load_panel(path, "AAA")

    def test_bundled_sample(self, panel, sample_config):
        universe = [t for t in panel.tickers if t != "NDX"]
        assert len(universe) == 37
        for ev in sample_config.events:
            assert ev.event_date in panel.calendar

    def test_roundtrip(self, tmp_path):
        path = write_prices(tmp_path / "p.csv", simple_rows())
        panel = load_panel(path, "AAA")
        out1 = tmp_path / "o1.csv"
        out2 = tmp_path / "o2.csv"
        write_panel(panel, out1)
        panel2 = load_panel(out1, "AAA")
        write_panel(panel2, out2)
        assert out1.read_bytes() == out2.read_bytes()
        np.testing.assert_array_equal(panel["AAA"].close, panel2["AAA"].close)
        assert panel.calendar.dates == panel2.calendar.dates


class TestLogReturns:
    def _panel_from_closes(self, tmp_path, closes):
        rows = [(f"2018-03-{d:02d}", "AAA", c, c, c, c, 100)
                for d, c in zip((1, 2, 5, 6, 7), closes)]
        return load_panel(write_prices(tmp_path / "p.csv", rows), "AAA")

    def test_flat_price(self, tmp_path):
        panel = self._panel_from_closes(tmp_path, [100, 100, 100, 100, 100])
        rets = log_returns(panel)["AAA"]
        assert rets[date(2018, 3, 2)] == 0.0

    def test_ten_percent(self, tmp_path):
        panel = self._panel_from_closes(tmp_path, [100, 110, 110, 110, 110])
        r = log_returns(panel)["AAA"][date(2018, 3, 2)]
        assert abs(r - 0.0953102) < 1e-7

    def test_doubling(self, tmp_path):
        panel = self._panel_from_closes(tmp_path, [100, 200, 200, 200, 200])
        r = log_returns(panel)["AAA"][date(2018, 3, 2)]
        assert abs(r - math.log(2)) < 1e-12

    def test_first_date_has_no_return(self, tmp_path):
        panel = self._panel_from_closes(tmp_path, [100, 110, 120, 130, 140])
        rets = log_returns(panel)["AAA"]
        assert rets.get(date(2018, 3, 1)) is None

    def test_gap_semantics(self, tmp_path):
        rows = [
            ("2018-03-01", "NDX", 10, 10, 10, 10, 1),
            ("2018-03-02", "NDX", 10, 10, 10, 10, 1),
            ("2018-03-05", "NDX", 10, 10, 10, 10, 1),
            ("2018-03-06", "NDX", 10, 10, 10, 10, 1),
            ("2018-03-01", "AAA", 100, 100, 100, 100, 1),
            ("2018-03-05", "AAA", 105, 105, 105, 105, 1),
            ("2018-03-06", "AAA", 106, 106, 106, 106, 1),
        ]
        panel = load_panel(write_prices(tmp_path / "p.csv", rows), "NDX")
        rets = log_returns(panel)["AAA"]
        assert rets.get(date(2018, 3, 2)) is None   # no bar that day
        assert rets.get(date(2018, 3, 5)) is None   # previous calendar day missing
        assert rets.get(date(2018, 3, 6)) is not None

    def test_exp_sum_identity_on_sample(self, panel, returns):
        # exp of summed log returns over a span reproduces the close ratio
        cal = panel.calendar.dates
        for ticker in ("FB", "AAPL", "NDX", "AMD"):
            series = panel[ticker]
            closes = dict(zip(series.dates, series.close))
            span = cal[10:60]
            total = sum(returns[ticker][d] for d in span)
            assert abs(math.exp(total) - closes[span[-1]] / closes[cal[9]]) < 1e-12


class TestFactors:
    def _calendar(self):
        return TradingCalendar((date(2018, 3, 19), date(2018, 3, 20), date(2018, 3, 21)))

    def test_percent_conversion(self, tmp_path):
        path = write_factors(tmp_path / "f.csv",
                             [("20180319", -1.50, 0.1, 0.2, 0.01)])
        fs = load_factors(path, self._calendar())
        assert abs(fs.excess_market(date(2018, 3, 19)) - (-0.0150)) < 1e-15
        assert abs(fs.risk_free(date(2018, 3, 19)) - 0.0001) < 1e-15

    def test_iso_dates_accepted(self, tmp_path):
        path = write_factors(tmp_path / "f.csv",
                             [("2018-03-19", 0.5, 0, 0, 0.01)])
        fs = load_factors(path, self._calendar())
        assert fs.excess_market(date(2018, 3, 19)) == pytest.approx(0.005)

    def test_empty_file(self, tmp_path):
        path = write_factors(tmp_path / "f.csv", [])
        with pytest.raises(DataError, match="no factor rows"):
            load_factors(path, self._calendar())

    def test_gap_is_flagged_not_fatal(self, tmp_path):
        path = write_factors(tmp_path / "f.csv", [
            ("20180319", 0.1, 0, 0, 0.01),
            ("20180321", 0.2, 0, 0, 0.01),
        ])
        fs = load_factors(path, self._calendar())
        assert date(2018, 3, 20) in fs.missing
        assert fs.excess_market(date(2018, 3, 20)) is None

    def test_date_outside_span(self, tmp_path):
        path = write_factors(tmp_path / "f.csv",
                             [("20180601", 0.1, 0, 0, 0.01)])
        with pytest.raises(DataError, match="outside calendar span"):
            load_factors(path, self._calendar())

    def test_implausible_rate_warns(self, tmp_path, caplog):
        path = write_factors(tmp_path / "f.csv",
                             [("20180319", 60.0, 0, 0, 0.01)])
        with caplog.at_level("WARNING"):
            load_factors(path, self._calendar())
        assert any("implausible" in r.message for r in caplog.records)

    def test_duplicate_date(self, tmp_path):
        path = write_factors(tmp_path / "f.csv", [
            ("20180319", 0.1, 0, 0, 0.01),
            ("20180319", 0.2, 0, 0, 0.01),
        ])
        with pytest.raises(DataError, match="duplicate"):
            load_factors(path, self._calendar())


class TestRelativeIndex:
    def test_offset_zero(self, panel):
        d = date(2018, 3, 19)
        assert relative_index(panel.calendar, d, 0) == d

    def test_walks_off_start(self, panel):
        first = panel.calendar.dates[0]
        with pytest.raises(DataError, match="walks off"):
            relative_index(panel.calendar, first, -1)

    def test_walks_off_end(self, panel):
        last = panel.calendar.dates[-1]
        with pytest.raises(DataError, match="walks off"):
            relative_index(panel.calendar, last, 1)

    def test_not_a_trading_day(self, panel):
        with pytest.raises(DataError, match="not a trading day"):
            relative_index(panel.calendar, date(2018, 3, 17), 0)  # a Saturday

    def test_skips_weekend(self, panel):
        # Friday 2018-03-16 + 3 trading days lands on Wednesday 2018-03-21
        assert relative_index(panel.calendar, date(2018, 3, 16), 3) == date(2018, 3, 21)
        assert relative_index(panel.calendar, date(2018, 3, 16), 1) == date(2018, 3, 19)

    def test_composition(self, panel):
        rng = np.random.default_rng(7)
        cal = panel.calendar
        base = date(2018, 5, 15)
        for _ in range(50):
            a = int(rng.integers(-30, 31))
            b = int(rng.integers(-30, 31))
            two_step = relative_index(cal, relative_index(cal, base, a), b)
            assert two_step == relative_index(cal, base, a + b)

    def test_calendar_rejects_unsorted(self):
        with pytest.raises(DataError, match="strictly increasing"):
            TradingCalendar((date(2018, 1, 2), date(2018, 1, 2)))
