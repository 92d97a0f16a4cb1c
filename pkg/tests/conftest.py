import csv
from pathlib import Path

import pytest

from eventclust.config import load_study_config
from eventclust.pipeline import Study

ROOT = Path(__file__).resolve().parents[1]
SAMPLE_CONFIG = ROOT / "configs" / "study2018.toml"
SAMPLE_PRICES = ROOT / "data" / "sample" / "prices.csv"
SAMPLE_FACTORS = ROOT / "data" / "sample" / "factors.csv"


@pytest.fixture(scope="session")
def sample_config():
    return load_study_config(SAMPLE_CONFIG)


@pytest.fixture(scope="session")
def study(sample_config):
    return Study(sample_config)


@pytest.fixture(scope="session")
def panel(study):
    return study.panel


@pytest.fixture(scope="session")
def returns(study):
    return study.returns


@pytest.fixture(scope="session")
def factors(study):
    return study.factors


def write_prices(path, rows):
    """rows: (date, ticker, open, high, low, close, volume) tuples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "open", "high", "low", "close", "volume"])
        w.writerows(rows)
    return path


def write_factors(path, rows):
    """rows: (date, mkt_rf, smb, hml, rf) tuples, percent units."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "mkt_rf", "smb", "hml", "rf"])
        w.writerows(rows)
    return path
