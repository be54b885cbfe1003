from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core.pipeline import CategorySeries

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_series(values, start="2020-01-06", atc="M01AB", frequency="weekly") -> CategorySeries:
    timestamps = pd.date_range(start, periods=len(values), freq="7D")
    return CategorySeries(atc_code=atc, frequency=frequency, timestamps=timestamps,
                          quantities=np.asarray(values, dtype=float))


@pytest.fixture
def three_brand_files(tmp_path):
    """Transactions for three brands, two of which share an ATC category."""
    transactions = tmp_path / "transactions.csv"
    transactions.write_text(
        "date,time,brand,quantity\n"
        "2021-01-04,09:00,Diclofen,2\n"
        "2021-01-05,10:00,Voltaren,1\n"
        "2021-01-06,11:00,Ibuprofen,3\n"
        "2021-01-12,09:30,Diclofen,1.5\n"
        "2021-01-19,12:00,Ibuprofen,1\n"
        "2021-01-27,08:00,Voltaren,4\n",
        encoding="utf-8",
    )
    mapping = tmp_path / "mapping.csv"
    mapping.write_text("brand,atc_code\nDiclofen,M01AB\nVoltaren,M01AB\nIbuprofen,M01AE\n",
                       encoding="utf-8")
    return transactions, mapping


@pytest.fixture
def series_factory():
    return make_series
