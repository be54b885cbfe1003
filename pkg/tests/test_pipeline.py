import io

import numpy as np
import pandas as pd
import pytest

from src.core.pipeline import (
    ColumnMap,
    Standardization,
    aggregate,
    ingest_transactions,
    load_atc_mapping,
    map_to_categories,
    prepare_split,
    read_series_csv,
    series_filename,
    write_series_csv,
)
from src.core.support.errors import (
    ConfigError,
    EmptyInput,
    InputNotFound,
    InvalidMapping,
    MissingColumn,
    NoRecordsForCategory,
    SeriesTooShort,
    UnparseableStream,
)


def records(*rows):
    frame = pd.DataFrame(rows, columns=["date", "brand", "quantity", "atc"])
    frame["date"] = pd.to_datetime(frame["date"])
    return frame


def test_two_good_rows():
    result = ingest_transactions(io.StringIO(
        "date,time,brand,quantity\n2021-01-04,09:00,Diclofen,2\n2021-01-05,,Ibuprofen,1.5\n"))
    assert len(result.records) == 2
    assert result.rejects == []
    assert result.records["quantity"].tolist() == [2.0, 1.5]
    assert result.records["date"].iloc[0] == pd.Timestamp("2021-01-04")


def test_malformed_rows_are_reported():
    result = ingest_transactions(io.StringIO(
        "date,time,brand,quantity\n"
        "2021-01-04,09:00,Diclofen,2\n"
        "2021-01-05,10:00,Diclofen,abc\n"
        "2021-01-06,10:00,,1\n"
        "2021-01-07,10:00,Diclofen,-1\n"
        "2021-02-31,10:00,Diclofen,1\n"))
    assert len(result.records) == 1
    rejects = result.rejects_frame()
    assert rejects["row"].tolist() == [3, 4, 5, 6]
    assert rejects["reason"].str.startswith("unparseable quantity").iloc[0]
    assert rejects["reason"].iloc[1] == "missing brand ('2021-01-06')"
    assert rejects["reason"].iloc[2].startswith("negative quantity")
    assert rejects["reason"].iloc[3].startswith("unparseable date")


def test_wrong_field_count_rows_are_rejected():
    result = ingest_transactions(io.StringIO(
        "date,time,brand,quantity\n"
        "2021-01-04,09:00,Diclofen,2\n"
        "2021-01-05,10:00,Diclofen,3,EXTRA\n"
        "2021-01-06,11:00,Ibuprofen,1\n"
        "2021-01-07,Ibuprofen\n"
        "2021-01-08,12:00,Aspirin,oops\n"))
    assert result.records["brand"].tolist() == ["Diclofen", "Ibuprofen"]
    rejects = result.rejects_frame()
    assert rejects["row"].tolist() == [3, 5, 6]
    assert rejects["reason"].iloc[0] == "expected 4 fields, got 5"
    assert rejects["reason"].iloc[1] == "expected 4 fields, got 2"
    assert rejects["reason"].iloc[2].startswith("unparseable quantity")


def test_blank_lines_keep_file_line_numbers():
    result = ingest_transactions(io.StringIO(
        "date,time,brand,quantity\n"
        "\n"
        "2021-01-04,09:00,Diclofen,2\n"
        "2021-01-05,10:00,Diclofen,abc\n"))
    assert len(result.records) == 1
    assert result.rejects_frame()["row"].tolist() == [4]


def test_only_bad_rows_still_reports_them():
    result = ingest_transactions(io.StringIO("date,time,brand,quantity\n2021-01-04,09:00\n"))
    assert result.records.empty
    assert result.rejects_frame()["row"].tolist() == [2]


def test_undecodable_transactions_file(tmp_path):
    path = tmp_path / "binary.csv"
    path.write_bytes(b"date,time,brand,quantity\n\xff\xfe\x00garbage\n")
    with pytest.raises(UnparseableStream):
        ingest_transactions(path)


def test_custom_column_names():
    result = ingest_transactions(io.StringIO("day,drug,units\n2021-01-04,Diclofen,3\n"),
                                 ColumnMap(date="day", brand="drug", quantity="units", time=None))
    assert result.records["brand"].tolist() == ["Diclofen"]


def test_missing_quantity_column():
    with pytest.raises(MissingColumn):
        ingest_transactions(io.StringIO("date,time,brand\n2021-01-04,09:00,Diclofen\n"))


def test_empty_transactions():
    with pytest.raises(EmptyInput):
        ingest_transactions(io.StringIO(""))
    with pytest.raises(EmptyInput):
        ingest_transactions(io.StringIO("date,time,brand,quantity\n"))


def test_missing_transactions_file(tmp_path):
    with pytest.raises(InputNotFound) as info:
        ingest_transactions(tmp_path / "nope.csv")
    assert "nope.csv" in info.value.path


def test_mapping_file_validation(tmp_path):
    good = tmp_path / "map.csv"
    good.write_text("brand,atc_code\nDiclofen,M01AB\nAspirin,N02BA\n", encoding="utf-8")
    assert load_atc_mapping(good) == {"Diclofen": "M01AB", "Aspirin": "N02BA"}

    bad_code = tmp_path / "bad_code.csv"
    bad_code.write_text("brand,atc_code\nDiclofen,X99\n", encoding="utf-8")
    with pytest.raises(InvalidMapping):
        load_atc_mapping(bad_code)

    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("brand,code,extra\nDiclofen,M01AB,1\n", encoding="utf-8")
    with pytest.raises(InvalidMapping):
        load_atc_mapping(bad_header)

    with pytest.raises(InputNotFound):
        load_atc_mapping(tmp_path / "missing.csv")


def test_map_to_categories():
    ingested = ingest_transactions(io.StringIO(
        "date,time,brand,quantity\n2021-01-04,,Diclofen,2\n2021-01-05,,Mystery,1\n2021-01-06,,Mystery,4\n"))
    mapped = map_to_categories(ingested.records, {"Diclofen": "M01AB"})
    assert mapped.records["atc"].tolist() == ["M01AB"]
    assert mapped.unmapped == {"Mystery": 2}
    assert mapped.unmapped_count == 2
    assert mapped.unmapped_frame().to_dict("records") == [{"brand": "Mystery", "count": 2}]


def test_map_empty_records():
    empty = pd.DataFrame(columns=["date", "time", "brand", "quantity"])
    mapped = map_to_categories(empty, {"Diclofen": "M01AB"})
    assert mapped.records.empty
    assert mapped.unmapped == {}


def test_same_week_records_are_summed():
    series = aggregate(records(("2021-01-04", "A", 3.0, "M01AB"), ("2021-01-06", "B", 4.0, "M01AB")),
                       "M01AB", "weekly")
    assert series.quantities.tolist() == [7.0]
    assert series.timestamps[0] == pd.Timestamp("2021-01-04")


def test_gap_weeks_filled_with_zero():
    series = aggregate(records(("2021-01-04", "A", 2.0, "M01AB"), ("2021-01-19", "A", 5.0, "M01AB")),
                       "M01AB", "weekly")
    assert series.quantities.tolist() == [2.0, 0.0, 5.0]
    assert all(np.diff(series.timestamps.values) == np.timedelta64(7, "D"))


def test_daily_and_monthly_aggregation():
    rows = records(("2021-01-30", "A", 1.0, "R06"), ("2021-02-01", "A", 2.0, "R06"),
                   ("2021-03-15", "A", 4.0, "R06"))
    assert aggregate(rows, "R06", "monthly").quantities.tolist() == [1.0, 2.0, 4.0]
    daily = aggregate(rows, "R06", "daily")
    assert len(daily) == (pd.Timestamp("2021-03-15") - pd.Timestamp("2021-01-30")).days + 1
    assert daily.quantities.sum() == 7.0


def test_unknown_category_and_frequency():
    rows = records(("2021-01-04", "A", 1.0, "M01AB"))
    with pytest.raises(NoRecordsForCategory):
        aggregate(rows, "R03")
    with pytest.raises(ConfigError):
        aggregate(rows, "M01AB", "hourly")


def test_aggregation_conserves_quantity(three_brand_files):
    transactions, mapping = three_brand_files
    mapped = map_to_categories(ingest_transactions(transactions).records, load_atc_mapping(mapping))
    total = sum(aggregate(mapped.records, atc).quantities.sum() for atc in mapped.records["atc"].unique())
    assert total == pytest.approx(mapped.records["quantity"].sum(), rel=1e-9)
    assert sorted(mapped.records["atc"].unique()) == ["M01AB", "M01AE"]


def test_series_file_round_trip(tmp_path, series_factory):
    series = series_factory([1.0, 0.0, 2.5, 4.0])
    path = write_series_csv(series, tmp_path / series_filename("N02BE/B"))
    assert path.name == "series_N02BE-B.csv"
    loaded = read_series_csv(path, atc="M01AB")
    np.testing.assert_array_equal(loaded.quantities, series.quantities)
    assert (loaded.timestamps == series.timestamps).all()


def test_wide_layout(tmp_path):
    path = tmp_path / "salesweekly.csv"
    path.write_text("datum,M01AB,R06\n2014-01-05,14.0,2.0\n2014-01-12,29.33,1.0\n", encoding="utf-8")
    series = read_series_csv(path, atc="R06", layout="wide")
    assert series.quantities.tolist() == [2.0, 1.0]
    with pytest.raises(MissingColumn):
        read_series_csv(path, atc="N05C", layout="wide")


def test_shipped_weekly_fixture(data_dir):
    series = read_series_csv(data_dir / "example_weekly_series.csv")
    assert len(series) == 200
    assert np.all(series.quantities > 0)


def test_split_sizes_and_order(series_factory):
    split = prepare_split(series_factory(np.arange(10.0) ** 1.5))
    assert split.sizes == (6, 2, 2)
    assert split.train_times.max() < split.val_times.min() < split.test_times.min()


def test_standardized_train_targets(series_factory, rng):
    split = prepare_split(series_factory(rng.uniform(10, 50, 40)))
    assert split.train_y.mean() == pytest.approx(0.0, abs=1e-10)
    assert split.train_y.var() == pytest.approx(1.0, abs=1e-10)
    assert split.train_x.min() == 0.0
    assert split.train_x.max() == pytest.approx(1.0)


def test_standardization_round_trip(rng):
    y = rng.normal(5.0, 3.0, 20)
    scaling = Standardization.fit(pd.date_range("2020-01-01", periods=20, freq="D"), y)
    np.testing.assert_allclose(scaling.unstandardize(scaling.standardize(y)), y, atol=1e-12)


def test_no_leakage_from_test_segment(series_factory, rng):
    values = rng.uniform(10, 50, 30)
    perturbed = values.copy()
    perturbed[-6:] += 1000.0
    a = prepare_split(series_factory(values))
    b = prepare_split(series_factory(perturbed))
    assert a.scaling == b.scaling


def test_sampling_is_seeded(series_factory, rng):
    series = series_factory(rng.uniform(0, 10, 50))
    a = prepare_split(series, sample_count=20, seed=5)
    b = prepare_split(series, sample_count=20, seed=5)
    np.testing.assert_array_equal(a.train_y, b.train_y)
    assert (a.test_times == b.test_times).all()
    assert sum(a.sizes) == 20


def test_random_split_is_disjoint(series_factory, rng):
    series = series_factory(rng.uniform(0, 10, 30))
    split = prepare_split(series, mode="random", seed=2)
    times = split.train_times.append(split.val_times).append(split.test_times)
    assert len(times.unique()) == 30
    assert split.train_times.is_monotonic_increasing


def test_split_errors(series_factory):
    with pytest.raises(SeriesTooShort):
        prepare_split(series_factory([1.0, 2.0]))
    with pytest.raises(ConfigError):
        prepare_split(series_factory(np.arange(10.0)), sample_count=11)
    with pytest.raises(ConfigError):
        prepare_split(series_factory(np.arange(10.0)), train_fraction=0.8, validation_fraction=0.3)
