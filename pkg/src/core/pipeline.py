"""
Sales data pipeline: transactions CSV -> ATC-annotated records -> per-category
time series -> standardized train/validation/test split.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .support.errors import (
    ConfigError,
    EmptyInput,
    InputNotFound,
    InvalidMapping,
    MissingColumn,
    NoRecordsForCategory,
    SeriesTooShort,
    UnparseableStream,
)

ATC_CATEGORIES = {
    "M01AB": "Anti-inflammatory and antirheumatic products, acetic acid derivatives",
    "M01AE": "Anti-inflammatory and antirheumatic products, propionic acid derivatives",
    "N02BA": "Other analgesics and antipyretics, salicylic acid and derivatives",
    "N02BE/B": "Other analgesics and antipyretics, pyrazolones and anilides",
    "N05B": "Psycholeptics, anxiolytic drugs",
    "N05C": "Psycholeptics, hypnotics and sedatives",
    "R03": "Drugs for obstructive airway diseases",
    "R06": "Antihistamines for systemic use",
}

# pandas period aliases
FREQUENCIES = {"daily": "D", "weekly": "W", "monthly": "M"}
SPLIT_MODES = ("chronological", "random")


@dataclass(frozen=True)
class ColumnMap:
    date: str = "date"
    brand: str = "brand"
    quantity: str = "quantity"
    time: Optional[str] = "time"

    @classmethod
    def from_dict(cls, entries: Optional[dict]) -> "ColumnMap":
        return cls(**(entries or {}))


@dataclass(frozen=True)
class RejectedRow:
    row: int
    reason: str


@dataclass
class IngestResult:
    records: pd.DataFrame
    rejects: List[RejectedRow] = field(default_factory=list)

    def rejects_frame(self) -> pd.DataFrame:
        return pd.DataFrame([(r.row, r.reason) for r in self.rejects], columns=["row", "reason"])


@dataclass
class MappingResult:
    records: pd.DataFrame
    unmapped: Dict[str, int] = field(default_factory=dict)

    @property
    def unmapped_count(self) -> int:
        return int(sum(self.unmapped.values()))

    def unmapped_frame(self) -> pd.DataFrame:
        return pd.DataFrame(sorted(self.unmapped.items()), columns=["brand", "count"])


def _read_rows(source, rejects: List[RejectedRow]) -> pd.DataFrame:
    """Tokenise the stream; rows with the wrong field count go to ``rejects``.

    The returned frame is indexed by file line number.
    """
    try:
        if hasattr(source, "read"):
            text = source.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
        reader = csv.reader(io.StringIO(text), skipinitialspace=True)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyInput("transactions file is empty")
        header = [h.strip() for h in header]

        rows, lines = [], []
        for fields in reader:
            if not any(f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                rejects.append(RejectedRow(row=reader.line_num,
                                           reason=f"expected {len(header)} fields, got {len(fields)}"))
                continue
            rows.append(fields)
            lines.append(reader.line_num)
    except (csv.Error, UnicodeDecodeError) as e:
        raise UnparseableStream(str(e))
    return pd.DataFrame(rows, columns=header, index=pd.Index(lines, dtype=int), dtype=str)


def ingest_transactions(source, columns: ColumnMap = ColumnMap()) -> IngestResult:
    """Parse a transactions CSV; malformed rows are reported, never silently dropped.

    ``source`` is a path or an open text stream. Reject row numbers are file
    line numbers (the header is line 1).
    """
    if isinstance(source, (str, Path)) and not Path(source).exists():
        raise InputNotFound(source, "transactions file")
    rejects: List[RejectedRow] = []
    raw = _read_rows(source, rejects)

    for name in (columns.date, columns.brand, columns.quantity):
        if name not in raw.columns:
            raise MissingColumn(f"'{name}' not in header {list(raw.columns)}")
    if raw.empty and not rejects:
        raise EmptyInput("transactions file has a header but no rows")

    dates = pd.to_datetime(raw[columns.date].str.strip(), format="%Y-%m-%d", errors="coerce")
    quantities = pd.to_numeric(raw[columns.quantity].str.strip(), errors="coerce")
    brands = raw[columns.brand].str.strip()
    has_time = bool(columns.time) and columns.time in raw.columns
    times = raw[columns.time].str.strip() if has_time else pd.Series("", index=raw.index)

    total = len(raw) + len(rejects)
    reasons = pd.Series("", index=raw.index)
    reasons[brands == ""] = "missing brand"
    reasons[(reasons == "") & ~np.isfinite(quantities.astype(float))] = "unparseable quantity"
    reasons[(reasons == "") & (quantities < 0)] = "negative quantity"
    reasons[(reasons == "") & dates.isna()] = "unparseable date"
    for idx in reasons.index[reasons != ""]:
        value = raw.at[idx, columns.quantity] if reasons[idx].endswith("quantity") else raw.at[idx, columns.date]
        rejects.append(RejectedRow(row=int(idx), reason=f"{reasons[idx]} ({value!r})"))

    rejects.sort(key=lambda r: r.row)
    ok = reasons == ""
    records = pd.DataFrame({
        "date": dates[ok].values,
        "time": times[ok].values,
        "brand": brands[ok].values,
        "quantity": quantities[ok].astype(float).values,
    })
    if rejects:
        logging.warning(f"Rejected {len(rejects)} of {total} transaction rows")
    logging.info(f"Ingested {len(records)} transaction records")
    return IngestResult(records=records, rejects=rejects)


def load_atc_mapping(source) -> Dict[str, str]:
    """Read a two-column ``brand,atc_code`` CSV into a brand -> code lookup."""
    if isinstance(source, (str, Path)) and not Path(source).exists():
        raise InputNotFound(source, "mapping file")
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise InvalidMapping("mapping file is empty")
    except pd.errors.ParserError as e:
        raise InvalidMapping(str(e))
    frame.columns = [c.strip() for c in frame.columns]
    if list(frame.columns) != ["brand", "atc_code"]:
        raise InvalidMapping(f"expected columns brand,atc_code, got {','.join(frame.columns)}")
    mapping = {}
    for brand, code in zip(frame["brand"].str.strip(), frame["atc_code"].str.strip()):
        if code not in ATC_CATEGORIES:
            raise InvalidMapping(f"brand '{brand}' maps to unknown ATC code '{code}'")
        mapping[brand] = code
    return mapping


def map_to_categories(records: pd.DataFrame, mapping: Dict[str, str]) -> MappingResult:
    annotated = records.copy()
    annotated["atc"] = annotated["brand"].map(mapping)
    missing = annotated["atc"].isna()
    unmapped = annotated.loc[missing, "brand"].value_counts().to_dict()
    if unmapped:
        logging.warning(f"{int(missing.sum())} records have unmapped brands: {sorted(unmapped)}")
    return MappingResult(records=annotated.loc[~missing].reset_index(drop=True),
                         unmapped={str(k): int(v) for k, v in unmapped.items()})


@dataclass(frozen=True)
class CategorySeries:
    """Gap-free totals for one ATC code; timestamps are period start dates."""
    atc_code: str
    frequency: str
    timestamps: pd.DatetimeIndex
    quantities: np.ndarray

    def __len__(self):
        return len(self.timestamps)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"timestamp": self.timestamps.strftime("%Y-%m-%d"),
                             "quantity": self.quantities})


def _period_alias(frequency: str) -> str:
    if frequency not in FREQUENCIES:
        raise ConfigError(f"frequency must be one of {sorted(FREQUENCIES)}, got '{frequency}'")
    return FREQUENCIES[frequency]


def _gap_free(atc: str, frequency: str, totals: pd.Series) -> CategorySeries:
    """Reindex period totals onto the full first..last range, filling with 0."""
    periods = pd.period_range(totals.index.min(), totals.index.max(), freq=_period_alias(frequency))
    filled = totals.reindex(periods, fill_value=0.0)
    return CategorySeries(atc_code=atc, frequency=frequency,
                          timestamps=pd.DatetimeIndex(periods.start_time),
                          quantities=filled.to_numpy(dtype=float))


def aggregate(records: pd.DataFrame, atc: str, frequency: str = "weekly") -> CategorySeries:
    alias = _period_alias(frequency)
    subset = records[records["atc"] == atc]
    if subset.empty:
        raise NoRecordsForCategory(f"no records for ATC code '{atc}'")
    periods = pd.DatetimeIndex(subset["date"]).to_period(alias)
    totals = pd.Series(subset["quantity"].to_numpy(dtype=float), index=periods).groupby(level=0).sum()
    return _gap_free(atc, frequency, totals)


def series_filename(atc: str) -> str:
    # N02BE/B is not a valid file name component
    return f"series_{atc.replace('/', '-')}.csv"


def write_series_csv(series: CategorySeries, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series.to_frame().to_csv(path, index=False)
    return path


def read_series_csv(source, atc: str = "M01AB", frequency: str = "weekly",
                    layout: str = "long") -> CategorySeries:
    """Load a series file.

    ``long``: ``timestamp,quantity`` rows. ``wide``: one date column (``datum``
    or ``timestamp``) plus one column per ATC code, ``atc`` selects the column.
    Repeated periods are summed and gaps filled with 0.
    """
    if isinstance(source, (str, Path)) and not Path(source).exists():
        raise InputNotFound(source, "series file")
    try:
        frame = pd.read_csv(source, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyInput("series file is empty")
    except pd.errors.ParserError as e:
        raise UnparseableStream(str(e))
    frame.columns = [c.strip() for c in frame.columns]

    if layout == "wide":
        date_col = next((c for c in ("datum", "timestamp", "date") if c in frame.columns), None)
        if date_col is None:
            raise MissingColumn("wide series needs a 'datum' or 'timestamp' column")
        if atc not in frame.columns:
            raise MissingColumn(f"'{atc}' not in header {list(frame.columns)}")
        value_col = atc
    elif layout == "long":
        for name in ("timestamp", "quantity"):
            if name not in frame.columns:
                raise MissingColumn(f"'{name}' not in header {list(frame.columns)}")
        date_col, value_col = "timestamp", "quantity"
    else:
        raise ConfigError(f"series layout must be 'long' or 'wide', got '{layout}'")

    if frame.empty:
        raise EmptyInput("series file has no rows")
    dates = pd.to_datetime(frame[date_col], errors="coerce")
    values = pd.to_numeric(frame[value_col], errors="coerce")
    bad = dates.isna() | values.isna()
    if bad.any():
        raise UnparseableStream(f"{int(bad.sum())} series rows have an unparseable date or value")
    periods = pd.DatetimeIndex(dates).to_period(_period_alias(frequency))
    totals = pd.Series(values.to_numpy(dtype=float), index=periods).groupby(level=0).sum()
    return _gap_free(atc, frequency, totals)


@dataclass(frozen=True)
class Standardization:
    """Affine maps fitted on the train segment: targets to z-scores, times to [0, 1]."""
    y_mean: float
    y_std: float
    t_origin: pd.Timestamp
    t_span_days: float

    @classmethod
    def fit(cls, timestamps: pd.DatetimeIndex, values: np.ndarray) -> "Standardization":
        std = float(np.std(values))
        span = float((timestamps.max() - timestamps.min()) / pd.Timedelta(days=1))
        return cls(y_mean=float(np.mean(values)), y_std=std if std > 0 else 1.0,
                   t_origin=timestamps.min(), t_span_days=span if span > 0 else 1.0)

    def standardize(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def unstandardize(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.y_std + self.y_mean

    def scale_times(self, timestamps) -> np.ndarray:
        days = (pd.DatetimeIndex(timestamps) - self.t_origin) / pd.Timedelta(days=1)
        return np.asarray(days, dtype=float) / self.t_span_days


@dataclass(frozen=True)
class PreparedSplit:
    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    train_times: pd.DatetimeIndex
    val_times: pd.DatetimeIndex
    test_times: pd.DatetimeIndex
    scaling: Standardization
    mode: str = "chronological"

    @property
    def sizes(self):
        return len(self.train_y), len(self.val_y), len(self.test_y)


def _segment_sizes(n: int, train_fraction: float, validation_fraction: float):
    n_train = max(1, int(np.floor(n * train_fraction)))
    n_val = max(1, int(np.floor(n * validation_fraction)))
    if n - n_train - n_val < 1:
        raise SeriesTooShort(f"{n} points cannot fill train/validation/test segments")
    return n_train, n_val


def prepare_split(series: CategorySeries, sample_count: Union[int, str] = "all",
                  train_fraction: float = 0.6, validation_fraction: float = 0.2,
                  seed: int = 0, mode: str = "chronological") -> PreparedSplit:
    """Subsample (optionally), split, and standardize using the train segment only.

    ``chronological`` keeps train < validation < test in time; ``random`` draws
    the three segments as disjoint random subsets (each kept in time order).
    """
    if not (0 < train_fraction < 1 and 0 < validation_fraction < 1
            and train_fraction + validation_fraction < 1):
        raise ConfigError("fractions must lie in (0, 1) and sum to less than 1")
    if mode not in SPLIT_MODES:
        raise ConfigError(f"split mode must be one of {SPLIT_MODES}, got '{mode}'")

    n_total = len(series)
    rng = np.random.default_rng(seed)
    if sample_count == "all" or sample_count is None:
        index = np.arange(n_total)
    else:
        sample_count = int(sample_count)
        if sample_count < 1 or sample_count > n_total:
            raise ConfigError(f"sample count must be in [1, {n_total}], got {sample_count}")
        index = np.sort(rng.choice(n_total, size=sample_count, replace=False))
    if index.size < 3:
        raise SeriesTooShort(f"only {index.size} points after sampling (need at least 3)")

    n_train, n_val = _segment_sizes(index.size, train_fraction, validation_fraction)
    if mode == "random":
        order = rng.permutation(index.size)
        parts = [np.sort(index[order[:n_train]]), np.sort(index[order[n_train:n_train + n_val]]),
                 np.sort(index[order[n_train + n_val:]])]
    else:
        parts = [index[:n_train], index[n_train:n_train + n_val], index[n_train + n_val:]]

    times = [series.timestamps[p] for p in parts]
    values = [series.quantities[p] for p in parts]
    scaling = Standardization.fit(times[0], values[0])
    logging.info(f"Prepared {mode} split of {series.atc_code}: "
                 f"{n_train}/{n_val}/{index.size - n_train - n_val} points")
    return PreparedSplit(
        train_x=scaling.scale_times(times[0]), train_y=scaling.standardize(values[0]),
        val_x=scaling.scale_times(times[1]), val_y=scaling.standardize(values[1]),
        test_x=scaling.scale_times(times[2]), test_y=scaling.standardize(values[2]),
        train_times=times[0], val_times=times[1], test_times=times[2],
        scaling=scaling, mode=mode,
    )
