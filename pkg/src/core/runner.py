import logging
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.utils.config import RunConfig
from src.utils.log_cleaner import cleanup_logs

from . import gp
from .bayesopt import (
    AcquisitionConfig,
    OptimizationResult,
    SearchSpace,
    optimize_kernel_weights,
)
from .kernels import Ensemble, Kernel, kernel_labels, kernel_to_dict
from .metrics import compute_metrics
from .pipeline import (
    ATC_CATEGORIES,
    FREQUENCIES,
    CategorySeries,
    PreparedSplit,
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
from .support.errors import (
    ConfigError,
    EnsembleGPError,
    NotPositiveDefinite,
    NumericalError,
)
from .support.reports import (
    history_frame,
    metrics_rows_frame,
    plot_category_series,
    plot_convergence,
    plot_forecast,
    write_csv,
    write_json,
)


class Runner:
    """Runs the ingest / evaluate / optimize / forecast commands for one RunConfig."""

    # Logging is configured once per output directory
    _logging_initialized = False
    _log_dir: Optional[Path] = None
    _log_file: Optional[Path] = None

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = config.out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logs_dir = self.out_dir / "logs"
        self.logs_dir.mkdir(parents=True, exist_ok=True)

        if self.config.get("auto_clear_logs", True):
            result = cleanup_logs(self.logs_dir,
                                  max_logs_to_keep=self.config.get("max_logs_to_keep", 5),
                                  exclude_current=True)
            if result["cleaned_count"] > 0:
                print(f"Log cleanup: {result['message']}")

        if not Runner._logging_initialized or Runner._log_dir != self.logs_dir:
            self._setup_logging()
        else:
            self.log_file = Runner._log_file

    def _setup_logging(self):
        self.log_file = self.logs_dir / f'ensemble-gp_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log'

        root_logger = logging.getLogger()
        for handler in list(root_logger.handlers):
            root_logger.removeHandler(handler)
            handler.close()

        file_handler = logging.FileHandler(self.log_file, encoding="utf-8")
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        root_logger.addHandler(file_handler)
        root_logger.setLevel(logging.INFO)
        # matplotlib is chatty at INFO about font discovery
        logging.getLogger("matplotlib").setLevel(logging.WARNING)

        logging.info(f"Logging initialized - writing to: {self.log_file}")
        Runner._logging_initialized = True
        Runner._log_dir = self.logs_dir
        Runner._log_file = self.log_file

    # ------------------------------------------------------------------ inputs

    def _require(self, key: str, what: str) -> str:
        value = self.config.get(key)
        if not value:
            raise ConfigError(f"{what} is required (--{key} or \"{key}\" in the config file)")
        return value

    def load_series(self) -> CategorySeries:
        """The configured category series, from a series file or straight from transactions."""
        source = self._require("input", "an input file")
        atc, freq = self.config.get("atc"), self.config.get("freq")
        input_format = self.config.get("input_format")
        if input_format == "transactions":
            ingested = ingest_transactions(source, self.config.columns)
            mapped = map_to_categories(ingested.records, load_atc_mapping(self._require("mapping", "a mapping file")))
            series = aggregate(mapped.records, atc, freq)
        else:
            layout = "wide" if input_format == "wide" else "long"
            series = read_series_csv(source, atc=atc, frequency=freq, layout=layout)
        logging.info(f"Loaded {len(series)} {freq} points for {atc} from {source}")
        return series

    def _split(self, series: CategorySeries) -> PreparedSplit:
        return prepare_split(
            series,
            sample_count=self.config.samples,
            train_fraction=float(self.config.get("train_frac")),
            validation_fraction=float(self.config.get("val_frac")),
            seed=int(self.config.get("seed")),
            mode=self.config.get("split_mode"),
        )

    def _noise(self) -> float:
        return float(self.config.get("noise"))

    def _search(self, split: PreparedSplit, kernels: List[Kernel]) -> OptimizationResult:
        d = len(kernels)
        space = SearchSpace.simplex(d) if self.config.get("simplex") else SearchSpace.box(d)
        acquisition = AcquisitionConfig(xi=float(self.config.get("xi")),
                                        candidate_count=int(self.config.get("candidates")))
        return optimize_kernel_weights(
            split, kernels, space,
            iterations=int(self.config.get("iterations")),
            seed=int(self.config.get("seed")),
            noise_variance=self._noise(),
            acquisition=acquisition,
            score=self.config.get("score"),
        )

    def _ensemble_weights(self, split: PreparedSplit, kernels: List[Kernel]) -> np.ndarray:
        weights = self.config.configured_weights()
        if weights is not None:
            return np.array(weights, dtype=float)
        if len(kernels) == 1:
            return np.ones(1)
        print("🔎 No ensemble weights configured, optimizing them on the validation segment...")
        return self._search(split, kernels).best_weights

    # ---------------------------------------------------------------- commands

    def ingest(self) -> Dict[str, Path]:
        """Transactions + mapping -> one series CSV per category, plus rejects/unmapped reports."""
        source = self._require("input", "a transactions file")
        mapping = load_atc_mapping(self._require("mapping", "a mapping file"))
        freq = self.config.get("freq")
        self.config.save_settings()

        ingested = ingest_transactions(source, self.config.columns)
        mapped = map_to_categories(ingested.records, mapping)
        write_csv(ingested.rejects_frame(), self.out_dir / "rejects.csv")
        write_csv(mapped.unmapped_frame(), self.out_dir / "unmapped.csv")
        if ingested.rejects:
            print(f"⚠️ {len(ingested.rejects)} malformed rows written to {self.out_dir / 'rejects.csv'}")
        if mapped.unmapped:
            print(f"⚠️ {mapped.unmapped_count} records with unmapped brands written to "
                  f"{self.out_dir / 'unmapped.csv'}")

        written = {}
        all_series = []
        for atc in sorted(mapped.records["atc"].unique()):
            series = aggregate(mapped.records, atc, freq)
            path = write_series_csv(series, self.out_dir / series_filename(atc))
            written[atc] = path
            all_series.append(series)
            total = float(np.sum(series.quantities))
            print(f"✅ {atc}: {len(series)} {freq} points, total quantity {total:g} -> {path}")
            logging.info(f"{atc} ({ATC_CATEGORIES[atc]}): {len(series)} points written to {path}")
        if not written:
            print("⚠️ No records could be mapped to an ATC category")
            return written
        plot = plot_category_series(self.out_dir / "categories.svg", all_series,
                                    title=f"{freq.capitalize()} sales per ATC category")
        print(f"📄 Category plot written to {plot}")
        return written

    def _fit_one(self, label: str, kernel: Kernel, split: PreparedSplit,
                 grid_x: np.ndarray) -> Tuple[dict, Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]]:
        scaling = split.scaling
        try:
            model = gp.fit(kernel, gp.TrainingSet(split.train_x, split.train_y), self._noise())
            test = gp.predict(model, split.test_x)
            curve = gp.predict(model, grid_x)
        except (NotPositiveDefinite, NumericalError) as e:
            logging.warning(f"{label} failed to fit: {e}")
            row = {"kernel_name": label, "mse": float("nan"), "mae": float("nan"),
                   "rmse": float("nan"), "r2": float("nan"), "n": len(split.test_y),
                   "status": f"failed: {e.__class__.__name__}"}
            return row, None

        report = compute_metrics(scaling.unstandardize(split.test_y), scaling.unstandardize(test.mean))
        row = report.to_row(label)
        row["status"] = "ok"
        mean = scaling.unstandardize(curve.mean)
        sd = curve.std * scaling.y_std
        return row, (mean, mean - 2 * sd, mean + 2 * sd)

    def evaluate(self) -> pd.DataFrame:
        """Fit each base kernel and the ensemble on train, score them on test."""
        series = self.load_series()
        self.config.save_settings()
        split = self._split(series)
        kernels = self.config.base_kernels()
        weights = self._ensemble_weights(split, kernels)

        labels = kernel_labels(kernels) + ["Ensemble"]
        candidates = list(kernels) + [Ensemble.from_weights(weights, kernels)]

        all_times = split.train_times.append(split.val_times).append(split.test_times)
        order = np.argsort(all_times.values)
        times = all_times[order]
        observed = split.scaling.unstandardize(
            np.concatenate([split.train_y, split.val_y, split.test_y])[order])
        grid_x = split.scaling.scale_times(times)

        # fits are independent, so they can run side by side
        workers = min(len(candidates), os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda pair: self._fit_one(pair[0], pair[1], split, grid_x),
                                    zip(labels, candidates)))

        marks = [] if split.mode == "random" else [split.val_times[0], split.test_times[0]]
        rows = []
        for label, (row, curve) in zip(labels, results):
            rows.append(row)
            if curve is None:
                print(f"❌ {label}: {row['status']}")
                continue
            print(f"✅ {label}: RMSE {row['rmse']:.6g}, R² {row['r2']}")
            plot_forecast(self.out_dir / f"forecast_{label}.svg", f"{series.atc_code} - {label} kernel",
                          times, observed, times, *curve, split_marks=marks)

        table = metrics_rows_frame(rows)
        path = write_csv(table, self.out_dir / "metrics.csv")
        print(f"📄 Metrics table written to {path}")
        logging.info(f"Evaluation finished with weights {weights.tolist()}")
        return table

    def optimize(self) -> OptimizationResult:
        """Bayesian optimization of the ensemble weights on the validation segment."""
        kernels = self.config.base_kernels()
        if len(kernels) < 2:
            raise ConfigError("optimize needs at least 2 base kernels")
        series = self.load_series()
        self.config.save_settings()
        split = self._split(series)

        result = self._search(split, kernels)
        write_csv(history_frame(result.state, result.seed_count), self.out_dir / "bo_history.csv")
        plot_convergence(self.out_dir / "convergence.svg", result.state.best_so_far(), result.seed_count)
        write_json({
            "score_function": self.config.get("score"),
            "best_score": result.best_score,
            "weights": result.best_weights.tolist(),
            "kernels": [kernel_to_dict(k, float(w)) for k, w in zip(kernels, result.best_weights)],
        }, self.out_dir / "best_weights.json")

        for label, w in zip(kernel_labels(kernels), result.best_weights):
            print(f"   {label}: {w!r}")
        print(f"✅ Best score ({self.config.get('score')}): {result.best_score!r}")
        return result

    def forecast(self, horizon: Optional[int] = None) -> pd.DataFrame:
        """Fit on the whole series and extend the posterior ``horizon`` periods past its end."""
        horizon = int(self.config.get("horizon") if horizon is None else horizon)
        if horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {horizon}")
        series = self.load_series()
        self.config.save_settings()
        kernels = self.config.base_kernels()
        weights = self.config.configured_weights()
        if weights is None and len(kernels) > 1:
            weights = self._ensemble_weights(self._split(series), kernels)
        kernel = kernels[0] if weights is None else Ensemble.from_weights(weights, kernels)

        scaling = Standardization.fit(series.timestamps, series.quantities)
        model = gp.fit(kernel, gp.TrainingSet(scaling.scale_times(series.timestamps),
                                              scaling.standardize(series.quantities)), self._noise())

        alias = FREQUENCIES[series.frequency]
        last = series.timestamps[-1].to_period(alias)
        future = pd.DatetimeIndex(pd.period_range(last + 1, periods=horizon, freq=alias).start_time)
        prediction = gp.predict(model, scaling.scale_times(future))
        mean = scaling.unstandardize(prediction.mean)
        sd = prediction.std * scaling.y_std
        table = pd.DataFrame({"timestamp": future.strftime("%Y-%m-%d"), "mean": mean,
                              "lower": mean - 2 * sd, "upper": mean + 2 * sd})
        path = write_csv(table, self.out_dir / "forecast.csv")

        times = series.timestamps.append(future)
        curve = gp.predict(model, scaling.scale_times(times))
        curve_mean = scaling.unstandardize(curve.mean)
        curve_sd = curve.std * scaling.y_std
        plot_forecast(self.out_dir / "forecast.svg", f"{series.atc_code} - {horizon}-period forecast",
                      series.timestamps, series.quantities, times, curve_mean,
                      curve_mean - 2 * curve_sd, curve_mean + 2 * curve_sd, split_marks=[future[0]])
        print(f"✅ Forecast of {horizon} {series.frequency} periods written to {path}")
        return table


def run_command(command: str, config: RunConfig, horizon: Optional[int] = None):
    runner = Runner(config)
    logging.info(f"Running '{command}'")
    try:
        if command == "ingest":
            return runner.ingest()
        if command == "evaluate":
            return runner.evaluate()
        if command == "optimize":
            return runner.optimize()
        if command == "forecast":
            return runner.forecast(horizon)
    except EnsembleGPError as e:
        logging.error(f"'{command}' failed: {e}")
        raise
    raise ConfigError(f"unknown command '{command}'")
