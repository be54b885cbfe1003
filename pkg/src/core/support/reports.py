"""CSV tables and SVG figures written by the commands."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

# fixed ids and no timestamp so reruns produce identical SVG files
matplotlib.rcParams["svg.hashsalt"] = "ensemble-gp"
_SVG_METADATA = {"Date": None}


def write_csv(frame: pd.DataFrame, path) -> Path:
    """Write a table with round-trip float precision (repr of each value)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=None)
    return path


def write_json(payload: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    return path


def history_frame(state, seed_count: int) -> pd.DataFrame:
    """One row per trial: iteration (0 for seed designs), w_1..w_d, score, best_so_far."""
    rows = []
    for i, (trial, best) in enumerate(zip(state.trials, state.best_so_far())):
        row = {"iteration": 0 if i < seed_count else i - seed_count + 1}
        for j, w in enumerate(trial.weights, start=1):
            row[f"w_{j}"] = float(w)
        row["score"] = trial.score
        row["best_so_far"] = best
        rows.append(row)
    return pd.DataFrame(rows)


def plot_forecast(path, title: str, observed_times, observed_values, times, mean, lower, upper,
                  split_marks: Sequence = ()) -> Path:
    """Actuals, posterior mean and a shaded ±2σ band."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(10, 4.5))
    ax.fill_between(times, lower, upper, color="#c7d7f0", alpha=0.8, label="±2σ")
    ax.plot(times, mean, color="#1f4e9c", lw=1.5, label="posterior mean")
    ax.plot(observed_times, observed_values, "k.", ms=3, label="actual")
    for mark in split_marks:
        ax.axvline(mark, color="#999999", lw=0.8, ls="--")
    ax.set_title(title)
    ax.set_ylabel("quantity")
    ax.legend(loc="upper left", fontsize=8)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logging.info(f"Wrote plot {path}")
    return path


def plot_category_series(path, series_list: Sequence, title: str = "Sales per ATC category") -> Path:
    """One line per category series, on a shared time axis."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for series in series_list:
        ax.plot(series.timestamps, series.quantities, lw=1.0, label=series.atc_code)
    ax.set_title(title)
    ax.set_ylabel(f"{series_list[0].frequency} quantity" if series_list else "quantity")
    ax.legend(loc="upper left", fontsize=8, ncol=4)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logging.info(f"Wrote plot {path}")
    return path


def plot_convergence(path, best_so_far: List[float], seed_count: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.array(best_so_far, dtype=float)
    values[~np.isfinite(values)] = np.nan
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(np.arange(1, values.size + 1), values, where="post", color="#1f4e9c")
    ax.axvline(seed_count + 0.5, color="#999999", lw=0.8, ls="--")
    ax.set_xlabel("evaluation (seed designs left of the dashed line)")
    ax.set_ylabel("best score so far")
    ax.set_title("Kernel weight optimization")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logging.info(f"Wrote plot {path}")
    return path


def metrics_rows_frame(rows: List[Dict]) -> pd.DataFrame:
    columns = ["kernel_name", "mse", "mae", "rmse", "r2", "n", "status"]
    return pd.DataFrame(rows, columns=columns)
