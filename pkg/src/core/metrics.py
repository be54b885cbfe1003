"""Regression metrics used to compare kernels (population 1/n normalization)."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .support.errors import EmptyInput, require_finite, require_same_length

METRIC_COLUMNS = ["kernel_name", "mse", "mae", "rmse", "r2", "n"]


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    mae: float
    rmse: float
    r2: Optional[float]
    n: int

    @property
    def r2_defined(self) -> bool:
        """False when the actuals are constant (SS_tot = 0)."""
        return self.r2 is not None

    def to_row(self, kernel_name: str) -> dict:
        return {
            "kernel_name": kernel_name,
            "mse": self.mse,
            "mae": self.mae,
            "rmse": self.rmse,
            "r2": self.r2 if self.r2_defined else "undefined",
            "n": self.n,
        }


def compute_metrics(actual, predicted) -> MetricsReport:
    y = require_finite(actual, "actual values").reshape(-1)
    y_hat = require_finite(predicted, "predicted values").reshape(-1)
    require_same_length(y, y_hat, "actual and predicted series")
    if y.size == 0:
        raise EmptyInput("cannot score an empty series")

    residual = y - y_hat
    ss_res = float(np.sum(residual ** 2))
    mse = ss_res / y.size
    mae = float(np.sum(np.abs(residual))) / y.size
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else None
    return MetricsReport(mse=mse, mae=mae, rmse=float(np.sqrt(mse)), r2=r2, n=int(y.size))


def rmse(actual, predicted) -> float:
    return compute_metrics(actual, predicted).rmse
