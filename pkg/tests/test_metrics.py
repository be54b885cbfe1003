import math

import numpy as np
import pytest

from src.core.metrics import compute_metrics, rmse
from src.core.support.errors import EmptyInput, LengthMismatch, NonFiniteInput


def test_perfect_fit():
    report = compute_metrics([1.0, 4.0, 2.0], [1.0, 4.0, 2.0])
    assert (report.mse, report.mae, report.rmse, report.r2) == (0.0, 0.0, 0.0, 1.0)
    assert report.n == 3


def test_hand_computed_example():
    report = compute_metrics([1, 2, 3], [2, 2, 2])
    assert report.mse == pytest.approx(2 / 3, abs=1e-15)
    assert report.mae == pytest.approx(2 / 3, abs=1e-15)
    assert report.rmse == pytest.approx(0.816497, abs=1e-6)
    assert report.r2 == 0.0


def test_constant_actuals_flag_r2():
    report = compute_metrics([5, 5, 5], [5, 5, 5])
    assert report.mse == 0.0
    assert not report.r2_defined
    assert report.to_row("ES")["r2"] == "undefined"


def test_mean_predictor_has_zero_r2(rng):
    y = rng.normal(size=30)
    assert compute_metrics(y, np.full(30, y.mean())).r2 == pytest.approx(0.0, abs=1e-12)


def test_worse_than_mean_is_negative():
    y = np.array([-2.0, -1.0, 1.0, 2.0])
    assert compute_metrics(y, -y).r2 < 0


def test_shift_and_scale(rng):
    y, y_hat = rng.normal(size=25), rng.normal(size=25)
    base = compute_metrics(y, y_hat)
    shifted = compute_metrics(y + 7.5, y_hat + 7.5)
    assert shifted.mse == pytest.approx(base.mse, abs=1e-12)
    assert shifted.mae == pytest.approx(base.mae, abs=1e-12)
    assert shifted.rmse == pytest.approx(base.rmse, abs=1e-12)
    scaled = compute_metrics(-3.0 * y, -3.0 * y_hat)
    assert scaled.mse == pytest.approx(9.0 * base.mse, abs=1e-10)
    assert scaled.mae == pytest.approx(3.0 * base.mae, abs=1e-10)
    assert scaled.rmse == pytest.approx(3.0 * base.rmse, abs=1e-10)
    assert scaled.r2 == pytest.approx(base.r2, abs=1e-10)


def test_report_invariants(rng):
    report = compute_metrics(rng.normal(size=40), rng.normal(size=40))
    assert report.rmse == pytest.approx(math.sqrt(report.mse), abs=1e-12)
    assert report.mae <= report.rmse + 1e-12
    assert report.r2 <= 1


def test_rmse_helper():
    assert rmse([3.0, 4.0], [0.0, 0.0]) == pytest.approx(math.sqrt(12.5))


def test_errors():
    with pytest.raises(LengthMismatch):
        compute_metrics([1, 2], [1])
    with pytest.raises(EmptyInput):
        compute_metrics([], [])
    with pytest.raises(NonFiniteInput):
        compute_metrics([1.0, np.inf], [1.0, 2.0])


def test_row_layout():
    row = compute_metrics([1, 2, 3], [1, 2, 4]).to_row("Ensemble")
    assert list(row) == ["kernel_name", "mse", "mae", "rmse", "r2", "n"]
    assert row["kernel_name"] == "Ensemble"
