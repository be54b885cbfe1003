"""
Zero-mean Gaussian process regression.

fit() factors K + noise*I once and caches alpha = (K + noise*I)^-1 y; predict()
conditions the joint Gaussian of training targets and test values on y.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import Kernel, as_points, gram
from .linalg import (
    DEFAULT_JITTER,
    CholeskyFactor,
    JitterPolicy,
    cholesky,
    forward_solve,
    log_det,
    solve_cholesky,
)
from .support.errors import (
    DimensionMismatch,
    EmptyInput,
    NumericalError,
    require_finite,
    require_same_length,
)

DEFAULT_NOISE_VARIANCE = 1e-6
# posterior variances below this mean a broken factor
NEGATIVE_VARIANCE_TOLERANCE = -1e-10


@dataclass(frozen=True)
class TrainingSet:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = as_points(self.inputs) if np.size(self.inputs) else np.empty((0, 1))
        y = require_finite(self.targets, "targets").reshape(-1)
        if y.size == 0 or x.shape[0] == 0:
            raise EmptyInput("training set is empty")
        require_same_length(x, y, "training inputs and targets")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return self.targets.size


@dataclass(frozen=True)
class GPModel:
    kernel: Kernel
    noise_variance: float
    inputs: np.ndarray
    targets: np.ndarray
    chol: CholeskyFactor
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class Prediction:
    """Posterior mean and (clamped, non-negative) variance per test point."""
    mean: np.ndarray
    variance: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def __len__(self):
        return self.mean.size

    def __getitem__(self, i):
        return float(self.mean[i]), float(self.variance[i])

    def interval(self, width: float = 2.0):
        return self.mean - width * self.std, self.mean + width * self.std


def fit(kernel: Kernel, data: TrainingSet, noise_variance: float = DEFAULT_NOISE_VARIANCE,
        jitter_policy: JitterPolicy = DEFAULT_JITTER) -> GPModel:
    if not isinstance(data, TrainingSet):
        data = TrainingSet(*data)
    if not (np.isfinite(noise_variance) and noise_variance >= 0):
        raise ValueError(f"noise variance must be finite and >= 0, got {noise_variance}")
    k_xx = gram(kernel, data.inputs).values
    k_xx[np.diag_indices_from(k_xx)] += noise_variance
    chol = cholesky(k_xx, jitter_policy)
    alpha = solve_cholesky(chol, data.targets)
    logging.debug(f"Fitted {kernel.name} GP on {len(data)} points "
                  f"(noise {noise_variance:g}, jitter {chol.applied_jitter:g})")
    return GPModel(kernel=kernel, noise_variance=float(noise_variance), inputs=data.inputs,
                   targets=data.targets, chol=chol, alpha=alpha)


def predict(model: GPModel, test_inputs) -> Prediction:
    xs = as_points(test_inputs)
    if xs.shape[0] == 0:
        return Prediction(mean=np.empty(0), variance=np.empty(0))
    if xs.shape[1] != model.inputs.shape[1]:
        raise DimensionMismatch(
            f"test points have dimension {xs.shape[1]}, training points {model.inputs.shape[1]}"
        )
    k_xs = gram(model.kernel, model.inputs, xs).values  # (n, m)
    mean = k_xs.T @ model.alpha
    prior = model.kernel.diag(xs)
    v = forward_solve(model.chol, k_xs)
    variance = prior - np.sum(v * v, axis=0)
    if np.any(variance < NEGATIVE_VARIANCE_TOLERANCE):
        worst = float(np.min(variance))
        raise NumericalError(f"posterior variance {worst:.3e} is negative beyond tolerance")
    return Prediction(mean=mean, variance=np.maximum(variance, 0.0))


def log_marginal_likelihood(model: GPModel, targets: Optional[np.ndarray] = None) -> float:
    """log N(y | 0, K + noise*I) using the stored factor."""
    y = model.targets if targets is None else require_finite(targets, "targets").reshape(-1)
    if y.size != model.n:
        raise DimensionMismatch(f"{y.size} targets for a model trained on {model.n} points")
    alpha = model.alpha if targets is None else solve_cholesky(model.chol, y)
    return float(-0.5 * y @ alpha - 0.5 * log_det(model.chol) - 0.5 * model.n * np.log(2.0 * np.pi))
