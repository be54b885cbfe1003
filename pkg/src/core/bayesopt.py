"""
Bayesian optimization of ensemble kernel weights.

A GP surrogate is fit over weight space to the (weights, score) history and
the next weights are the Expected Improvement maximizer over a batch of
uniformly sampled candidates. Scores are "higher is better".
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.stats import norm

from . import gp
from .kernels import Ensemble, ExponentialSquared, Kernel
from .metrics import rmse
from .support.errors import (
    ConfigError,
    EmptyHistory,
    InvalidKernel,
    NoSuccessfulTrial,
    NotPositiveDefinite,
    NumericalError,
)

SCORE_FUNCTIONS = ("rmse", "lml")
SURROGATE_NOISE = 1e-6
FAILED_SCORE = float("-inf")


@dataclass(frozen=True)
class SearchSpace:
    bounds: np.ndarray
    simplex_constrained: bool = True

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        if b.shape[0] < 1:
            raise ConfigError("search space needs at least one dimension")
        if not np.all(np.isfinite(b)) or np.any(b[:, 0] < 0) or np.any(b[:, 0] >= b[:, 1]):
            raise ConfigError("search bounds must be finite with 0 <= lo < hi")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def simplex(cls, d: int) -> "SearchSpace":
        return cls(np.tile([0.0, 1.0], (d, 1)), simplex_constrained=True)

    @classmethod
    def box(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> "SearchSpace":
        return cls(np.tile([lo, hi], (d, 1)), simplex_constrained=False)

    @property
    def dimension(self) -> int:
        return self.bounds.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        d = self.dimension
        if self.simplex_constrained:
            # spacings of sorted uniforms are uniform on the simplex
            cuts = np.sort(rng.uniform(size=(count, d - 1)), axis=1)
            edges = np.hstack([np.zeros((count, 1)), cuts, np.ones((count, 1))])
            return np.diff(edges, axis=1)
        u = rng.uniform(size=(count, d))
        return self.bounds[:, 0] + u * self.widths

    def seed_points(self, rng: np.random.Generator) -> np.ndarray:
        """d + 1 starting designs: vertices + center, or random bound corners."""
        d = self.dimension
        if self.simplex_constrained:
            return np.vstack([np.eye(d), np.full((1, d), 1.0 / d)])
        pick = rng.integers(0, 2, size=(d + 1, d))
        return np.where(pick == 1, self.bounds[:, 1], self.bounds[:, 0])


@dataclass(frozen=True)
class Trial:
    weights: np.ndarray
    score: float

    @property
    def failed(self) -> bool:
        return not np.isfinite(self.score)


@dataclass(frozen=True)
class AcquisitionConfig:
    xi: float = 0.01
    candidate_count: int = 2048

    def __post_init__(self):
        if self.xi < 0:
            raise ConfigError("xi must be >= 0")
        if self.candidate_count < 1:
            raise ConfigError("candidate_count must be >= 1")


@dataclass
class BOState:
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    rng_seed: int = 0
    surrogate_kernel: Optional[Kernel] = None
    trials: List[Trial] = field(default_factory=list)

    def append(self, weights, score: float) -> Trial:
        trial = Trial(weights=np.array(weights, dtype=float), score=float(score))
        self.trials.append(trial)
        return trial

    def best(self) -> Optional[Trial]:
        """Max-score trial; the earliest one wins ties."""
        best = None
        for trial in self.trials:
            if best is None or trial.score > best.score:
                best = trial
        return best

    def best_so_far(self) -> List[float]:
        running, out = FAILED_SCORE, []
        for trial in self.trials:
            running = max(running, trial.score)
            out.append(running)
        return out


@dataclass(frozen=True)
class OptimizationResult:
    best_weights: np.ndarray
    best_score: float
    state: BOState
    seed_count: int


def expected_improvement(mean, sd, best: float, xi: float = 0.0):
    """EI for maximization; returns a float for scalar input, else an array."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    gap = mean - best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, gap / np.where(sd > 0, sd, 1.0), 0.0)
        ei = np.where(sd > 0, gap * norm.cdf(z) + sd * norm.pdf(z), np.maximum(gap, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def default_surrogate_kernel(space: SearchSpace, scores: np.ndarray) -> Kernel:
    variance = float(np.var(scores, ddof=1)) if scores.size > 1 else 1.0
    if not np.isfinite(variance) or variance <= 1e-12:
        variance = 1.0
    return ExponentialSquared(variance=variance, lengthscale=0.2 * float(np.mean(space.widths)))


def acquire_threshold(state: BOState, space: SearchSpace) -> np.ndarray:
    """Next weight vector to evaluate: argmax EI over sampled candidates."""
    if not state.trials:
        raise EmptyHistory("acquisition needs at least one recorded trial")
    rng = np.random.default_rng([state.rng_seed, len(state.trials)])
    candidates = space.sample(rng, state.acquisition.candidate_count)

    weights = np.vstack([t.weights for t in state.trials])
    scores = np.array([t.score for t in state.trials])
    finite = np.isfinite(scores)
    if not np.any(finite):
        logging.warning("No successful trials yet; taking the first random candidate")
        return candidates[0]
    # failed fits are treated as the worst score seen so far
    scores = np.where(finite, scores, np.min(scores[finite]))
    center, scale = float(np.mean(scores)), float(np.std(scores))
    standardized = (scores - center) / (scale if scale > 0 else 1.0)

    kernel = state.surrogate_kernel or default_surrogate_kernel(space, standardized)
    surrogate = gp.fit(kernel, gp.TrainingSet(weights, standardized), noise_variance=SURROGATE_NOISE)
    posterior = gp.predict(surrogate, candidates)
    ei = expected_improvement(posterior.mean, posterior.std, float(np.max(standardized)),
                              state.acquisition.xi)
    return candidates[int(np.argmax(ei))]


def evaluate_model(data, base_kernels: Sequence[Kernel], omega, noise_variance: float = gp.DEFAULT_NOISE_VARIANCE,
                   score: str = "rmse") -> float:
    """Score of Ensemble(omega, base_kernels) on a prepared split (higher is better).

    ``rmse``: -RMSE of the validation segment; ``lml``: training log marginal likelihood.
    A factorization failure or an all-zero weight vector scores -inf.
    """
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if omega.size != len(base_kernels):
        raise ConfigError(f"{omega.size} weights given for {len(base_kernels)} base kernels")
    if score not in SCORE_FUNCTIONS:
        raise ConfigError(f"unknown score '{score}' (use one of {SCORE_FUNCTIONS})")
    try:
        kernel = Ensemble.from_weights(omega, base_kernels)
        model = gp.fit(kernel, gp.TrainingSet(data.train_x, data.train_y), noise_variance)
        if score == "lml":
            return gp.log_marginal_likelihood(model)
        prediction = gp.predict(model, data.val_x)
    except (NotPositiveDefinite, NumericalError, InvalidKernel) as e:
        logging.warning(f"Weights {np.round(omega, 4).tolist()} failed to fit: {e}")
        return FAILED_SCORE
    return -rmse(data.val_y, prediction.mean)


def optimize_kernel_weights(data, base_kernels: Sequence[Kernel], space: SearchSpace, iterations: int,
                            seed: int = 0, noise_variance: float = gp.DEFAULT_NOISE_VARIANCE,
                            acquisition: Optional[AcquisitionConfig] = None, score: str = "rmse",
                            progress_callback: Optional[Callable[[int, Trial, float], None]] = None
                            ) -> OptimizationResult:
    """Seed the history with d + 1 designs, then run ``iterations`` acquire/evaluate passes."""
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if space.dimension != len(base_kernels):
        raise ConfigError(f"search space has {space.dimension} dims for {len(base_kernels)} kernels")

    state = BOState(acquisition=acquisition or AcquisitionConfig(), rng_seed=int(seed))
    rng = np.random.default_rng(seed)
    best_weights, max_score = None, FAILED_SCORE

    def record(weights, iteration):
        nonlocal best_weights, max_score
        value = evaluate_model(data, base_kernels, weights, noise_variance, score)
        if value > max_score:
            max_score, best_weights = value, np.array(weights, dtype=float)
        trial = state.append(weights, value)
        if progress_callback:
            progress_callback(iteration, trial, max_score)

    seeds = space.seed_points(rng)
    for weights in seeds:
        record(weights, 0)
    logging.info(f"Seeded optimization with {len(seeds)} designs, best score {max_score:.6g}")

    for i in range(1, iterations + 1):
        record(acquire_threshold(state, space), i)
        logging.debug(f"BO iteration {i}/{iterations}: best score {max_score:.6g}")

    if best_weights is None:
        raise NoSuccessfulTrial(f"all {len(state.trials)} trials scored {FAILED_SCORE}")
    logging.info(f"Optimization finished: best weights {np.round(best_weights, 4).tolist()}, "
                 f"score {max_score:.6g}")
    return OptimizationResult(best_weights=best_weights, best_score=max_score, state=state,
                              seed_count=len(seeds))
