"""
Stationary covariance kernels and their weighted ensemble.

Every base kernel is a function of the distance r = ||x - x'|| only:

    ES      a2 * exp(-r^2 / (2 l^2))
    Matern  half-integer closed forms for nu in {0.5, 1.5, 2.5}
    RQ      a2 * (1 + r^2 / (2 beta l^2)) ** (-beta)

An Ensemble is sum_i w_i * k_i over base kernels (one level, no nesting).
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .support.errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidKernel,
    NonFiniteInput,
    ZeroWeightSum,
)

MATERN_NUS = (0.5, 1.5, 2.5)
_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


def as_points(xs) -> np.ndarray:
    """Promote scalars / 1-D sequences to an (n, d) float array (d = 1 for series)."""
    arr = np.asarray(xs, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionMismatch(f"points must be at most 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("input points contain NaN or infinite values")
    return arr


def _as_single_point(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size == 0:
        raise EmptyInput("input point is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("input point contains NaN or infinite values")
    return arr


class Kernel:
    """Common interface; concrete kernels are frozen dataclasses."""

    name = "kernel"

    def profile(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def prior_variance(self) -> float:
        return float(self.profile(np.zeros(1))[0])

    def eval(self, x, x_prime) -> float:
        a = _as_single_point(x)
        b = _as_single_point(x_prime)
        if a.shape != b.shape:
            raise DimensionMismatch(f"points have dimensions {a.size} and {b.size}")
        r = np.sqrt(np.sum((a - b) ** 2))
        return float(self.profile(np.array([r]))[0])

    def __call__(self, x, x_prime) -> float:
        return self.eval(x, x_prime)

    def diag(self, xs) -> np.ndarray:
        pts = as_points(xs)
        return self.profile(np.zeros(pts.shape[0]))


@dataclass(frozen=True)
class ExponentialSquared(Kernel):
    variance: float = 1.0
    lengthscale: float = 1.0
    name = "ES"

    def __post_init__(self):
        _check_positive(variance=self.variance, lengthscale=self.lengthscale)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.variance * np.exp(-0.5 * (r / self.lengthscale) ** 2)


@dataclass(frozen=True)
class Matern(Kernel):
    variance: float = 1.0
    lengthscale: float = 1.0
    nu: float = 1.5
    name = "Matern"

    def __post_init__(self):
        _check_positive(variance=self.variance, lengthscale=self.lengthscale)
        if float(self.nu) not in MATERN_NUS:
            raise InvalidKernel(f"Matern nu must be one of {MATERN_NUS}, got {self.nu}")

    def profile(self, r):
        s = np.asarray(r, dtype=float) / self.lengthscale
        if self.nu == 0.5:
            return self.variance * np.exp(-s)
        if self.nu == 1.5:
            return self.variance * (1.0 + _SQRT3 * s) * np.exp(-_SQRT3 * s)
        return self.variance * (1.0 + _SQRT5 * s + 5.0 * s ** 2 / 3.0) * np.exp(-_SQRT5 * s)


@dataclass(frozen=True)
class RationalQuadratic(Kernel):
    variance: float = 1.0
    lengthscale: float = 1.0
    beta: float = 1.0
    name = "RQ"

    def __post_init__(self):
        _check_positive(variance=self.variance, lengthscale=self.lengthscale, beta=self.beta)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        # log1p keeps the large-beta limit accurate
        u = r ** 2 / (2.0 * self.beta * self.lengthscale ** 2)
        return self.variance * np.exp(-self.beta * np.log1p(u))


@dataclass(frozen=True)
class Ensemble(Kernel):
    """Weighted sum of base kernels. Weights are stored as given (not normalized)."""
    components: Tuple[Tuple[float, Kernel], ...] = field(default_factory=tuple)
    name = "Ensemble"

    def __post_init__(self):
        comps = tuple((float(w), k) for w, k in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise InvalidKernel("ensemble needs at least one component")
        for w, k in comps:
            if isinstance(k, Ensemble) or not isinstance(k, Kernel):
                raise InvalidKernel("ensemble components must be base kernels (no nesting)")
            if not np.isfinite(w) or w < 0:
                raise InvalidKernel(f"ensemble weights must be finite and >= 0, got {w}")
        if not any(w > 0 for w, _ in comps):
            raise ZeroWeightSum("ensemble needs at least one positive weight")

    @classmethod
    def from_weights(cls, weights: Sequence[float], kernels: Sequence[Kernel]) -> "Ensemble":
        if len(weights) != len(kernels):
            raise DimensionMismatch(f"{len(weights)} weights for {len(kernels)} kernels")
        return cls(tuple(zip(weights, kernels)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def bases(self) -> List[Kernel]:
        return [k for _, k in self.components]

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for w, k in self.components:
            total = total + w * k.profile(r)
        return total


def _check_positive(**params):
    for key, value in params.items():
        if not (np.isfinite(value) and value > 0):
            raise InvalidKernel(f"{key} must be strictly positive, got {value}")


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    kernel: Kernel
    symmetric: bool

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None):
        return self.values if dtype is None else self.values.astype(dtype)


def eval_kernel(k: Kernel, x, x_prime) -> float:
    return k.eval(x, x_prime)


def gram(k: Kernel, xs, xs_prime=None) -> GramMatrix:
    """Kernel matrix between two point sets; ``xs_prime=None`` means xs with itself.

    The self case evaluates each unordered pair once, so the result is exactly
    symmetric with κ(x, x) on the diagonal.
    """
    a = as_points(xs)
    if a.shape[0] == 0:
        raise EmptyInput("gram needs at least one input point")
    same = xs_prime is None or xs_prime is xs
    if not same:
        b = as_points(xs_prime)
        if b.shape[0] == 0:
            raise EmptyInput("gram needs at least one input point")
        if a.shape[1] != b.shape[1]:
            raise DimensionMismatch(f"point dimensions differ ({a.shape[1]} != {b.shape[1]})")
        same = a.shape == b.shape and np.array_equal(a, b)
    if same:
        if a.shape[0] == 1:
            r = np.zeros((1, 1))
        else:
            r = squareform(pdist(a))
        values = k.profile(r)
        np.fill_diagonal(values, k.prior_variance)
    else:
        values = k.profile(cdist(a, b))
    return GramMatrix(values=values, kernel=k, symmetric=same)


def normalize_weights(k: Ensemble) -> Ensemble:
    """Copy of ``k`` with weights divided by their sum."""
    if not isinstance(k, Ensemble):
        raise InvalidKernel("normalize_weights expects an Ensemble kernel")
    total = float(np.sum(k.weights))
    if total <= 0:
        raise ZeroWeightSum("ensemble weights sum to zero")
    return replace(k, components=tuple((w / total, base) for w, base in k.components))


_KINDS = {
    "es": ExponentialSquared,
    "rbf": ExponentialSquared,
    "matern": Matern,
    "rq": RationalQuadratic,
}


def kernel_from_dict(entry: dict) -> Kernel:
    """Build a base kernel from a config entry {kind, variance, lengthscale, nu, beta}."""
    kind = str(entry.get("kind", "")).strip().lower()
    if kind not in _KINDS:
        raise InvalidKernel(f"unknown kernel kind '{entry.get('kind')}' (use ES, Matern or RQ)")
    cls = _KINDS[kind]
    params = {
        "variance": float(entry.get("variance", 1.0)),
        "lengthscale": float(entry.get("lengthscale", 1.0)),
    }
    if cls is Matern:
        params["nu"] = float(entry.get("nu", 1.5))
    elif cls is RationalQuadratic:
        params["beta"] = float(entry.get("beta", 1.0))
    return cls(**params)


def kernel_to_dict(k: Kernel, weight: Optional[float] = None) -> dict:
    if isinstance(k, Ensemble):
        return {"kind": "Ensemble",
                "components": [kernel_to_dict(base, w) for w, base in k.components]}
    entry = {"kind": k.name, "variance": k.variance, "lengthscale": k.lengthscale}
    if isinstance(k, Matern):
        entry["nu"] = k.nu
    elif isinstance(k, RationalQuadratic):
        entry["beta"] = k.beta
    if weight is not None:
        entry["weight"] = weight
    return entry


def kernel_labels(kernels: Sequence[Kernel]) -> List[str]:
    """Display names; repeated kinds get a numeric suffix (ES, ES_2, ...)."""
    labels = []
    seen = {}
    for k in kernels:
        seen[k.name] = seen.get(k.name, 0) + 1
        labels.append(k.name if seen[k.name] == 1 else f"{k.name}_{seen[k.name]}")
    return labels
