"""
Dense SPD linear algebra used by GP fitting.

Cholesky factorization with an adaptive diagonal jitter, the two triangular
solves that apply the inverse, and the log-determinant of the factored matrix.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky as _scipy_cholesky, solve_triangular

from .support.errors import DimensionMismatch, EmptyInput, NotPositiveDefinite, require_finite


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal shifts tried in order: 0, initial, initial*growth, ...

    ``max_attempts`` counts the non-zero shifts tried after the plain attempt.
    """
    initial: float = 1e-10
    growth_factor: float = 10.0
    max_attempts: int = 8

    def __post_init__(self):
        if self.initial < 0:
            raise ValueError("jitter initial must be >= 0")
        if self.growth_factor <= 1:
            raise ValueError("jitter growth_factor must be > 1")
        if self.max_attempts < 1:
            raise ValueError("jitter max_attempts must be >= 1")

    def shifts(self):
        yield 0.0
        if self.initial == 0:
            return
        shift = self.initial
        for _ in range(self.max_attempts):
            yield shift
            shift *= self.growth_factor


DEFAULT_JITTER = JitterPolicy()


@dataclass(frozen=True)
class SymMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise EmptyInput("matrix must have dimension >= 1")
        require_finite(a, "matrix")
        if not np.array_equal(a, a.T):
            # matmul round-off, e.g. MᵀM
            if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
                raise DimensionMismatch("matrix is not symmetric")
            a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray
    applied_jitter: float = 0.0

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def cholesky(a, jitter_policy: JitterPolicy = DEFAULT_JITTER) -> CholeskyFactor:
    """Factor ``a + jitter*I`` with the smallest policy shift that succeeds."""
    matrix = a.entries if isinstance(a, SymMatrix) else SymMatrix(a).entries
    n = matrix.shape[0]
    eye = np.eye(n)
    tried = []
    for shift in jitter_policy.shifts():
        tried.append(shift)
        try:
            lower = _scipy_cholesky(matrix + shift * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
        if not np.all(np.diag(lower) > 0):
            continue
        if shift > 0:
            logging.info(f"Cholesky needed jitter {shift:.1e} on a {n}x{n} matrix")
        lower.setflags(write=False)
        return CholeskyFactor(lower=lower, applied_jitter=float(shift))
    raise NotPositiveDefinite(
        f"{n}x{n} matrix is not positive definite (tried shifts up to {tried[-1]:.1e})"
    )


def solve_cholesky(f: CholeskyFactor, b) -> np.ndarray:
    """Solve (L Lᵀ) x = b by forward then backward substitution.

    ``b`` may be a vector or a matrix whose rows match the factor dimension.
    """
    rhs = np.asarray(b, dtype=float)
    if rhs.ndim == 0 or rhs.shape[0] != f.dimension:
        raise DimensionMismatch(
            f"right-hand side has length {rhs.shape[0] if rhs.ndim else 0}, factor has {f.dimension}"
        )
    z = solve_triangular(f.lower, rhs, lower=True, check_finite=False)
    return solve_triangular(f.lower, z, lower=True, trans="T", check_finite=False)


def forward_solve(f: CholeskyFactor, b) -> np.ndarray:
    """L⁻¹ b only; predictive variances need just this half."""
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != f.dimension:
        raise DimensionMismatch(f"right-hand side has {rhs.shape[0]} rows, factor has {f.dimension}")
    return solve_triangular(f.lower, rhs, lower=True, check_finite=False)


def log_det(f: CholeskyFactor) -> float:
    return float(2.0 * np.sum(np.log(np.diag(f.lower))))
