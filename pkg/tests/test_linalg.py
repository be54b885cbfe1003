import numpy as np
import pytest

from src.core.linalg import (
    CholeskyFactor,
    JitterPolicy,
    SymMatrix,
    cholesky,
    forward_solve,
    log_det,
    solve_cholesky,
)
from src.core.support.errors import DimensionMismatch, EmptyInput, NonFiniteInput, NotPositiveDefinite


def random_spd(rng, n):
    m = rng.normal(size=(n, n))
    return m @ m.T + n * np.eye(n)


def test_factor_reconstructs_matrix(rng):
    a = random_spd(rng, 6)
    f = cholesky(a)
    assert f.applied_jitter == 0.0
    assert np.allclose(f.reconstruct(), a, atol=1e-10)
    assert np.allclose(f.lower, np.tril(f.lower))


def test_solve_matches_numpy(rng):
    a = random_spd(rng, 5)
    b = rng.normal(size=5)
    x = solve_cholesky(cholesky(a), b)
    np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-10)


def test_solve_accepts_matrix_right_hand_side(rng):
    a = random_spd(rng, 4)
    b = rng.normal(size=(4, 3))
    x = solve_cholesky(cholesky(a), b)
    np.testing.assert_allclose(a @ x, b, atol=1e-10)


def test_forward_solve_is_lower_triangular_solve(rng):
    a = random_spd(rng, 4)
    f = cholesky(a)
    b = rng.normal(size=4)
    np.testing.assert_allclose(f.lower @ forward_solve(f, b), b, atol=1e-12)


def test_log_det_matches_slogdet(rng):
    a = random_spd(rng, 7)
    sign, expected = np.linalg.slogdet(a)
    assert sign > 0
    assert log_det(cholesky(a)) == pytest.approx(expected, abs=1e-10)


def test_identity_has_zero_log_det():
    assert log_det(cholesky(np.eye(3))) == 0.0


def test_singular_matrix_gets_jitter():
    f = cholesky(np.ones((2, 2)))
    assert f.applied_jitter > 0
    assert np.allclose(f.reconstruct(), np.ones((2, 2)) + f.applied_jitter * np.eye(2))


def test_indefinite_matrix_raises():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_zero_jitter_policy_only_tries_plain_factorization():
    assert list(JitterPolicy(initial=0.0).shifts()) == [0.0]
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.ones((2, 2)), JitterPolicy(initial=0.0))


def test_jitter_schedule_grows_geometrically():
    shifts = list(JitterPolicy(initial=1e-6, growth_factor=10.0, max_attempts=3).shifts())
    assert shifts == pytest.approx([0.0, 1e-6, 1e-5, 1e-4])


@pytest.mark.parametrize("kwargs", [{"initial": -1.0}, {"growth_factor": 1.0}, {"max_attempts": 0}])
def test_invalid_jitter_policy(kwargs):
    with pytest.raises(ValueError):
        JitterPolicy(**kwargs)


def test_asymmetric_matrix_rejected():
    with pytest.raises(DimensionMismatch):
        SymMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_roundoff_asymmetry_is_symmetrized():
    a = np.array([[2.0, 1.0], [1.0 + 1e-15, 2.0]])
    s = SymMatrix(a)
    assert np.array_equal(s.entries, s.entries.T)


def test_non_square_and_empty_matrices_rejected():
    with pytest.raises(DimensionMismatch):
        SymMatrix(np.ones((2, 3)))
    with pytest.raises(EmptyInput):
        SymMatrix(np.ones((0, 0)))


def test_non_finite_matrix_rejected():
    with pytest.raises(NonFiniteInput):
        SymMatrix(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_solve_rejects_wrong_length(rng):
    f = cholesky(random_spd(rng, 3))
    with pytest.raises(DimensionMismatch):
        solve_cholesky(f, np.ones(4))


def test_factor_dimension():
    f = CholeskyFactor(lower=np.eye(3))
    assert f.dimension == 3


def test_documented_factor_examples():
    f = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
    np.testing.assert_allclose(f.lower, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-15)
    np.testing.assert_allclose(solve_cholesky(f, [4.0, 2.0]), [1.0, 0.0], atol=1e-14)
    assert log_det(f) == pytest.approx(np.log(8.0), abs=1e-14)

    identity = cholesky(np.eye(3), JitterPolicy(initial=0.0))
    np.testing.assert_array_equal(identity.lower, np.eye(3))
    np.testing.assert_allclose(solve_cholesky(cholesky(np.eye(2)), [5.0, -2.0]), [5.0, -2.0])

    diagonal = cholesky(2.0 * np.eye(2))
    np.testing.assert_allclose(solve_cholesky(diagonal, [1.0, 1.0]), [0.5, 0.5])
    assert log_det(diagonal) == pytest.approx(2 * np.log(2.0), abs=1e-14)


def test_indefinite_with_short_schedule():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]),
                 JitterPolicy(initial=1e-10, growth_factor=10.0, max_attempts=3))
