import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from ptsim.linalg import expm, matrix_exp


def _random_matrix(rng, n, scale):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A * scale / np.linalg.norm(A, 2)


@pytest.mark.parametrize("n", [2, 4, 5])
@pytest.mark.parametrize("scale", [1e-6, 0.3, 2.0, 10.0, 50.0])
def test_expm_matches_scipy(n, scale):
    rng = np.random.default_rng(n * 100 + int(scale * 10))
    for _ in range(5):
        A = -1j * _random_matrix(rng, n, scale)
        ref = scipy.linalg.expm(A)
        assert np.linalg.norm(expm(A) - ref) <= 1e-12 * max(1.0, np.linalg.norm(ref))


def test_zero_generator_gives_identity():
    assert np.array_equal(matrix_exp(np.zeros((4, 4)), 5.0), np.eye(4))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 10), n=st.sampled_from([2, 4, 5]))
def test_hermitian_generator_gives_unitary(seed, t, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = (A + A.conj().T) / 2
    H *= 5.0 / max(np.linalg.norm(H, 2), 1e-12)
    U = matrix_exp(H, t)
    assert np.linalg.norm(U.conj().T @ U - np.eye(n)) <= 1e-10


def test_overflow_raises():
    with pytest.raises(OverflowError):
        expm(np.array([[1e5, 0], [0, 0]], dtype=complex))


def test_non_finite_input_raises():
    with pytest.raises(OverflowError):
        expm(np.array([[np.nan, 0], [0, 0]], dtype=complex))
