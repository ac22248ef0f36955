"""Тесты якобиева решателя"""
import numpy as np
import pytest
from scipy import linalg

from risradar.constants import EigenSolver
from risradar.services.eigen_service import hermitian_eigh, jacobi_eigh
from risradar.utils.errors import EigenConvergenceError, InvalidArgumentError


def _random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


@pytest.mark.parametrize("n", [2, 5, 12])
def test_jacobi_matches_lapack(rng, n):
    matrix = _random_hermitian(rng, n)
    values, vectors = jacobi_eigh(matrix)
    expected = linalg.eigh(matrix, eigvals_only=True)
    assert np.allclose(values, expected, atol=1e-10 * np.linalg.norm(matrix))
    assert np.allclose(matrix @ vectors, vectors * values[None, :], atol=1e-9 * np.linalg.norm(matrix))
    assert np.allclose(vectors.conj().T @ vectors, np.eye(n), atol=1e-10)


def test_jacobi_diagonal_input_needs_no_sweeps():
    values, vectors = jacobi_eigh(np.diag([3.0, 1.0, 2.0]), max_sweeps=0)
    assert np.allclose(values, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(vectors), np.eye(3)[:, [1, 2, 0]])


def test_jacobi_reports_non_convergence(rng):
    with pytest.raises(EigenConvergenceError) as info:
        jacobi_eigh(_random_hermitian(rng, 4), max_sweeps=0)
    assert info.value.sweeps == 0
    assert info.value.residual > 0


def test_jacobi_rejects_non_square():
    with pytest.raises(InvalidArgumentError):
        jacobi_eigh(np.zeros((2, 3)))


def test_solvers_agree_on_noise_subspace(rng):
    matrix = _random_hermitian(rng, 6)
    _, jacobi_vectors = hermitian_eigh(matrix, EigenSolver.JACOBI)
    _, lapack_vectors = hermitian_eigh(matrix, EigenSolver.LAPACK)
    low_j = jacobi_vectors[:, :4]
    low_l = lapack_vectors[:, :4]
    assert np.allclose(low_j @ low_j.conj().T, low_l @ low_l.conj().T, atol=1e-9)
