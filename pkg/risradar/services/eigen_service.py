"""Собственное разложение эрмитовых матриц"""
import logging
from typing import Tuple

import numpy as np
from scipy import linalg

from risradar.constants import JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE, EigenSolver
from risradar.utils.errors import EigenConvergenceError, InvalidArgumentError

logger = logging.getLogger(__name__)


def _off_norm(matrix: np.ndarray) -> float:
    """Норма Фробениуса внедиагональной части"""
    off = matrix - np.diag(np.diag(matrix))
    return float(np.linalg.norm(off))


def jacobi_eigh(
    matrix: np.ndarray,
    tol: float = JACOBI_TOLERANCE,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Циклический метод Якоби для эрмитовой матрицы.

    Для пары (p, q) фаза a_pq сначала снимается диагональным унитарным
    множителем, затем вещественное вращение обнуляет элемент.
    Останов: off(A) < tol * ||A||_F.

    Args:
        matrix: Эрмитова матрица n x n
        tol: Относительный порог внедиагональной нормы
        max_sweeps: Предельное число проходов

    Returns:
        (собственные значения по возрастанию, собственные векторы по столбцам)

    Raises:
        EigenConvergenceError: Порог не достигнут за max_sweeps проходов
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise InvalidArgumentError(f"Ожидается квадратная матрица, получено: {a.shape}")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)

    scale = float(np.linalg.norm(a))
    threshold = tol * scale
    sweeps = 0
    residual = _off_norm(a)
    while residual > threshold:
        if sweeps >= max_sweeps:
            raise EigenConvergenceError(residual=residual, sweeps=sweeps)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                magnitude = abs(apq)
                if magnitude <= threshold / n:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / magnitude
                angle = 0.5 * np.arctan2(2.0 * magnitude, aqq - app)
                c, s = np.cos(angle), np.sin(angle)
                # J = [[c, s], [-s e^{-jα}, c e^{-jα}]]: A <- J^H A J, V <- V J
                r10 = -s * np.conj(phase)
                r11 = c * np.conj(phase)
                for target in (a, v):
                    col_p = target[:, p].copy()
                    col_q = target[:, q].copy()
                    target[:, p] = c * col_p + r10 * col_q
                    target[:, q] = s * col_p + r11 * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p + np.conj(r10) * row_q
                a[q, :] = s * row_p + np.conj(r11) * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
        sweeps += 1
        residual = _off_norm(a)

    eigenvalues = np.diag(a).real
    order = np.argsort(eigenvalues, kind="stable")
    logger.debug(f"[Eigen] Якоби: n={n}, проходов {sweeps}, остаток {residual:.3e}")
    return eigenvalues[order], v[:, order]


def lapack_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Разложение через LAPACK (scipy.linalg.eigh), значения по возрастанию"""
    a = np.asarray(matrix, dtype=complex)
    return linalg.eigh(0.5 * (a + a.conj().T))


def hermitian_eigh(matrix: np.ndarray, solver: str = EigenSolver.JACOBI) -> Tuple[np.ndarray, np.ndarray]:
    """
    Собственное разложение выбранным решателем.

    Args:
        matrix: Эрмитова матрица
        solver: "jacobi" или "lapack"

    Returns:
        (собственные значения по возрастанию, собственные векторы)
    """
    solver = EigenSolver(solver)
    if solver is EigenSolver.JACOBI:
        return jacobi_eigh(matrix)
    return lapack_eigh(matrix)
