"""Функция потерь, градиенты, свёрточный нуль и оценка SINR/диаграммы"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import argrelextrema

from risradar.constants import LOSS_DENOMINATOR_FLOOR, LOSS_PENALTY, POWER_FLOOR
from risradar.models.scene import AngleGrid, DerivedConstants, RisGeometry
from risradar.models.signal import RisConfig
from risradar.models.training import LossBreakdown, LossContext, MlpModel
from risradar.services.mlp_service import (
    backward_pass,
    forward_pass,
    output_to_phases,
    phase_grad_to_output,
    phases_to_ris,
)
from risradar.services.waveform_service import steering_matrix
from risradar.utils.errors import DataMismatchError, InvalidArgumentError

logger = logging.getLogger(__name__)


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise InvalidArgumentError(f"β должно лежать в [0, 1], получено: {beta}")


def _quadratic_terms(
    matrix: np.ndarray,
    steering: np.ndarray,
    noise_bases: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    f_n = ||Q_n^H C^T u_n||² (или ||C^T u_n||² без базиса) и градиент по C.

    Градиент G_n в смысле df = 2 Re Σ G ⊙ dC: G[l, k] = u_l · conj((P φ)_k),
    где φ = C^T u, P = Q Q^H или I.

    Returns:
        (значения f формы S, градиенты формы S x L x M_eff)
    """
    phi = steering @ matrix  # S x M_eff
    if noise_bases is None:
        projected_phi = phi
    else:
        coords = np.einsum('sk,skj->sj', phi, noise_bases.conj())  # Q^H φ
        projected_phi = np.einsum('skj,sj->sk', noise_bases, coords)  # Q Q^H φ
    values = np.real(np.sum(np.conj(phi) * projected_phi, axis=1))
    grads = steering[:, :, None] * np.conj(projected_phi)[:, None, :]
    return values, grads


def loss_terms(
    ris: RisConfig,
    context: LossContext,
) -> Tuple[float, float, np.ndarray, np.ndarray, bool]:
    """
    Слагаемые потерь и их градиенты по фазам эффективной матрицы.

    spectrum_term = Σ_n ||Q_n^H C^T b_n(θ̂_i)||² / ||Q_n^H C^T b_n(θ̂_t)||²
    sinr_term     = Σ_n (||C^T b_n(θ̂_i)||² + σ²) / ||C^T b_n(θ̂_t)||²

    Returns:
        (spectrum_term, sinr_term, ∂spectrum/∂Φ, ∂sinr/∂Φ, guarded)
    """
    matrix = ris.effective_matrix()
    subcarriers = list(context.subcarriers)
    bases = np.asarray(context.noise_bases)[subcarriers]
    if bases.shape[1] != matrix.shape[1]:
        raise DataMismatchError(f"Базисы шума {bases.shape} не согласованы с M_eff={matrix.shape[1]}")

    b_t = steering_matrix(subcarriers, context.theta_t_hat, context.consts)[:, 0, :]
    b_i = steering_matrix(subcarriers, context.theta_i_hat, context.consts)[:, 0, :]

    f1i, g1i = _quadratic_terms(matrix, b_i, bases)
    f1t, g1t = _quadratic_terms(matrix, b_t, bases)
    f2i, g2i = _quadratic_terms(matrix, b_i, None)
    f2t, g2t = _quadratic_terms(matrix, b_t, None)

    if np.min(f1t) < LOSS_DENOMINATOR_FLOOR or np.min(f2t) < LOSS_DENOMINATOR_FLOOR:
        logger.warning("[Loss] Вырожденный знаменатель, возвращается штраф")
        zero = np.zeros(matrix.shape)
        return LOSS_PENALTY, LOSS_PENALTY, zero, zero, True

    spectrum_term = float(np.sum(f1i / f1t))
    sinr_term = float(np.sum((f2i + context.sigma2) / f2t))

    # частные производные отношений по C
    g_spectrum = np.sum(
        g1i / f1t[:, None, None] - (f1i / f1t ** 2)[:, None, None] * g1t, axis=0
    )
    g_sinr = np.sum(
        g2i / f2t[:, None, None] - ((f2i + context.sigma2) / f2t ** 2)[:, None, None] * g2t, axis=0
    )
    # C = A e^{jΦ}: ∂f/∂Φ = -2 Im(G ⊙ C)
    d_spectrum = -2.0 * np.imag(g_spectrum * matrix)
    d_sinr = -2.0 * np.imag(g_sinr * matrix)
    return spectrum_term, sinr_term, d_spectrum, d_sinr, False


def loss(
    ris: RisConfig,
    noise_bases: np.ndarray,
    theta_t_hat: float,
    theta_i_hat: float,
    beta: float,
    sigma2: float,
    consts: DerivedConstants,
    subcarriers: Optional[Sequence[int]] = None,
) -> LossBreakdown:
    """
    β-взвешенная функция потерь.

    Args:
        ris: Конфигурация RIS
        noise_bases: Базисы шума по поднесущим (N x M_eff x K)
        theta_t_hat: Оценка угла цели
        theta_i_hat: Оценка угла помехи
        beta: Вес спектрального слагаемого, [0, 1]
        sigma2: Мощность шума
        consts: Производные величины сценария
        subcarriers: Поднесущие суммы (по умолчанию все)

    Returns:
        LossBreakdown; при вырожденном знаменателе total = 1e30 и guarded = True
    """
    _check_beta(beta)
    if subcarriers is None:
        subcarriers = range(consts.n_subcarriers)
    context = LossContext(
        noise_bases=noise_bases,
        theta_t_hat=theta_t_hat,
        theta_i_hat=theta_i_hat,
        sigma2=sigma2,
        consts=consts,
        subcarriers=tuple(subcarriers),
    )
    spectrum_term, sinr_term, _, _, guarded = loss_terms(ris, context)
    return _blend(spectrum_term, sinr_term, beta, guarded)


def _blend(spectrum_term: float, sinr_term: float, beta: float, guarded: bool) -> LossBreakdown:
    if guarded:
        return LossBreakdown(spectrum_term, sinr_term, beta, LOSS_PENALTY, guarded=True)
    total = beta * spectrum_term + (1.0 - beta) * sinr_term
    return LossBreakdown(spectrum_term, sinr_term, beta, float(total))


def loss_phase_gradient(ris: RisConfig, context: LossContext, beta: float) -> Tuple[LossBreakdown, np.ndarray]:
    """Потери и градиент по фазам эффективной матрицы (L x M_eff)"""
    _check_beta(beta)
    spectrum_term, sinr_term, d_spectrum, d_sinr, guarded = loss_terms(ris, context)
    breakdown = _blend(spectrum_term, sinr_term, beta, guarded)
    return breakdown, beta * d_spectrum + (1.0 - beta) * d_sinr


def model_ris(model: MlpModel, theta_t_hat: float, theta_i_hat: float, context: LossContext,
              stage: str = "trained") -> Tuple[RisConfig, List[np.ndarray], np.ndarray]:
    """Прямой проход сети и сборка конфигурации RIS"""
    memory, output = forward_pass(model, theta_t_hat, theta_i_hat)
    phases = output_to_phases(model, output)
    n_elements = context.consts.n_elements
    return phases_to_ris(phases, n_elements, context.notch_mode, stage=stage), memory, output


def loss_gradient(model: MlpModel, context: LossContext, beta: float) -> Tuple[LossBreakdown, List[np.ndarray]]:
    """
    Градиент потерь по параметрам сети обратным распространением.

    Цепочка: параметры -> выход сети -> фазы -> C -> потери; базисы шума
    из context постоянны.

    Args:
        model: Сеть
        context: Измерение текущей внешней итерации
        beta: Вес спектрального слагаемого

    Returns:
        (LossBreakdown, градиенты в порядке model.parameters());
        при срабатывании защиты знаменателя градиенты нулевые
    """
    ris, memory, _ = model_ris(model, context.theta_t_hat, context.theta_i_hat, context)
    breakdown, phase_grad = loss_phase_gradient(ris, context, beta)
    if breakdown.guarded:
        return breakdown, [np.zeros_like(p) for p in model.parameters()]
    trained = phase_grad[:model.n_elements]
    d_output = phase_grad_to_output(model, trained)
    return breakdown, backward_pass(model, memory, d_output)


def notch_kernel(theta_i: float, consts: DerivedConstants, subcarrier: int = 0) -> np.ndarray:
    """
    Ядро [1, -e^{+j 2π s (λ/λ_n) sin θ_i}].

    Управляющий вектор элемента l: g_l z^l, z = e^{-j2π s (λ/λ_n) sin θ}.
    Для p_l = w_l g_l диаграмма равна многочлену P(z) = Σ p_l z^l; свёртка
    с ядром умножает его на (1 - z / z_i) и даёт нуль ровно в z_i.
    """
    if abs(theta_i) >= 90.0:
        raise InvalidArgumentError(f"Угол помехи должен лежать в (-90, 90), получено: {theta_i}")
    dilation = consts.carrier_wavelength_m / consts.wavelength_m[subcarrier]
    inverse_root = np.exp(2j * np.pi * consts.element_spacing_wavelengths * dilation * np.sin(np.deg2rad(theta_i)))
    return np.array([1.0, -inverse_root])


def _element_phase(consts: DerivedConstants, subcarrier: int) -> np.ndarray:
    """g_l = e^{-j2π d_l / λ_n}"""
    return np.exp(-2j * np.pi * consts.element_to_rx_dist_m / consts.wavelength_m[subcarrier])


def convolve_notch(
    ris: RisConfig,
    theta_i: float,
    geometry: RisGeometry,
    consts: DerivedConstants,
    subcarrier: int = 0,
) -> RisConfig:
    """
    Углубляет нуль на угле помехи свёрткой каждого столбца с 2-отводным ядром.

    Сворачиваются строки 0..L-2 (в режиме reserve последняя строка и так
    нулевая, в режиме truncate она отбрасывается), результат ровно L строк.
    Амплитуды результата не единичные.

    Args:
        ris: Обученная конфигурация
        theta_i: Угол помехи (градусы)
        geometry: Геометрия RIS
        consts: Производные величины сценария
        subcarrier: Поднесущая, для которой нуль точный

    Returns:
        RisConfig со стадией "convolved"

    Raises:
        InvalidArgumentError: |θ_i| >= 90 или индекс поднесущей вне диапазона
    """
    if geometry.element_spacing_wavelengths != consts.element_spacing_wavelengths:
        raise DataMismatchError("Геометрия не совпадает с производными величинами сценария")
    if not 0 <= subcarrier < consts.n_subcarriers:
        raise InvalidArgumentError(f"Поднесущая {subcarrier} вне [0, {consts.n_subcarriers})")
    kernel = notch_kernel(theta_i, consts, subcarrier)
    weights = ris.effective_matrix()
    n_elements = weights.shape[0]
    if n_elements != consts.n_elements:
        raise DataMismatchError(f"RIS из {n_elements} элементов, сценарий - {consts.n_elements}")

    element_phase = _element_phase(consts, subcarrier)
    compensated = weights[:-1] * element_phase[:-1, None]
    convolved = np.zeros((n_elements, weights.shape[1]), dtype=complex)
    convolved[:-1] += kernel[0] * compensated
    convolved[1:] += kernel[1] * compensated
    result = convolved / element_phase[:, None]

    logger.info(f"[Notch] Свёртка с нулём на {theta_i:.3f}° (поднесущая {subcarrier})")
    return RisConfig.from_effective(np.angle(result), np.abs(result), stage="convolved")


def array_factor(weights: np.ndarray, theta_deg, consts: DerivedConstants, subcarrier: int = 0) -> np.ndarray:
    """Диаграмма столбцов: w^T b_n(θ); форма (len(θ), число столбцов)"""
    weights = np.asarray(weights)
    if weights.ndim == 1:
        weights = weights[:, None]
    return steering_matrix([subcarrier], theta_deg, consts)[0] @ weights


def evaluate_sinr(
    ris: RisConfig,
    theta_t: float,
    theta_i: float,
    sigma2: float,
    consts: DerivedConstants,
    subcarriers: Optional[Sequence[int]] = None,
) -> float:
    """
    SINR = 10 log10( Σ_n ||C^T b_n(θ_t)||² / (Σ_n ||C^T b_n(θ_i)||² + σ²) ).

    Returns:
        SINR, дБ
    """
    if sigma2 < 0:
        raise InvalidArgumentError(f"σ² не может быть отрицательной: {sigma2}")
    if subcarriers is None:
        subcarriers = range(consts.n_subcarriers)
    subcarriers = list(subcarriers)
    matrix = ris.effective_matrix()
    b_t = steering_matrix(subcarriers, theta_t, consts)[:, 0, :]
    b_i = steering_matrix(subcarriers, theta_i, consts)[:, 0, :]
    signal = float(np.sum(np.abs(b_t @ matrix) ** 2))
    interference = float(np.sum(np.abs(b_i @ matrix) ** 2))
    return float(10.0 * np.log10(max(signal, POWER_FLOOR) / max(interference + sigma2, POWER_FLOOR)))


def beam_pattern(
    ris: RisConfig,
    grid_spec: AngleGrid,
    consts: DerivedConstants,
    subcarrier: int = 0,
) -> List[Tuple[float, float]]:
    """
    Диаграмма ||C^T b_n(θ)||², нормированная на максимум по сетке, в дБ.

    Returns:
        Список (угол, усиление дБ)
    """
    angles = grid_spec.angles()
    response = array_factor(ris.effective_matrix(), angles, consts, subcarrier)
    power = np.sum(np.abs(response) ** 2, axis=1)
    gain_db = 10.0 * np.log10(np.maximum(power / max(float(np.max(power)), POWER_FLOOR), POWER_FLOOR))
    return list(zip(angles.tolist(), gain_db.tolist()))


def pattern_gain_db(ris: RisConfig, theta_deg: float, consts: DerivedConstants, subcarrier: int = 0) -> float:
    """Ненормированная мощность ||C^T b_n(θ)||² в дБ"""
    response = array_factor(ris.effective_matrix(), theta_deg, consts, subcarrier)
    return float(10.0 * np.log10(max(float(np.sum(np.abs(response) ** 2)), POWER_FLOOR)))


def pattern_extrema(pattern: Sequence[Tuple[float, float]]) -> Tuple[List[float], List[float]]:
    """
    Углы строгих локальных максимумов и минимумов диаграммы.

    Args:
        pattern: Пары (угол, усиление дБ), как из beam_pattern

    Returns:
        (углы максимумов, углы минимумов)
    """
    if len(pattern) < 3:
        return [], []
    angles = np.array([a for a, _ in pattern])
    gains = np.array([g for _, g in pattern])
    maxima = argrelextrema(gains, np.greater)[0]
    minima = argrelextrema(gains, np.less)[0]
    return angles[maxima].tolist(), angles[minima].tolist()


def nearest_offset(angles: Sequence[float], theta_deg: float) -> Optional[float]:
    """Расстояние от theta до ближайшего угла из списка (None для пустого списка)"""
    if not len(angles):
        return None
    return float(np.min(np.abs(np.asarray(angles) - theta_deg)))
