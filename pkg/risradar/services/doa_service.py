"""Модифицированный MUSIC: ковариация, подпространство шума, спектр и разметка пиков"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from risradar.config import Config
from risradar.constants import (
    N_SOURCES,
    PEAK_TIE_TOLERANCE,
    POOLED_MAX_PHASE_DRIFT_RAD,
    POWER_FLOOR,
    SPEED_OF_LIGHT,
    AngleMode,
    EigenSolver,
)
from risradar.models.results import AngleEstimate, CovarianceEstimate, MusicResult
from risradar.models.scene import AngleGrid, DerivedConstants
from risradar.models.settings import EstimatorSettings
from risradar.models.signal import RisConfig, SymbolGrid
from risradar.services.eigen_service import hermitian_eigh
from risradar.services.scene_service import derive_constants
from risradar.services.waveform_service import fold_sign_pattern, steering_matrix
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, PeaksMergedError

logger = logging.getLogger(__name__)


def _resolve_solver(solver: Optional[str]) -> EigenSolver:
    return EigenSolver((solver or Config.EIGEN_SOLVER).lower())


def estimate_covariance(grid: SymbolGrid, ris: RisConfig, subcarriers: Sequence[int]) -> CovarianceEstimate:
    """
    Выборочная ковариация по поднесущим.

    Строка каждой выбранной поднесущей после снятия шаблона знаков
    (M_eff эффективных слотов) считается одним снимком y_n;
    R = (1/|S|) Σ y_n y_n^H.

    Args:
        grid: Сетка, синтезированная с той же конфигурацией RIS
        ris: Конфигурация RIS
        subcarriers: Непустой набор индексов поднесущих

    Returns:
        CovarianceEstimate

    Raises:
        InvalidArgumentError: Пустой набор или индекс вне диапазона
        DataMismatchError: Размеры сетки и RIS не согласованы
    """
    indices = tuple(int(n) for n in subcarriers)
    if not indices:
        raise InvalidArgumentError("Набор поднесущих для ковариации пуст")
    n_subcarriers = grid.shape[0]
    if any(n < 0 or n >= n_subcarriers for n in indices):
        raise InvalidArgumentError(f"Индексы поднесущих вне [0, {n_subcarriers}): {indices}")
    if ris.n_slots != grid.shape[1]:
        raise DataMismatchError(f"Сетка {grid.shape} и RIS ({ris.n_slots} слотов) не согласованы")

    snapshots = fold_sign_pattern(grid, ris)[list(indices)]  # S x M_eff
    matrix = snapshots.T @ snapshots.conj() / len(indices)
    matrix = 0.5 * (matrix + matrix.conj().T)
    return CovarianceEstimate(matrix=matrix, n_snapshots=len(indices), subcarriers=indices)


def noise_subspace(cov: CovarianceEstimate, n_sources: int = N_SOURCES, solver: Optional[str] = None) -> np.ndarray:
    """
    Базис подпространства шума.

    Args:
        cov: Ковариация (эрмитова, неотрицательно определённая)
        n_sources: Число источников
        solver: "jacobi", "lapack" или None (RISRADAR_EIGEN_SOLVER)

    Returns:
        M_eff x (M_eff - n_sources): собственные векторы наименьших
        собственных значений, по возрастанию

    Raises:
        InvalidArgumentError: n_sources >= M_eff
        EigenConvergenceError: Якоби не сошёлся
    """
    size = cov.size
    if not 0 <= n_sources < size:
        raise InvalidArgumentError(f"n_sources должно быть в [0, {size}), получено: {n_sources}")
    _, vectors = hermitian_eigh(cov.matrix, _resolve_solver(solver))
    return vectors[:, :size - n_sources]


def _refine_peak(values: np.ndarray, index: int) -> Tuple[float, float]:
    """
    Параболическая интерполяция по трём точкам вокруг пика.

    Returns:
        (смещение в шагах сетки, уточнённое значение)
    """
    if index <= 0 or index >= len(values) - 1:
        return 0.0, float(values[index])
    left, center, right = values[index - 1], values[index], values[index + 1]
    curvature = left - 2.0 * center + right
    if curvature >= 0:
        return 0.0, float(center)
    offset = 0.5 * (left - right) / curvature
    return float(offset), float(center - 0.25 * (left - right) * offset)


def _label_peaks(
    peaks: List[Tuple[float, float]],
    previous_interf: Optional[float],
) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """
    Делит два пика на (цель, помеха).

    Помеха - больший пик. При равенстве в пределах относительного допуска
    помехой считается пик ближе к прошлой оценке помехи, а без неё - пик
    с большим углом.
    """
    first, second = peaks
    larger = max(first[1], second[1])
    if abs(first[1] - second[1]) <= PEAK_TIE_TOLERANCE * larger:
        if previous_interf is not None:
            interf = min(peaks, key=lambda p: abs(p[0] - previous_interf))
        else:
            interf = max(peaks, key=lambda p: p[0])
    else:
        interf = first if first[1] > second[1] else second
    target = second if interf is first else first
    return target, interf


def spectrum_values(
    noise_basis: np.ndarray,
    ris: RisConfig,
    subcarrier: int,
    grid_spec: AngleGrid,
    consts: DerivedConstants,
) -> Tuple[np.ndarray, np.ndarray]:
    """Узлы сетки углов и P(θ) без поиска пиков"""
    c_eff = ris.effective_matrix()
    if noise_basis.shape[0] != c_eff.shape[1]:
        raise DataMismatchError(
            f"Базис шума {noise_basis.shape} не согласован с M_eff={c_eff.shape[1]}"
        )
    angles = grid_spec.angles()
    steering = steering_matrix([subcarrier], angles, consts)[0]  # G x L
    projected = (steering @ c_eff) @ noise_basis.conj()  # G x K
    denominator = np.maximum(np.sum(np.abs(projected) ** 2, axis=1), POWER_FLOOR)
    return angles, 1.0 / denominator


def window_spectrum(
    grid: SymbolGrid,
    ris: RisConfig,
    subcarrier: int = 0,
    settings: Optional[EstimatorSettings] = None,
) -> List[dict]:
    """
    Спектр окна поднесущих, в которое входит subcarrier, в виде строк CSV.

    Пики не ищутся, поэтому спектр доступен и тогда, когда источники слились.
    """
    settings = settings or EstimatorSettings()
    scene = grid.scene
    n_subcarriers = scene.n_subcarriers
    if not 0 <= subcarrier < n_subcarriers:
        raise InvalidArgumentError(f"Поднесущая {subcarrier} вне [0, {n_subcarriers})")
    center = _window_center(subcarrier, n_subcarriers, settings.subcarrier_window)
    indices = subcarrier_windows(n_subcarriers, settings.subcarrier_window)[center]
    basis = noise_subspace(estimate_covariance(grid, ris, indices), N_SOURCES, settings.solver)
    angles, spectrum = spectrum_values(basis, ris, center, scene.angle_grid_deg, derive_constants(scene))
    power_db = 10.0 * np.log10(spectrum)
    return [
        {"angle_deg": round(float(a), 6), "power_db": float(p), "subcarrier_index": center}
        for a, p in zip(angles, power_db)
    ]


def music_spectrum(
    noise_basis: np.ndarray,
    ris: RisConfig,
    subcarrier: int,
    grid_spec: AngleGrid,
    consts: DerivedConstants,
    previous_interf: Optional[float] = None,
    min_prominence_db: float = 10.0,
) -> MusicResult:
    """
    Спектр P(θ) = 1 / ||Q_n^H C^T b_n(θ)||² и два главных пика.

    Args:
        noise_basis: Ортонормированный базис шума M_eff x K
        ris: Конфигурация RIS (используется эффективная матрица)
        subcarrier: Поднесущая, для которой строятся b_n(θ)
        grid_spec: Сетка углов
        consts: Производные величины сценария
        previous_interf: Прошлая оценка угла помехи (для разрешения равенства)
        min_prominence_db: Минимальная выраженность пика источника

    Returns:
        MusicResult с уточнёнными углами

    Raises:
        DataMismatchError: Базис не согласован с RIS
        PeaksMergedError: Найдено меньше двух выраженных максимумов
    """
    angles, spectrum = spectrum_values(noise_basis, ris, subcarrier, grid_spec, consts)
    spectrum_db = 10.0 * np.log10(spectrum)

    peak_idx, _ = find_peaks(spectrum_db, prominence=min_prominence_db)
    if len(peak_idx) < 2:
        if len(peak_idx) == 1:
            best = int(peak_idx[0])
        else:
            best = int(np.argmax(spectrum))
        logger.warning(f"[MUSIC] Поднесущая {subcarrier}: пики слились около {angles[best]:.2f}°")
        raise PeaksMergedError(
            f"Поднесущая {subcarrier}: найдено {len(peak_idx)} выраженных пиков вместо двух",
            peak_angle_deg=float(angles[best]),
            peak_power=float(spectrum[best]),
        )

    top_two = peak_idx[np.argsort(spectrum[peak_idx], kind="stable")[-2:]]
    step = grid_spec.step
    log_spectrum = np.log(spectrum)
    refined = []
    for index in sorted(int(i) for i in top_two):
        offset, log_peak = _refine_peak(log_spectrum, index)
        refined.append((float(angles[index] + offset * step), float(np.exp(log_peak))))

    target, interf = _label_peaks(refined, previous_interf)
    logger.debug(
        f"[MUSIC] Поднесущая {subcarrier}: цель {target[0]:.3f}°, помеха {interf[0]:.3f}°, "
        f"отношение пиков {10 * np.log10(interf[1] / target[1]):.2f} дБ"
    )
    return MusicResult(
        angles_deg=angles,
        spectrum=spectrum,
        theta_hat_target=target[0],
        theta_hat_interf=interf[0],
        noise_basis=noise_basis,
        peak_powers=(target[1], interf[1]),
        subcarrier=int(subcarrier),
    )


def subcarrier_windows(n_subcarriers: int, window: int) -> Dict[int, Tuple[int, ...]]:
    """
    Окна соседних поднесущих для режима averaged.

    Окно длины window сдвигается к краю полосы, если не помещается; ключ -
    центральная поднесущая окна.

    Returns:
        {центр: индексы окна} для каждого различного окна
    """
    window = min(window, n_subcarriers)
    windows: Dict[int, Tuple[int, ...]] = {}
    for n in range(n_subcarriers):
        start = min(max(n - window // 2, 0), n_subcarriers - window)
        indices = tuple(range(start, start + window))
        windows[start + window // 2] = indices
    return windows


def _window_center(n: int, n_subcarriers: int, window: int) -> int:
    window = min(window, n_subcarriers)
    start = min(max(n - window // 2, 0), n_subcarriers - window)
    return start + window // 2


def pooled_subcarriers(
    consts: DerivedConstants,
    grid_spec: AngleGrid,
    reference: int,
    max_drift_rad: float = POOLED_MAX_PHASE_DRIFT_RAD,
) -> Tuple[int, ...]:
    """
    Поднесущие, которые можно объединить в одну ковариацию с опорной.

    Фаза элемента l на поднесущей n отличается от опорной на
    2π (f_n - f_ref) / c * (d_l + s λ l sin θ). Учитывается разброс этой
    разности по элементам (общая фаза на подпространство не влияет) при
    худшем угле сетки; в окно входят поднесущие, у которых он не больше
    max_drift_rad. Окно симметрично относительно опорной и обрезается краями полосы.

    Returns:
        Индексы поднесущих по возрастанию (опорная всегда входит)
    """
    n_subcarriers = consts.n_subcarriers
    if not 0 <= reference < n_subcarriers:
        raise InvalidArgumentError(f"reference_subcarrier {reference} вне [0, {n_subcarriers})")
    spacing_m = consts.element_spacing_wavelengths * consts.carrier_wavelength_m
    elements = np.arange(consts.n_elements)
    edges = np.sin(np.deg2rad(np.clip([grid_spec.start, grid_spec.stop], -90.0, 90.0)))
    # разброс по элементам выпукл по sin θ, максимум на краях сетки
    aperture = max(float(np.ptp(consts.element_to_rx_dist_m + spacing_m * elements * sine)) for sine in edges)
    drift_per_subcarrier = 2.0 * np.pi * consts.delta_f_hz * aperture / SPEED_OF_LIGHT
    if drift_per_subcarrier > 0:
        half_width = int(np.floor(max_drift_rad / drift_per_subcarrier + 1e-9))
    else:
        half_width = n_subcarriers
    indices = tuple(range(max(0, reference - half_width), min(n_subcarriers, reference + half_width + 1)))
    logger.debug(
        f"[MUSIC] Pooled: опорная {reference}, разброс {drift_per_subcarrier:.4f} рад на поднесущую, "
        f"окно {indices[0]}..{indices[-1]}"
    )
    return indices


def estimate_angles(
    grid: SymbolGrid,
    ris: RisConfig,
    settings: Optional[EstimatorSettings] = None,
    previous_interf: Optional[float] = None,
) -> AngleEstimate:
    """
    Оценивает углы цели и помехи по всем поднесущим.

    В режиме averaged цепочка ковариация -> подпространство -> спектр
    выполняется для каждого окна поднесущих и оценки усредняются;
    в режиме pooled одну ковариацию дают поднесущие вокруг опорной, у
    которых фазы b_n расходятся не больше pooled_max_drift_rad.

    Args:
        grid: Сетка наблюдений (прямой путь уже вычтен или будет снят свёрткой знаков)
        ris: Конфигурация, с которой получена сетка
        settings: Настройки оценщика
        previous_interf: Прошлая оценка угла помехи

    Returns:
        AngleEstimate с базисами шума для каждой поднесущей

    Raises:
        PeaksMergedError: Большинство окон не разрешили два пика
    """
    settings = settings or EstimatorSettings()
    scene = grid.scene
    ris.check_against(scene)
    consts = derive_constants(scene)
    n_subcarriers = scene.n_subcarriers
    solver = settings.solver

    if settings.mode is AngleMode.POOLED:
        reference = settings.reference_subcarrier
        if reference is None:
            reference = n_subcarriers // 2
        pool = pooled_subcarriers(consts, scene.angle_grid_deg, reference, settings.pooled_max_drift_rad)
        windows = {reference: pool}
    else:
        windows = subcarrier_windows(n_subcarriers, settings.subcarrier_window)

    results: List[MusicResult] = []
    bases: Dict[int, np.ndarray] = {}
    failed: List[int] = []
    merged: Optional[PeaksMergedError] = None
    for center, indices in windows.items():
        cov = estimate_covariance(grid, ris, indices)
        basis = noise_subspace(cov, N_SOURCES, solver)
        bases[center] = basis
        try:
            results.append(music_spectrum(
                basis, ris, center, scene.angle_grid_deg, consts,
                previous_interf=previous_interf,
                min_prominence_db=settings.min_peak_prominence_db,
            ))
        except PeaksMergedError as e:
            failed.append(center)
            merged = e

    if len(failed) * 2 > len(windows) or not results:
        raise PeaksMergedError(
            f"Два пика не разрешены на {len(failed)} из {len(windows)} окон поднесущих",
            peak_angle_deg=merged.peak_angle_deg if merged else None,
            peak_power=merged.peak_power if merged else None,
        )

    if settings.mode is AngleMode.POOLED:
        noise_bases = np.repeat(next(iter(bases.values()))[None], n_subcarriers, axis=0)
    else:
        noise_bases = np.stack([
            bases[_window_center(n, n_subcarriers, settings.subcarrier_window)]
            for n in range(n_subcarriers)
        ])

    theta_t = float(np.mean([r.theta_hat_target for r in results]))
    theta_i = float(np.mean([r.theta_hat_interf for r in results]))
    if failed:
        logger.warning(f"[MUSIC] Неразрешённые окна (центры): {failed}")
    logger.info(f"[MUSIC] Оценка углов ({settings.mode.value}): цель {theta_t:.4f}°, помеха {theta_i:.4f}°")
    return AngleEstimate(
        theta_target=theta_t,
        theta_interf=theta_i,
        per_subcarrier=results,
        failed_subcarriers=failed,
        noise_bases=noise_bases,
        mode=settings.mode.value,
    )


def spectrum_rows(results: Sequence[MusicResult]) -> List[dict]:
    """Строки CSV спектра: angle_deg, power_db, subcarrier_index"""
    rows = []
    for result in results:
        power_db = 10.0 * np.log10(np.maximum(result.spectrum, POWER_FLOOR))
        for angle, value in zip(result.angles_deg, power_db):
            rows.append({
                "angle_deg": round(float(angle), 6),
                "power_db": float(value),
                "subcarrier_index": result.subcarrier,
            })
    return rows
