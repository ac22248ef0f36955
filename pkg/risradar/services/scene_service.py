"""Производные величины сценария"""
import logging

import numpy as np

from risradar.constants import SPEED_OF_LIGHT
from risradar.models.scene import DerivedConstants, LosSpec, PathSpec, RisGeometry, SceneConfig
from risradar.utils.errors import ConfigurationError, InvalidArgumentError

logger = logging.getLogger(__name__)


def element_distances(geometry: RisGeometry, n_elements: int, carrier_wavelength_m: float) -> np.ndarray:
    """
    Расстояния d_l от элементов RIS до приёмной антенны.

    Антенна стоит на оси решётки на расстоянии rx_offset_m перед элементом 0,
    элементы расположены с шагом element_spacing_wavelengths * λ.
    """
    if geometry.element_to_rx_dist_m is not None:
        return np.asarray(geometry.element_to_rx_dist_m, dtype=float)
    positions = np.arange(n_elements) * geometry.element_spacing_wavelengths * carrier_wavelength_m
    return geometry.rx_offset_m + positions


def derive_constants(cfg: SceneConfig) -> DerivedConstants:
    """
    Вычисляет производные величины сценария.

    Args:
        cfg: Сценарий

    Returns:
        DerivedConstants (чистая функция конфигурации)

    Raises:
        ConfigurationError: N = 0 или B <= 0
    """
    if cfg.n_subcarriers <= 0:
        raise ConfigurationError("n_subcarriers должно быть положительным", field_path="scene.n_subcarriers")
    if cfg.bandwidth_hz <= 0:
        raise ConfigurationError("bandwidth_hz должна быть положительной", field_path="scene.bandwidth_hz")

    delta_f = cfg.bandwidth_hz / cfg.n_subcarriers
    carrier_wavelength = SPEED_OF_LIGHT / cfg.carrier_freq_hz
    subcarrier_freqs = cfg.carrier_freq_hz + np.arange(cfg.n_subcarriers) * delta_f
    symbol_period = (1.0 + cfg.cp_ratio) / delta_f

    distances = element_distances(cfg.geometry, cfg.n_ris_elements, carrier_wavelength)
    wavelengths = SPEED_OF_LIGHT / subcarrier_freqs
    wavelengths.setflags(write=False)
    distances.setflags(write=False)

    return DerivedConstants(
        delta_f_hz=delta_f,
        carrier_wavelength_m=carrier_wavelength,
        wavelength_m=wavelengths,
        symbol_period_s=symbol_period,
        unambiguous_range_m=SPEED_OF_LIGHT / (2.0 * delta_f),
        range_resolution_m=SPEED_OF_LIGHT / (2.0 * cfg.bandwidth_hz),
        velocity_resolution_mps=SPEED_OF_LIGHT / (2.0 * cfg.carrier_freq_hz * cfg.n_symbols * symbol_period),
        element_spacing_wavelengths=cfg.geometry.element_spacing_wavelengths,
        element_to_rx_dist_m=distances,
    )


def delay_of(path: PathSpec) -> float:
    """Задержка пути туда и обратно, 2R/c"""
    if path.range_m <= 0:
        raise InvalidArgumentError(f"Дальность должна быть положительной, получено: {path.range_m}")
    return 2.0 * path.range_m / SPEED_OF_LIGHT


def los_delay_of(los: LosSpec) -> float:
    """Задержка прямого пути передатчик-приёмник, R/c (путь в одну сторону)"""
    return los.range_m / SPEED_OF_LIGHT


def doppler_of(path: PathSpec) -> float:
    """Нормированный доплеровский сдвиг ν = 2v/c"""
    return 2.0 * path.velocity_mps / SPEED_OF_LIGHT


def is_aliased(path: PathSpec, consts: DerivedConstants) -> bool:
    """Дальность пути за пределами однозначной дальности c/(2Δf)"""
    return path.range_m >= consts.unambiguous_range_m


def folded_range(range_m: float, consts: DerivedConstants) -> float:
    """Дальность, свёрнутая в [0, однозначная дальность)"""
    return float(np.mod(range_m, consts.unambiguous_range_m))


def alias_warnings(cfg: SceneConfig, consts: DerivedConstants) -> list:
    """
    Формирует предупреждения о неоднозначной дальности.

    Returns:
        Список строк (пустой, если путей за пределами однозначной дальности нет)
    """
    warnings = []
    for name, path in (("target", cfg.target), ("interferer", cfg.interferer)):
        if is_aliased(path, consts):
            message = (
                f"{name}: дальность {path.range_m:.2f} м превышает однозначную "
                f"{consts.unambiguous_range_m:.2f} м, будет видна как {folded_range(path.range_m, consts):.2f} м"
            )
            logger.warning(f"[Scene] {message}")
            warnings.append(message)
    return warnings
