"""Карта дальность-скорость и оценка положения цели"""
import logging
from typing import Optional

import numpy as np
from scipy.signal.windows import hann

from risradar.constants import POWER_FLOOR, SPEED_OF_LIGHT
from risradar.models.results import RangeDopplerMap, TargetEstimate
from risradar.models.signal import RisConfig, SymbolGrid
from risradar.services.scene_service import derive_constants, folded_range, is_aliased
from risradar.utils.errors import DataMismatchError, InvalidArgumentError

logger = logging.getLogger(__name__)


def build_map(grid: SymbolGrid, ris: Optional[RisConfig] = None, window: bool = False) -> RangeDopplerMap:
    """
    Строит карту: обратное ДПФ по поднесущим, прямое ДПФ по символам.

    Ядра совпадают со знаками фаз модели: задержка даёт e^{-j2πnΔfτ},
    поэтому обратное ДПФ по n переводит её в положительный бин дальности
    k = BΔτ; доплер e^{+j2π f_c ν m T} прямое ДПФ по m переводит в бин
    q = f_c ν M T. Масштаб унитарный, энергия сохраняется.

    Args:
        grid: Сетка наблюдений
        ris: Если задана, шаблон знаков снимается умножением на s_m
        window: Окно Ханна по обеим осям

    Returns:
        RangeDopplerMap N x M
    """
    scene = grid.scene
    consts = derive_constants(scene)
    data = np.array(grid.data)
    if ris is not None:
        if ris.n_slots != data.shape[1]:
            raise DataMismatchError(f"Сетка {data.shape} и RIS ({ris.n_slots} слотов) не согласованы")
        data = data * ris.sign_pattern[None, :]
    if window:
        n, m = data.shape
        data = data * np.outer(hann(n, sym=False), hann(m, sym=False))

    rv = np.fft.fft(np.fft.ifft(data, axis=0, norm="ortho"), axis=1, norm="ortho")

    n_subcarriers, n_symbols = data.shape
    range_axis = np.arange(n_subcarriers) * SPEED_OF_LIGHT / (2.0 * scene.bandwidth_hz)
    doppler_bins = np.fft.fftfreq(n_symbols, d=1.0 / n_symbols)
    velocity_axis = doppler_bins * consts.velocity_resolution_mps
    return RangeDopplerMap(
        map=rv, range_axis_m=range_axis, velocity_axis_mps=velocity_axis, scene=scene, windowed=window
    )


def _circular_refine(log_values: np.ndarray, index: int) -> float:
    """Смещение пика (в бинах) по трём точкам с циклическими соседями"""
    size = len(log_values)
    if size < 3:
        return 0.0
    left = log_values[(index - 1) % size]
    center = log_values[index]
    right = log_values[(index + 1) % size]
    curvature = left - 2.0 * center + right
    if curvature >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def wrap_bin(value: float, n_bins: int) -> float:
    """Приводит дробный бин к [0, n_bins)"""
    wrapped = float(np.mod(value, n_bins))
    # np.mod(-1e-17, n) округляется ровно до n
    if wrapped >= n_bins:
        wrapped -= n_bins
    return wrapped


def extract_target(rv_map: RangeDopplerMap, detection_floor_db: float = 10.0) -> TargetEstimate:
    """
    Ищет глобальный максимум модуля карты и уточняет его по каждой оси.

    Args:
        rv_map: Карта дальность-скорость
        detection_floor_db: Минимальное отношение пик/медиана мощности

    Returns:
        TargetEstimate; detected = False, если отношение ниже порога
    """
    power = rv_map.power
    if power.size == 0:
        raise InvalidArgumentError("Пустая карта")
    scene = rv_map.scene
    consts = derive_constants(scene)
    n_bins, n_doppler = power.shape

    k, q = np.unravel_index(int(np.argmax(power)), power.shape)
    log_mag = np.log(np.maximum(np.abs(rv_map.map), np.sqrt(POWER_FLOOR)))
    range_offset = _circular_refine(log_mag[:, q], k)
    doppler_offset = _circular_refine(log_mag[k, :], q)

    range_bin = wrap_bin(k + range_offset, n_bins)
    signed_q = q if q < n_doppler / 2 else q - n_doppler
    doppler_bin = float(signed_q + doppler_offset)
    range_hat = range_bin * consts.range_resolution_m

    peak_power = float(power[k, q])
    median_power = max(float(np.median(power)), POWER_FLOOR)
    ratio_db = float(10.0 * np.log10(max(peak_power, POWER_FLOOR) / median_power))
    detected = ratio_db >= detection_floor_db
    if not detected:
        logger.warning(f"[RVMap] Цель не обнаружена: пик/медиана {ratio_db:.2f} дБ < {detection_floor_db} дБ")

    return TargetEstimate(
        range_hat_m=float(range_hat),
        velocity_hat_mps=float(doppler_bin * consts.velocity_resolution_mps),
        peak_power=peak_power,
        peak_to_median_ratio_db=ratio_db,
        alias_flag=is_aliased(scene.target, consts),
        detected=detected,
        range_bin=range_bin,
        doppler_bin=doppler_bin,
    )


def range_error(estimate: TargetEstimate, true_range_m: float, unambiguous_range_m: float) -> float:
    """Циклическое расстояние между оценкой и свёрнутой истинной дальностью"""
    folded = float(np.mod(true_range_m, unambiguous_range_m))
    diff = abs(estimate.range_hat_m - folded) % unambiguous_range_m
    return float(min(diff, unambiguous_range_m - diff))


def map_rows(rv_map: RangeDopplerMap) -> list:
    """Строки CSV карты: range_bin, doppler_bin, range_m, velocity_mps, power_db"""
    power_db = 10.0 * np.log10(np.maximum(rv_map.power, POWER_FLOOR))
    rows = []
    for k in range(power_db.shape[0]):
        for q in range(power_db.shape[1]):
            rows.append({
                "range_bin": k,
                "doppler_bin": q,
                "range_m": float(rv_map.range_axis_m[k]),
                "velocity_mps": float(rv_map.velocity_axis_mps[q]),
                "power_db": float(power_db[k, q]),
            })
    return rows


def true_folded_range(rv_map: RangeDopplerMap) -> float:
    """Истинная дальность цели, свёрнутая в однозначный интервал"""
    return folded_range(rv_map.scene.target.range_m, derive_constants(rv_map.scene))
