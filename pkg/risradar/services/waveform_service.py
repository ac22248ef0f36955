"""Синтез наблюдений в области символов и подавление прямого пути"""
import logging
from typing import Optional, Sequence

import numpy as np

from risradar.constants import RngStream
from risradar.models.scene import DerivedConstants, RisGeometry, SceneConfig
from risradar.models.signal import RisConfig, SymbolBook, SymbolGrid
from risradar.services.scene_service import delay_of, derive_constants, doppler_of, los_delay_of
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, NonFiniteError
from risradar.utils.seeding import derive_rng

logger = logging.getLogger(__name__)

# Сдвиг номера кадра для потока шума кадра с -C
_ODD_FRAME_OFFSET = 1 << 20


def _check_angles(theta_deg: np.ndarray) -> None:
    if np.any(np.abs(theta_deg) >= 90.0):
        raise InvalidArgumentError(f"Углы должны лежать в (-90, 90), получено: {theta_deg}")


def steering_matrix(
    subcarriers: Sequence[int],
    theta_deg,
    consts: DerivedConstants,
) -> np.ndarray:
    """
    Управляющие векторы b_n(θ) для набора поднесущих и углов.

    Элемент l: exp(-j2π d_l/λ_n) * exp(-j2π s (λ/λ_n) l sin θ), s - шаг в длинах волны.

    Args:
        subcarriers: Индексы поднесущих
        theta_deg: Угол или массив углов (градусы)
        consts: Производные величины сценария

    Returns:
        Массив формы (len(subcarriers), len(theta), L)
    """
    subcarriers = np.atleast_1d(np.asarray(subcarriers, dtype=int))
    if np.any(subcarriers < 0) or np.any(subcarriers >= consts.n_subcarriers):
        raise InvalidArgumentError(
            f"Индекс поднесущей вне диапазона [0, {consts.n_subcarriers}): {subcarriers}"
        )
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))

    wavelengths = consts.wavelength_m[subcarriers]
    dilation = consts.carrier_wavelength_m / wavelengths  # λ / λ_n
    elements = np.arange(consts.n_elements)

    path_phase = -2j * np.pi * consts.element_to_rx_dist_m[None, :] / wavelengths[:, None]
    spatial = (-2j * np.pi * consts.element_spacing_wavelengths
               * dilation[:, None, None] * elements[None, None, :] * np.sin(np.deg2rad(theta))[None, :, None])
    return np.exp(path_phase[:, None, :] + spatial)


def steering_vector(n: int, theta_deg: float, geometry: RisGeometry, consts: DerivedConstants) -> np.ndarray:
    """
    Управляющий вектор b_n(θ) длины L.

    Args:
        n: Индекс поднесущей
        theta_deg: Угол, градусы (|θ| < 90)
        geometry: Геометрия RIS (шаг элементов)
        consts: Производные величины сценария

    Returns:
        Комплексный вектор с элементами единичного модуля
    """
    _check_angles(np.asarray([theta_deg]))
    if geometry.element_spacing_wavelengths != consts.element_spacing_wavelengths:
        raise DataMismatchError("Геометрия не совпадает с производными величинами сценария")
    return steering_matrix([n], theta_deg, consts)[0, 0]


def make_symbol_book(cfg: SceneConfig, frame: int = 0, static_over_slots: Optional[bool] = None) -> SymbolBook:
    """
    Генерирует PSK-символы радара-жертвы и помехи из независимых потоков.

    Args:
        cfg: Сценарий
        frame: Номер кадра (разные кадры - разные символы)
        static_over_slots: Держать символ поднесущей на всех слотах кадра
            (по умолчанию cfg.symbols_static_over_slots)

    Returns:
        SymbolBook размера N x M
    """
    if static_over_slots is None:
        static_over_slots = cfg.symbols_static_over_slots
    shape = (cfg.n_subcarriers, 1 if static_over_slots else cfg.n_symbols)

    def _draw(stream: RngStream) -> np.ndarray:
        rng = derive_rng(cfg.rng_seed, stream, frame)
        indices = rng.integers(0, cfg.psk_order, size=shape)
        symbols = np.exp(2j * np.pi * indices / cfg.psk_order)
        return np.broadcast_to(symbols, (cfg.n_subcarriers, cfg.n_symbols))

    return SymbolBook(
        victim=_draw(RngStream.VICTIM_SYMBOLS),
        interferer=_draw(RngStream.INTERFERER_SYMBOLS),
        psk_order=cfg.psk_order,
    )


def _path_term(cfg: SceneConfig, consts: DerivedConstants, ris_matrix: np.ndarray, path) -> np.ndarray:
    """η · e^{-j2πnΔfτ} · e^{j2π f_c ν m T} · (C_m^T b_n(θ))"""
    n = np.arange(cfg.n_subcarriers)
    m = np.arange(cfg.n_symbols)
    steering = steering_matrix(n, path.angle_deg, consts)[:, 0, :]  # N x L
    array_gain = steering @ ris_matrix  # N x M
    delay_phase = np.exp(-2j * np.pi * n * consts.delta_f_hz * delay_of(path))
    doppler_phase = np.exp(2j * np.pi * cfg.carrier_freq_hz * doppler_of(path) * m * consts.symbol_period_s)
    return path.gain * delay_phase[:, None] * doppler_phase[None, :] * array_gain


def synthesize(
    cfg: SceneConfig,
    ris: RisConfig,
    book: SymbolBook,
    include_los: bool = True,
    frame: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> SymbolGrid:
    """
    Синтезирует сетку y[n, m] после деления на символы жертвы.

    y = цель через RIS + помеха через RIS (с отношением символов d_i/d_v)
        + прямой путь (опционально) + комплексный гауссов шум дисперсии σ².

    Args:
        cfg: Сценарий
        ris: Конфигурация RIS (L x M)
        book: Символы жертвы и помехи
        include_los: Добавлять ли прямой путь
        frame: Номер кадра, определяет поток шума
        rng: Явный генератор шума (перекрывает поток кадра)

    Returns:
        SymbolGrid

    Raises:
        DataMismatchError: Размеры RIS или символов не совпадают со сценой
        NonFiniteError: Нечисловые усиления путей
    """
    ris.check_against(cfg)
    if book.shape != (cfg.n_subcarriers, cfg.n_symbols):
        raise DataMismatchError(f"Символы {book.shape} не совпадают со сценой")
    gains = {"target": cfg.target.gain, "interferer": cfg.interferer.gain, "los": cfg.los.gain}
    bad = {name: g for name, g in gains.items() if not np.isfinite(g)}
    if bad:
        raise NonFiniteError("Нечисловые усиления путей", diagnostics=bad)

    consts = derive_constants(cfg)
    ris_matrix = ris.matrix()

    data = _path_term(cfg, consts, ris_matrix, cfg.target)
    data = data + book.ratio * _path_term(cfg, consts, ris_matrix, cfg.interferer)

    if include_los:
        n = np.arange(cfg.n_subcarriers)
        # прямой путь не отражается от цели: задержка в одну сторону, а не 2R/c
        los = cfg.los.gain * np.exp(-2j * np.pi * n * consts.delta_f_hz * los_delay_of(cfg.los))
        data = data + los[:, None]

    if cfg.noise_power > 0:
        if rng is None:
            rng = derive_rng(cfg.rng_seed, RngStream.NOISE, frame)
        scale = np.sqrt(cfg.noise_power / 2.0)
        noise = scale * (rng.standard_normal(data.shape) + 1j * rng.standard_normal(data.shape))
        data = data + noise

    logger.debug(f"[Waveform] Кадр {frame}: сетка {data.shape}, средняя мощность {np.mean(np.abs(data) ** 2):.4g}")
    return SymbolGrid(data=data, scene=cfg, seed=cfg.rng_seed, frame=frame)


def cancel_los(raw_even: SymbolGrid, raw_odd: SymbolGrid) -> SymbolGrid:
    """
    Убирает прямой путь вычитанием кадров с конфигурациями C и -C.

    Args:
        raw_even: Кадр с конфигурацией C
        raw_odd: Кадр с теми же символами и конфигурацией -C

    Returns:
        (raw_even - raw_odd) / 2: путь через RIS сохраняется, прямой путь обнуляется
    """
    raw_even.check_same_shape(raw_odd)
    data = (raw_even.data - raw_odd.data) / 2.0
    return SymbolGrid(data=data, scene=raw_even.scene, seed=raw_even.seed, frame=raw_even.frame,
                      meta={"los_cancelled": True})


def synthesize_frame_pair(cfg: SceneConfig, ris: RisConfig, book: SymbolBook, frame: int = 0) -> SymbolGrid:
    """
    Синтезирует пару кадров (C, -C) с независимым шумом и вычитает прямой путь.

    Кадр с -C получает собственный поток шума (номер кадра сдвигается на
    большую константу, чтобы не пересекаться с последовательными кадрами).
    """
    even = synthesize(cfg, ris, book, include_los=True, frame=frame)
    odd = synthesize(cfg, ris.negated(), book, include_los=True, frame=frame + _ODD_FRAME_OFFSET)
    return cancel_los(even, odd)


def fold_sign_pattern(grid: SymbolGrid, ris: RisConfig) -> np.ndarray:
    """
    Снимает шаблон знаков и усредняет пары слотов.

    (s[2k] y[:, 2k] + s[2k+1] y[:, 2k+1]) / 2 - прямой путь, одинаковый в
    обоих слотах пары, при этом тоже вычитается.

    Returns:
        Массив N x M_eff
    """
    if grid.shape[1] != ris.n_slots:
        raise DataMismatchError(f"Сетка {grid.shape} и конфигурация RIS ({ris.n_slots} слотов) не согласованы")
    compensated = grid.data * ris.sign_pattern[None, :]
    return 0.5 * (compensated[:, 0::2] + compensated[:, 1::2])
