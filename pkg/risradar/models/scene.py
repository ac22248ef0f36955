"""Модели физического сценария"""
import math
from dataclasses import dataclass
from typing import Annotated, Any, List, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator, model_validator


def _parse_complex(value: Any) -> complex:
    """Принимает комплексное усиление как [re, im], {re, im} или число"""
    if isinstance(value, bool):
        raise ValueError("усиление не может быть логическим значением")
    if isinstance(value, (complex, int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return complex(float(value["re"]), float(value["im"]))
    raise ValueError("комплексное усиление задаётся как [re, im] или число")


ComplexGain = Annotated[
    complex,
    BeforeValidator(_parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


class FrozenModel(BaseModel):
    """Неизменяемая модель с запретом неизвестных ключей"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    def evolve(self, **changes: Any):
        """Возвращает копию с изменёнными полями, прошедшую валидацию заново"""
        return type(self).model_validate({**dict(self), **changes})


class PathSpec(FrozenModel):
    """Путь распространения (цель или источник помехи)"""
    angle_deg: float = Field(..., description="Угол от нормали к решётке RIS, градусы")
    range_m: float = Field(..., gt=0, description="Относительная дальность, м")
    velocity_mps: float = Field(0.0, description="Относительная скорость, м/с")
    gain: ComplexGain = Field(complex(1.0), description="Эффективное усиление пути")

    @field_validator('angle_deg')
    @classmethod
    def validate_angle(cls, v):
        """Угол строго внутри (-90, 90)"""
        if not -90.0 < v < 90.0:
            raise ValueError(f"угол должен лежать в (-90, 90), получено: {v}")
        return v


class LosSpec(FrozenModel):
    """Прямой путь (не проходит через RIS)"""
    gain: ComplexGain = Field(complex(5.0), description="Усиление прямого пути")
    range_m: float = Field(0.5, gt=0, description="Расстояние передатчик-приёмник по прямому пути, м")


class RisGeometry(FrozenModel):
    """Геометрия линейной решётки RIS и положение приёмной антенны"""
    element_spacing_wavelengths: float = Field(0.5, gt=0, description="Шаг элементов в длинах волны несущей")
    rx_offset_m: float = Field(0.05, ge=0, description="Смещение антенны вдоль оси решётки до элемента 0, м")
    element_to_rx_dist_m: Optional[List[float]] = Field(
        None, description="Явные расстояния d_l; если не заданы - вычисляются из геометрии"
    )

    @field_validator('element_to_rx_dist_m')
    @classmethod
    def validate_distances(cls, v):
        """Все расстояния неотрицательны"""
        if v is not None and any(d < 0 for d in v):
            raise ValueError("расстояния d_l должны быть неотрицательными")
        return v


class AngleGrid(FrozenModel):
    """Сетка углов для поиска по спектру"""
    start: float = -90.0
    stop: float = 90.0
    step: float = Field(0.1, gt=0)

    @model_validator(mode='after')
    def validate_bounds(self):
        """Начало сетки меньше конца"""
        if self.stop <= self.start:
            raise ValueError(f"stop ({self.stop}) должен быть больше start ({self.start})")
        return self

    def angles(self) -> np.ndarray:
        """Узлы сетки в градусах (концы включены)"""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


class SceneConfig(FrozenModel):
    """Полный физический сценарий"""
    carrier_freq_hz: float = Field(77e9, gt=0)
    bandwidth_hz: float = Field(200e6, gt=0)
    n_subcarriers: int = Field(20, ge=2)
    n_symbols: int = Field(100, ge=4)
    n_ris_elements: int = Field(50, ge=2)
    psk_order: int = Field(4, ge=2)
    cp_ratio: float = Field(0.0, ge=0, description="T_cp / T_sym")
    target: PathSpec = PathSpec(angle_deg=20.0, range_m=30.0, gain=complex(1.0))
    interferer: PathSpec = PathSpec(angle_deg=50.0, range_m=15.0, gain=complex(3.0))
    los: LosSpec = LosSpec()
    geometry: RisGeometry = RisGeometry()
    noise_power: float = Field(0.1, ge=0)
    symbols_static_over_slots: bool = True
    rng_seed: int = Field(0, ge=0)
    angle_grid_deg: AngleGrid = AngleGrid()

    @field_validator('n_symbols')
    @classmethod
    def validate_even_symbols(cls, v):
        """M чётно, чтобы пары слотов для подавления LoS были определены"""
        if v % 2:
            raise ValueError(f"n_symbols должно быть чётным, получено: {v}")
        return v

    @model_validator(mode='after')
    def validate_geometry(self):
        """Длина явного списка d_l совпадает с L"""
        distances = self.geometry.element_to_rx_dist_m
        if distances is not None and len(distances) != self.n_ris_elements:
            raise ValueError(
                f"geometry.element_to_rx_dist_m должен содержать {self.n_ris_elements} значений, получено: {len(distances)}"
            )
        return self

    @property
    def n_effective_slots(self) -> int:
        """Число различных столбцов конфигурации RIS (M/2)"""
        return self.n_symbols // 2


@dataclass(frozen=True)
class DerivedConstants:
    """Производные величины сценария"""
    delta_f_hz: float
    carrier_wavelength_m: float
    wavelength_m: np.ndarray  # λ_n по поднесущим
    symbol_period_s: float
    unambiguous_range_m: float
    range_resolution_m: float
    velocity_resolution_mps: float
    element_spacing_wavelengths: float
    element_to_rx_dist_m: np.ndarray

    @property
    def n_subcarriers(self) -> int:
        return int(self.wavelength_m.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.element_to_rx_dist_m.shape[0])
