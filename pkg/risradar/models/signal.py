"""Модели сигналов: символы, конфигурация RIS, сетка наблюдений"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from risradar.models.scene import SceneConfig
from risradar.utils.errors import DataMismatchError, InvalidArgumentError


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def alternating_signs(n_symbols: int) -> np.ndarray:
    """Шаблон знаков +1, -1, +1, -1, ... для пар соседних слотов"""
    signs = np.ones(n_symbols)
    signs[1::2] = -1.0
    return signs


@dataclass(frozen=True)
class SymbolBook:
    """PSK-символы радара-жертвы и источника помехи"""
    victim: np.ndarray
    interferer: np.ndarray
    psk_order: int

    def __post_init__(self):
        if self.victim.shape != self.interferer.shape:
            raise DataMismatchError(
                f"Размеры символов не совпадают: {self.victim.shape} и {self.interferer.shape}"
            )
        object.__setattr__(self, 'victim', _readonly(self.victim))
        object.__setattr__(self, 'interferer', _readonly(self.interferer))

    @property
    def shape(self) -> tuple:
        return self.victim.shape

    @property
    def ratio(self) -> np.ndarray:
        """Отношение d_i / d_v (символы единичного модуля)"""
        return self.interferer * np.conj(self.victim)


@dataclass(frozen=True)
class RisConfig:
    """
    Матрица конфигурации RIS C (L x M).

    C[l, m] = amplitudes[l, m] * exp(j * phases[l, m]) * sign_pattern[m].
    Слоты 2k и 2k+1 несут одинаковые фазы и противоположные знаки,
    поэтому различных столбцов M_eff = M / 2.
    """
    phases: np.ndarray
    amplitudes: np.ndarray
    sign_pattern: np.ndarray
    stage: str = "initial"

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        amplitudes = np.asarray(self.amplitudes, dtype=float)
        signs = np.asarray(self.sign_pattern, dtype=float)
        if phases.ndim != 2 or phases.shape != amplitudes.shape:
            raise DataMismatchError(f"phases {phases.shape} и amplitudes {amplitudes.shape} должны быть L x M")
        n_slots = phases.shape[1]
        if n_slots % 2 or signs.shape != (n_slots,):
            raise DataMismatchError(f"sign_pattern должен иметь длину M={n_slots} (M чётно)")
        if not np.all(np.isin(signs, (-1.0, 1.0))) or not np.array_equal(signs[1::2], -signs[0::2]):
            raise InvalidArgumentError("sign_pattern должен чередоваться в парах: s[2k+1] = -s[2k]")
        if not (np.array_equal(phases[:, 0::2], phases[:, 1::2])
                and np.array_equal(amplitudes[:, 0::2], amplitudes[:, 1::2])):
            raise InvalidArgumentError("Слоты 2k и 2k+1 должны иметь одинаковую конфигурацию")
        object.__setattr__(self, 'phases', _readonly(phases))
        object.__setattr__(self, 'amplitudes', _readonly(amplitudes))
        object.__setattr__(self, 'sign_pattern', _readonly(signs))

    @classmethod
    def from_effective(
        cls,
        phases_eff: np.ndarray,
        amplitudes_eff: Optional[np.ndarray] = None,
        stage: str = "initial"
    ) -> "RisConfig":
        """
        Строит полную конфигурацию из L x M_eff эффективных столбцов.

        Args:
            phases_eff: Фазы (радианы), L x M_eff
            amplitudes_eff: Амплитуды (по умолчанию единичные)
            stage: Стадия, на которой получена конфигурация

        Returns:
            RisConfig с дублированными столбцами и чередующимися знаками
        """
        phases_eff = np.atleast_2d(np.asarray(phases_eff, dtype=float))
        if amplitudes_eff is None:
            amplitudes_eff = np.ones_like(phases_eff)
        amplitudes_eff = np.asarray(amplitudes_eff, dtype=float)
        n_slots = 2 * phases_eff.shape[1]
        return cls(
            phases=np.repeat(phases_eff, 2, axis=1),
            amplitudes=np.repeat(amplitudes_eff, 2, axis=1),
            sign_pattern=alternating_signs(n_slots),
            stage=stage,
        )

    @classmethod
    def random(cls, n_elements: int, n_symbols: int, rng: np.random.Generator) -> "RisConfig":
        """Случайные фазы, единичный модуль"""
        phases_eff = rng.uniform(-np.pi, np.pi, size=(n_elements, n_symbols // 2))
        return cls.from_effective(phases_eff, stage="random")

    @classmethod
    def uniform(cls, n_elements: int, n_symbols: int) -> "RisConfig":
        """Все фазы нулевые (C из единиц с учётом знаков)"""
        return cls.from_effective(np.zeros((n_elements, n_symbols // 2)), stage="uniform")

    @property
    def n_elements(self) -> int:
        return int(self.phases.shape[0])

    @property
    def n_slots(self) -> int:
        return int(self.phases.shape[1])

    @property
    def n_effective(self) -> int:
        return self.n_slots // 2

    @property
    def is_unit_modulus(self) -> bool:
        return bool(np.allclose(self.amplitudes, 1.0, rtol=0, atol=1e-12))

    def matrix(self) -> np.ndarray:
        """Полная матрица C (L x M) с учётом шаблона знаков"""
        return self.amplitudes * np.exp(1j * self.phases) * self.sign_pattern[None, :]

    def effective_matrix(self) -> np.ndarray:
        """Эффективная матрица (L x M_eff) без шаблона знаков"""
        return self.amplitudes[:, 0::2] * np.exp(1j * self.phases[:, 0::2])

    def negated(self) -> "RisConfig":
        """Конфигурация -C (для кадра подавления прямого пути)"""
        return RisConfig(self.phases, self.amplitudes, -self.sign_pattern, stage=self.stage)

    def check_against(self, scene: SceneConfig) -> None:
        """Проверяет, что размеры согласованы со сценой"""
        expected = (scene.n_ris_elements, scene.n_symbols)
        if self.phases.shape != expected:
            raise DataMismatchError(f"Конфигурация RIS {self.phases.shape} не совпадает со сценой {expected}")


@dataclass(frozen=True)
class SymbolGrid:
    """Сетка y[n, m] после FFT и деления на переданные символы"""
    data: np.ndarray
    scene: SceneConfig
    seed: int = 0
    frame: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        expected = (self.scene.n_subcarriers, self.scene.n_symbols)
        if data.shape != expected:
            raise DataMismatchError(f"Сетка {data.shape} не совпадает со сценой {expected}")
        if not np.all(np.isfinite(data)):
            raise DataMismatchError("Сетка содержит нечисловые значения")
        object.__setattr__(self, 'data', _readonly(data))

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def check_same_shape(self, other: "SymbolGrid") -> None:
        if self.shape != other.shape:
            raise DataMismatchError(f"Размеры сеток не совпадают: {self.shape} и {other.shape}")
