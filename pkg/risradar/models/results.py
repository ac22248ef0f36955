"""Результаты оценки углов и обработки карты дальность-скорость"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from risradar.models.scene import SceneConfig


@dataclass(frozen=True)
class CovarianceEstimate:
    """Выборочная ковариация эффективных наблюдений (M_eff x M_eff)"""
    matrix: np.ndarray
    n_snapshots: int
    subcarriers: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class MusicResult:
    """Спектр MUSIC и оценки углов для одной поднесущей"""
    angles_deg: np.ndarray
    spectrum: np.ndarray
    theta_hat_target: float
    theta_hat_interf: float
    noise_basis: np.ndarray
    peak_powers: Tuple[float, float]  # (цель, помеха)
    subcarrier: int

    @property
    def spectrum_pairs(self) -> List[Tuple[float, float]]:
        """Спектр как список пар (угол, P(θ))"""
        return list(zip(self.angles_deg.tolist(), self.spectrum.tolist()))

    @property
    def peak_ratio_db(self) -> float:
        """P(θ̂_i) / P(θ̂_t) в дБ"""
        return float(10.0 * np.log10(self.peak_powers[1] / self.peak_powers[0]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcarrier": self.subcarrier,
            "theta_hat_target_deg": self.theta_hat_target,
            "theta_hat_interf_deg": self.theta_hat_interf,
            "peak_power_target": self.peak_powers[0],
            "peak_power_interf": self.peak_powers[1],
            "peak_ratio_db": self.peak_ratio_db,
        }


@dataclass(frozen=True)
class AngleEstimate:
    """Итоговая оценка углов по всем поднесущим"""
    theta_target: float
    theta_interf: float
    per_subcarrier: List[MusicResult]
    failed_subcarriers: List[int]
    noise_bases: np.ndarray  # N x M_eff x (M_eff - 2)
    mode: str

    @property
    def reference(self) -> MusicResult:
        """Результат для первой разрешённой поднесущей"""
        return self.per_subcarrier[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "theta_hat_target_deg": self.theta_target,
            "theta_hat_interf_deg": self.theta_interf,
            "failed_subcarriers": list(self.failed_subcarriers),
            "per_subcarrier": [r.to_dict() for r in self.per_subcarrier],
        }


@dataclass(frozen=True)
class RangeDopplerMap:
    """Карта дальность-скорость"""
    map: np.ndarray  # N x M, (бин дальности, доплеровский бин)
    range_axis_m: np.ndarray
    velocity_axis_mps: np.ndarray
    scene: SceneConfig
    windowed: bool = False

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.map) ** 2


@dataclass(frozen=True)
class TargetEstimate:
    """Оценка дальности и скорости цели по пику карты"""
    range_hat_m: float
    velocity_hat_mps: float
    peak_power: float
    peak_to_median_ratio_db: float
    alias_flag: bool
    detected: bool
    range_bin: float = 0.0
    doppler_bin: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "range_hat_m": self.range_hat_m,
            "velocity_hat_mps": self.velocity_hat_mps,
            "peak_power": self.peak_power,
            "peak_to_median_ratio_db": self.peak_to_median_ratio_db,
            "alias_flag": self.alias_flag,
            "detected": self.detected,
            "range_bin": self.range_bin,
            "doppler_bin": self.doppler_bin,
        }


@dataclass(frozen=True)
class StageOutcome:
    """Результат одного испытания конвейера"""
    stage: str
    range_error_m: Optional[float]
    estimate: TargetEstimate
    sinr_db: float
    true_range_m: float


@dataclass
class SweepResult:
    """Агрегированные и поиспытательные строки прогона"""
    kind: str
    rows: List[Dict[str, Any]]
    trial_rows: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)
