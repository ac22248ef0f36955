"""Модели обучения конфигурации RIS"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from risradar.constants import NotchMode, OutputHead
from risradar.models.scene import DerivedConstants
from risradar.models.signal import RisConfig
from risradar.utils.errors import DataMismatchError, NonFiniteError


@dataclass
class MlpModel:
    """
    Перцептрон [2, H1, H2, out]: ReLU на скрытых слоях, линейный выход.

    Выход трактуется как фазы RIS: L_train x M_eff (голова full, построчно)
    или L_train (голова shared, одна фаза на элемент для всех слотов).
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    n_elements: int
    n_effective: int
    output_head: OutputHead = OutputHead.FULL

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DataMismatchError("Число матриц весов и векторов смещений должно совпадать")
        sizes = self.layer_sizes
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1], 1):
                raise DataMismatchError(f"Слой {i}: веса {w.shape}, смещения {b.shape} не согласованы")
        expected = self.n_elements * (self.n_effective if self.output_head is OutputHead.FULL else 1)
        if sizes[-1] != expected:
            raise DataMismatchError(f"Выход сети {sizes[-1]} не совпадает с ожидаемым {expected}")
        if not self.is_finite():
            raise NonFiniteError("Параметры сети содержат нечисловые значения")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def parameters(self) -> List[np.ndarray]:
        """Параметры в порядке W1, b1, W2, b2, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def with_parameters(self, params: List[np.ndarray]) -> "MlpModel":
        """Копия модели с другими параметрами того же порядка"""
        return MlpModel(
            weights=[np.array(p, dtype=float) for p in params[0::2]],
            biases=[np.array(p, dtype=float) for p in params[1::2]],
            n_elements=self.n_elements,
            n_effective=self.n_effective,
            output_head=self.output_head,
        )


@dataclass(frozen=True)
class LossContext:
    """Всё, что функция потерь берёт из измерения текущей внешней итерации"""
    noise_bases: np.ndarray  # N x M_eff x K, постоянны внутри шага (stop-gradient)
    theta_t_hat: float
    theta_i_hat: float
    sigma2: float
    consts: DerivedConstants
    subcarriers: tuple
    notch_mode: NotchMode = NotchMode.TRUNCATE


@dataclass(frozen=True)
class LossBreakdown:
    """Слагаемые функции потерь"""
    spectrum_term: float
    sinr_term: float
    beta: float
    total: float
    guarded: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spectrum_term": self.spectrum_term,
            "sinr_term": self.sinr_term,
            "beta": self.beta,
            "total": self.total,
            "guarded": self.guarded,
        }


@dataclass(frozen=True)
class IterationRecord:
    """Запись одной внешней итерации обучения"""
    iteration: int
    loss: LossBreakdown
    theta_t_hat: float
    theta_i_hat: float
    sinr_db: float
    angles_resolved: bool = True
    # потери лучшей на тот момент конфигурации в контексте этой итерации
    incumbent_loss: Optional[float] = None

    @property
    def kept_loss(self) -> float:
        """Потери конфигурации, оставшейся лучшей после итерации"""
        if self.incumbent_loss is None:
            return self.loss.total
        return min(self.loss.total, self.incumbent_loss)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "theta_t_hat_deg": self.theta_t_hat,
            "theta_i_hat_deg": self.theta_i_hat,
            "sinr_db": self.sinr_db,
            "angles_resolved": self.angles_resolved,
            "incumbent_loss": self.incumbent_loss,
            **{f"loss_{k}": v for k, v in self.loss.to_dict().items() if k != "beta"},
        }


@dataclass
class TrainReport:
    """Отчёт об обучении"""
    beta: float
    records: List[IterationRecord] = field(default_factory=list)
    final_ris: Optional[RisConfig] = None
    initial_ris: Optional[RisConfig] = None
    initial_sinr_db: Optional[float] = None
    best_iteration: Optional[int] = None
    converged: bool = False
    stop_reason: str = ""
    wall_time_s: float = 0.0

    @property
    def best_record(self) -> Optional[IterationRecord]:
        for record in self.records:
            if record.iteration == self.best_iteration:
                return record
        return None

    @property
    def final_sinr_db(self) -> Optional[float]:
        best = self.best_record
        return best.sinr_db if best else None

    def best_loss_trace(self) -> List[float]:
        """Потери лучшей конфигурации после каждой итерации, в контексте этой итерации"""
        return [float(record.kept_loss) for record in self.records]

    def to_dict(self, include_wall_time: bool = False) -> Dict[str, Any]:
        """
        Сериализует отчёт.

        Args:
            include_wall_time: Включать ли время работы (не входит в
                контрольные суммы воспроизводимых файлов)
        """
        data = {
            "beta": self.beta,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "best_iteration": self.best_iteration,
            "initial_sinr_db": self.initial_sinr_db,
            "final_sinr_db": self.final_sinr_db,
            "final_stage": self.final_ris.stage if self.final_ris is not None else None,
            "records": [r.to_dict() for r in self.records],
        }
        if include_wall_time:
            data["wall_time_s"] = self.wall_time_s
        return data
