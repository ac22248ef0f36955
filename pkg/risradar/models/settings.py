"""Настройки оценщика углов, обучения и прогонов"""
from typing import List, Optional, Tuple

from pydantic import Field, field_validator, model_validator

from risradar.constants import (
    BETA_GRID,
    DEFAULT_BETA,
    POOLED_MAX_PHASE_DRIFT_RAD,
    AngleMode,
    EigenSolver,
    LossSubcarriers,
    NotchMode,
    OutputHead,
    PipelineStage,
    SweepKind,
)
from risradar.models.scene import FrozenModel


class EstimatorSettings(FrozenModel):
    """Настройки модифицированного MUSIC"""
    mode: AngleMode = AngleMode.AVERAGED
    subcarrier_window: int = Field(5, ge=2, description="Число соседних поднесущих в ковариации (режим averaged)")
    reference_subcarrier: Optional[int] = Field(
        None, ge=0, description="Поднесущая для спектра в режиме pooled (по умолчанию средняя)"
    )
    pooled_max_drift_rad: float = Field(
        POOLED_MAX_PHASE_DRIFT_RAD, gt=0, description="Допустимый разброс фаз b_n вокруг опорной поднесущей (режим pooled), рад"
    )
    min_peak_prominence_db: float = Field(10.0, gt=0, description="Минимальная выраженность пика источника, дБ")
    solver: Optional[EigenSolver] = Field(None, description="Решатель; по умолчанию RISRADAR_EIGEN_SOLVER")


class TrainSettings(FrozenModel):
    """Гиперпараметры обучения MLP"""
    beta: float = Field(DEFAULT_BETA, ge=0, le=1)
    hidden_sizes: Tuple[int, int] = (64, 64)
    learning_rate: float = Field(1e-3, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    inner_steps: int = Field(50, ge=1)
    max_outer_iterations: int = Field(20, ge=1)
    patience: int = Field(3, ge=1)
    tolerance: float = Field(1e-4, ge=0, description="Минимальное относительное улучшение потерь")
    max_unresolved: int = Field(3, ge=1, description="Допустимое число подряд неразрешённых оценок углов")
    output_head: OutputHead = OutputHead.FULL
    notch_mode: NotchMode = NotchMode.TRUNCATE
    loss_subcarriers: LossSubcarriers = LossSubcarriers.ALL
    design_subcarrier: int = Field(0, ge=0, description="Поднесущая, на которой строится нуль свёрткой")

    @field_validator('hidden_sizes')
    @classmethod
    def validate_hidden(cls, v):
        """Скрытые слои положительной ширины"""
        if any(size <= 0 for size in v):
            raise ValueError(f"размеры скрытых слоёв должны быть положительными, получено: {v}")
        return v


class SweepSettings(FrozenModel):
    """Параметры экспериментальных прогонов"""
    kind: SweepKind = SweepKind.INR
    n_trials: int = Field(5, ge=1)
    betas: List[float] = Field(default_factory=lambda: list(BETA_GRID))
    inr_db: List[float] = Field(default_factory=lambda: [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0])
    stages: List[PipelineStage] = Field(
        default_factory=lambda: [PipelineStage.RANDOM, PipelineStage.TRAINED, PipelineStage.CONVOLVED]
    )
    separations_deg: List[float] = Field(default_factory=lambda: [10.0, 5.0, 2.0])
    resolve_tolerance_deg: float = Field(0.5, gt=0, description="Допуск, при котором пара углов считается разрешённой")
    include_aliased: bool = True
    detection_floor_db: float = 10.0

    @field_validator('betas')
    @classmethod
    def validate_betas(cls, v):
        """β в [0, 1]"""
        if not v or any(not 0.0 <= b <= 1.0 for b in v):
            raise ValueError(f"значения β должны лежать в [0, 1], получено: {v}")
        return v

    @field_validator('separations_deg')
    @classmethod
    def validate_separations(cls, v):
        """Разнесения положительны"""
        if not v or any(s <= 0 for s in v):
            raise ValueError(f"разнесения должны быть положительными, получено: {v}")
        return v

    @model_validator(mode='after')
    def validate_lists(self):
        """Списки прогонов не пустые"""
        if not self.inr_db:
            raise ValueError("inr_db не может быть пустым")
        if not self.stages:
            raise ValueError("stages не может быть пустым")
        return self
