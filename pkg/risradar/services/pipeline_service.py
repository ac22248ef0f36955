"""Сквозной конвейер: конфигурация RIS -> кадр дальнометрии -> карта -> ошибка дальности"""
import logging
from typing import Dict, List, Optional, Sequence

from risradar.constants import PipelineStage
from risradar.models.results import RangeDopplerMap, StageOutcome
from risradar.models.scene import SceneConfig
from risradar.models.settings import EstimatorSettings, TrainSettings
from risradar.models.signal import RisConfig
from risradar.models.training import TrainReport
from risradar.services.risopt_service import convolve_notch, evaluate_sinr
from risradar.services.rvmap_service import build_map, extract_target, range_error
from risradar.services.scene_service import derive_constants
from risradar.services.training_service import initial_ris, train
from risradar.services.waveform_service import make_symbol_book, synthesize_frame_pair

logger = logging.getLogger(__name__)

# Номер кадра дальнометрии, не пересекается с кадрами обучения
RANGING_FRAME = 1 << 16
# Кадр оценки углов после обучения
EVALUATION_FRAME = RANGING_FRAME + 1


def ranging_map(scene: SceneConfig, ris: RisConfig) -> RangeDopplerMap:
    """
    Кадр дальнометрии с заданной конфигурацией и его карта дальность-скорость.

    В кадре дальнометрии символы меняются от слота к слоту, поэтому помеха
    после деления на символы жертвы расползается по карте.
    """
    book = make_symbol_book(scene, frame=RANGING_FRAME, static_over_slots=False)
    grid = synthesize_frame_pair(scene, ris, book, frame=RANGING_FRAME)
    return build_map(grid, ris)


def ranging_outcome(
    scene: SceneConfig,
    ris: RisConfig,
    stage: PipelineStage,
    detection_floor_db: float = 10.0,
) -> StageOutcome:
    """Снимает кадр дальнометрии с заданной конфигурацией и оценивает дальность цели"""
    consts = derive_constants(scene)
    estimate = extract_target(ranging_map(scene, ris), detection_floor_db)
    error = range_error(estimate, scene.target.range_m, consts.unambiguous_range_m) if estimate.detected else None
    return StageOutcome(
        stage=PipelineStage(stage).value,
        range_error_m=error,
        estimate=estimate,
        sinr_db=evaluate_sinr(ris, scene.target.angle_deg, scene.interferer.angle_deg, scene.noise_power, consts),
        true_range_m=scene.target.range_m,
    )


def stage_configurations(
    scene: SceneConfig,
    stages: Sequence[PipelineStage],
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
) -> Dict[PipelineStage, RisConfig]:
    """
    Конфигурации RIS для запрошенных стадий; обучение выполняется один раз.

    Returns:
        {стадия: конфигурация}
    """
    settings = settings or TrainSettings()
    stages = [PipelineStage(s) for s in stages]
    configs: Dict[PipelineStage, RisConfig] = {}
    if PipelineStage.RANDOM in stages:
        configs[PipelineStage.RANDOM] = initial_ris(scene)
    if PipelineStage.TRAINED in stages or PipelineStage.CONVOLVED in stages:
        report = train(scene, settings=settings, estimator=estimator)
        if PipelineStage.TRAINED in stages:
            configs[PipelineStage.TRAINED] = report.final_ris
        if PipelineStage.CONVOLVED in stages:
            configs[PipelineStage.CONVOLVED] = convolve_trained(scene, report, settings)
    return configs


def convolve_trained(scene: SceneConfig, report: TrainReport, settings: TrainSettings) -> RisConfig:
    """Свёрточный нуль на оценке угла помехи лучшей итерации"""
    best = report.best_record
    theta_i = best.theta_i_hat if best is not None else scene.interferer.angle_deg
    return convolve_notch(
        report.final_ris, theta_i, scene.geometry, derive_constants(scene), settings.design_subcarrier
    )


def run_stage(
    scene: SceneConfig,
    stage: PipelineStage,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    detection_floor_db: float = 10.0,
) -> StageOutcome:
    """
    Одна стадия конвейера целиком.

    Args:
        scene: Сценарий
        stage: random, trained или convolved
        settings: Гиперпараметры обучения
        estimator: Настройки оценщика углов
        detection_floor_db: Порог обнаружения

    Returns:
        StageOutcome
    """
    configs = stage_configurations(scene, [stage], settings, estimator)
    return ranging_outcome(scene, configs[PipelineStage(stage)], stage, detection_floor_db)


def run_stages(
    scene: SceneConfig,
    stages: Sequence[PipelineStage],
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    detection_floor_db: float = 10.0,
) -> List[StageOutcome]:
    """Все запрошенные стадии с одним обучением"""
    configs = stage_configurations(scene, stages, settings, estimator)
    outcomes = [
        ranging_outcome(scene, configs[PipelineStage(stage)], stage, detection_floor_db)
        for stage in stages
    ]
    for outcome in outcomes:
        logger.debug(
            f"[Pipeline] {outcome.stage}: оценка {outcome.estimate.range_hat_m:.3f} м, "
            f"ошибка {outcome.range_error_m}, SINR {outcome.sinr_db:.2f} дБ"
        )
    return outcomes
