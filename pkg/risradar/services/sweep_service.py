"""Экспериментальные прогоны: β, отношение помеха/цель и разнесение углов"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from risradar.constants import PipelineStage, RngStream, SweepKind
from risradar.models.results import SweepResult
from risradar.models.scene import SceneConfig
from risradar.models.settings import EstimatorSettings, SweepSettings, TrainSettings
from risradar.services.doa_service import estimate_angles
from risradar.services.pipeline_service import EVALUATION_FRAME, convolve_trained, run_stages
from risradar.services.risopt_service import (
    beam_pattern,
    evaluate_sinr,
    nearest_offset,
    pattern_extrema,
    pattern_gain_db,
)
from risradar.services.scene_service import derive_constants, is_aliased
from risradar.services.training_service import train
from risradar.services.waveform_service import make_symbol_book, synthesize_frame_pair
from risradar.utils.batching import batch_process
from risradar.utils.errors import InvalidArgumentError, PeaksMergedError, RisRadarError
from risradar.utils.seeding import derive_rng

logger = logging.getLogger(__name__)


def trial_scene(scene: SceneConfig, trial: int) -> SceneConfig:
    """Сценарий испытания с собственным зерном (поток TRIALS)"""
    seed = int(derive_rng(scene.rng_seed, RngStream.TRIALS, trial).integers(0, 2 ** 31 - 1))
    return scene.evolve(rng_seed=seed)


def with_inr(scene: SceneConfig, ratio: float) -> SceneConfig:
    """
    Задаёт отношение мощностей помеха/цель |η_i|² / |η_t|².

    Фаза усиления помехи сохраняется.
    """
    if ratio <= 0:
        raise InvalidArgumentError(f"Отношение помеха/цель должно быть положительным, получено: {ratio}")
    gain = scene.interferer.gain
    phase = gain / abs(gain) if abs(gain) > 0 else 1.0
    magnitude = abs(scene.target.gain) * np.sqrt(ratio)
    return scene.evolve(interferer=scene.interferer.evolve(gain=complex(magnitude * phase)))


def with_separation(scene: SceneConfig, separation_deg: float) -> SceneConfig:
    """Цель на separation_deg ниже угла помехи"""
    angle = scene.interferer.angle_deg - separation_deg
    return scene.evolve(target=scene.target.evolve(angle_deg=angle))


def _stats(values: Sequence[float]) -> Tuple[float, float]:
    finite = [v for v in values if v is not None and np.isfinite(v)]
    if not finite:
        return float("nan"), float("nan")
    return float(np.mean(finite)), float(np.std(finite))


def _log_failure(item: Any, error: Exception) -> None:
    logger.warning(f"[Sweep] Испытание {item[:3] if isinstance(item, tuple) else item} завершилось ошибкой: {error}")


# Функции испытаний верхнего уровня: их исполняют процессы пула


def inr_trial(job: Tuple) -> List[Dict[str, Any]]:
    """Одно испытание INR-прогона для всех стадий"""
    scene, inr_db, trial, stages, settings, estimator, floor_db, include_aliased = job
    scene = trial_scene(with_inr(scene, 10.0 ** (inr_db / 10.0)), trial)
    aliased = is_aliased(scene.target, derive_constants(scene))
    base = {"inr_db": inr_db, "trial": trial, "seed": scene.rng_seed}
    try:
        outcomes = run_stages(scene, stages, settings, estimator, floor_db)
    except RisRadarError as e:
        logger.warning(f"[Sweep] INR {inr_db} дБ, испытание {trial}: {e}")
        return [
            {**base, "stage": PipelineStage(s).value, "range_error_m": None, "detected": False,
             "excluded": False, "failed": True, "sinr_db": None, "range_hat_m": None}
            for s in stages
        ]
    return [
        {
            **base,
            "stage": o.stage,
            "range_error_m": o.range_error_m,
            "detected": o.estimate.detected,
            "excluded": aliased and not include_aliased,
            "failed": False,
            "sinr_db": o.sinr_db,
            "range_hat_m": o.estimate.range_hat_m,
        }
        for o in outcomes
    ]


def beta_trial(job: Tuple) -> Dict[str, Any]:
    """Одно испытание β-прогона"""
    scene, beta, trial, settings, estimator = job
    scene = trial_scene(scene, trial)
    consts = derive_constants(scene)
    row: Dict[str, Any] = {"beta": beta, "trial": trial, "seed": scene.rng_seed, "failed": False}
    try:
        report = train(scene, beta=beta, settings=settings, estimator=estimator)
    except RisRadarError as e:
        logger.warning(f"[Sweep] β={beta}, испытание {trial}: {e}")
        row.update(failed=True)
        return row

    settings = (settings or TrainSettings()).evolve(beta=beta)
    ris = report.final_ris
    convolved = convolve_trained(scene, report, settings)
    theta_t, theta_i = scene.target.angle_deg, scene.interferer.angle_deg
    n = settings.design_subcarrier

    book = make_symbol_book(scene, frame=EVALUATION_FRAME)
    grid = synthesize_frame_pair(scene, ris, book, frame=EVALUATION_FRAME)
    try:
        estimate = estimate_angles(grid, ris, estimator)
        peak_ratio_db = float(np.mean([r.peak_ratio_db for r in estimate.per_subcarrier]))
    except PeaksMergedError:
        peak_ratio_db = None

    row.update(
        sinr_db=report.final_sinr_db,
        sinr_convolved_db=evaluate_sinr(convolved, theta_t, theta_i, scene.noise_power, consts),
        initial_sinr_db=report.initial_sinr_db,
        peak_ratio_db=peak_ratio_db,
        gain_advantage_db=pattern_gain_db(ris, theta_t, consts, n) - pattern_gain_db(ris, theta_i, consts, n),
        notch_depth_db=pattern_gain_db(ris, theta_i, consts, n) - pattern_gain_db(convolved, theta_i, consts, n),
    )
    return row


def spacing_trial(job: Tuple) -> Dict[str, Any]:
    """Одно испытание прогона по разнесению углов"""
    scene, separation, trial, settings, estimator, tolerance = job
    scene = trial_scene(with_separation(scene, separation), trial)
    row: Dict[str, Any] = {"separation_deg": separation, "trial": trial, "seed": scene.rng_seed, "failed": False}
    try:
        report = train(scene, settings=settings, estimator=estimator)
    except RisRadarError as e:
        logger.warning(f"[Sweep] Разнесение {separation}°, испытание {trial}: {e}")
        row.update(failed=True, resolved=False)
        return row
    best = report.best_record
    error_t = abs(best.theta_t_hat - scene.target.angle_deg)
    error_i = abs(best.theta_i_hat - scene.interferer.angle_deg)
    n = (settings or TrainSettings()).design_subcarrier
    pattern = beam_pattern(report.final_ris, scene.angle_grid_deg, derive_constants(scene), n)
    maxima, minima = pattern_extrema(pattern)
    row.update(
        target_error_deg=error_t,
        interf_error_deg=error_i,
        resolved=bool(error_t <= tolerance and error_i <= tolerance),
        sinr_db=report.final_sinr_db,
        # ближайший локальный максимум диаграммы к цели и минимум к помехе
        pattern_peak_offset_deg=nearest_offset(maxima, scene.target.angle_deg),
        pattern_notch_offset_deg=nearest_offset(minima, scene.interferer.angle_deg),
    )
    return row


def error_threshold_db(rows: Sequence[Dict[str, Any]], stage: str, cell_m: float) -> Optional[float]:
    """
    Наибольшее INR, до которого включительно стадия оценивает дальность
    точнее одной ячейки на всех уровнях и без пропусков обнаружения.

    Returns:
        INR, дБ; None, если условие нарушено уже на первом уровне
    """
    threshold = None
    for row in sorted((r for r in rows if r["stage"] == stage), key=lambda r: r["inr_db"]):
        error = row["mean_error_m"]
        if not np.isfinite(error) or error >= cell_m or row["detection_rate"] < 1.0:
            break
        threshold = row["inr_db"]
    return threshold


def increasing_beyond(rows: Sequence[Dict[str, Any]], stage: str, threshold_db: Optional[float]) -> bool:
    """Средняя ошибка строго растёт по уровням выше порога (необнаружения не учитываются)"""
    beyond = sorted(
        (r for r in rows if r["stage"] == stage and (threshold_db is None or r["inr_db"] > threshold_db)),
        key=lambda r: r["inr_db"],
    )
    errors = [r["mean_error_m"] for r in beyond if np.isfinite(r["mean_error_m"])]
    return all(b > a for a, b in zip(errors, errors[1:]))


def error_sweep(
    scene: SceneConfig,
    inr_ratios: Sequence[float],
    stages: Sequence[PipelineStage],
    n_trials: int = 5,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    detection_floor_db: float = 10.0,
    include_aliased: bool = True,
    workers: int = 1,
) -> SweepResult:
    """
    Ошибка оценки дальности в зависимости от отношения помеха/цель.

    Для каждого отношения выполняется n_trials независимых испытаний;
    необнаружения считаются, а не прерывают прогон.

    Args:
        scene: Шаблон сценария
        inr_ratios: Отношения |η_i|²/|η_t|² (положительные, линейные)
        stages: Стадии конвейера
        n_trials: Число испытаний на отношение
        settings: Гиперпараметры обучения
        estimator: Настройки оценщика
        detection_floor_db: Порог обнаружения
        include_aliased: Учитывать ли цели за пределами однозначной дальности
        workers: Размер пула процессов

    Returns:
        SweepResult: строки (inr_db, stage, mean_error_m, std_error_m, detection_rate, ...)
    """
    if not inr_ratios or any(r <= 0 for r in inr_ratios):
        raise InvalidArgumentError(f"Отношения должны быть положительными, получено: {list(inr_ratios)}")
    stages = [PipelineStage(s) for s in stages]
    inr_db = [round(float(10.0 * np.log10(r)), 9) for r in inr_ratios]
    jobs = [
        (scene, level, trial, stages, settings, estimator, detection_floor_db, include_aliased)
        for level in inr_db for trial in range(n_trials)
    ]
    logger.info(f"[Sweep] INR: {len(inr_db)} уровней x {n_trials} испытаний, процессов {workers}")
    results = batch_process(jobs, inr_trial, max_workers=workers, error_handler=_log_failure)

    trial_rows = [row for rows in results if rows for row in rows]
    rows = []
    for level in inr_db:
        for stage in stages:
            group = [r for r in trial_rows if r["inr_db"] == level and r["stage"] == stage.value]
            counted = [r for r in group if not r["excluded"] and not r["failed"]]
            mean, std = _stats([r["range_error_m"] for r in counted if r["detected"]])
            rows.append({
                "inr_db": level,
                "stage": stage.value,
                "mean_error_m": mean,
                "std_error_m": std,
                "detection_rate": (sum(r["detected"] for r in counted) / len(counted)) if counted else float("nan"),
                "n_trials": len(counted),
                "n_failed": sum(r["failed"] for r in group),
                "n_excluded": sum(r["excluded"] for r in group),
            })
    cell_m = derive_constants(scene).range_resolution_m
    thresholds = {stage.value: error_threshold_db(rows, stage.value, cell_m) for stage in stages}
    summary = {
        "range_cell_m": cell_m,
        "threshold_inr_db": thresholds,
        "error_increasing_beyond_threshold": {
            stage: increasing_beyond(rows, stage, threshold) for stage, threshold in thresholds.items()
        },
    }
    logger.info(f"[Sweep] Пороги INR по стадиям: {thresholds}")
    return SweepResult(kind=SweepKind.INR.value, rows=rows, trial_rows=trial_rows, summary=summary)


def beta_sweep(
    scene: SceneConfig,
    betas: Sequence[float],
    n_trials: int = 5,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    workers: int = 1,
) -> SweepResult:
    """
    SINR, отношение пиков спектра и выигрыш диаграммы в зависимости от β.

    summary содержит ранговую корреляцию Спирмена отношения пиков с β.
    """
    jobs = [(scene, float(beta), trial, settings, estimator) for beta in betas for trial in range(n_trials)]
    logger.info(f"[Sweep] β: {len(betas)} значений x {n_trials} испытаний, процессов {workers}")
    results = batch_process(jobs, beta_trial, max_workers=workers, error_handler=_log_failure)
    trial_rows = [r for r in results if r]

    rows = []
    for beta in betas:
        group = [r for r in trial_rows if r["beta"] == float(beta) and not r["failed"]]
        row: Dict[str, Any] = {"beta": float(beta), "n_trials": len(group),
                               "n_failed": sum(1 for r in trial_rows if r["beta"] == float(beta) and r["failed"])}
        for key in ("sinr_db", "sinr_convolved_db", "peak_ratio_db", "gain_advantage_db", "notch_depth_db"):
            mean, std = _stats([r.get(key) for r in group])
            row[f"{key}_mean"] = mean
            row[f"{key}_std"] = std
        rows.append(row)

    pairs = [(r["beta"], r["peak_ratio_db"]) for r in trial_rows
             if not r["failed"] and r.get("peak_ratio_db") is not None]
    summary: Dict[str, Any] = {"peak_ratio_spearman": None}
    if len({b for b, _ in pairs}) > 1:
        rho = spearmanr([b for b, _ in pairs], [p for _, p in pairs]).correlation
        summary["peak_ratio_spearman"] = float(rho) if np.isfinite(rho) else None
        logger.info(f"[Sweep] Корреляция Спирмена отношения пиков с β: {summary['peak_ratio_spearman']}")
    return SweepResult(kind=SweepKind.BETA.value, rows=rows, trial_rows=trial_rows, summary=summary)


def spacing_sweep(
    scene: SceneConfig,
    separations_deg: Sequence[float],
    n_trials: int = 5,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    tolerance_deg: float = 0.5,
    workers: int = 1,
) -> SweepResult:
    """Доля испытаний, в которых обе оценки угла в пределах tolerance_deg"""
    for separation in separations_deg:
        if scene.interferer.angle_deg - separation <= -90.0:
            raise InvalidArgumentError(f"Разнесение {separation}° выводит цель за -90°")
    jobs = [
        (scene, float(s), trial, settings, estimator, tolerance_deg)
        for s in separations_deg for trial in range(n_trials)
    ]
    logger.info(f"[Sweep] Разнесение: {list(separations_deg)} x {n_trials} испытаний, процессов {workers}")
    results = batch_process(jobs, spacing_trial, max_workers=workers, error_handler=_log_failure)
    trial_rows = [r for r in results if r]

    rows = []
    for separation in separations_deg:
        group = [r for r in trial_rows if r["separation_deg"] == float(separation)]
        ok = [r for r in group if not r["failed"]]
        mean_t, _ = _stats([r["target_error_deg"] for r in ok])
        mean_i, _ = _stats([r["interf_error_deg"] for r in ok])
        mean_peak, _ = _stats([r["pattern_peak_offset_deg"] for r in ok])
        mean_notch, _ = _stats([r["pattern_notch_offset_deg"] for r in ok])
        rows.append({
            "separation_deg": float(separation),
            "resolved_fraction": (sum(r["resolved"] for r in group) / len(group)) if group else float("nan"),
            "mean_target_error_deg": mean_t,
            "mean_interf_error_deg": mean_i,
            "mean_pattern_peak_offset_deg": mean_peak,
            "mean_pattern_notch_offset_deg": mean_notch,
            "n_trials": len(group),
            "n_failed": len(group) - len(ok),
        })
    return SweepResult(kind=SweepKind.SPACING.value, rows=rows, trial_rows=trial_rows)


def run_sweep(
    scene: SceneConfig,
    sweep: SweepSettings,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
    workers: int = 1,
) -> SweepResult:
    """Запускает прогон по типу из настроек"""
    if sweep.kind is SweepKind.INR:
        ratios = [10.0 ** (level / 10.0) for level in sweep.inr_db]
        return error_sweep(
            scene, ratios, sweep.stages, sweep.n_trials, settings, estimator,
            sweep.detection_floor_db, sweep.include_aliased, workers,
        )
    if sweep.kind is SweepKind.BETA:
        return beta_sweep(scene, sweep.betas, sweep.n_trials, settings, estimator, workers)
    return spacing_sweep(
        scene, sweep.separations_deg, sweep.n_trials, settings, estimator, sweep.resolve_tolerance_deg, workers
    )
