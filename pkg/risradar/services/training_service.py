"""Замкнутый цикл: измерение -> оценка углов -> шаги по сети -> новая конфигурация RIS"""
import logging
import time
from typing import List, Optional

import numpy as np

from risradar.constants import LossSubcarriers, RngStream
from risradar.models.scene import SceneConfig
from risradar.models.settings import EstimatorSettings, TrainSettings
from risradar.models.signal import RisConfig
from risradar.models.training import IterationRecord, LossContext, MlpModel, TrainReport
from risradar.services.doa_service import estimate_angles
from risradar.services.mlp_service import init_mlp, trained_rows, zero_like
from risradar.services.risopt_service import evaluate_sinr, loss_gradient, loss_phase_gradient, model_ris
from risradar.services.scene_service import derive_constants
from risradar.services.waveform_service import make_symbol_book, synthesize_frame_pair
from risradar.utils.errors import PeaksMergedError, TrainingError
from risradar.utils.seeding import derive_rng

logger = logging.getLogger(__name__)


def initial_ris(scene: SceneConfig) -> RisConfig:
    """Случайные фазы для первого измерения (поток RIS_INIT)"""
    rng = derive_rng(scene.rng_seed, RngStream.RIS_INIT)
    return RisConfig.random(scene.n_ris_elements, scene.n_symbols, rng)


def _momentum_step(
    model: MlpModel,
    velocity: List[np.ndarray],
    grads: List[np.ndarray],
    settings: TrainSettings,
) -> MlpModel:
    params = model.parameters()
    for i, grad in enumerate(grads):
        velocity[i] = settings.momentum * velocity[i] - settings.learning_rate * grad
    return model.with_parameters([p + v for p, v in zip(params, velocity)])


def train(
    scene: SceneConfig,
    beta: Optional[float] = None,
    settings: Optional[TrainSettings] = None,
    estimator: Optional[EstimatorSettings] = None,
) -> TrainReport:
    """
    Обучает сеть, выдающую конфигурацию RIS, для одного сценария.

    Каждая внешняя итерация: синтез пары кадров с текущей конфигурацией,
    оценка углов, базисы шума, inner_steps шагов градиентного спуска с
    моментом, новая конфигурация из сети. Сохраняется лучшая по потерям
    конфигурация: прежняя лучшая переоценивается в контексте текущей
    итерации и сравнивается с новой. Останов, когда потери не улучшаются
    на tolerance в течение patience итераций или исчерпан лимит.

    Args:
        scene: Сценарий
        beta: Вес спектрального слагаемого (перекрывает settings.beta)
        settings: Гиперпараметры обучения
        estimator: Настройки оценщика углов

    Returns:
        TrainReport с лучшей конфигурацией в final_ris

    Raises:
        TrainingError: Углы не разрешены max_unresolved итераций подряд
            (частичный отчёт в partial_report)
    """
    settings = settings or TrainSettings()
    if beta is not None:
        settings = settings.evolve(beta=beta)
    estimator = estimator or EstimatorSettings()
    consts = derive_constants(scene)
    started = time.perf_counter()

    if settings.loss_subcarriers is LossSubcarriers.FIRST:
        subcarriers = (0,)
    else:
        subcarriers = tuple(range(scene.n_subcarriers))

    model = init_mlp(
        trained_rows(scene.n_ris_elements, settings.notch_mode),
        scene.n_effective_slots,
        settings.hidden_sizes,
        derive_rng(scene.rng_seed, RngStream.MLP_INIT),
        output_head=settings.output_head,
    )
    velocity = zero_like(model)

    first_ris = initial_ris(scene)
    ris = first_ris
    measure = first_ris
    true_t, true_i = scene.target.angle_deg, scene.interferer.angle_deg
    report = TrainReport(
        beta=settings.beta,
        initial_ris=ris,
        initial_sinr_db=evaluate_sinr(ris, true_t, true_i, scene.noise_power, consts),
    )
    logger.info(
        f"[Trainer] Старт: β={settings.beta}, начальный SINR {report.initial_sinr_db:.2f} дБ, "
        f"сеть {model.layer_sizes}"
    )

    previous = None  # (θ_t, θ_i, базисы)
    unresolved = 0
    stale = 0
    ris_rng = derive_rng(scene.rng_seed, RngStream.RIS_INIT, 1)

    for iteration in range(settings.max_outer_iterations):
        book = make_symbol_book(scene, frame=iteration)
        grid = synthesize_frame_pair(scene, measure, book, frame=iteration)
        try:
            estimate = estimate_angles(
                grid, measure, estimator, previous_interf=previous[1] if previous else None
            )
            previous = (estimate.theta_target, estimate.theta_interf, estimate.noise_bases)
            unresolved = 0
            resolved = True
        except PeaksMergedError as e:
            unresolved += 1
            resolved = False
            logger.warning(f"[Trainer] Итерация {iteration}: {e} (подряд {unresolved})")
            if unresolved >= settings.max_unresolved:
                report.stop_reason = "unresolved"
                report.wall_time_s = time.perf_counter() - started
                raise TrainingError(
                    f"Углы не разрешены {unresolved} итераций подряд", partial_report=report
                ) from e
            if previous is None:
                # без прошлой оценки учиться не на чем: новое случайное измерение
                measure = RisConfig.random(scene.n_ris_elements, scene.n_symbols, ris_rng)
                continue

        theta_t, theta_i, bases = previous
        context = LossContext(
            noise_bases=bases,
            theta_t_hat=theta_t,
            theta_i_hat=theta_i,
            sigma2=scene.noise_power,
            consts=consts,
            subcarriers=subcarriers,
            notch_mode=settings.notch_mode,
        )

        for _ in range(settings.inner_steps):
            breakdown, grads = loss_gradient(model, context, settings.beta)
            if breakdown.guarded:
                logger.warning(f"[Trainer] Итерация {iteration}: сработала защита знаменателя")
                break
            model = _momentum_step(model, velocity, grads, settings)

        ris, _, _ = model_ris(model, theta_t, theta_i, context)
        # после неразрешённого измерения следующее снимается начальной конфигурацией
        measure = ris if resolved else first_ris
        breakdown, _ = loss_phase_gradient(ris, context, settings.beta)
        # лучшая конфигурация сравнивается с кандидатом в контексте этой же итерации
        incumbent = None
        if report.final_ris is not None:
            incumbent = loss_phase_gradient(report.final_ris, context, settings.beta)[0].total
        improved = incumbent is None or breakdown.total < incumbent
        sinr_db = evaluate_sinr(ris, true_t, true_i, scene.noise_power, consts)
        record = IterationRecord(
            iteration=iteration,
            loss=breakdown,
            theta_t_hat=theta_t,
            theta_i_hat=theta_i,
            sinr_db=sinr_db,
            angles_resolved=resolved,
            incumbent_loss=incumbent,
        )
        report.records.append(record)
        logger.debug(
            f"[Trainer] Итерация {iteration}: потери {breakdown.total:.5g} "
            f"(спектр {breakdown.spectrum_term:.4g}, SINR-член {breakdown.sinr_term:.4g}), "
            f"лучшая до неё {incumbent}, SINR {sinr_db:.2f} дБ"
        )

        if improved:
            if incumbent is None or incumbent - breakdown.total > settings.tolerance * abs(incumbent):
                stale = 0
            else:
                stale += 1
            report.best_iteration = iteration
            report.final_ris = ris
        else:
            stale += 1

        if stale >= settings.patience:
            report.converged = True
            report.stop_reason = "converged"
            break
    else:
        report.stop_reason = "iteration_cap"

    if report.final_ris is None:
        report.stop_reason = "no_records"
        report.wall_time_s = time.perf_counter() - started
        raise TrainingError("Обучение не дало ни одной конфигурации", partial_report=report)

    report.wall_time_s = time.perf_counter() - started
    logger.info(
        f"[Trainer] Готово: β={settings.beta}, {len(report.records)} итераций, "
        f"лучшая {report.best_iteration}, SINR {report.final_sinr_db:.2f} дБ ({report.stop_reason})"
    )
    return report
