"""Обработчики подкоманд CLI"""
import logging
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from risradar.config import Config
from risradar.constants import PipelineStage, SweepKind
from risradar.models.experiment import ExperimentConfig, load_experiment_config
from risradar.models.manifest import RunManifest
from risradar.models.scene import SceneConfig
from risradar.models.settings import EstimatorSettings
from risradar.models.training import TrainReport
from risradar.services.artifact_service import (
    ArtifactStore,
    checksum_inputs,
    read_grid,
    read_manifest,
    read_ris,
    sha256_bytes,
)
from risradar.services.doa_service import estimate_angles, spectrum_rows, window_spectrum
from risradar.services.pipeline_service import (
    EVALUATION_FRAME,
    convolve_trained,
    ranging_map,
    stage_configurations,
)
from risradar.services.risopt_service import beam_pattern, evaluate_sinr, pattern_gain_db
from risradar.services.rvmap_service import extract_target, map_rows, range_error, true_folded_range
from risradar.services.scene_service import alias_warnings, derive_constants
from risradar.services.sweep_service import run_sweep
from risradar.services.training_service import train
from risradar.services.waveform_service import make_symbol_book, synthesize_frame_pair
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, TrainingError, exit_code_for

logger = logging.getLogger(__name__)


def _echo(line: str = "") -> None:
    print(line, flush=True)


def _load(config_path: str, seed: Optional[int]) -> tuple:
    """Конфигурация с учётом --seed и её исходный текст"""
    config, text = load_experiment_config(config_path)
    if seed is not None:
        if seed < 0:
            raise InvalidArgumentError(f"--seed должен быть неотрицательным, получено: {seed}")
        config = config.evolve(scene=config.scene.evolve(rng_seed=seed))
    return config, text


def _new_manifest(command: str, args: Dict[str, Any], config_text: Optional[str], seeds: List[int]) -> RunManifest:
    return RunManifest(
        command=command,
        args=args,
        config_text=config_text,
        config_sha256=sha256_bytes(config_text.encode('utf-8')) if config_text is not None else None,
        seeds=seeds,
    )


def _constants_summary(scene: SceneConfig) -> Dict[str, Any]:
    consts = derive_constants(scene)
    return {
        "delta_f_hz": consts.delta_f_hz,
        "carrier_wavelength_m": consts.carrier_wavelength_m,
        "symbol_period_s": consts.symbol_period_s,
        "unambiguous_range_m": consts.unambiguous_range_m,
        "range_resolution_m": consts.range_resolution_m,
        "velocity_resolution_mps": consts.velocity_resolution_mps,
        "n_effective_slots": scene.n_effective_slots,
        "alias_warnings": alias_warnings(scene, consts),
    }


def cmd_simulate(
    config: str,
    out: str,
    seed: Optional[int] = None,
    stage: str = PipelineStage.RANDOM.value,
) -> RunManifest:
    """
    Синтезирует сетку наблюдений для конфигурации RIS выбранной стадии.

    Пишет grid.bin, grid.csv, конфигурацию RIS, производные величины и
    печатает их (включая предупреждения о неоднозначной дальности).
    Кадр дальнометрии с той же конфигурацией даёт range_doppler.csv и
    target_estimate.json.

    Args:
        config: Путь к файлу эксперимента
        out: Каталог результатов
        seed: Переопределение зерна сцены
        stage: Стадия, конфигурация которой используется для синтеза
    """
    experiment, text = _load(config, seed)
    scene = experiment.scene
    stage = PipelineStage(stage)
    manifest = _new_manifest("simulate", {"seed": seed, "stage": stage.value}, text, [scene.rng_seed])

    summary = _constants_summary(scene)
    _echo(f"Δf = {summary['delta_f_hz']:.6g} Гц, T = {summary['symbol_period_s']:.6g} с")
    _echo(f"Однозначная дальность {summary['unambiguous_range_m']:.4f} м, "
          f"разрешение {summary['range_resolution_m']:.4f} м")
    _echo(f"Разрешение по скорости {summary['velocity_resolution_mps']:.4f} м/с")
    for warning in summary["alias_warnings"]:
        _echo(f"ВНИМАНИЕ: {warning}")

    ris = stage_configurations(scene, [stage], experiment.training, experiment.estimator)[stage]
    book = make_symbol_book(scene, frame=0)
    grid = synthesize_frame_pair(scene, ris, book, frame=0)

    store = ArtifactStore(out)
    store.write_grid(grid)
    ris_name = "ris_initial.csv" if stage is PipelineStage.RANDOM else f"ris_{stage.value}.csv"
    store.write_ris(ris_name, ris)
    store.write_json("constants.json", summary)

    rv_map = ranging_map(scene, ris)
    store.write_csv("range_doppler.csv", map_rows(rv_map),
                    ["range_bin", "doppler_bin", "range_m", "velocity_mps", "power_db"])
    estimate = extract_target(rv_map)
    folded = true_folded_range(rv_map)
    store.write_json("target_estimate.json", {
        **estimate.to_dict(),
        "true_folded_range_m": folded,
        "range_error_m": range_error(estimate, folded, summary["unambiguous_range_m"]) if estimate.detected else None,
    })
    _echo(f"Цель на карте: {estimate.range_hat_m:.4f} м, {estimate.velocity_hat_mps:.4f} м/с "
          f"(истинная свёрнутая дальность {folded:.4f} м)")
    store.write_manifest(manifest.finish())
    _echo(f"Сетка {grid.shape[0]} x {grid.shape[1]} записана в {store.path('grid.bin')}")
    return manifest


def cmd_estimate(grid: str, ris: str, out: str, config: Optional[str] = None) -> RunManifest:
    """
    Оценивает углы цели и помехи по сохранённой сетке и конфигурации RIS.

    Настройки оценщика берутся из config, если он задан. Пишет
    music_result.json (оценки по окнам и усреднённые) и spectrum.csv.
    """
    text = None
    estimator = EstimatorSettings()
    if config is not None:
        experiment, text = _load(config, None)
        estimator = experiment.estimator

    symbol_grid = read_grid(grid)
    ris_config = read_ris(ris)
    if ris_config.phases.shape != (symbol_grid.scene.n_ris_elements, symbol_grid.shape[1]):
        raise DataMismatchError(
            f"Конфигурация RIS {ris_config.phases.shape} не согласована с сеткой "
            f"(L={symbol_grid.scene.n_ris_elements}, M={symbol_grid.shape[1]})"
        )

    manifest = _new_manifest("estimate", {"grid": grid, "ris": ris}, text, [symbol_grid.seed])
    manifest.inputs = checksum_inputs([grid, ris])

    estimate = estimate_angles(symbol_grid, ris_config, estimator)
    scene = symbol_grid.scene
    result = {
        **estimate.to_dict(),
        "true_target_deg": scene.target.angle_deg,
        "true_interf_deg": scene.interferer.angle_deg,
        "target_error_deg": abs(estimate.theta_target - scene.target.angle_deg),
        "interf_error_deg": abs(estimate.theta_interf - scene.interferer.angle_deg),
    }

    store = ArtifactStore(out)
    store.write_json("music_result.json", result)
    store.write_csv("spectrum.csv", spectrum_rows(estimate.per_subcarrier), ["angle_deg", "power_db", "subcarrier_index"])
    store.write_manifest(manifest.finish())
    _echo(f"Цель {estimate.theta_target:.4f}° (ошибка {result['target_error_deg']:.4f}°), "
          f"помеха {estimate.theta_interf:.4f}° (ошибка {result['interf_error_deg']:.4f}°)")
    return manifest


def _beta_dir(beta: float) -> str:
    return f"beta_{beta:g}"


def _write_report(store: ArtifactStore, prefix: str, report: TrainReport, extra: Optional[dict] = None) -> None:
    store.write_json(f"{prefix}/train_report.json", {**report.to_dict(), **(extra or {})})
    trace = [r.to_dict() for r in report.records]
    columns = list(trace[0].keys()) if trace else ["iteration"]
    store.write_csv(f"{prefix}/train_trace.csv", trace, columns)


def _pattern_rows(pattern: Sequence[tuple]) -> List[dict]:
    return [{"angle_deg": round(a, 6), "gain_db": g} for a, g in pattern]


def _train_one(store: ArtifactStore, experiment: ExperimentConfig, beta: float) -> Dict[str, Any]:
    """Обучение для одного β и три набора данных: спектр, диаграмма до и после свёртки"""
    scene = experiment.scene
    settings = experiment.training.evolve(beta=beta)
    prefix = _beta_dir(beta)
    try:
        report = train(scene, settings=settings, estimator=experiment.estimator)
    except TrainingError as e:
        if e.partial_report is not None:
            _write_report(store, prefix, e.partial_report)
        raise

    consts = derive_constants(scene)
    n = settings.design_subcarrier
    theta_t, theta_i = scene.target.angle_deg, scene.interferer.angle_deg
    convolved = convolve_trained(scene, report, settings)

    book = make_symbol_book(scene, frame=EVALUATION_FRAME)
    grid = synthesize_frame_pair(scene, report.final_ris, book, frame=EVALUATION_FRAME)

    summary = {
        "sinr_convolved_db": evaluate_sinr(convolved, theta_t, theta_i, scene.noise_power, consts),
        "gain_advantage_db": pattern_gain_db(report.final_ris, theta_t, consts, n)
        - pattern_gain_db(report.final_ris, theta_i, consts, n),
        "notch_depth_db": pattern_gain_db(report.final_ris, theta_i, consts, n)
        - pattern_gain_db(convolved, theta_i, consts, n),
    }
    _write_report(store, prefix, report, summary)
    store.write_ris(f"{prefix}/ris_final.csv", report.final_ris)
    store.write_ris(f"{prefix}/ris_convolved.csv", convolved)
    store.write_csv(f"{prefix}/spectrum.csv", window_spectrum(grid, report.final_ris, 0, experiment.estimator))
    store.write_csv(f"{prefix}/beam_pattern.csv",
                    _pattern_rows(beam_pattern(report.final_ris, scene.angle_grid_deg, consts, n)))
    store.write_csv(f"{prefix}/beam_pattern_convolved.csv",
                    _pattern_rows(beam_pattern(convolved, scene.angle_grid_deg, consts, n)))
    return {"beta": beta, "sinr_db": report.final_sinr_db, **summary}


def cmd_train(
    config: str,
    out: str,
    beta: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> RunManifest:
    """
    Обучает конфигурацию RIS для каждого β и экспортирует данные для графиков.

    Для каждого β создаётся каталог beta_<β>/. При прерванном обучении
    частичный отчёт сохраняется, манифест пишется с кодом ошибки.

    Raises:
        TrainingError: Обучение для одного из β прервано
    """
    experiment, text = _load(config, seed)
    betas = [float(b) for b in beta] if beta else [experiment.training.beta]
    for value in betas:
        if not 0.0 <= value <= 1.0:
            raise InvalidArgumentError(f"β должно лежать в [0, 1], получено: {value}")

    manifest = _new_manifest("train", {"beta": betas, "seed": seed}, text, [experiment.scene.rng_seed])
    store = ArtifactStore(out)
    for value in betas:
        try:
            row = _train_one(store, experiment, value)
        except TrainingError as e:
            logger.error(f"[CLI] Обучение для β={value} прервано: {e}")
            store.write_manifest(manifest.finish(exit_code_for(e)))
            raise
        _echo(f"β={value:g}: SINR {row['sinr_db']:.2f} дБ, после свёртки {row['sinr_convolved_db']:.2f} дБ, "
              f"глубина нуля {row['notch_depth_db']:.2f} дБ")
    store.write_manifest(manifest.finish())
    return manifest


def _columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    """Объединение ключей строк в порядке первого появления"""
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def cmd_sweep(
    config: str,
    out: str,
    sweep: Optional[str] = None,
    seed: Optional[int] = None,
    stage: Optional[str] = None,
    workers: Optional[int] = None,
) -> RunManifest:
    """
    Экспериментальный прогон (beta, inr или spacing) по независимым испытаниям.

    Ошибки отдельных испытаний учитываются в n_failed и не прерывают прогон.
    Число процессов не влияет на результаты.
    """
    experiment, text = _load(config, seed)
    settings = experiment.sweep
    if sweep is not None:
        settings = settings.evolve(kind=SweepKind(sweep))
    if stage is not None:
        settings = settings.evolve(stages=[PipelineStage(stage)])
    n_workers = workers if workers is not None else Config.workers()
    if n_workers <= 0:
        raise InvalidArgumentError(f"--workers должен быть положительным, получено: {n_workers}")

    manifest = _new_manifest(
        "sweep", {"sweep": settings.kind.value, "seed": seed, "stage": stage}, text, [experiment.scene.rng_seed]
    )
    result = run_sweep(experiment.scene, settings, experiment.training, experiment.estimator, n_workers)

    store = ArtifactStore(out)
    name = f"sweep_{result.kind}"
    store.write_csv(f"{name}.csv", result.rows, _columns(result.rows))
    store.write_csv(f"{name}_trials.csv", result.trial_rows, _columns(result.trial_rows) or ["trial"])
    if result.summary:
        store.write_json(f"{name}_summary.json", result.summary)
    store.write_manifest(manifest.finish())

    failed = sum(1 for r in result.trial_rows if r.get("failed"))
    _echo(f"Прогон {result.kind}: {len(result.rows)} строк, {len(result.trial_rows)} испытаний, ошибок {failed}")
    return manifest


COMMANDS: Dict[str, Callable[..., RunManifest]] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "train": cmd_train,
    "sweep": cmd_sweep,
}


def cmd_rerun(manifest: str, out: str) -> RunManifest:
    """
    Повторяет прогон по манифесту в новый каталог и сверяет контрольные суммы.

    Raises:
        DataMismatchError: Входные файлы изменились или выходы не совпали
    """
    original = read_manifest(manifest)
    handler = COMMANDS.get(original.command)
    if handler is None:
        raise DataMismatchError(f"Неизвестная команда в манифесте: {original.command}")

    current_inputs = checksum_inputs(original.inputs) if original.inputs else {}
    if current_inputs != original.inputs:
        raise DataMismatchError("Входные файлы изменились после исходного прогона")

    logger.info(f"[CLI] Повтор '{original.command}' из {manifest} в {out}")
    with tempfile.TemporaryDirectory() as tmp:
        kwargs = dict(original.args)
        if original.config_text is not None:
            config_path = Path(tmp) / "config.json"
            config_path.write_text(original.config_text, encoding='utf-8')
            kwargs["config"] = str(config_path)
        try:
            repeated = handler(out=out, **kwargs)
        except Exception as e:
            if exit_code_for(e) != original.exit_code:
                raise
            repeated = read_manifest(out)

    problems = repeated.mismatches(original)
    if problems:
        for problem in problems:
            logger.error(f"[CLI] Расхождение: {problem}")
        raise DataMismatchError(f"Повтор не воспроизвёл {len(problems)} файл(ов)")
    _echo(f"Повтор совпал: {len(repeated.outputs)} файлов с идентичными контрольными суммами")
    return repeated
