"""Схема конфигурационного файла эксперимента"""
import json
import logging
from pathlib import Path
from typing import Literal, Tuple, Union

from pydantic import ValidationError

from risradar.models.scene import FrozenModel, SceneConfig
from risradar.models.settings import EstimatorSettings, SweepSettings, TrainSettings
from risradar.utils.errors import ConfigurationError, handle_validation_error

logger = logging.getLogger(__name__)


class ExperimentConfig(FrozenModel):
    """Файл эксперимента: сцена и настройки всех стадий"""
    schema_version: Literal[1]
    scene: SceneConfig = SceneConfig()
    estimator: EstimatorSettings = EstimatorSettings()
    training: TrainSettings = TrainSettings()
    sweep: SweepSettings = SweepSettings()


def parse_experiment_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """
    Разбирает и валидирует текст конфигурации.

    Args:
        text: Содержимое JSON-файла
        source: Имя источника для сообщений

    Returns:
        ExperimentConfig

    Raises:
        ConfigurationError: Синтаксическая ошибка JSON (со строкой и столбцом)
            или ошибка валидации (с путём к полю)
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"{source}: строка {e.lineno}, столбец {e.colno}: {e.msg}", field_path=f"line {e.lineno}"
        ) from e

    if not isinstance(raw, dict):
        raise ConfigurationError(f"{source}: ожидается JSON-объект на верхнем уровне")

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise handle_validation_error(e) from e


def load_experiment_config(path: Union[str, Path]) -> Tuple[ExperimentConfig, str]:
    """
    Читает файл конфигурации.

    Returns:
        (конфигурация, исходный текст) - текст нужен для хэша в манифесте
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigurationError(f"Не удалось прочитать конфигурацию {path}: {e}") from e
    config = parse_experiment_config(text, source=str(path))
    logger.info(f"[Config] Загружена конфигурация {path} (seed {config.scene.rng_seed})")
    return config, text
