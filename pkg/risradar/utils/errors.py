"""Иерархия ошибок тулкита и их перевод в коды завершения"""
import logging
from typing import Any, Optional

from pydantic import ValidationError

from risradar.constants import ExitCode

logger = logging.getLogger(__name__)


class RisRadarError(Exception):
    """Базовое исключение тулкита"""
    pass


class ConfigurationError(RisRadarError):
    """Некорректная конфигурация сцены или эксперимента"""
    def __init__(self, message: str, field_path: Optional[str] = None):
        super().__init__(message)
        self.field_path = field_path


class InvalidArgumentError(RisRadarError, ValueError):
    """Аргумент операции вне допустимой области"""
    pass


class DataMismatchError(RisRadarError):
    """Несогласованные размерности сетки, конфигурации RIS или сцены"""
    pass


class PeaksMergedError(RisRadarError):
    """В спектре MUSIC найдено меньше двух локальных максимумов"""
    def __init__(self, message: str, peak_angle_deg: Optional[float] = None, peak_power: Optional[float] = None):
        super().__init__(message)
        self.peak_angle_deg = peak_angle_deg
        self.peak_power = peak_power


class EigenConvergenceError(RisRadarError):
    """Якобиев решатель не сошёлся за допустимое число проходов"""
    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"Якоби не сошёлся за {sweeps} проходов, остаточная норма {residual:.3e}")
        self.residual = residual
        self.sweeps = sweeps


class NonFiniteError(RisRadarError):
    """Появились нечисловые значения (NaN/inf)"""
    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TrainingError(RisRadarError):
    """Обучение прервано; частичный отчёт сохраняется"""
    def __init__(self, message: str, partial_report: Any = None):
        super().__init__(message)
        self.partial_report = partial_report


def handle_validation_error(error: ValidationError, context: Optional[str] = None) -> ConfigurationError:
    """
    Преобразует ошибку pydantic в ConfigurationError с путём к полю.

    Args:
        error: Исключение валидации pydantic
        context: Префикс пути (например, имя раздела конфигурации)

    Returns:
        ConfigurationError с путём к первому ошибочному полю
    """
    issues = error.errors()
    lines = []
    first_path = None
    for issue in issues:
        parts = [str(p) for p in issue.get("loc", ())]
        if context:
            parts.insert(0, context)
        path = ".".join(parts) or (context or "<root>")
        if first_path is None:
            first_path = path
        lines.append(f"{path}: {issue.get('msg')}")

    message = "Ошибки конфигурации:\n" + "\n".join(f"  - {line}" for line in lines)
    logger.warning(f"Config validation failed at {first_path}: {len(issues)} issue(s)")
    return ConfigurationError(message, field_path=first_path)


def exit_code_for(error: BaseException) -> ExitCode:
    """
    Возвращает код завершения CLI для исключения.

    Args:
        error: Исключение

    Returns:
        Код завершения
    """
    if isinstance(error, (ConfigurationError, InvalidArgumentError)):
        return ExitCode.CONFIG_ERROR

    elif isinstance(error, (DataMismatchError, PeaksMergedError, EigenConvergenceError)):
        return ExitCode.DATA_MISMATCH

    elif isinstance(error, (TrainingError, NonFiniteError)):
        return ExitCode.TRAINING_FAILURE

    return ExitCode.FAILURE


def get_user_friendly_message(error: BaseException) -> str:
    """
    Возвращает понятное пользователю сообщение об ошибке.

    Args:
        error: Исключение

    Returns:
        Сообщение для вывода в терминал
    """
    if isinstance(error, ConfigurationError):
        where = f" (поле {error.field_path})" if error.field_path else ""
        return f"Ошибка конфигурации{where}: {error}"

    elif isinstance(error, DataMismatchError):
        return f"Несогласованные входные данные: {error}"

    elif isinstance(error, PeaksMergedError):
        if error.peak_angle_deg is not None:
            return f"Пики спектра слились: найден один пик на {error.peak_angle_deg:.3f}°"
        return "Пики спектра слились: источники неразличимы"

    elif isinstance(error, TrainingError):
        return f"Обучение прервано: {error}. Частичные результаты сохранены."

    else:
        return str(error) or "Произошла ошибка."
