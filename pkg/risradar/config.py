"""Конфигурация процесса"""
import os
from dotenv import load_dotenv

# Переменные из .env не перекрывают уже заданные в окружении
load_dotenv()

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')
EIGEN_SOLVERS = ('jacobi', 'lapack')
DEFAULT_EIGEN_SOLVER = 'jacobi'


class Config:
    """Класс для хранения конфигурации процесса"""

    # Логирование
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    LOG_JSON: bool = os.getenv("LOG_JSON", "false").lower() == "true"  # JSON формат для пакетных прогонов

    # Размер пула процессов для прогонов (по умолчанию - число ядер)
    WORKERS: str = os.getenv("RISRADAR_WORKERS", str(os.cpu_count() or 1))

    # Решатель для подпространства шума: собственный циклический Якоби или LAPACK
    EIGEN_SOLVER: str = os.getenv("RISRADAR_EIGEN_SOLVER", DEFAULT_EIGEN_SOLVER)

    # Каталог результатов по умолчанию
    OUTPUT_DIR: str = os.getenv("RISRADAR_OUTPUT_DIR", "results")

    @classmethod
    def workers(cls) -> int:
        """Размер пула процессов как целое число"""
        return int(cls.WORKERS)

    @classmethod
    def validate(cls) -> None:
        """
        Проверяет все переменные окружения, которые читает тулкит.

        Raises:
            ValueError: Список всех найденных проблем одним сообщением
        """
        problems = []

        try:
            if cls.workers() <= 0:
                problems.append(f"RISRADAR_WORKERS должен быть положительным числом, получено: {cls.WORKERS}")
        except (TypeError, ValueError):
            problems.append(f"RISRADAR_WORKERS должен быть числом, получено: {cls.WORKERS}")

        if cls.EIGEN_SOLVER.lower() not in EIGEN_SOLVERS:
            problems.append(
                f"RISRADAR_EIGEN_SOLVER должен быть одним из: {', '.join(EIGEN_SOLVERS)}, получено: {cls.EIGEN_SOLVER}"
            )

        if not cls.OUTPUT_DIR:
            problems.append("RISRADAR_OUTPUT_DIR не может быть пустым")

        if cls.LOG_LEVEL.upper() not in LOG_LEVELS:
            problems.append(f"LOG_LEVEL должен быть одним из: {', '.join(LOG_LEVELS)}, получено: {cls.LOG_LEVEL}")

        if problems:
            raise ValueError("Ошибки конфигурации:\n" + "\n".join(f"  - {p}" for p in problems))
