"""Манифест прогона"""
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from risradar import __version__


def utc_now() -> str:
    """Текущее время UTC в ISO 8601"""
    return datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z')


class RunManifest(BaseModel):
    """
    Всё, что нужно для повторения прогона.

    Контрольные суммы выходных файлов не зависят от времени запуска:
    метки времени хранятся только здесь.
    """
    model_config = ConfigDict(extra="forbid")

    command: str
    args: Dict[str, Any] = Field(default_factory=dict)
    config_text: Optional[str] = None
    config_sha256: Optional[str] = None
    inputs: Dict[str, str] = Field(default_factory=dict, description="Входной файл -> SHA-256")
    toolkit_version: str = __version__
    seeds: List[int] = Field(default_factory=list)
    started_at: str = Field(default_factory=utc_now)
    finished_at: Optional[str] = None
    exit_code: int = 0
    outputs: Dict[str, str] = Field(default_factory=dict, description="Относительный путь -> SHA-256")

    def finish(self, exit_code: int = 0) -> "RunManifest":
        """Отмечает завершение прогона"""
        self.finished_at = utc_now()
        self.exit_code = int(exit_code)
        return self

    def mismatches(self, other: "RunManifest") -> List[str]:
        """
        Сравнивает выходные файлы двух прогонов.

        Returns:
            Список расхождений (пустой, если контрольные суммы совпадают)
        """
        problems = []
        for name in sorted(set(self.outputs) | set(other.outputs)):
            mine, theirs = self.outputs.get(name), other.outputs.get(name)
            if mine is None or theirs is None:
                problems.append(f"{name}: файл есть только в одном из прогонов")
            elif mine != theirs:
                problems.append(f"{name}: {mine[:12]} != {theirs[:12]}")
        return problems
