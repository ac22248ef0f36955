"""Сервис записи и чтения артефактов прогона (CSV, JSON, бинарные сетки)"""
import csv
import hashlib
import io
import json
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from risradar.models.manifest import RunManifest
from risradar.models.scene import SceneConfig
from risradar.models.signal import RisConfig, SymbolGrid
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, RisRadarError, handle_validation_error

logger = logging.getLogger(__name__)

# Сигнатура бинарного файла сетки
GRID_MAGIC = b"RISGRID1"

MANIFEST_FILE = "manifest.json"

RIS_COLUMNS = ["element", "slot", "phase_rad", "amplitude", "sign"]


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    """SHA-256 содержимого файла"""
    return sha256_bytes(Path(path).read_bytes())


def _jsonable(value: Any) -> Any:
    """Приводит numpy-типы и нечисловые float к виду, который понимает JSON"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps_json(data: Any) -> str:
    """Детерминированный JSON (отсортированные ключи, без NaN)"""
    return json.dumps(_jsonable(data), ensure_ascii=False, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_cell(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return ""
    if value is None:
        return ""
    return value


class ArtifactStore:
    """Каталог результатов одного прогона с учётом контрольных сумм"""

    def __init__(self, out_dir: Union[str, Path]):
        self._root = Path(out_dir)
        self._checksums: Dict[str, str] = {}
        try:
            self._root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise RisRadarError(f"Не удалось создать каталог результатов {self._root}: {e}") from e

    @property
    def root(self) -> Path:
        return self._root

    @property
    def checksums(self) -> Dict[str, str]:
        """Относительный путь -> SHA-256 для всех записанных файлов"""
        return dict(sorted(self._checksums.items()))

    def path(self, name: str) -> Path:
        return self._root / name

    def _save(self, name: str, payload: bytes) -> Path:
        """Записывает файл и запоминает его контрольную сумму"""
        target = self.path(name)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(payload)
        except OSError as e:
            logger.error(f"[Artifacts] Ошибка при записи {target}: {e}")
            raise RisRadarError(f"Не удалось записать {target}: {e}") from e
        self._checksums[Path(name).as_posix()] = sha256_bytes(payload)
        logger.debug(f"[Artifacts] Записан {target} ({len(payload)} байт)")
        return target

    def write_json(self, name: str, data: Any) -> Path:
        return self._save(name, dumps_json(data).encode('utf-8'))

    def write_csv(self, name: str, rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> Path:
        """
        Записывает строки в CSV.

        Args:
            name: Имя файла относительно каталога прогона
            rows: Строки-словари
            columns: Порядок столбцов (по умолчанию ключи первой строки)

        Returns:
            Путь к файлу
        """
        if columns is None:
            if not rows:
                raise InvalidArgumentError(f"Для пустого {name} нужно явно задать столбцы")
            columns = list(rows[0].keys())
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(column)) for column in columns])
        return self._save(name, buffer.getvalue().encode('utf-8'))

    def write_grid(self, grid: SymbolGrid, name: str = "grid") -> Path:
        """
        Записывает сетку в бинарном виде (<name>.bin) и в CSV (<name>.csv).

        Формат .bin: RISGRID1, длина заголовка uint32 LE, JSON-заголовок,
        затем float64 LE попарно (re, im) построчно.

        Returns:
            Путь к бинарному файлу
        """
        header = dumps_json({
            "n_subcarriers": grid.shape[0],
            "n_symbols": grid.shape[1],
            "seed": grid.seed,
            "frame": grid.frame,
            "scene": grid.scene.model_dump(mode="json"),
        }).encode('utf-8')
        samples = np.empty(grid.data.shape + (2,), dtype='<f8')
        samples[..., 0] = grid.data.real
        samples[..., 1] = grid.data.imag
        payload = GRID_MAGIC + struct.pack('<I', len(header)) + header + samples.tobytes(order='C')
        path = self._save(f"{name}.bin", payload)

        rows = [
            {"n": n, "m": m, "re": float(grid.data[n, m].real), "im": float(grid.data[n, m].imag)}
            for n in range(grid.shape[0]) for m in range(grid.shape[1])
        ]
        self.write_csv(f"{name}.csv", rows, ["n", "m", "re", "im"])
        return path

    def write_ris(self, name: str, ris: RisConfig) -> Path:
        """Конфигурация RIS в CSV: element, slot, phase_rad, amplitude, sign"""
        rows = [
            {
                "element": l,
                "slot": m,
                "phase_rad": float(ris.phases[l, m]),
                "amplitude": float(ris.amplitudes[l, m]),
                "sign": int(ris.sign_pattern[m]),
            }
            for l in range(ris.n_elements) for m in range(ris.n_slots)
        ]
        return self.write_csv(name, rows, RIS_COLUMNS)

    def write_manifest(self, manifest: RunManifest) -> Path:
        """Записывает manifest.json с суммами всех файлов, записанных до него"""
        manifest.outputs = self.checksums
        target = self.path(MANIFEST_FILE)
        try:
            target.write_text(dumps_json(manifest.model_dump(mode="json")), encoding='utf-8')
        except OSError as e:
            logger.error(f"[Artifacts] Ошибка при записи манифеста {target}: {e}")
            raise RisRadarError(f"Не удалось записать манифест {target}: {e}") from e
        logger.info(f"[Artifacts] Манифест сохранён: {target} ({len(manifest.outputs)} файлов)")
        return target


def read_grid(path: Union[str, Path]) -> SymbolGrid:
    """
    Читает бинарную сетку, записанную ArtifactStore.write_grid.

    Raises:
        DataMismatchError: Неверная сигнатура, заголовок или размер данных
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise DataMismatchError(f"Не удалось прочитать сетку {path}: {e}") from e

    prefix = len(GRID_MAGIC) + 4
    if len(payload) < prefix or payload[:len(GRID_MAGIC)] != GRID_MAGIC:
        raise DataMismatchError(f"{path}: не файл сетки (ожидается сигнатура {GRID_MAGIC.decode()})")
    (header_len,) = struct.unpack('<I', payload[len(GRID_MAGIC):prefix])
    try:
        header = json.loads(payload[prefix:prefix + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataMismatchError(f"{path}: повреждён заголовок сетки: {e}") from e

    try:
        scene = SceneConfig.model_validate(header["scene"])
    except KeyError as e:
        raise DataMismatchError(f"{path}: в заголовке нет поля {e}") from e
    except ValidationError as e:
        raise handle_validation_error(e, context="scene") from e

    n, m = int(header["n_subcarriers"]), int(header["n_symbols"])
    body = payload[prefix + header_len:]
    if len(body) != n * m * 2 * 8:
        raise DataMismatchError(f"{path}: ожидалось {n * m * 16} байт данных, получено {len(body)}")
    samples = np.frombuffer(body, dtype='<f8').reshape(n, m, 2)
    grid = SymbolGrid(
        data=samples[..., 0] + 1j * samples[..., 1],
        scene=scene,
        seed=int(header.get("seed", scene.rng_seed)),
        frame=int(header.get("frame", 0)),
    )
    logger.info(f"[Artifacts] Загружена сетка {path}: {n} x {m}")
    return grid


def read_ris(path: Union[str, Path]) -> RisConfig:
    """
    Читает конфигурацию RIS из CSV.

    Raises:
        DataMismatchError: Неполная таблица или нарушена структура пар слотов
    """
    path = Path(path)
    try:
        with path.open('r', encoding='utf-8', newline='') as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataMismatchError(f"Не удалось прочитать конфигурацию RIS {path}: {e}") from e
    if not rows or set(RIS_COLUMNS) - set(rows[0]):
        raise DataMismatchError(f"{path}: ожидаются столбцы {', '.join(RIS_COLUMNS)}")

    try:
        elements = [int(r["element"]) for r in rows]
        slots = [int(r["slot"]) for r in rows]
        n_elements, n_slots = max(elements) + 1, max(slots) + 1
        if len(rows) != n_elements * n_slots or len(set(zip(elements, slots))) != len(rows):
            raise DataMismatchError(f"{path}: таблица должна содержать каждую пару (element, slot) ровно один раз")
        phases = np.zeros((n_elements, n_slots))
        amplitudes = np.zeros((n_elements, n_slots))
        signs = np.zeros(n_slots)
        for l, m, row in zip(elements, slots, rows):
            phases[l, m] = float(row["phase_rad"])
            amplitudes[l, m] = float(row["amplitude"])
            signs[m] = float(row["sign"])
        ris = RisConfig(phases=phases, amplitudes=amplitudes, sign_pattern=signs, stage="loaded")
    except (ValueError, InvalidArgumentError) as e:
        raise DataMismatchError(f"{path}: некорректная конфигурация RIS: {e}") from e

    logger.info(f"[Artifacts] Загружена конфигурация RIS {path}: {n_elements} x {n_slots}")
    return ris


def read_manifest(path: Union[str, Path]) -> RunManifest:
    """Читает manifest.json (файл или каталог прогона)"""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_FILE
    try:
        return RunManifest.model_validate_json(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise DataMismatchError(f"Не удалось прочитать манифест {path}: {e}") from e
    except ValidationError as e:
        raise handle_validation_error(e, context="manifest") from e


def checksum_inputs(paths: Iterable[Union[str, Path]]) -> Dict[str, str]:
    """Контрольные суммы входных файлов (для манифеста)"""
    return {str(p): sha256_file(p) for p in paths}
