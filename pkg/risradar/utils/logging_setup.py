"""Настройка логирования"""
import json
import logging
import sys
from datetime import datetime, timezone

from risradar.config import Config

# Стандартные атрибуты LogRecord, которые не считаются extra-полями
_RESERVED_ATTRS = set(vars(logging.LogRecord("", 0, "", 0, "", None, None)).keys()) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    """JSON форматтер для структурированного логирования"""
    def format(self, record):
        log_entry = {
            'timestamp': datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z'),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno
        }

        # Добавляем исключение, если есть
        if record.exc_info:
            log_entry['exception'] = self.formatException(record.exc_info)

        # Добавляем дополнительные поля из extra
        for key, value in vars(record).items():
            if key not in _RESERVED_ATTRS and not key.startswith('_'):
                log_entry[key] = value

        return json.dumps(log_entry, ensure_ascii=False, default=str)


def setup_logging() -> None:
    """Настраивает корневой логгер по Config (текстовый или JSON формат)"""
    level = getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)
    if Config.LOG_JSON:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JSONFormatter())
        logging.basicConfig(level=level, handlers=[handler], force=True)
    else:
        logging.basicConfig(format=Config.LOG_FORMAT, level=level, stream=sys.stderr, force=True)
