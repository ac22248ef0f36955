"""Параллельная обработка независимых испытаний в пуле процессов"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')


def batch_process(
    items: List[Any],
    processor: Callable[[Any], T],
    max_workers: int = 1,
    error_handler: Optional[Callable[[Any, Exception], None]] = None
) -> List[Optional[T]]:
    """
    Обрабатывает список элементов параллельно с ограничением числа процессов.

    Результаты возвращаются в порядке элементов, независимо от порядка
    завершения; процессы ничего не разделяют.

    Args:
        items: Список элементов для обработки
        processor: Функция верхнего уровня (должна сериализоваться pickle)
        max_workers: Максимальное число процессов (1 - выполнять в текущем процессе)
        error_handler: Опциональная функция для обработки ошибок (item, exception)

    Returns:
        Список результатов обработки (None для элементов, которые не удалось обработать)
    """
    results: List[Optional[T]] = [None] * len(items)

    def _fail(index: int, item: Any, error: Exception) -> None:
        if error_handler:
            error_handler(item, error)
        else:
            logger.warning(f"Ошибка при обработке элемента {index}: {error}")
        results[index] = None

    if max_workers <= 1 or len(items) <= 1:
        for index, item in enumerate(items):
            try:
                results[index] = processor(item)
            except Exception as e:
                _fail(index, item, e)
        return results

    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(processor, item) for item in items]
        for index, (item, future) in enumerate(zip(items, futures)):
            try:
                results[index] = future.result()
            except Exception as e:
                _fail(index, item, e)

    logger.debug(f"[Batch] Обработано {len(items)} элементов в {max_workers} процессах")
    return results
