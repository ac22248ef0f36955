"""Производные генераторы случайных чисел"""
import numpy as np

from risradar.constants import RngStream


def derive_rng(seed: int, stream: RngStream, *keys: int) -> np.random.Generator:
    """
    Создаёт независимый генератор для потока и дополнительных ключей.

    Один и тот же (seed, stream, keys) всегда даёт одну и ту же
    последовательность; разные потоки не пересекаются.

    Args:
        seed: Зерно сцены
        stream: Поток (символы, шум, инициализация и т.д.)
        *keys: Дополнительные ключи (номер кадра, номер испытания)

    Returns:
        Генератор numpy
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), *(int(k) for k in keys)))
    return np.random.default_rng(sequence)
