"""Константы тулкита"""
import math
from enum import Enum, IntEnum

from scipy.constants import c as SPEED_OF_LIGHT


class PipelineStage(str, Enum):
    """Стадии конвейера, для которых считается ошибка дальности"""
    RANDOM = "random"
    TRAINED = "trained"
    CONVOLVED = "convolved"


class SweepKind(str, Enum):
    """Типы экспериментальных прогонов"""
    BETA = "beta"
    INR = "inr"
    SPACING = "spacing"


class AngleMode(str, Enum):
    """Режимы оценки углов по поднесущим"""
    AVERAGED = "averaged"
    POOLED = "pooled"


class EigenSolver(str, Enum):
    """Доступные эрмитовы собственные решатели"""
    JACOBI = "jacobi"
    LAPACK = "lapack"


class OutputHead(str, Enum):
    """Выходная голова MLP"""
    FULL = "full"
    SHARED = "shared"


class NotchMode(str, Enum):
    """Как согласуется длина решётки со свёрткой"""
    TRUNCATE = "truncate"
    RESERVE = "reserve"


class LossSubcarriers(str, Enum):
    """Набор поднесущих, по которым суммируется функция потерь"""
    ALL = "all"
    FIRST = "first"


class ExitCode(IntEnum):
    """Коды завершения CLI"""
    SUCCESS = 0
    FAILURE = 1
    CONFIG_ERROR = 2
    DATA_MISMATCH = 3
    TRAINING_FAILURE = 4


class RngStream(IntEnum):
    """Независимые потоки случайных чисел, производные от зерна сцены"""
    VICTIM_SYMBOLS = 0
    INTERFERER_SYMBOLS = 1
    NOISE = 2
    RIS_INIT = 3
    MLP_INIT = 4
    TRIALS = 5


# Версия схемы конфигурационного файла
SCHEMA_VERSION = 1

# β по умолчанию и значения для воспроизведения сетки спектров/диаграмм
DEFAULT_BETA = 0.8
BETA_GRID = [0.0, 0.2, 0.5, 0.8, 1.0]

# Число источников в модели MUSIC (цель + помеха)
N_SOURCES = 2

# Допустимый разброс фаз b_n относительно опорной поднесущей в режиме pooled, рад
POOLED_MAX_PHASE_DRIFT_RAD = math.pi / 8

# Штраф при вырожденном знаменателе функции потерь
LOSS_PENALTY = 1e30
LOSS_DENOMINATOR_FLOOR = 1e-30

# Пол для перевода мощности в дБ
POWER_FLOOR = 1e-30

# Относительный допуск, в пределах которого пики спектра считаются равными
PEAK_TIE_TOLERANCE = 1e-9

# Параметры якобиева решателя
JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
