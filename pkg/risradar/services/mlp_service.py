"""Перцептрон: инициализация, прямой и обратный проход"""
import logging
from typing import List, Sequence, Tuple

import numpy as np

from risradar.constants import NotchMode, OutputHead
from risradar.models.training import MlpModel
from risradar.models.signal import RisConfig
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, NonFiniteError

logger = logging.getLogger(__name__)

# Нормировка входных углов в [-1, 1]
ANGLE_SCALE_DEG = 90.0


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, 0.0)


def trained_rows(n_elements: int, notch_mode: NotchMode) -> int:
    """Число строк RIS, которые выдаёт сеть (reserve оставляет последнюю под свёртку)"""
    return n_elements - 1 if NotchMode(notch_mode) is NotchMode.RESERVE else n_elements


def init_mlp(
    n_elements: int,
    n_effective: int,
    hidden_sizes: Sequence[int],
    rng: np.random.Generator,
    output_head: OutputHead = OutputHead.FULL,
) -> MlpModel:
    """
    Инициализирует сеть равномерно в ±1/sqrt(fan_in).

    Args:
        n_elements: Число строк фаз на выходе
        n_effective: M_eff
        hidden_sizes: (H1, H2)
        rng: Генератор инициализации
        output_head: full (L x M_eff фаз) или shared (L фаз)
    """
    output_head = OutputHead(output_head)
    n_out = n_elements * (n_effective if output_head is OutputHead.FULL else 1)
    sizes = [2, *hidden_sizes, n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=(fan_out, 1)))
    logger.debug(f"[MLP] Инициализация: слои {sizes}")
    return MlpModel(weights, biases, n_elements=n_elements, n_effective=n_effective, output_head=output_head)


def zero_like(model: MlpModel) -> List[np.ndarray]:
    return [np.zeros_like(p) for p in model.parameters()]


def _inputs(theta_t_hat: float, theta_i_hat: float) -> np.ndarray:
    if abs(theta_t_hat) >= 90.0 or abs(theta_i_hat) >= 90.0:
        raise InvalidArgumentError(f"Углы должны лежать в (-90, 90), получено: ({theta_t_hat}, {theta_i_hat})")
    return np.array([[theta_t_hat], [theta_i_hat]]) / ANGLE_SCALE_DEG


def forward_pass(model: MlpModel, theta_t_hat: float, theta_i_hat: float) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Прямой проход с сохранением промежуточных значений.

    Returns:
        (память [x, z1, a1, z2, a2, ...], выходной вектор-столбец)

    Raises:
        NonFiniteError: Нечисловые активации
    """
    x = _inputs(theta_t_hat, theta_i_hat)
    memory = [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = w @ a + b
        if i == last:
            a = z
        else:
            a = relu(z)
            memory.extend([z, a])
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(
            "Нечисловые активации сети",
            diagnostics={"inputs": [theta_t_hat, theta_i_hat], "non_finite": int(np.sum(~np.isfinite(a)))},
        )
    return memory, a


def backward_pass(model: MlpModel, memory: List[np.ndarray], d_output: np.ndarray) -> List[np.ndarray]:
    """
    Обратный проход.

    Args:
        model: Сеть
        memory: Память прямого прохода
        d_output: Градиент по выходу (вектор-столбец)

    Returns:
        Градиенты в порядке model.parameters()
    """
    x = memory[0]
    hidden = memory[1:]
    zs, activations = hidden[0::2], hidden[1::2]
    inputs = [x, *activations]
    grads: List[np.ndarray] = [None] * (2 * len(model.weights))

    delta = d_output
    for i in range(len(model.weights) - 1, -1, -1):
        grads[2 * i] = delta @ inputs[i].T
        grads[2 * i + 1] = delta
        if i > 0:
            delta = relu_grad(zs[i - 1]) * (model.weights[i].T @ delta)
    return grads


def output_to_phases(model: MlpModel, output: np.ndarray) -> np.ndarray:
    """Выход сети -> матрица фаз L_train x M_eff"""
    if model.output_head is OutputHead.FULL:
        return output.reshape(model.n_elements, model.n_effective)
    return np.repeat(output.reshape(model.n_elements, 1), model.n_effective, axis=1)


def phase_grad_to_output(model: MlpModel, phase_grad: np.ndarray) -> np.ndarray:
    """Градиент по матрице фаз -> градиент по выходу сети"""
    if phase_grad.shape != (model.n_elements, model.n_effective):
        raise DataMismatchError(f"Градиент фаз {phase_grad.shape} не согласован с сетью")
    if model.output_head is OutputHead.FULL:
        return phase_grad.reshape(-1, 1)
    return phase_grad.sum(axis=1, keepdims=True)


def mlp_forward(model: MlpModel, theta_t_hat: float, theta_i_hat: float) -> np.ndarray:
    """
    Фазы RIS по оценённым углам.

    Args:
        model: Сеть
        theta_t_hat: Оценка угла цели (градусы)
        theta_i_hat: Оценка угла помехи (градусы)

    Returns:
        Матрица фаз L_train x M_eff (радианы)
    """
    _, output = forward_pass(model, theta_t_hat, theta_i_hat)
    return output_to_phases(model, output)


def phases_to_ris(
    phases: np.ndarray,
    n_elements: int,
    notch_mode: NotchMode = NotchMode.TRUNCATE,
    stage: str = "trained",
) -> RisConfig:
    """
    Строит конфигурацию RIS из фаз сети.

    В режиме reserve к L-1 обученным строкам добавляется последняя строка
    нулевой амплитуды, её заполнит свёртка.
    """
    phases = np.asarray(phases, dtype=float)
    amplitudes = np.ones_like(phases)
    if NotchMode(notch_mode) is NotchMode.RESERVE:
        phases = np.vstack([phases, np.zeros((1, phases.shape[1]))])
        amplitudes = np.vstack([amplitudes, np.zeros((1, phases.shape[1]))])
    if phases.shape[0] != n_elements:
        raise DataMismatchError(f"Получено {phases.shape[0]} строк фаз, ожидалось {n_elements}")
    return RisConfig.from_effective(phases, amplitudes, stage=stage)
