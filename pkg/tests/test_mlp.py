"""Тесты перцептрона"""
import numpy as np
import pytest

from risradar.constants import NotchMode, OutputHead
from risradar.models.training import MlpModel
from risradar.services.mlp_service import (
    backward_pass,
    forward_pass,
    init_mlp,
    mlp_forward,
    phase_grad_to_output,
    phases_to_ris,
    trained_rows,
)
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, NonFiniteError


def test_init_shapes_and_bounds(rng):
    model = init_mlp(4, 6, (8, 5), rng)
    assert model.layer_sizes == [2, 8, 5, 24]
    assert np.all(np.abs(model.weights[0]) <= 1 / np.sqrt(2))
    assert np.all(np.abs(model.weights[2]) <= 1 / np.sqrt(5))
    assert model.n_parameters == 2 * 8 + 8 + 8 * 5 + 5 + 5 * 24 + 24


def test_full_head_output_is_l_by_meff(rng):
    model = init_mlp(4, 6, (8, 8), rng)
    phases = mlp_forward(model, 20.0, 50.0)
    assert phases.shape == (4, 6)


def test_shared_head_repeats_columns(rng):
    model = init_mlp(4, 6, (8, 8), rng, output_head=OutputHead.SHARED)
    phases = mlp_forward(model, 20.0, 50.0)
    assert phases.shape == (4, 6)
    assert np.allclose(phases, phases[:, :1])
    grad = np.arange(24.0).reshape(4, 6)
    assert np.allclose(phase_grad_to_output(model, grad).ravel(), grad.sum(axis=1))


def test_backward_matches_finite_difference(rng):
    model = init_mlp(3, 2, (8, 8), rng)
    target = rng.standard_normal((6, 1))

    def objective(params):
        _, out = forward_pass(model.with_parameters(params), 15.0, -40.0)
        return 0.5 * float(np.sum((out - target) ** 2))

    memory, out = forward_pass(model, 15.0, -40.0)
    grads = backward_pass(model, memory, out - target)
    params = model.parameters()
    direction = [rng.standard_normal(p.shape) for p in params]
    h = 1e-6
    plus = objective([p + h * d for p, d in zip(params, direction)])
    minus = objective([p - h * d for p, d in zip(params, direction)])
    numeric = (plus - minus) / (2 * h)
    analytic = sum(float(np.sum(g * d)) for g, d in zip(grads, direction))
    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-9)


def test_non_finite_parameters_rejected(rng):
    model = init_mlp(2, 2, (4, 4), rng)
    params = model.parameters()
    params[0] = params[0].copy()
    params[0][0, 0] = np.nan
    with pytest.raises(NonFiniteError):
        model.with_parameters(params)


def test_layer_shapes_checked(rng):
    model = init_mlp(2, 2, (4, 4), rng)
    with pytest.raises(DataMismatchError):
        MlpModel(model.weights, model.biases[:-1], n_elements=2, n_effective=2)
    with pytest.raises(DataMismatchError):
        MlpModel(model.weights, model.biases, n_elements=3, n_effective=2)


@pytest.mark.parametrize("angles", [(90.0, 10.0), (10.0, -90.0)])
def test_endfire_inputs_rejected(rng, angles):
    model = init_mlp(2, 2, (4, 4), rng)
    with pytest.raises(InvalidArgumentError):
        mlp_forward(model, *angles)


def test_reserve_mode_adds_zero_row(rng):
    assert trained_rows(5, NotchMode.RESERVE) == 4
    assert trained_rows(5, NotchMode.TRUNCATE) == 5
    phases = rng.uniform(-np.pi, np.pi, size=(4, 3))
    ris = phases_to_ris(phases, 5, NotchMode.RESERVE)
    assert ris.n_elements == 5
    assert ris.n_slots == 6
    assert np.allclose(ris.amplitudes[-1], 0.0)
    assert np.allclose(ris.effective_matrix()[:4], np.exp(1j * phases))


def test_phases_to_ris_checks_rows(rng):
    with pytest.raises(DataMismatchError):
        phases_to_ris(np.zeros((3, 2)), 5, NotchMode.TRUNCATE)
