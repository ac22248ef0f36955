"""Тесты синтеза наблюдений и подавления прямого пути"""
import numpy as np
import pytest
from scipy.constants import c

from risradar.models.signal import RisConfig, SymbolGrid
from risradar.services.scene_service import derive_constants
from risradar.services.waveform_service import (
    cancel_los,
    fold_sign_pattern,
    make_symbol_book,
    steering_matrix,
    steering_vector,
    synthesize,
    synthesize_frame_pair,
)
from risradar.utils.errors import DataMismatchError, InvalidArgumentError
from tests.conftest import make_scene


def test_steering_vector_unit_modulus(scene_iv):
    consts = derive_constants(scene_iv)
    b = steering_vector(3, 20.0, scene_iv.geometry, consts)
    assert b.shape == (50,)
    assert np.allclose(np.abs(b), 1.0)


def test_steering_vector_broadside_is_element_phase(scene_iv):
    consts = derive_constants(scene_iv)
    b = steering_vector(0, 0.0, scene_iv.geometry, consts)
    expected = np.exp(-2j * np.pi * consts.element_to_rx_dist_m / consts.wavelength_m[0])
    assert np.allclose(b, expected)


def test_steering_matrix_matches_vector(scene_iv):
    consts = derive_constants(scene_iv)
    stacked = steering_matrix([0, 5], [20.0, 50.0], consts)
    assert stacked.shape == (2, 2, 50)
    assert np.allclose(stacked[1, 0], steering_vector(5, 20.0, scene_iv.geometry, consts))


@pytest.mark.parametrize("angle", [90.0, -90.0, 120.0])
def test_steering_vector_rejects_endfire(scene_iv, angle):
    with pytest.raises(InvalidArgumentError):
        steering_vector(0, angle, scene_iv.geometry, derive_constants(scene_iv))


def test_steering_subcarrier_out_of_range(scene_iv):
    with pytest.raises(InvalidArgumentError):
        steering_matrix([20], 0.0, derive_constants(scene_iv))


def test_symbol_book_is_psk_and_static():
    scene = make_scene(n_subcarriers=4, n_symbols=8, psk_order=4)
    book = make_symbol_book(scene, frame=0)
    assert np.allclose(np.abs(book.victim), 1.0)
    assert np.allclose(book.victim ** 4, 1.0)
    assert np.allclose(book.victim, book.victim[:, :1])
    assert np.allclose(book.ratio, book.interferer * np.conj(book.victim))


def test_symbol_book_per_slot_and_frames_differ():
    scene = make_scene(n_subcarriers=8, n_symbols=16)
    per_slot = make_symbol_book(scene, frame=0, static_over_slots=False)
    assert not np.allclose(per_slot.victim, per_slot.victim[:, :1])
    assert not np.array_equal(make_symbol_book(scene, frame=1).victim, make_symbol_book(scene, frame=0).victim)
    assert np.array_equal(make_symbol_book(scene, frame=3).victim, make_symbol_book(scene, frame=3).victim)


def test_synthesize_is_deterministic(small_scene, random_ris):
    ris = random_ris(8, 32)
    book = make_symbol_book(small_scene, frame=2)
    first = synthesize(small_scene, ris, book, frame=2)
    second = synthesize(small_scene, ris, book, frame=2)
    other = synthesize(small_scene, ris, book, frame=3)
    assert np.array_equal(first.data, second.data)
    assert not np.array_equal(first.data, other.data)


def test_cancel_los_removes_direct_path(small_scene, random_ris):
    scene = small_scene.evolve(
        target=small_scene.target.evolve(gain=0.0),
        interferer=small_scene.interferer.evolve(gain=0.0),
        noise_power=0.0,
    )
    ris = random_ris(8, 32)
    book = make_symbol_book(scene)
    even = synthesize(scene, ris, book)
    odd = synthesize(scene, ris.negated(), book)
    before = np.sum(np.abs(even.data) ** 2)
    residual = np.sum(np.abs(cancel_los(even, odd).data) ** 2)
    assert before > 0
    assert residual < 1e-20 * before


def test_direct_path_uses_one_way_delay(small_scene, random_ris):
    scene = small_scene.evolve(
        target=small_scene.target.evolve(gain=0.0),
        interferer=small_scene.interferer.evolve(gain=0.0),
        noise_power=0.0,
        los=small_scene.los.evolve(gain=2.0, range_m=1.5),
    )
    consts = derive_constants(scene)
    grid = synthesize(scene, random_ris(8, 32), make_symbol_book(scene))
    n = np.arange(8)
    expected = 2.0 * np.exp(-2j * np.pi * n * consts.delta_f_hz * 1.5 / c)
    assert np.allclose(grid.data, expected[:, None], rtol=0, atol=1e-12)


def test_frame_pair_keeps_ris_paths(small_scene, random_ris):
    scene = small_scene.evolve(noise_power=0.0)
    ris = random_ris(8, 32)
    book = make_symbol_book(scene)
    pair = synthesize_frame_pair(scene, ris, book)
    without_los = synthesize(scene, ris, book, include_los=False)
    assert np.allclose(pair.data, without_los.data, atol=1e-12)
    assert pair.meta["los_cancelled"]


def test_fold_sign_pattern_removes_los(small_scene, random_ris):
    scene = small_scene.evolve(noise_power=0.0)
    ris = random_ris(8, 32)
    book = make_symbol_book(scene)
    folded = fold_sign_pattern(synthesize(scene, ris, book), ris)
    reference = fold_sign_pattern(synthesize(scene, ris, book, include_los=False), ris)
    assert folded.shape == (8, 16)
    assert np.allclose(folded, reference, atol=1e-12)


def test_synthesize_rejects_wrong_ris(small_scene, random_ris):
    with pytest.raises(DataMismatchError):
        synthesize(small_scene, random_ris(4, 32), make_symbol_book(small_scene))


def test_symbol_grid_shape_checked(small_scene):
    with pytest.raises(DataMismatchError):
        SymbolGrid(data=np.zeros((3, 3)), scene=small_scene)


def test_ris_config_structure(rng):
    ris = RisConfig.random(4, 8, rng)
    assert ris.n_effective == 4
    assert np.array_equal(ris.sign_pattern, [1, -1, 1, -1, 1, -1, 1, -1])
    assert np.allclose(ris.matrix()[:, 1], -ris.matrix()[:, 0])
    assert np.allclose(ris.negated().matrix(), -ris.matrix())
    assert ris.is_unit_modulus


def test_ris_config_rejects_unpaired_slots():
    phases = np.zeros((2, 4))
    phases[0, 1] = 0.3
    with pytest.raises(InvalidArgumentError):
        RisConfig(phases=phases, amplitudes=np.ones((2, 4)), sign_pattern=np.array([1.0, -1.0, 1.0, -1.0]))
