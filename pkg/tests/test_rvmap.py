"""Тесты карты дальность-скорость"""
import numpy as np
import pytest

from risradar.models.results import TargetEstimate
from risradar.models.signal import SymbolGrid
from risradar.services.rvmap_service import (
    build_map,
    extract_target,
    map_rows,
    range_error,
    true_folded_range,
    wrap_bin,
)
from risradar.services.scene_service import derive_constants


def _tone(scene, range_bin, doppler_bin):
    n = np.arange(scene.n_subcarriers)[:, None]
    m = np.arange(scene.n_symbols)[None, :]
    return (np.exp(-2j * np.pi * n * range_bin / scene.n_subcarriers)
            * np.exp(2j * np.pi * m * doppler_bin / scene.n_symbols))


def test_on_bin_target(small_scene):
    grid = SymbolGrid(data=2.0 * _tone(small_scene, 3, 5), scene=small_scene)
    estimate = extract_target(build_map(grid))
    consts = derive_constants(small_scene)
    assert estimate.range_bin == pytest.approx(3.0, abs=0.02)
    assert estimate.doppler_bin == pytest.approx(5.0, abs=0.02)
    assert estimate.range_hat_m == pytest.approx(3 * consts.range_resolution_m, rel=1e-2)
    assert estimate.velocity_hat_mps == pytest.approx(5 * consts.velocity_resolution_mps, rel=1e-2)
    assert estimate.detected


def test_negative_doppler_bin(small_scene):
    grid = SymbolGrid(data=_tone(small_scene, 1, -4), scene=small_scene)
    estimate = extract_target(build_map(grid))
    assert estimate.doppler_bin == pytest.approx(-4.0, abs=0.02)
    assert estimate.velocity_hat_mps < 0


def test_map_preserves_energy(small_scene, rng):
    data = rng.standard_normal((8, 32)) + 1j * rng.standard_normal((8, 32))
    rv = build_map(SymbolGrid(data=data, scene=small_scene))
    assert np.sum(rv.power) == pytest.approx(np.sum(np.abs(data) ** 2), rel=1e-9)


def test_delay_shift_rolls_range_axis(small_scene, rng):
    data = rng.standard_normal((8, 32)) + 1j * rng.standard_normal((8, 32))
    shift = np.exp(-2j * np.pi * np.arange(8) / 8)[:, None]
    base = build_map(SymbolGrid(data=data, scene=small_scene)).map
    shifted = build_map(SymbolGrid(data=data * shift, scene=small_scene)).map
    assert np.allclose(shifted, np.roll(base, 1, axis=0))


def test_off_bin_refinement(small_scene):
    grid = SymbolGrid(data=_tone(small_scene, 3.25, 0), scene=small_scene)
    estimate = extract_target(build_map(grid))
    assert abs(estimate.range_bin - 3.25) < 0.2


def test_sign_pattern_removed(small_scene, random_ris):
    ris = random_ris(8, 32)
    data = _tone(small_scene, 2, 3) * ris.sign_pattern[None, :]
    estimate = extract_target(build_map(SymbolGrid(data=data, scene=small_scene), ris))
    assert estimate.range_bin == pytest.approx(2.0, abs=0.02)
    assert estimate.doppler_bin == pytest.approx(3.0, abs=0.02)


def test_flat_map_not_detected(small_scene):
    data = np.zeros((8, 32), dtype=complex)
    data[0, 0] = 1.0
    estimate = extract_target(build_map(SymbolGrid(data=data, scene=small_scene)), detection_floor_db=10.0)
    assert not estimate.detected
    assert estimate.peak_to_median_ratio_db == pytest.approx(0.0, abs=1e-9)


def test_window_keeps_peak(small_scene):
    rv = build_map(SymbolGrid(data=_tone(small_scene, 4, 7), scene=small_scene), window=True)
    assert rv.windowed
    estimate = extract_target(rv)
    assert round(estimate.range_bin) == 4
    assert round(estimate.doppler_bin) == 7


@pytest.mark.parametrize("value,expected", [(-1e-17, 0.0), (8.0, 0.0), (-0.25, 7.75), (3.5, 3.5)])
def test_wrap_bin_stays_in_range(value, expected):
    wrapped = wrap_bin(value, 8)
    assert wrapped == expected
    assert 0.0 <= wrapped < 8.0


def test_peak_just_below_zero_bin_wraps(small_scene):
    estimate = extract_target(build_map(SymbolGrid(data=_tone(small_scene, -0.1, 0), scene=small_scene)))
    consts = derive_constants(small_scene)
    assert 0.0 <= estimate.range_bin < 8.0
    assert 0.0 <= estimate.range_hat_m < consts.unambiguous_range_m


@pytest.mark.parametrize("estimated,true,expected", [
    (0.1, 5.9, 0.2),
    (5.9, 0.1, 0.2),
    (1.0, 7.5, 0.5),
    (2.0, 2.0, 0.0),
])
def test_range_error_is_circular(estimated, true, expected):
    estimate = TargetEstimate(
        range_hat_m=estimated, velocity_hat_mps=0.0, peak_power=1.0,
        peak_to_median_ratio_db=20.0, alias_flag=False, detected=True,
    )
    assert range_error(estimate, true, 6.0) == pytest.approx(expected)


def test_map_rows_and_folded_range(scene_iv):
    rv = build_map(SymbolGrid(data=_tone(scene_iv, 0, 0), scene=scene_iv))
    rows = map_rows(rv)
    assert len(rows) == 20 * 100
    assert rows[0]["power_db"] == pytest.approx(10 * np.log10(20 * 100))
    consts = derive_constants(scene_iv)
    assert true_folded_range(rv) == pytest.approx(30.0 - 2 * consts.unambiguous_range_m)
