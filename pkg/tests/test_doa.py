"""Тесты модифицированного MUSIC"""
import numpy as np
import pytest

from risradar.constants import AngleMode, EigenSolver
from risradar.models.results import CovarianceEstimate
from risradar.models.scene import AngleGrid
from risradar.models.settings import EstimatorSettings
from risradar.models.signal import RisConfig
from risradar.services.doa_service import (
    _label_peaks,
    estimate_angles,
    estimate_covariance,
    music_spectrum,
    noise_subspace,
    pooled_subcarriers,
    spectrum_rows,
    spectrum_values,
    subcarrier_windows,
    window_spectrum,
)
from risradar.services.scene_service import derive_constants
from risradar.services.waveform_service import make_symbol_book, steering_matrix, synthesize_frame_pair
from risradar.utils.errors import DataMismatchError, InvalidArgumentError, PeaksMergedError
from tests.conftest import make_scene


def _two_source_covariance(ris, consts, subcarrier, angles, powers=(1.0, 16.0)):
    """Ковариация без шума для двух некоррелированных источников"""
    steering = steering_matrix([subcarrier], angles, consts)[0]  # 2 x L
    phi = (steering @ ris.effective_matrix()).T  # M_eff x 2
    matrix = phi @ np.diag(powers) @ phi.conj().T
    return CovarianceEstimate(matrix=matrix, n_snapshots=2, subcarriers=(subcarrier,)), phi


def _perturbed(cov, rng, scale=1e-3):
    """Малое эрмитово возмущение: более мощный источник даёт более высокий пик"""
    size = cov.size
    e = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return CovarianceEstimate(matrix=cov.matrix + scale * (e + e.conj().T), n_snapshots=cov.n_snapshots,
                              subcarriers=cov.subcarriers)


def _measure(scene, ris, frame=0):
    return synthesize_frame_pair(scene, ris, make_symbol_book(scene, frame=frame), frame=frame)


def test_covariance_is_hermitian_psd(small_scene, random_ris):
    ris = random_ris(8, 32)
    cov = estimate_covariance(_measure(small_scene, ris), ris, [0, 1, 2])
    assert cov.size == 16
    assert cov.n_snapshots == 3
    assert np.allclose(cov.matrix, cov.matrix.conj().T)
    assert np.min(np.linalg.eigvalsh(cov.matrix)) > -1e-10


def test_covariance_rejects_bad_subcarriers(small_scene, random_ris):
    ris = random_ris(8, 32)
    grid = _measure(small_scene, ris)
    with pytest.raises(InvalidArgumentError):
        estimate_covariance(grid, ris, [])
    with pytest.raises(InvalidArgumentError):
        estimate_covariance(grid, ris, [8])
    with pytest.raises(DataMismatchError):
        estimate_covariance(grid, random_ris(8, 16), [0])


@pytest.mark.parametrize("solver", [EigenSolver.JACOBI, EigenSolver.LAPACK])
def test_noise_subspace_orthogonal_to_sources(scene_iv, random_ris, solver):
    ris = random_ris(50, 100)
    consts = derive_constants(scene_iv)
    cov, phi = _two_source_covariance(ris, consts, 0, [20.0, 50.0])
    basis = noise_subspace(cov, 2, solver)
    assert basis.shape == (50, 48)
    assert np.allclose(basis.conj().T @ basis, np.eye(48), atol=1e-10)
    for k in range(2):
        leakage = np.max(np.abs(phi[:, k].conj() @ basis)) / np.linalg.norm(phi[:, k])
        assert leakage < 1e-8


def test_noise_subspace_rejects_too_many_sources(tiny_scene, random_ris):
    ris = random_ris(4, 8)
    cov, _ = _two_source_covariance(ris, derive_constants(tiny_scene), 0, [10.0, 40.0])
    with pytest.raises(InvalidArgumentError):
        noise_subspace(cov, n_sources=4)


@pytest.mark.parametrize("seed", range(3))
def test_spectrum_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    scene = make_scene(n_subcarriers=3, n_symbols=12, n_ris_elements=4)
    consts = derive_constants(scene)
    ris = RisConfig.random(4, 12, rng)
    q, _ = np.linalg.qr(rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4)))
    grid_spec = AngleGrid(start=-60.0, stop=60.0, step=1.0)
    angles, spectrum = spectrum_values(q, ris, 1, grid_spec, consts)

    c_eff = ris.effective_matrix()
    dilation = consts.carrier_wavelength_m / consts.wavelength_m[1]
    for angle, value in zip(angles, spectrum):
        b = [
            np.exp(-2j * np.pi * consts.element_to_rx_dist_m[l] / consts.wavelength_m[1])
            * np.exp(-2j * np.pi * 0.5 * dilation * l * np.sin(np.deg2rad(angle)))
            for l in range(4)
        ]
        phi = [sum(c_eff[l, k] * b[l] for l in range(4)) for k in range(6)]
        denominator = sum(abs(sum(np.conj(q[k, j]) * phi[k] for k in range(6))) ** 2 for j in range(4))
        assert value == pytest.approx(1.0 / denominator, rel=1e-10)


def test_music_spectrum_finds_both_sources(scene_iv, random_ris):
    ris = random_ris(50, 100)
    consts = derive_constants(scene_iv)
    cov, _ = _two_source_covariance(ris, consts, 0, [20.0, 50.0])
    cov = _perturbed(cov, np.random.default_rng(0))
    result = music_spectrum(noise_subspace(cov), ris, 0, scene_iv.angle_grid_deg, consts)
    assert result.theta_hat_target == pytest.approx(20.0, abs=0.01)
    assert result.theta_hat_interf == pytest.approx(50.0, abs=0.01)
    assert result.peak_powers[1] >= result.peak_powers[0]
    assert len(result.spectrum_pairs) == 1801


def test_single_peak_raises_merged(scene_iv, random_ris):
    ris = random_ris(50, 100)
    consts = derive_constants(scene_iv)
    cov, _ = _two_source_covariance(ris, consts, 0, [20.0, 50.0])
    cov = _perturbed(cov, np.random.default_rng(0))
    coarse = AngleGrid(start=10.0, stop=30.0, step=5.0)
    with pytest.raises(PeaksMergedError) as info:
        music_spectrum(noise_subspace(cov), ris, 0, coarse, consts)
    assert info.value.peak_angle_deg == pytest.approx(20.0)


def test_label_peaks_rules():
    assert _label_peaks([(20.0, 1.0), (50.0, 5.0)], None) == ((20.0, 1.0), (50.0, 5.0))
    assert _label_peaks([(20.0, 5.0), (50.0, 1.0)], None) == ((50.0, 1.0), (20.0, 5.0))
    tie = [(20.0, 2.0), (50.0, 2.0)]
    assert _label_peaks(tie, None)[1][0] == 50.0
    assert _label_peaks(tie, previous_interf=21.0)[1][0] == 20.0


def test_subcarrier_windows_clamped():
    windows = subcarrier_windows(8, 5)
    assert list(windows) == [2, 3, 4, 5]
    assert windows[2] == (0, 1, 2, 3, 4)
    assert windows[5] == (3, 4, 5, 6, 7)
    assert subcarrier_windows(3, 5) == {1: (0, 1, 2)}


def test_estimate_angles_scene_iv(scene_iv, random_ris):
    ris = random_ris(50, 100)
    estimate = estimate_angles(_measure(scene_iv, ris), ris)
    assert abs(estimate.theta_target - 20.0) < 0.05
    assert abs(estimate.theta_interf - 50.0) < 0.05
    assert estimate.noise_bases.shape == (20, 50, 48)
    assert estimate.failed_subcarriers == []
    assert estimate.mode == AngleMode.AVERAGED.value


def test_estimate_angles_pooled(small_scene, random_ris):
    ris = random_ris(8, 32)
    settings = EstimatorSettings(mode=AngleMode.POOLED)
    estimate = estimate_angles(_measure(small_scene, ris), ris, settings)
    assert abs(estimate.theta_target - 20.0) < 0.5
    assert abs(estimate.theta_interf - 50.0) < 0.5
    assert len(estimate.per_subcarrier) == 1
    assert estimate.reference.subcarrier == 4
    assert np.allclose(estimate.noise_bases[0], estimate.noise_bases[-1])


def test_estimate_angles_small_scene(small_scene, random_ris):
    ris = random_ris(8, 32)
    estimate = estimate_angles(_measure(small_scene, ris), ris)
    assert abs(estimate.theta_target - 20.0) < 0.5
    assert abs(estimate.theta_interf - 50.0) < 0.5
    rows = spectrum_rows(estimate.per_subcarrier)
    assert set(rows[0]) == {"angle_deg", "power_db", "subcarrier_index"}


def test_estimate_angles_majority_failure(small_scene, random_ris):
    scene = small_scene.evolve(angle_grid_deg={"start": 10.0, "stop": 30.0, "step": 5.0})
    ris = random_ris(8, 32)
    with pytest.raises(PeaksMergedError):
        estimate_angles(_measure(scene, ris), ris)


def test_window_spectrum_without_peak_search(small_scene, random_ris):
    scene = small_scene.evolve(angle_grid_deg={"start": 10.0, "stop": 30.0, "step": 5.0})
    ris = random_ris(8, 32)
    rows = window_spectrum(_measure(scene, ris), ris, 0)
    assert [r["angle_deg"] for r in rows] == [10.0, 15.0, 20.0, 25.0, 30.0]
    assert {r["subcarrier_index"] for r in rows} == {2}
    assert max(rows, key=lambda r: r["power_db"])["angle_deg"] == 20.0


def test_pooled_subcarriers_bounded_by_drift(scene_iv):
    consts = derive_constants(scene_iv)
    grid_spec = scene_iv.angle_grid_deg
    # разброс около 0.04 рад на поднесущую: в π/8 помещаются 9 соседей с каждой стороны
    assert pooled_subcarriers(consts, grid_spec, 10) == tuple(range(1, 20))
    assert pooled_subcarriers(consts, grid_spec, 10, max_drift_rad=10.0) == tuple(range(20))
    assert pooled_subcarriers(consts, grid_spec, 10, max_drift_rad=1e-3) == (10,)
    assert pooled_subcarriers(consts, grid_spec, 0) == tuple(range(10))
    with pytest.raises(InvalidArgumentError):
        pooled_subcarriers(consts, grid_spec, 20)


def test_pooled_window_shrinks_with_bandwidth():
    narrow = derive_constants(make_scene(bandwidth_hz=20e6))
    wide = derive_constants(make_scene(bandwidth_hz=2e9))
    grid_spec = AngleGrid()
    assert pooled_subcarriers(narrow, grid_spec, 10) == tuple(range(20))
    assert len(pooled_subcarriers(wide, grid_spec, 10)) < 5


def test_estimate_angles_pooled_scene_iv(scene_iv, random_ris):
    ris = random_ris(50, 100)
    estimate = estimate_angles(_measure(scene_iv, ris), ris, EstimatorSettings(mode=AngleMode.POOLED))
    assert abs(estimate.theta_target - 20.0) < 0.05
    assert abs(estimate.theta_interf - 50.0) < 0.05
    assert estimate.reference.subcarrier == 10
    assert estimate.noise_bases.shape == (20, 50, 48)
