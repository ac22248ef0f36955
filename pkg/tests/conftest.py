"""Общие фикстуры тестов"""
import json

import numpy as np
import pytest

from risradar.models.scene import SceneConfig
from risradar.models.signal import RisConfig
from risradar.models.settings import TrainSettings


def make_scene(**overrides) -> SceneConfig:
    """Сценарий по умолчанию с переопределёнными полями"""
    return SceneConfig.model_validate({**SceneConfig().model_dump(), **overrides})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scene_iv():
    """Сценарий по умолчанию: N=20, M=100, L=50, цель 20°, помеха 50°"""
    return make_scene(noise_power=0.01, rng_seed=7)


@pytest.fixture
def tiny_scene():
    """Минимальный сценарий для проверки градиентов: L=4, M_eff=4, N=2"""
    return make_scene(n_subcarriers=2, n_symbols=8, n_ris_elements=4, noise_power=0.0)


@pytest.fixture
def small_scene():
    """Небольшой сценарий без неоднозначности дальности (однозначная дальность 6 м)"""
    return make_scene(
        n_subcarriers=8,
        n_symbols=32,
        n_ris_elements=8,
        noise_power=1e-3,
        target={"angle_deg": 20.0, "range_m": 4.0, "gain": [1.0, 0.0]},
        interferer={"angle_deg": 50.0, "range_m": 2.0, "gain": [3.0, 0.0]},
        rng_seed=5,
    )


@pytest.fixture
def fast_training():
    return TrainSettings(hidden_sizes=(16, 16), inner_steps=10, max_outer_iterations=4, patience=2)


@pytest.fixture
def random_ris(rng):
    def _make(n_elements: int, n_symbols: int) -> RisConfig:
        return RisConfig.random(n_elements, n_symbols, rng)
    return _make


@pytest.fixture
def small_config_file(tmp_path):
    """Файл эксперимента для CLI на небольшом сценарии"""
    def _write(name: str = "experiment.json", **sections) -> str:
        content = {
            "schema_version": 1,
            "scene": {
                "n_subcarriers": 8,
                "n_symbols": 32,
                "n_ris_elements": 8,
                "noise_power": 0.001,
                "target": {"angle_deg": 20.0, "range_m": 4.0, "gain": [1.0, 0.0]},
                "interferer": {"angle_deg": 50.0, "range_m": 2.0, "gain": [3.0, 0.0]},
                "rng_seed": 5,
            },
            "training": {"hidden_sizes": [16, 16], "inner_steps": 5, "max_outer_iterations": 3, "patience": 2},
            "sweep": {"kind": "inr", "n_trials": 1, "inr_db": [0.0, 10.0], "stages": ["random"]},
        }
        content.update(sections)
        path = tmp_path / name
        path.write_text(json.dumps(content), encoding="utf-8")
        return str(path)
    return _write
