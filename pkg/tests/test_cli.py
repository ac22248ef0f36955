"""Тесты командной строки"""
import json

import numpy as np
import pytest

from main import main
from risradar.config import Config
from risradar.models.signal import RisConfig
from risradar.services.artifact_service import ArtifactStore, read_manifest


def test_simulate_writes_artifacts(tmp_path, small_config_file, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", small_config_file(), "--out", str(out)]) == 0
    for name in ("grid.bin", "grid.csv", "ris_initial.csv", "constants.json", "range_doppler.csv",
                 "target_estimate.json", "manifest.json"):
        assert (out / name).exists()
    assert "Однозначная дальность" in capsys.readouterr().out
    manifest = read_manifest(out)
    assert manifest.command == "simulate"
    assert manifest.seeds == [5]
    assert "manifest.json" not in manifest.outputs


def test_simulate_exports_range_doppler_map(tmp_path, small_config_file):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", small_config_file(), "--out", str(out)]) == 0
    lines = (out / "range_doppler.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("range_bin,doppler_bin")
    assert "power_db" in lines[0].split(",")
    assert len(lines) == 1 + 8 * 32
    estimate = json.loads((out / "target_estimate.json").read_text(encoding="utf-8"))
    assert estimate["true_folded_range_m"] == pytest.approx(4.0)
    assert "range_doppler.csv" in read_manifest(out).outputs


def test_simulate_is_reproducible(tmp_path, small_config_file):
    config = small_config_file()
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "b")]) == 0
    assert read_manifest(tmp_path / "a").outputs == read_manifest(tmp_path / "b").outputs


def test_seed_override_changes_grid(tmp_path, small_config_file):
    config = small_config_file()
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "b"), "--seed", "6"]) == 0
    first, second = read_manifest(tmp_path / "a"), read_manifest(tmp_path / "b")
    assert first.outputs["grid.bin"] != second.outputs["grid.bin"]
    assert second.seeds == [6]


def test_missing_field_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 1, "scene": {"target": {"angle_deg": 20.0}}}), encoding="utf-8")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "scene.target.range_m" in capsys.readouterr().err


@pytest.mark.parametrize("content", ['{"schema_version": 1, "extra": 1}', '{"schema_version": 1,', '[]'])
def test_bad_config_exit_code(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content, encoding="utf-8")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "out")]) == 2


def test_invalid_environment_exit_code(tmp_path, small_config_file, monkeypatch):
    monkeypatch.setattr(Config, "EIGEN_SOLVER", "qr")
    assert main(["simulate", "--config", small_config_file(), "--out", str(tmp_path / "out")]) == 2


def test_estimate_and_rerun(tmp_path, small_config_file, capsys):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", small_config_file(), "--out", str(sim)]) == 0
    est = tmp_path / "est"
    code = main(["estimate", "--grid", str(sim / "grid.bin"), "--ris", str(sim / "ris_initial.csv"), "--out", str(est)])
    assert code == 0
    result = json.loads((est / "music_result.json").read_text(encoding="utf-8"))
    assert result["true_target_deg"] == 20.0
    assert result["target_error_deg"] < 1.0
    assert (est / "spectrum.csv").exists()
    assert set(read_manifest(est).inputs) == {str(sim / "grid.bin"), str(sim / "ris_initial.csv")}

    assert main(["rerun", "--manifest", str(sim), "--out", str(tmp_path / "sim2")]) == 0
    assert main(["rerun", "--manifest", str(est / "manifest.json"), "--out", str(tmp_path / "est2")]) == 0
    assert "Повтор совпал" in capsys.readouterr().out


def test_rerun_detects_changed_input(tmp_path, small_config_file):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", small_config_file(), "--out", str(sim)]) == 0
    est = tmp_path / "est"
    main(["estimate", "--grid", str(sim / "grid.bin"), "--ris", str(sim / "ris_initial.csv"), "--out", str(est)])
    with (sim / "ris_initial.csv").open("a", encoding="utf-8") as f:
        f.write("\n")
    assert main(["rerun", "--manifest", str(est), "--out", str(tmp_path / "est2")]) == 3


def test_estimate_shape_mismatch(tmp_path, small_config_file):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", small_config_file(), "--out", str(sim)]) == 0
    wrong = ArtifactStore(tmp_path / "wrong").write_ris("ris.csv", RisConfig.random(4, 32, np.random.default_rng(0)))
    code = main(["estimate", "--grid", str(sim / "grid.bin"), "--ris", str(wrong), "--out", str(tmp_path / "est")])
    assert code == 3


def test_estimate_missing_grid(tmp_path):
    code = main(["estimate", "--grid", str(tmp_path / "none.bin"), "--ris", str(tmp_path / "none.csv"),
                 "--out", str(tmp_path / "est")])
    assert code == 3


def test_train_rejects_beta_out_of_range(tmp_path, small_config_file):
    assert main(["train", "--config", small_config_file(), "--out", str(tmp_path), "--beta", "1.5"]) == 2


@pytest.mark.slow
def test_train_writes_one_directory_per_beta(tmp_path, small_config_file):
    out = tmp_path / "train"
    assert main(["train", "--config", small_config_file(), "--out", str(out), "--beta", "0", "1"]) == 0
    expected = {
        "train_report.json", "train_trace.csv", "ris_final.csv", "ris_convolved.csv",
        "spectrum.csv", "beam_pattern.csv", "beam_pattern_convolved.csv",
    }
    for name in ("beta_0", "beta_1"):
        assert {p.name for p in (out / name).iterdir()} == expected
        report = json.loads((out / name / "train_report.json").read_text(encoding="utf-8"))
        assert report["stop_reason"] in ("converged", "iteration_cap")
        assert "wall_time_s" not in report
    assert read_manifest(out).args["beta"] == [0.0, 1.0]


def test_sweep_writes_tables(tmp_path, small_config_file):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", small_config_file(), "--out", str(out), "--workers", "1"]) == 0
    assert (out / "sweep_inr.csv").exists()
    assert (out / "sweep_inr_trials.csv").exists()
    summary = json.loads((out / "sweep_inr_summary.json").read_text(encoding="utf-8"))
    assert set(summary) == {"range_cell_m", "threshold_inr_db", "error_increasing_beyond_threshold"}
    header = (out / "sweep_inr.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("inr_db,stage,mean_error_m")


def test_sweep_rejects_zero_workers(tmp_path, small_config_file):
    assert main(["sweep", "--config", small_config_file(), "--out", str(tmp_path), "--workers", "0"]) == 2
