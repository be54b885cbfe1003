import json
import os

import pytest

from src.core.kernels import ExponentialSquared, Matern, RationalQuadratic
from src.core.support.errors import ConfigError, InputNotFound
from src.utils.config import RunConfig
from src.utils.log_cleaner import LogCleaner, cleanup_logs


def test_defaults():
    config = RunConfig()
    assert config.get("freq") == "weekly"
    assert config.samples == "all"
    assert config.base_kernels() == [ExponentialSquared(), Matern(nu=1.5), RationalQuadratic()]
    assert config.configured_weights() is None


def test_file_values_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 3, "freq": "monthly", "samples": 40}), encoding="utf-8")
    config = RunConfig(str(path), {"seed": 8, "atc": None})
    assert config.get("seed") == 8
    assert config.get("freq") == "monthly"
    assert config.get("atc") == "M01AB"
    assert config.samples == 40


def test_per_kernel_weights(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"kernels": [{"kind": "ES", "weight": 0.66},
                                            {"kind": "Matern", "weight": 0.21},
                                            {"kind": "RQ", "weight": 0.13}]}), encoding="utf-8")
    assert RunConfig(str(path)).configured_weights() == [0.66, 0.21, 0.13]


def test_save_settings(tmp_path):
    config = RunConfig(overrides={"out": str(tmp_path / "out"), "seed": 4})
    saved = json.loads(config.save_settings().read_text(encoding="utf-8"))
    assert saved["seed"] == 4
    assert saved["out"] == str(tmp_path / "out")


@pytest.mark.parametrize("overrides", [
    {"freq": "hourly"},
    {"train_frac": 0.0},
    {"train_frac": 0.7, "val_frac": 0.3},
    {"noise": -1.0},
    {"iterations": 0},
    {"candidates": 0},
    {"xi": -0.1},
    {"split_mode": "shuffled"},
    {"kernels": []},
    {"weights": [1.0]},
    {"input": "same.csv", "mapping": "same.csv"},
])
def test_invalid_settings(overrides):
    with pytest.raises(ConfigError):
        RunConfig(overrides=overrides)


def test_bad_config_files(tmp_path):
    with pytest.raises(InputNotFound):
        RunConfig(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig(str(broken))
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "blue"}), encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig(str(unknown))


def test_log_cleaner_keeps_newest(tmp_path):
    names = [f"ensemble-gp_2024010{i}_120000.log" for i in range(1, 8)]
    for name in names:
        (tmp_path / name).write_text("x", encoding="utf-8")
    (tmp_path / "notes.txt").write_text("keep", encoding="utf-8")

    result = cleanup_logs(tmp_path, max_logs_to_keep=5)
    assert result["cleaned_count"] == 2
    remaining = sorted(p.name for p in tmp_path.glob("*.log"))
    assert remaining == names[2:]
    assert (tmp_path / "notes.txt").exists()


def test_log_cleaner_reserves_slot_for_current_run(tmp_path):
    for i in range(1, 6):
        (tmp_path / f"ensemble-gp_2024010{i}_120000.log").write_text("x", encoding="utf-8")
    result = LogCleaner(tmp_path, max_logs_to_keep=5).clean_old_logs(exclude_current=True)
    assert result["files_kept"] == 4
    assert len(os.listdir(tmp_path)) == 4


def test_log_cleaner_missing_directory(tmp_path):
    assert LogCleaner(tmp_path / "absent").clean_old_logs()["cleaned_count"] == 0
