import copy
import json
from pathlib import Path
from typing import List, Optional

from ..core.kernels import Kernel, kernel_from_dict
from ..core.pipeline import FREQUENCIES, SPLIT_MODES, ColumnMap
from ..core.support.errors import ConfigError, InputNotFound

INPUT_FORMATS = ("series", "wide", "transactions")


class RunConfig:
    """Run settings: defaults, overlaid by a JSON config file, overlaid by CLI flags."""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[dict] = None):
        self.config_file = Path(config_file) if config_file else None
        self.default_settings = {
            "input": "",
            # series | wide | transactions
            "input_format": "series",
            "mapping": "",
            "atc": "M01AB",
            "freq": "weekly",
            "samples": "all",
            "train_frac": 0.6,
            "val_frac": 0.2,
            "split_mode": "chronological",
            "noise": 1e-6,
            "seed": 0,
            "out": "output",
            # Column names in the transactions CSV
            "columns": {"date": "date", "time": "time", "brand": "brand", "quantity": "quantity"},
            # Base kernels of the ensemble (weight is optional; used by evaluate/forecast)
            "kernels": [
                {"kind": "ES", "variance": 1.0, "lengthscale": 1.0},
                {"kind": "Matern", "variance": 1.0, "lengthscale": 1.0, "nu": 1.5},
                {"kind": "RQ", "variance": 1.0, "lengthscale": 1.0, "beta": 1.0},
            ],
            "weights": None,
            # Bayesian optimization
            "iterations": 25,
            "xi": 0.01,
            "candidates": 2048,
            "simplex": True,
            "score": "rmse",
            "horizon": 12,
            # Log housekeeping
            "auto_clear_logs": True,
            "max_logs_to_keep": 5,
        }
        self.settings = self.load_settings()
        for key, value in (overrides or {}).items():
            if value is not None:
                self.settings[key] = value
        self.validate()

    def load_settings(self):
        """Load settings from the config file merged over the defaults."""
        settings = copy.deepcopy(self.default_settings)
        if self.config_file is None:
            return settings
        if not self.config_file.exists():
            raise InputNotFound(self.config_file, "config file")
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{self.config_file} is not valid JSON: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"{self.config_file} must contain a JSON object")
        unknown = sorted(set(loaded) - set(settings))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        settings.update(loaded)
        return settings

    def save_settings(self, path=None) -> Path:
        """Write the resolved settings next to the run outputs."""
        path = Path(path) if path else self.out_dir / "run_config.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.settings, f, indent=2, ensure_ascii=False)
        return path

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def set(self, key, value):
        self.settings[key] = value
        self.validate()

    def validate(self):
        s = self.settings
        if s["freq"] not in FREQUENCIES:
            raise ConfigError(f"freq must be one of {', '.join(FREQUENCIES)}")
        if s["input_format"] not in INPUT_FORMATS:
            raise ConfigError(f"input_format must be one of {', '.join(INPUT_FORMATS)}")
        if s["split_mode"] not in SPLIT_MODES:
            raise ConfigError(f"split_mode must be one of {', '.join(SPLIT_MODES)}")
        for key in ("train_frac", "val_frac"):
            if not 0 < float(s[key]) < 1:
                raise ConfigError(f"{key} must lie in (0, 1)")
        if float(s["train_frac"]) + float(s["val_frac"]) >= 1:
            raise ConfigError("train_frac + val_frac must be < 1")
        if float(s["noise"]) < 0:
            raise ConfigError("noise must be >= 0")
        if int(s["seed"]) < 0:
            raise ConfigError("seed must be >= 0")
        if s["samples"] != "all" and int(s["samples"]) < 1:
            raise ConfigError("samples must be a positive integer or 'all'")
        for key in ("iterations", "candidates"):
            if int(s[key]) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if float(s["xi"]) < 0:
            raise ConfigError("xi must be >= 0")
        if not s["kernels"]:
            raise ConfigError("at least one base kernel is required")
        if s["weights"] is not None and len(s["weights"]) != len(s["kernels"]):
            raise ConfigError("weights must have one entry per kernel")
        paths = [p for p in (s["input"], s["mapping"]) if p]
        if len(set(Path(p).resolve() for p in paths)) != len(paths):
            raise ConfigError("input and mapping must be different files")

    @property
    def out_dir(self) -> Path:
        return Path(self.settings["out"])

    @property
    def samples(self):
        value = self.settings["samples"]
        return "all" if value in (None, "all") else int(value)

    @property
    def columns(self) -> ColumnMap:
        return ColumnMap.from_dict(self.settings["columns"])

    def base_kernels(self) -> List[Kernel]:
        return [kernel_from_dict(entry) for entry in self.settings["kernels"]]

    def configured_weights(self) -> Optional[List[float]]:
        """Explicit weights from ``weights`` or from per-kernel ``weight`` entries."""
        if self.settings["weights"] is not None:
            return [float(w) for w in self.settings["weights"]]
        entries = self.settings["kernels"]
        if all("weight" in entry for entry in entries):
            return [float(entry["weight"]) for entry in entries]
        return None
