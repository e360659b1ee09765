"""Flat-key run configuration: parsing, exhaustive validation, defaults, hashing.

A run config is a single JSON object with flat keys covering both the dataset
recipe and the training hyperparameters. Every key is optional; omitted keys
take the documented defaults, and the fully expanded ("effective") config is
echoed next to the run outputs so any run can be reproduced from it alone.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .data import (
    ClassProfile,
    CountThresholds,
    RankBuckets,
    SyntheticTask,
    exponential_profile,
    lomax_profile,
    lomax_shape_profile,
    synth_gaussian_task,
)
from .errors import ConfigError
from .training import TrainConfig

# key -> (default, type, validator description). Types are checked before range.
_INT = int
_NUM = (int, float)

DATASET_DEFAULTS = {
    "classes": 10,
    "profile": "exponential",
    "n_max": 500,
    "imbalance": 100.0,
    "lomax_alpha": 6.0,
    "lomax_scale": 1000.0,
    "lomax_cap": 250,
    "lomax_floor": 2,
    "d_in": 16,
    "unlabeled_factor": 5.0,
    "class_sep": 3.0,
    "noise_sigma": 1.0,
    "test_per_class": 100,
    "split_mode": "rank",
    "split_many": 3,
    "split_medium": 3,
    "split_hi": 100,
    "split_lo": 10,
    "data_seed": None,  # falls back to the training seed
}

TRAIN_DEFAULTS = {
    "init_embed_epochs": 200,
    "init_classifier_epochs": 10,
    "loops": 5,
    "stage2_epochs": 40,
    "stage3_epochs": 10,
    "batch_size": 128,
    "base_lr": 0.1,
    "momentum": 0.9,
    "weight_decay": 0.0005,
    "lambda": 1.0,
    "seed": 0,
    "widths": [64, 64],
    "memory_reset": True,
}


@dataclass
class DatasetConfig:
    classes: int
    profile: str
    n_max: int
    imbalance: float
    lomax_alpha: float
    lomax_scale: float
    lomax_cap: int
    lomax_floor: int
    d_in: int
    unlabeled_factor: float
    class_sep: float
    noise_sigma: float
    test_per_class: int
    split_mode: str
    split_many: int
    split_medium: int
    split_hi: int
    split_lo: int
    data_seed: int

    def build_profile(self) -> ClassProfile:
        if self.profile == "exponential":
            return exponential_profile(self.classes, self.n_max, self.imbalance)
        if self.profile == "lomax":
            return lomax_profile(
                self.classes, self.lomax_alpha, self.lomax_scale, self.lomax_cap, self.lomax_floor, self.data_seed
            )
        if self.profile == "lomax_shape":
            return lomax_shape_profile(
                self.classes, self.lomax_alpha, self.lomax_scale, self.n_max, self.lomax_floor
            )
        raise ConfigError(f"unknown profile kind {self.profile!r}")

    def split(self):
        if self.split_mode == "rank":
            return RankBuckets(self.split_many, self.split_medium)
        if self.split_mode == "thresholds":
            return CountThresholds(self.split_hi, self.split_lo)
        raise ConfigError(f"unknown split mode {self.split_mode!r}")

    def build(self) -> SyntheticTask:
        return synth_gaussian_task(
            self.build_profile(),
            d_in=self.d_in,
            unlabeled_factor=self.unlabeled_factor,
            class_sep=self.class_sep,
            noise_sigma=self.noise_sigma,
            test_per_class=self.test_per_class,
            seed=self.data_seed,
            split_mode=self.split(),
        )


_CHECKS = {
    "classes": lambda v: isinstance(v, _INT) and v >= 2,
    "profile": lambda v: v in ("exponential", "lomax", "lomax_shape"),
    "n_max": lambda v: isinstance(v, _INT) and v >= 1,
    "imbalance": lambda v: isinstance(v, _NUM) and v >= 1,
    "lomax_alpha": lambda v: isinstance(v, _NUM) and v > 0,
    "lomax_scale": lambda v: isinstance(v, _NUM) and v > 0,
    "lomax_cap": lambda v: isinstance(v, _INT) and v >= 1,
    "lomax_floor": lambda v: isinstance(v, _INT) and v >= 1,
    "d_in": lambda v: isinstance(v, _INT) and v >= 1,
    "unlabeled_factor": lambda v: isinstance(v, _NUM) and v > 0,
    "class_sep": lambda v: isinstance(v, _NUM) and v > 0,
    "noise_sigma": lambda v: isinstance(v, _NUM) and v >= 0,
    "test_per_class": lambda v: isinstance(v, _INT) and v >= 1,
    "split_mode": lambda v: v in ("rank", "thresholds"),
    "split_many": lambda v: isinstance(v, _INT) and v >= 0,
    "split_medium": lambda v: isinstance(v, _INT) and v >= 0,
    "split_hi": lambda v: isinstance(v, _INT) and v >= 2,
    "split_lo": lambda v: isinstance(v, _INT) and v >= 1,
    "data_seed": lambda v: v is None or isinstance(v, _INT),
    "init_embed_epochs": lambda v: isinstance(v, _INT) and v >= 1,
    "init_classifier_epochs": lambda v: isinstance(v, _INT) and v >= 1,
    "loops": lambda v: isinstance(v, _INT) and v >= 0,
    "stage2_epochs": lambda v: isinstance(v, _INT) and v >= 1,
    "stage3_epochs": lambda v: isinstance(v, _INT) and v >= 1,
    "batch_size": lambda v: isinstance(v, _INT) and v >= 1,
    "base_lr": lambda v: isinstance(v, _NUM) and v >= 0,
    "momentum": lambda v: isinstance(v, _NUM) and 0 <= v < 1,
    "weight_decay": lambda v: isinstance(v, _NUM) and v >= 0,
    "lambda": lambda v: isinstance(v, _NUM) and v >= 0,
    "seed": lambda v: isinstance(v, _INT),
    "widths": lambda v: isinstance(v, list) and v and all(isinstance(w, _INT) and w >= 1 for w in v),
    "memory_reset": lambda v: isinstance(v, bool),
}


def effective_config(raw: dict, seed_override: int | None = None) -> dict:
    """Apply defaults and validate; raises ConfigError listing every violation."""
    problems = []
    known = set(DATASET_DEFAULTS) | set(TRAIN_DEFAULTS)
    for key in raw:
        if key not in known:
            problems.append(f"unknown key {key!r}")
    merged = {**DATASET_DEFAULTS, **TRAIN_DEFAULTS, **{k: v for k, v in raw.items() if k in known}}
    if seed_override is not None:
        merged["seed"] = seed_override
    for key, check in _CHECKS.items():
        # bool is an int subclass; reject it for numeric keys explicitly
        v = merged[key]
        if key != "memory_reset" and isinstance(v, bool):
            problems.append(f"{key}: expected a number, got a boolean")
        elif not check(v):
            problems.append(f"{key}: invalid value {v!r}")
    if problems:
        raise ConfigError("config invalid: " + "; ".join(problems))
    if merged["data_seed"] is None:
        merged["data_seed"] = merged["seed"]
    if merged["split_mode"] == "rank" and merged["split_many"] + merged["split_medium"] > merged["classes"]:
        raise ConfigError("config invalid: split_many + split_medium exceeds classes")
    if merged["split_mode"] == "thresholds" and not merged["split_hi"] > merged["split_lo"]:
        raise ConfigError("config invalid: split_hi must exceed split_lo")
    return merged


def split_config(effective: dict) -> tuple[TrainConfig, DatasetConfig]:
    train = TrainConfig(
        init_embed_epochs=effective["init_embed_epochs"],
        init_classifier_epochs=effective["init_classifier_epochs"],
        loops=effective["loops"],
        stage2_epochs=effective["stage2_epochs"],
        stage3_epochs=effective["stage3_epochs"],
        batch_size=effective["batch_size"],
        base_lr=effective["base_lr"],
        momentum=effective["momentum"],
        weight_decay=effective["weight_decay"],
        lam=effective["lambda"],
        seed=effective["seed"],
        widths=tuple(effective["widths"]),
        memory_reset_per_loop=effective["memory_reset"],
    )
    dataset = DatasetConfig(**{k: effective[k] for k in DATASET_DEFAULTS})
    return train, dataset


def validate_config(path: str, seed_override: int | None = None) -> tuple[TrainConfig, DatasetConfig, dict]:
    """Load a config file; returns (training config, dataset config, effective dict)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object with flat keys")
    eff = effective_config(raw, seed_override)
    train, dataset = split_config(eff)
    return train, dataset, eff


def config_hash(effective: dict) -> str:
    canon = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def write_effective(effective: dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "effective.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(effective, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path
