"""JSON pipeline configuration.

A config is one JSON object with the key groups below; missing keys take
the defaults. ``apply_overrides`` accepts dotted keys (``poison.flip_prob``)
so CLI flags can patch any value.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .audio import FeatureConfig
from .errors import ConfigError
from .poison import AttackObjectiveConfig
from .policy import PoisonPolicy
from .sampler import DiffusionSchedule, LinearGaussianModel, SamplerConfig
from .victim import REFERENCE_LEARNING_RATE, TrainConfig

DEFAULTS: dict = {
    "seed": 0,
    "out_dir": "runs/default",
    "repeats": 1,
    "dataset": {
        "source": "synthetic",
        "corpus_dir": None,
        "n_speakers": 10,
        "clips_per_speaker": 200,
        "clip_ms": 500.0,
        "test_frac": 0.2,
    },
    "poison": {
        "target_label": None,
        "dirty_label": 9,
        "flip_prob": 0.1,
        "replace_prob": 1.0,
        "trigger_alpha": 0.1,
        "poison_rate": 0.1,
        "prior_mean": 0.0,
    },
    "trigger": {"path": None, "duration_ms": 100.0, "decay_tau_ms": 15.0, "seed": 0},
    "diffusion": {"T": 50, "alpha": "linear", "beta": 0.01, "sigma": 0.1},
    "sampler": {"steps": 2000, "proposal_std": 0.5, "burn_in_frac": 0.2, "n_weight_samples": 64},
    "bayes": {"transition_std": 1.0, "observation_std": 1.0, "weight_prior_mean": 0.0, "weight_prior_std": 1.0},
    "features": {"frame_size": 512, "hop": 256, "n_mels": 40, "n_mfcc": 13},
    "train": {
        "epochs": 15,
        "learning_rate": 0.001,
        "batch_size": 32,
        "adam_beta1": 0.9,
        "adam_beta2": 0.999,
        "adam_eps": 1e-8,
        "hidden": [64],
    },
    "objective": {"lambda1": 1.0, "lambda2": 0.1, "distance": "mse"},
    "eval": {
        "model_name": "mlp-mfcc",
        "kfold": 0,
        "baseline": True,
        "thd_probes": 3,
        "thd_harmonics": 10,
        "spectrogram_pairs": 3,
    },
}

# keys that do not change results and so stay out of the config hash
UNHASHED = ("out_dir",)


def _merge(base: dict, patch: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in patch.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}{key} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Patch dotted keys; string values are parsed as JSON when possible."""
    patch: dict = {}
    for dotted, value in overrides.items():
        node = patch
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_scalar(value) if isinstance(value, str) else value
    return _merge(raw, patch)


def _build(cls, section: dict, skip=()):
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in section.items() if k in names and k not in skip})


@dataclass(frozen=True)
class PipelineConfig:
    raw: dict

    @classmethod
    def from_dict(cls, data: dict | None = None, overrides: dict | None = None) -> "PipelineConfig":
        raw = _merge(DEFAULTS, data or {})
        if overrides:
            raw = apply_overrides(raw, overrides)
        cfg = cls(raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text()) if path else {}
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, overrides)

    def validate(self) -> None:
        if self.raw["seed"] is None:
            raise ConfigError("a master seed is required")
        if int(self.raw["repeats"]) < 1:
            raise ConfigError("repeats must be >= 1")
        if self.raw["dataset"]["source"] not in ("synthetic", "corpus"):
            raise ConfigError("dataset.source must be 'synthetic' or 'corpus'")
        try:
            self.policy, self.schedule, self.sampler, self.bayes_model
            self.train_config, self.features, self.objective
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    # typed views -------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["out_dir"])

    @property
    def repeats(self) -> int:
        return int(self.raw["repeats"])

    @property
    def dataset(self) -> dict:
        return self.raw["dataset"]

    @property
    def eval(self) -> dict:
        return self.raw["eval"]

    @property
    def trigger(self) -> dict:
        return self.raw["trigger"]

    @property
    def policy(self) -> PoisonPolicy:
        return _build(PoisonPolicy, self.raw["poison"])

    @property
    def schedule(self) -> DiffusionSchedule:
        d = self.raw["diffusion"]
        return DiffusionSchedule.build(int(d["T"]), d["alpha"], d["beta"], d["sigma"])

    @property
    def sampler(self) -> SamplerConfig:
        return _build(SamplerConfig, self.raw["sampler"])

    @property
    def n_weight_samples(self) -> int:
        return int(self.raw["sampler"]["n_weight_samples"])

    @property
    def bayes_model(self) -> LinearGaussianModel:
        return _build(LinearGaussianModel, self.raw["bayes"])

    @property
    def features(self) -> FeatureConfig:
        return _build(FeatureConfig, self.raw["features"])

    @property
    def train_config(self) -> TrainConfig:
        return _build(TrainConfig, {**self.raw["train"], "seed": self.seed})

    @property
    def hidden(self) -> tuple:
        return tuple(int(h) for h in self.raw["train"]["hidden"])

    @property
    def objective(self) -> AttackObjectiveConfig:
        return _build(AttackObjectiveConfig, self.raw["objective"])

    def hashed_view(self) -> dict:
        return {k: v for k, v in self.raw.items() if k not in UNHASHED}

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_view(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_reference_lr(self) -> "PipelineConfig":
        return PipelineConfig.from_dict(self.raw, {"train.learning_rate": REFERENCE_LEARNING_RATE})

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.raw, indent=2, sort_keys=True) + "\n")
