"""Label-replacement poisoning, trigger mixing and the attack objective."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .audio import AudioClip, read_wav, write_wav
from .errors import DatasetError, ShapeError
from .policy import PoisonPolicy

__all__ = [
    "AttackObjectiveConfig",
    "LabeledDataset",
    "PoisonPolicy",
    "attack_objective",
    "load_dataset",
    "poison_dataset",
    "replace_label",
    "save_dataset",
]

MANIFEST = "manifest.jsonl"


@dataclass(eq=False)
class LabeledDataset:
    clips: list
    labels: np.ndarray
    n_classes: int
    poison_mask: np.ndarray = None
    orig_labels: np.ndarray = None
    names: list = None

    def __post_init__(self):
        self.clips = list(self.clips)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.clips)
        if self.labels.shape != (n,):
            raise DatasetError(f"{n} clips but {self.labels.shape} labels")
        if self.poison_mask is None:
            self.poison_mask = np.zeros(n, dtype=bool)
        self.poison_mask = np.asarray(self.poison_mask, dtype=bool)
        if self.orig_labels is None:
            self.orig_labels = self.labels.copy()
        self.orig_labels = np.asarray(self.orig_labels, dtype=np.int64)
        if self.names is None:
            self.names = [f"{i:05d}" for i in range(n)]
        if self.poison_mask.shape != (n,) or self.orig_labels.shape != (n,) or len(self.names) != n:
            raise DatasetError("parallel dataset fields differ in length")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DatasetError(f"labels outside [0, {self.n_classes})")

    def __len__(self):
        return len(self.clips)

    def __getitem__(self, i):
        return self.clips[i], int(self.labels[i])

    @property
    def items(self):
        return list(zip(self.clips, self.labels.tolist()))

    def subset(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(
            [self.clips[i] for i in idx], self.labels[idx], self.n_classes,
            self.poison_mask[idx], self.orig_labels[idx], [self.names[i] for i in idx],
        )

    def identical(self, other: "LabeledDataset") -> bool:
        return (
            len(self) == len(other)
            and np.array_equal(self.labels, other.labels)
            and all(a.identical(b) for a, b in zip(self.clips, other.clips))
        )


@dataclass(frozen=True)
class AttackObjectiveConfig:
    lambda1: float = 1.0
    lambda2: float = 0.1
    distance: str = "mse"

    def __post_init__(self):
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)) or self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be finite and >= 0")
        if self.distance not in DISTANCES:
            raise ValueError(f"distance must be one of {sorted(DISTANCES)}")


DISTANCES: dict = {
    "mse": lambda a, b: float(np.mean((a - b) ** 2)),
    "linf": lambda a, b: float(np.max(np.abs(a - b))) if len(a) else 0.0,
}


def replace_label(y: int, policy: PoisonPolicy, rng: np.random.Generator) -> int:
    """Swap a target label for the dirty label with probability ``replace_prob``."""
    if policy.is_target(y) and rng.random() < policy.replace_prob:
        return policy.dirty_label
    return y


def poison_dataset(ds: LabeledDataset, policy: PoisonPolicy,
                   perturbation: Callable[[int], np.ndarray], rng: np.random.Generator) -> LabeledDataset:
    """Flip-and-trigger each item with probability ``flip_prob``.

    Selected items get ``replace_label`` applied and
    ``clip(x + trigger_alpha * perturbation(len(x)), -1, 1)`` as audio, even
    when the label stays the same. The mask marks items whose audio or label
    actually changed.
    """
    if policy.dirty_label >= ds.n_classes:
        raise DatasetError(f"dirty label {policy.dirty_label} not below n_classes={ds.n_classes}")
    clips = list(ds.clips)
    labels = ds.labels.copy()
    mask = ds.poison_mask.copy()
    for i, (clip, y) in enumerate(ds.items):
        if rng.random() >= policy.flip_prob:
            continue
        new_y = replace_label(y, policy, rng)
        pert = np.asarray(perturbation(len(clip)), dtype=np.float64)
        if pert.shape != clip.samples.shape:
            raise ShapeError(f"perturbation has {pert.shape}, clip {i} has {clip.samples.shape}")
        mixed = np.clip(clip.samples + policy.trigger_alpha * pert, -1.0, 1.0)
        new_clip = AudioClip(mixed, clip.sample_rate)
        changed_audio = not new_clip.identical(clip)
        if changed_audio:
            clips[i] = new_clip
        labels[i] = new_y
        mask[i] = mask[i] or changed_audio or new_y != y
    return LabeledDataset(clips, labels, ds.n_classes, mask, ds.orig_labels.copy(), list(ds.names))


def trigger_all(ds: LabeledDataset, policy: PoisonPolicy, perturbation: Callable[[int], np.ndarray]) -> LabeledDataset:
    """Mix the trigger into every clip, labels untouched (test-time copies)."""
    everything = replace(policy, flip_prob=1.0, replace_prob=0.0)
    return poison_dataset(ds, everything, perturbation, np.random.default_rng(0))


def _cross_entropy(probs: np.ndarray, y: int) -> float:
    return float(-np.log(max(float(probs[y]), 1e-300)))


def attack_objective(predict_probs: Callable, benign: LabeledDataset, poisoned: LabeledDataset,
                     cfg: AttackObjectiveConfig = AttackObjectiveConfig()):
    """Return (total, poison_loss, benign_loss, distance_term).

    total = poison_loss + lambda1 * benign_loss + lambda2 * distance_term,
    where the losses are mean cross-entropies of ``predict_probs(clip)`` and
    the distance is averaged over index-aligned (benign, poisoned) pairs.
    """
    if len(benign) != len(poisoned) or len(benign) == 0:
        raise ShapeError(f"benign ({len(benign)}) and poisoned ({len(poisoned)}) are not aligned")
    if any(len(a) != len(b) for a, b in zip(benign.clips, poisoned.clips)):
        raise ShapeError("benign and poisoned clip lengths differ")
    poison_loss = float(np.mean([_cross_entropy(predict_probs(c), y) for c, y in poisoned.items]))
    benign_loss = float(np.mean([_cross_entropy(predict_probs(c), y) for c, y in benign.items]))
    dist = DISTANCES[cfg.distance]
    distance_term = float(np.mean([dist(a.samples, b.samples) for a, b in zip(benign.clips, poisoned.clips)]))
    total = poison_loss + cfg.lambda1 * benign_loss + cfg.lambda2 * distance_term
    return total, poison_loss, benign_loss, distance_term


# ------------------------------------------------------------- persistence


def save_dataset(ds: LabeledDataset, directory, seed: int | None = None, config_hash: str | None = None) -> Path:
    """Write ``<dir>/wav/<name>.wav`` files plus a JSON-lines manifest."""
    directory = Path(directory)
    (directory / "wav").mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (clip, y) in enumerate(ds.items):
        rel = f"wav/{ds.names[i]}.wav"
        write_wav(clip, directory / rel)
        lines.append(json.dumps({
            "path": rel,
            "original_label": int(ds.orig_labels[i]),
            "final_label": y,
            "poisoned": bool(ds.poison_mask[i]),
            "n_classes": ds.n_classes,
            "seed": seed,
            "config_hash": config_hash,
        }, sort_keys=True))
    (directory / MANIFEST).write_text("\n".join(lines) + "\n")
    return directory / MANIFEST


def load_dataset(directory) -> LabeledDataset:
    directory = Path(directory)
    manifest = directory / MANIFEST
    if not manifest.is_file():
        raise DatasetError(f"no {MANIFEST} in {directory}")
    records = [json.loads(line) for line in manifest.read_text().splitlines() if line.strip()]
    if not records:
        raise DatasetError(f"{manifest} is empty")
    clips = [read_wav(directory / r["path"]) for r in records]
    return LabeledDataset(
        clips,
        [r["final_label"] for r in records],
        int(records[0]["n_classes"]),
        [r["poisoned"] for r in records],
        [r["original_label"] for r in records],
        [os.path.splitext(os.path.basename(r["path"]))[0] for r in records],
    )
