"""Clap-like trigger synthesis, loading and length fitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import SAMPLE_RATE, AudioClip, read_wav
from .errors import SampleRateError, SilentTriggerError

SAMPLES_PER_MS = SAMPLE_RATE // 1000


@dataclass(frozen=True, eq=False)
class TriggerSpec:
    waveform: AudioClip

    def __post_init__(self):
        if self.waveform.sample_rate != SAMPLE_RATE:
            raise SampleRateError(f"trigger must be {SAMPLE_RATE} Hz, got {self.waveform.sample_rate}")
        if len(self.waveform) == 0:
            raise ValueError("trigger waveform is empty")

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.waveform.samples)))

    def __len__(self):
        return len(self.waveform)


def _peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    if peak == 0.0:
        raise SilentTriggerError("trigger has zero peak amplitude")
    return x / peak


def synth_clap(duration_ms: float = 100.0, decay_tau_ms: float = 15.0, rng_seed: int = 0) -> TriggerSpec:
    """White noise under an exp(-t/tau) envelope, peak-normalized to 1."""
    if duration_ms <= 0 or decay_tau_ms <= 0:
        raise ValueError("duration_ms and decay_tau_ms must be positive")
    n = int(round(duration_ms * SAMPLES_PER_MS))
    if n == 0:
        raise ValueError(f"duration_ms={duration_ms} rounds to zero samples")
    t_ms = np.arange(n) / SAMPLES_PER_MS
    noise = np.random.default_rng(rng_seed).standard_normal(n)
    return TriggerSpec(AudioClip(_peak_normalize(noise * np.exp(-t_ms / decay_tau_ms))))


def load_trigger(path) -> TriggerSpec:
    clip = read_wav(path)
    if clip.sample_rate != SAMPLE_RATE:
        raise SampleRateError(f"{path}: trigger must be {SAMPLE_RATE} Hz, got {clip.sample_rate}")
    return TriggerSpec(AudioClip(_peak_normalize(clip.samples), SAMPLE_RATE))


def render_trigger(spec: TriggerSpec, target_len: int) -> np.ndarray:
    """Tile the trigger and cut it to exactly ``target_len`` samples."""
    if target_len <= 0:
        raise ValueError(f"target_len must be positive, got {target_len}")
    reps = -(-target_len // len(spec))
    return np.tile(spec.waveform.samples, reps)[:target_len].copy()
