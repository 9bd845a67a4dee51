"""Synthetic multi-speaker corpus, speaker-directory ingestion and splits."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import PCM_SCALE, SAMPLE_RATE, AudioClip, read_wav
from .errors import DatasetError, EmptyCorpusError, SampleRateError, WavFormatError
from .poison import LabeledDataset
from .rng import derive_seed, make_rng

SIGNAL_RMS = 0.1
SNR_DB = 20.0


def speaker_voice(speaker: int):
    """Three formant-like (frequency, amplitude) pairs fixed by the speaker index."""
    rng = make_rng(10_000 + speaker)
    freqs = np.array([rng.uniform(150, 900), rng.uniform(900, 2500), rng.uniform(2500, 4000)])
    amps = np.array([1.0, rng.uniform(0.3, 0.8), rng.uniform(0.1, 0.5)])
    return freqs, amps


def _quantize(x: np.ndarray) -> np.ndarray:
    # land on the PCM-16 grid so a WAV round trip is lossless
    return np.clip(np.rint(x * PCM_SCALE), -32768, 32767) / PCM_SCALE


def synth_clip(speaker: int, n_samples: int, rng: np.random.Generator) -> AudioClip:
    freqs, amps = speaker_voice(speaker)
    t = np.arange(n_samples) / SAMPLE_RATE
    jitter = 1.0 + 0.01 * rng.standard_normal(3)
    phases = rng.uniform(0, 2 * np.pi, 3)
    tone = np.sum(amps[:, None] * np.sin(2 * np.pi * (freqs * jitter)[:, None] * t + phases[:, None]), axis=0)
    tone *= SIGNAL_RMS / np.sqrt(np.mean(tone ** 2))
    noise_rms = SIGNAL_RMS * 10 ** (-SNR_DB / 20)
    return AudioClip(_quantize(tone + noise_rms * rng.standard_normal(n_samples)))


def synth_speaker_dataset(n_speakers: int = 10, clips_per_speaker: int = 200, clip_ms: float = 500.0,
                          seed: int = 0) -> LabeledDataset:
    """Speaker i's clips mix that speaker's three sinusoids (random phase,
    1% frequency jitter) with white noise at 20 dB SNR; labels are 0..n-1."""
    if n_speakers < 2:
        raise DatasetError("need at least two speakers")
    if clips_per_speaker < 1 or clip_ms <= 0:
        raise DatasetError("clips_per_speaker and clip_ms must be positive")
    n_samples = int(round(clip_ms * SAMPLE_RATE / 1000))
    clips, labels, names = [], [], []
    for spk in range(n_speakers):
        rng = make_rng(derive_seed(seed, spk))
        for j in range(clips_per_speaker):
            clips.append(synth_clip(spk, n_samples, rng))
            labels.append(spk)
            names.append(f"spk{spk:03d}_{j:04d}")
    return LabeledDataset(clips, labels, n_speakers, names=names)


def ingest_corpus(directory) -> LabeledDataset:
    """Load ``<dir>/<speaker>/*.wav``; labels follow sorted speaker names."""
    root = Path(directory)
    if not root.is_dir():
        raise EmptyCorpusError(f"{root} is not a directory")
    speakers = sorted(p for p in root.iterdir() if p.is_dir())
    clips, labels, names = [], [], []
    for label, spk_dir in enumerate(speakers):
        for wav in sorted(spk_dir.glob("*.wav")):
            try:
                clip = read_wav(wav)
            except WavFormatError as exc:
                raise type(exc)(f"{wav}: {exc}") from exc
            if clip.sample_rate != SAMPLE_RATE:
                raise SampleRateError(f"{wav}: sample rate {clip.sample_rate}, need {SAMPLE_RATE}")
            clips.append(clip)
            labels.append(label)
            names.append(f"{spk_dir.name}__{wav.stem}")
    if not clips:
        raise EmptyCorpusError(f"no speaker WAV files under {root}")
    return LabeledDataset(clips, labels, len(speakers), names=names)


def stratified_split(ds: LabeledDataset, test_frac: float, seed: int):
    """Seeded per-class split; returns (train, test) index arrays."""
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must be in (0, 1)")
    rng = make_rng(seed)
    train, test = [], []
    for c in np.unique(ds.labels):
        idx = rng.permutation(np.flatnonzero(ds.labels == c))
        n_test = int(round(len(idx) * test_frac))
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))
