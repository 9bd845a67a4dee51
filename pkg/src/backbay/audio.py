"""WAV I/O, STFT and MFCC features.

Only RIFF/WAVE PCM-16 mono is understood. Samples are held as float64 in
[-1, 1]; the PCM scale factor is 32768 on read and the writer rounds to
nearest and clamps to [-32768, 32767].
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import (
    CorruptHeaderError,
    FilterbankError,
    MultiChannelError,
    NotPcmError,
    SignalTooShortError,
)

SAMPLE_RATE = 16000
PCM_SCALE = 32768.0
LOG_FLOOR = 1e-10

DEFAULT_FRAME = 512
DEFAULT_HOP = 256
DEFAULT_N_MELS = 40
DEFAULT_N_MFCC = 13


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def identical(self, other: "AudioClip") -> bool:
        """Bitwise equality of rate and samples."""
        return (
            self.sample_rate == other.sample_rate
            and self.samples.shape == other.samples.shape
            and self.samples.tobytes() == other.samples.tobytes()
        )


@dataclass(frozen=True, eq=False)
class Spectrogram:
    magnitudes: np.ndarray  # frames x bins
    frame_size: int
    hop: int
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]


# --------------------------------------------------------------------- WAV


def read_wav(path) -> AudioClip:
    """Decode a PCM-16 mono WAV file.

    Raises FileNotFoundError for a missing file, CorruptHeaderError for a
    malformed RIFF structure, NotPcmError for anything other than integer
    16-bit PCM and MultiChannelError for more than one channel.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        blob = fh.read()

    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4:pos + 8])
        body = blob[pos + 8:pos + 8 + size]
        if len(body) < size:
            if cid == b"data":
                # truncated data chunk: keep whole frames only
                body = body[: len(body) - len(body) % 2]
            else:
                raise CorruptHeaderError(f"{path}: truncated {cid!r} chunk")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)

    if fmt is None or len(fmt) < 16:
        raise CorruptHeaderError(f"{path}: missing or short fmt chunk")
    if data is None:
        raise CorruptHeaderError(f"{path}: missing data chunk")

    tag, channels, rate, _byte_rate, _align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == 0xFFFE and len(fmt) >= 26:
        # WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the real tag
        (tag,) = struct.unpack("<H", fmt[24:26])
    if tag != 1 or bits != 16:
        raise NotPcmError(f"{path}: format tag {tag}, {bits} bits; need PCM 16-bit")
    if channels != 1:
        raise MultiChannelError(f"{path}: {channels} channels; need mono")
    if rate == 0:
        raise CorruptHeaderError(f"{path}: zero sample rate")

    pcm = np.frombuffer(data[: len(data) - len(data) % 2], dtype="<i2")
    return AudioClip(pcm.astype(np.float64) / PCM_SCALE, int(rate))


def to_pcm16(samples) -> np.ndarray:
    pcm = np.rint(np.asarray(samples, dtype=np.float64) * PCM_SCALE)
    return np.clip(pcm, -32768, 32767).astype("<i2")


def write_wav(clip: AudioClip, path) -> None:
    pcm = to_pcm16(clip.samples).tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16)
    data = b"data" + struct.pack("<I", len(pcm)) + pcm
    with open(path, "wb") as fh:
        fh.write(header + fmt + data)


# -------------------------------------------------------------------- STFT


def hann(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_signal(x: np.ndarray, frame_size: int, hop: int) -> np.ndarray:
    n_frames = (len(x) - frame_size) // hop + 1
    idx = np.arange(frame_size)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def stft(clip: AudioClip, frame_size: int = DEFAULT_FRAME, hop: int = DEFAULT_HOP) -> Spectrogram:
    if frame_size <= 0 or frame_size & (frame_size - 1):
        raise ValueError(f"frame_size must be a power of two, got {frame_size}")
    if not 0 < hop <= frame_size:
        raise ValueError(f"hop must be in (0, frame_size], got {hop}")
    if len(clip) < frame_size:
        raise SignalTooShortError(f"clip has {len(clip)} samples, frame needs {frame_size}")
    frames = frame_signal(clip.samples, frame_size, hop) * hann(frame_size)
    mags = np.abs(np.fft.rfft(frames, axis=1))
    return Spectrogram(mags, frame_size, hop, clip.sample_rate)


# ---------------------------------------------------------------- features


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, frame_size: int, sample_rate: int) -> np.ndarray:
    """Triangular HTK-mel filters, shape (n_mels, frame_size // 2 + 1)."""
    n_bins = frame_size // 2 + 1
    if n_mels < 1 or n_mels > n_bins:
        raise FilterbankError(f"n_mels={n_mels} outside [1, {n_bins}]")
    bin_hz = np.arange(n_bins) * sample_rate / frame_size
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_hz[None, :] - lo) / (mid - lo)
    falling = (hi - bin_hz[None, :]) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(fb.sum(axis=1) <= 0.0)
    if empty.size:
        raise FilterbankError(
            f"{empty.size} of {n_mels} mel filters cover no FFT bin (frame_size={frame_size})"
        )
    return fb


def log_mel(spec: Spectrogram, n_mels: int = DEFAULT_N_MELS) -> np.ndarray:
    fb = mel_filterbank(n_mels, spec.frame_size, spec.sample_rate)
    energies = (spec.magnitudes ** 2) @ fb.T
    return np.log(np.maximum(energies, LOG_FLOOR))


def extract_features(spec: Spectrogram, n_mels: int = DEFAULT_N_MELS, n_mfcc: int = DEFAULT_N_MFCC) -> np.ndarray:
    """MFCC matrix (frames x n_mfcc): log-mel energies then orthonormal DCT-II."""
    if not 1 <= n_mfcc <= n_mels:
        raise ValueError(f"need 1 <= n_mfcc <= n_mels, got {n_mfcc}, {n_mels}")
    if n_mels > spec.n_bins:
        raise FilterbankError(f"n_mels={n_mels} exceeds {spec.n_bins} bins")
    return scipy.fft.dct(log_mel(spec, n_mels), type=2, norm="ortho", axis=1)[:, :n_mfcc]


@dataclass(frozen=True)
class FeatureConfig:
    frame_size: int = DEFAULT_FRAME
    hop: int = DEFAULT_HOP
    n_mels: int = DEFAULT_N_MELS
    n_mfcc: int = DEFAULT_N_MFCC


def clip_features(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Frame-averaged MFCC vector of one clip."""
    spec = stft(clip, cfg.frame_size, cfg.hop)
    return extract_features(spec, cfg.n_mels, cfg.n_mfcc).mean(axis=0)
