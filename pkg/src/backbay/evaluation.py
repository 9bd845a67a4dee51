"""Attack metrics, THD, spectrogram images and BA/ASR report tables."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .audio import AudioClip, Spectrogram, hann
from .errors import DatasetError, NoToneError
from .victim import MlpClassifier, predict_many

REPORT_COLUMNS = ("Model", "Benign Accuracy (BA)", "Attack Success Rate (ASR)")
EXTRA_COLUMNS = ("BA std", "ASR std", "Runs", "Seed", "Config hash")

Predictor = Union[MlpClassifier, Callable[[AudioClip], int]]


def _predictions(model: Predictor, clips) -> np.ndarray:
    if isinstance(model, MlpClassifier):
        return predict_many(model, clips)
    return np.array([int(model(c)) for c in clips], dtype=np.int64)


def benign_accuracy(model: Predictor, clean_test) -> float:
    """Fraction of clean items predicted as their own label.

    ``model`` is a trained classifier or any callable mapping a clip to a label.
    """
    if len(clean_test) == 0:
        raise DatasetError("benign accuracy needs a nonempty test set")
    return float(np.mean(_predictions(model, clean_test.clips) == clean_test.labels))


def attack_success_rate(model: Predictor, poisoned_test, target: int) -> float:
    """Fraction of triggered items predicted as ``target``."""
    if len(poisoned_test) == 0:
        raise DatasetError("attack success rate needs a nonempty test set")
    return float(np.mean(_predictions(model, poisoned_test.clips) == target))


# --------------------------------------------------------------------- THD

THD_WINDOW = 4096
# DFT length is window * OVERSAMPLE; keeps Hann scalloping loss under 0.3%
OVERSAMPLE = 8


def _power_spectrum(x: np.ndarray, window: int) -> np.ndarray:
    """Hann-windowed power summed over consecutive frames; the last partial
    frame is zero-filled, so appending zeros only adds all-zero frames."""
    n_frames = -(-len(x) // window)
    frames = np.zeros((n_frames, window))
    frames.reshape(-1)[: len(x)] = x
    spec = np.fft.rfft(frames * hann(window), n=window * OVERSAMPLE, axis=1)
    return np.sum(np.abs(spec) ** 2, axis=0)


def _peak_near(power: np.ndarray, freq: float, sample_rate: int, window: int) -> float:
    k = int(round(freq * window * OVERSAMPLE / sample_rate))
    lo, hi = max(k - 1, 0), min(k + 1, len(power) - 1)
    return float(np.sqrt(power[lo:hi + 1].max()))


def thd(clip: AudioClip, f0: float, n_harmonics: int = 10, window: int = THD_WINDOW) -> float:
    """sqrt(sum_{n=2..N} |X_n|^2) / |X_1| with peak-picked harmonic magnitudes."""
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be >= 1")
    if f0 <= 0 or f0 * n_harmonics >= clip.sample_rate / 2:
        raise ValueError(f"f0 * n_harmonics = {f0 * n_harmonics} Hz is not below Nyquist")
    if len(clip) < window:
        raise ValueError(f"clip of {len(clip)} samples is shorter than the {window}-sample window")
    power = _power_spectrum(clip.samples, window)
    mags = np.array([_peak_near(power, n * f0, clip.sample_rate, window) for n in range(1, n_harmonics + 1)])
    # compare in per-frame amplitude units so the 1e-9 floor is meaningful
    if mags[0] / (window / 4) < 1e-9:
        raise NoToneError(f"no energy at f0={f0} Hz")
    return float(np.sqrt(np.sum(mags[1:] ** 2)) / mags[0])


def dominant_frequency(clip: AudioClip, window: int = THD_WINDOW) -> float:
    power = _power_spectrum(clip.samples, window)
    power[0] = 0.0
    return float(np.argmax(power) * clip.sample_rate / (window * OVERSAMPLE))


# ------------------------------------------------------------ spectrograms

DYNAMIC_RANGE_DB = 80.0


def heat_colormap(v: np.ndarray) -> np.ndarray:
    """Map [0, 1] to black -> red -> yellow -> white RGB bytes."""
    v = np.clip(v, 0.0, 1.0)
    r = np.clip(3.0 * v, 0, 1)
    g = np.clip(3.0 * v - 1.0, 0, 1)
    b = np.clip(3.0 * v - 2.0, 0, 1)
    return np.rint(np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


def spectrogram_pixels(spec: Spectrogram) -> np.ndarray:
    """RGB array of shape (bins, frames, 3), low frequencies in the last row."""
    mags = spec.magnitudes
    if mags.size == 0:
        raise ValueError("spectrogram is empty")
    db = 20.0 * np.log10(np.maximum(mags, 1e-10))
    top = db.max()
    scaled = (db - (top - DYNAMIC_RANGE_DB)) / DYNAMIC_RANGE_DB
    return heat_colormap(scaled.T[::-1])


def render_spectrogram_image(spec: Spectrogram, path) -> None:
    """Binary PPM (P6), one pixel per (frame, bin)."""
    pixels = spectrogram_pixels(spec)
    h, w, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_ppm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    data = parts[4]
    return np.frombuffer(data[: w * h * 3], dtype=np.uint8).reshape(h, w, 3)


# ----------------------------------------------------------------- reports


@dataclass
class AttackReport:
    model_name: str
    ba: float
    asr: float
    ba_std: float = 0.0
    asr_std: float = 0.0
    runs: int = 1
    folds: list = field(default_factory=list)
    thd: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int | None = None
    config_hash: str = ""

    def __post_init__(self):
        for name in ("ba", "asr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def _pct(v: float) -> str:
    return f"{100.0 * v:.2f}%"


def report_table(reports: Sequence[AttackReport]) -> str:
    rows = [REPORT_COLUMNS]
    for r in reports:
        ba, asr = _pct(r.ba), _pct(r.asr)
        if r.runs > 1:
            ba += f" ± {100.0 * r.ba_std:.2f}"
            asr += f" ± {100.0 * r.asr_std:.2f}"
        rows.append((r.model_name, ba, asr))
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = []
    for j, row in enumerate(rows):
        lines.append("  ".join([row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]))
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report(reports: Sequence[AttackReport], path) -> tuple:
    """Write ``<stem>.csv`` (raw fractions) and ``<stem>.txt`` (percent table).

    ``path`` may name either file or the bare stem. Returns both paths.
    """
    if not reports:
        raise ValueError("no reports to write")
    stem = Path(path)
    if stem.suffix in (".csv", ".txt"):
        stem = stem.with_suffix("")
    csv_path, txt_path = stem.with_suffix(".csv"), stem.with_suffix(".txt")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS + EXTRA_COLUMNS)
    for r in reports:
        writer.writerow([r.model_name, repr(float(r.ba)), repr(float(r.asr)), repr(float(r.ba_std)),
                         repr(float(r.asr_std)), r.runs, "" if r.seed is None else r.seed, r.config_hash])
    csv_path.write_text(buf.getvalue())
    txt_path.write_text(report_table(reports))
    return csv_path, txt_path


def read_report(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append(AttackReport(
            model_name=row["Model"],
            ba=float(row["Benign Accuracy (BA)"]),
            asr=float(row["Attack Success Rate (ASR)"]),
            ba_std=float(row.get("BA std") or 0.0),
            asr_std=float(row.get("ASR std") or 0.0),
            runs=int(row.get("Runs") or 1),
            seed=int(row["Seed"]) if row.get("Seed") else None,
            config_hash=row.get("Config hash") or "",
        ))
    return out
