"""File-backed pipeline stages.

Each stage reads what the previous one wrote under ``cfg.out_dir``, so the
individual CLI subcommands and ``run-all`` produce the same artifacts:

    dataset/                       clean corpus (manifest.jsonl + wav/)
    <run>/trigger/                 clap.wav, perturbation.wav
    <run>/train_poisoned/          poisoned training split
    <run>/test_clean/, test_triggered/
    <run>/model.bbdm, baseline.bbdm, folds/fold_<i>.bbdm
    <run>/spectrograms/*.ppm, <run>/metrics.json
    report.csv, report.txt, report.json

``<run>`` is ``out_dir`` itself for a single repeat and ``repeat_<r>``
otherwise.
"""
from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .audio import SAMPLE_RATE, AudioClip, extract_features, read_wav, stft, write_wav
from .config import PipelineConfig
from .data import ingest_corpus, stratified_split, synth_speaker_dataset
from .errors import BackbayError
from .evaluation import (
    AttackReport,
    attack_success_rate,
    benign_accuracy,
    dominant_frequency,
    render_spectrogram_image,
    thd,
    write_report,
)
from .poison import attack_objective, load_dataset, poison_dataset, save_dataset, trigger_all
from .rng import derive_seed, make_rng
from .sampler import bayes_backdoor_sample
from .trigger import TriggerSpec, load_trigger, synth_clap
from .victim import forward_probs, kfold_cv, load_model, save_model, train

log = logging.getLogger(__name__)

# stage ids double as CLI exit codes
STAGES = {"config": 2, "data": 3, "poison": 4, "train": 5, "evaluate": 6, "thd": 7, "spectrogram": 8}

_SPLIT, _SAMPLER, _POISON, _TRAIN, _DATA = 2, 3, 4, 5, 1


class StageError(BackbayError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.exit_code = STAGES[stage]
        self.cause = cause


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (BackbayError, OSError, ValueError) as exc:
                raise StageError(name, exc) from exc
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


def run_seed(cfg: PipelineConfig, r: int) -> int:
    return cfg.seed if cfg.repeats == 1 else derive_seed(cfg.seed, 100 + r)


def run_dir(cfg: PipelineConfig, r: int) -> Path:
    return cfg.out_dir if cfg.repeats == 1 else cfg.out_dir / f"repeat_{r}"


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ stages


@_stage("data")
def stage_data(cfg: PipelineConfig) -> Path:
    """Build the synthetic corpus or ingest a speaker-directory corpus."""
    d = cfg.dataset
    if d["source"] == "corpus":
        if not d["corpus_dir"]:
            raise ValueError("dataset.corpus_dir is required for source 'corpus'")
        ds = ingest_corpus(d["corpus_dir"])
    else:
        ds = synth_speaker_dataset(int(d["n_speakers"]), int(d["clips_per_speaker"]), float(d["clip_ms"]),
                                   derive_seed(cfg.seed, _DATA))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    cfg.dump(cfg.out_dir / "config.json")
    return save_dataset(ds, cfg.out_dir / "dataset", cfg.seed, cfg.config_hash)


def make_trigger(cfg: PipelineConfig) -> TriggerSpec:
    t = cfg.trigger
    if t["path"]:
        return load_trigger(t["path"])
    return synth_clap(float(t["duration_ms"]), float(t["decay_tau_ms"]), int(t["seed"]))


class Perturbation:
    """Fixed diffusion-sampled perturbation, tiled to any requested length."""

    def __init__(self, samples: np.ndarray):
        self.samples = np.asarray(samples, dtype=np.float64)

    def __call__(self, n: int) -> np.ndarray:
        reps = -(-n // len(self.samples))
        return np.tile(self.samples, reps)[:n]


@_stage("poison")
def stage_poison(cfg: PipelineConfig) -> list:
    """Split, sample the perturbation and poison the training split per repeat."""
    ds = load_dataset(cfg.out_dir / "dataset")
    policy = cfg.policy
    if policy.dirty_label >= ds.n_classes:
        raise ValueError(f"dirty label {policy.dirty_label} needs at least {policy.dirty_label + 1} classes")
    trigger = make_trigger(cfg)
    clip_len = max(len(c) for c in ds.clips)
    out = []
    for r in range(cfg.repeats):
        seed, rd = run_seed(cfg, r), run_dir(cfg, r)
        train_idx, test_idx = stratified_split(ds, float(cfg.dataset["test_frac"]), derive_seed(seed, _SPLIT))
        pert = bayes_backdoor_sample(trigger, clip_len, policy, cfg.schedule, cfg.bayes_model,
                                     make_rng(derive_seed(seed, _SAMPLER)), cfg.n_weight_samples, cfg.sampler)
        (rd / "trigger").mkdir(parents=True, exist_ok=True)
        write_wav(trigger.waveform, rd / "trigger" / "clap.wav")
        write_wav(AudioClip(pert), rd / "trigger" / "perturbation.wav")
        # poison with the stored (PCM-quantized) perturbation so later stages see the same one
        perturb = Perturbation(read_wav(rd / "trigger" / "perturbation.wav").samples)

        train_ds, test_ds = ds.subset(train_idx), ds.subset(test_idx)
        poisoned = poison_dataset(train_ds, policy, perturb, make_rng(derive_seed(seed, _POISON)))
        save_dataset(poisoned, rd / "train_poisoned", seed, cfg.config_hash)
        save_dataset(test_ds, rd / "test_clean", seed, cfg.config_hash)
        save_dataset(trigger_all(test_ds, policy, perturb), rd / "test_triggered", seed, cfg.config_hash)
        log.info("repeat %d: %d of %d training items poisoned", r, int(poisoned.poison_mask.sum()), len(poisoned))
        out.append(rd)
    return out


def _clean_train(cfg: PipelineConfig, rd: Path):
    """The clean counterparts of the poisoned training split."""
    poisoned = load_dataset(rd / "train_poisoned")
    clean = load_dataset(cfg.out_dir / "dataset")
    by_name = {n: i for i, n in enumerate(clean.names)}
    return poisoned, clean.subset([by_name[n] for n in poisoned.names])


@_stage("train")
def stage_train(cfg: PipelineConfig) -> list:
    """Train the backdoored victim (and optional clean baseline / k folds)."""
    out = []
    for r in range(cfg.repeats):
        seed, rd = run_seed(cfg, r), run_dir(cfg, r)
        tcfg = replace(cfg.train_config, seed=derive_seed(seed, _TRAIN))
        meta = {"seed": cfg.seed, "run_seed": seed, "config_hash": cfg.config_hash}
        poisoned, clean = _clean_train(cfg, rd)
        save_model(train(poisoned, tcfg, cfg.hidden, cfg.features), rd / "model.bbdm", meta)
        if cfg.eval["baseline"]:
            save_model(train(clean, tcfg, cfg.hidden, cfg.features), rd / "baseline.bbdm", meta)
        k = int(cfg.eval["kfold"])
        if k:
            (rd / "folds").mkdir(exist_ok=True)
            records = kfold_cv(poisoned, k, tcfg, cfg.hidden, cfg.features)
            for rec in records:
                save_model(rec.model, rd / "folds" / f"fold_{rec.fold}.bbdm", {**meta, "fold": rec.fold})
            _write_json(rd / "folds" / "cv.json",
                        [{"fold": rec.fold, "validation_accuracy": rec.benign_accuracy,
                          "n_train": len(rec.train_idx), "n_test": len(rec.test_idx)} for rec in records])
        out.append(rd / "model.bbdm")
    return out


def probe_thd(clean: AudioClip, poisoned: AudioClip, n_harmonics: int) -> dict:
    """THD of a clean/backdoored pair at the clean clip's dominant frequency."""
    f0 = dominant_frequency(clean)
    n = max(1, min(n_harmonics, int((SAMPLE_RATE / 2 - 1) // f0)))
    return {"f0": f0, "n_harmonics": n, "clean": thd(clean, f0, n), "poisoned": thd(poisoned, f0, n)}


def _probe_indices(ds, n: int) -> list:
    seen, idx = set(), []
    for i, y in enumerate(ds.labels.tolist()):
        if y not in seen:
            seen.add(y)
            idx.append(i)
        if len(idx) == n:
            break
    return idx


@_stage("thd")
def stage_thd(cfg: PipelineConfig, r: int = 0) -> dict:
    rd = run_dir(cfg, r)
    clean, trig = load_dataset(rd / "test_clean"), load_dataset(rd / "test_triggered")
    return {clean.names[i]: probe_thd(clean.clips[i], trig.clips[i], int(cfg.eval["thd_harmonics"]))
            for i in _probe_indices(clean, int(cfg.eval["thd_probes"]))}


@_stage("spectrogram")
def stage_spectrograms(cfg: PipelineConfig, r: int = 0) -> list:
    rd = run_dir(cfg, r)
    clean, trig = load_dataset(rd / "test_clean"), load_dataset(rd / "test_triggered")
    fc = cfg.features
    (rd / "spectrograms").mkdir(exist_ok=True)
    paths = []
    for i in _probe_indices(clean, int(cfg.eval["spectrogram_pairs"])):
        for tag, ds in (("clean", clean), ("poisoned", trig)):
            path = rd / "spectrograms" / f"{clean.names[i]}_{tag}.ppm"
            render_spectrogram_image(stft(ds.clips[i], fc.frame_size, fc.hop), path)
            paths.append(path)
    return paths


def _evaluate_run(cfg: PipelineConfig, r: int) -> dict:
    rd = run_dir(cfg, r)
    target = cfg.policy.dirty_label
    clean_test, trig_test = load_dataset(rd / "test_clean"), load_dataset(rd / "test_triggered")
    model, _ = load_model(rd / "model.bbdm")
    metrics = {
        "run_seed": run_seed(cfg, r),
        "ba": benign_accuracy(model, clean_test),
        "asr": attack_success_rate(model, trig_test, target),
    }
    if (rd / "baseline.bbdm").exists():
        base, _ = load_model(rd / "baseline.bbdm")
        metrics["baseline_ba"] = benign_accuracy(base, clean_test)
        metrics["baseline_asr"] = attack_success_rate(base, trig_test, target)
    folds = sorted((rd / "folds").glob("fold_*.bbdm")) if (rd / "folds").is_dir() else []
    metrics["folds"] = []
    for path in folds:
        fm, meta = load_model(path)
        metrics["folds"].append({"fold": meta["fold"], "ba": benign_accuracy(fm, clean_test),
                                 "asr": attack_success_rate(fm, trig_test, target)})

    poisoned, clean = _clean_train(cfg, rd)
    hit = np.flatnonzero(poisoned.poison_mask)
    if hit.size:
        total, p_loss, b_loss, dist = attack_objective(
            lambda c: forward_probs(model, _features(model, c)), clean.subset(hit), poisoned.subset(hit), cfg.objective)
        metrics["objective"] = {"total": total, "poison_loss": p_loss, "benign_loss": b_loss, "distance": dist}
    metrics["n_poisoned_train"] = int(hit.size)
    metrics["thd"] = stage_thd(cfg, r)
    stage_spectrograms(cfg, r)
    _write_json(rd / "metrics.json", metrics)
    return metrics


def _features(model, clip):
    fc = model.feature_config
    return extract_features(stft(clip, fc.frame_size, fc.hop), fc.n_mels, fc.n_mfcc)


def _aggregate(name: str, values_ba, values_asr, cfg, thd_map=None, folds=None) -> AttackReport:
    ba, asr = np.asarray(values_ba), np.asarray(values_asr)
    return AttackReport(name, float(ba.mean()), float(asr.mean()), float(ba.std()), float(asr.std()),
                        len(ba), folds or [], thd_map or {}, cfg.hashed_view(), cfg.seed, cfg.config_hash)


@_stage("evaluate")
def stage_evaluate(cfg: PipelineConfig) -> list:
    """Metrics per repeat, aggregated into report.csv / report.txt / report.json."""
    runs = [_evaluate_run(cfg, r) for r in range(cfg.repeats)]
    name = cfg.eval["model_name"]
    reports = [_aggregate(f"{name} (backdoored)", [m["ba"] for m in runs], [m["asr"] for m in runs], cfg,
                          runs[0]["thd"], [f for m in runs for f in m["folds"]])]
    if all("baseline_ba" in m for m in runs):
        reports.append(_aggregate(f"{name} (clean baseline)", [m["baseline_ba"] for m in runs],
                                  [m["baseline_asr"] for m in runs], cfg))
    if runs[0]["folds"]:
        reports.append(_aggregate(f"{name} (k-fold)", [f["ba"] for m in runs for f in m["folds"]],
                                  [f["asr"] for m in runs for f in m["folds"]], cfg))
    write_report(reports, cfg.out_dir / "report.csv")
    _write_json(cfg.out_dir / "report.json", {
        "seed": cfg.seed,
        "config_hash": cfg.config_hash,
        "config": cfg.hashed_view(),
        "reports": [{"model": r.model_name, "ba": r.ba, "asr": r.asr, "ba_std": r.ba_std,
                     "asr_std": r.asr_std, "runs": r.runs} for r in reports],
        "runs": runs,
    })
    return reports


def run_pipeline(cfg: PipelineConfig) -> AttackReport:
    """data -> poison -> train -> evaluate; returns the backdoored-model report."""
    stage_data(cfg)
    stage_poison(cfg)
    stage_train(cfg)
    return stage_evaluate(cfg)[0]
