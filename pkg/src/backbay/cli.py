"""``backbay`` command line.

    backbay <subcommand> --config cfg.json [--seed N] [--out DIR] [--repeats K]
                         [--paper-lr] [--set key=value ...]

Subcommands: synth-data, ingest, poison, train, evaluate, thd, spectrogram,
run-all. Exit code 0 on success; a failing stage exits with its own code
(see ``pipeline.STAGES``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import pipeline
from .audio import read_wav, stft
from .config import PipelineConfig
from .errors import BackbayError
from .evaluation import dominant_frequency, render_spectrogram_image, thd

SUBCOMMANDS = ("synth-data", "ingest", "poison", "train", "evaluate", "thd", "spectrogram", "run-all")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="backbay", description="Bayesian-diffusion audio backdoor toolkit")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--repeats", type=int, help="experiment repetitions with derived seeds")
    p.add_argument("--paper-lr", action="store_true", help="train with learning rate 0.1")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a dotted config key, e.g. poison.flip_prob=0")
    p.add_argument("--corpus", help="ingest: speaker-directory corpus root")
    p.add_argument("--wav", help="thd/spectrogram: analyse this file instead of pipeline probes")
    p.add_argument("--f0", type=float, help="thd: fundamental in Hz (default: dominant peak)")
    p.add_argument("--harmonics", type=int, default=10, help="thd: number of harmonics")
    p.add_argument("--image", help="spectrogram: output .ppm path for --wav")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> PipelineConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise BackbayError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out:
        overrides["out_dir"] = args.out
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    if args.corpus:
        overrides["dataset.source"] = "corpus"
        overrides["dataset.corpus_dir"] = args.corpus
    cfg = PipelineConfig.load(args.config, overrides)
    return cfg.with_reference_lr() if args.paper_lr else cfg


def _thd_file(args) -> dict:
    clip = read_wav(args.wav)
    f0 = args.f0 or dominant_frequency(clip)
    return {"file": args.wav, "f0": f0, "thd": thd(clip, f0, args.harmonics)}


def dispatch(args) -> object:
    if args.command == "thd" and args.wav:
        return _thd_file(args)
    if args.command == "spectrogram" and args.wav:
        image = args.image or os.path.splitext(args.wav)[0] + ".ppm"
        render_spectrogram_image(stft(read_wav(args.wav)), image)
        return {"image": image}

    try:
        cfg = load_config(args)
    except BackbayError as exc:
        raise pipeline.StageError("config", exc) from exc
    if args.command in ("synth-data", "ingest"):
        if args.command == "ingest" and cfg.dataset["source"] != "corpus":
            raise pipeline.StageError("config", BackbayError("ingest needs --corpus or dataset.corpus_dir"))
        return {"manifest": str(pipeline.stage_data(cfg))}
    if args.command == "poison":
        return {"runs": [str(p) for p in pipeline.stage_poison(cfg)]}
    if args.command == "train":
        return {"models": [str(p) for p in pipeline.stage_train(cfg)]}
    if args.command == "evaluate":
        return _summary(pipeline.stage_evaluate(cfg))
    if args.command == "thd":
        return pipeline.stage_thd(cfg)
    if args.command == "spectrogram":
        return {"images": [str(p) for p in pipeline.stage_spectrograms(cfg)]}
    pipeline.stage_data(cfg)
    pipeline.stage_poison(cfg)
    pipeline.stage_train(cfg)
    return _summary(pipeline.stage_evaluate(cfg))


def _summary(reports) -> dict:
    return {r.model_name: {"ba": r.ba, "asr": r.asr} for r in reports}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = dispatch(args)
    except pipeline.StageError as exc:
        print(f"backbay: {exc}", file=sys.stderr)
        return exc.exit_code
    except (BackbayError, OSError, ValueError) as exc:
        print(f"backbay: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
