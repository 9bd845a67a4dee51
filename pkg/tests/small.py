"""A pipeline config small enough for unit tests."""
SMALL = {
    "dataset": {"n_speakers": 10, "clips_per_speaker": 10, "clip_ms": 300.0},
    "diffusion": {"T": 5},
    "sampler": {"steps": 200, "n_weight_samples": 8},
    "train": {"epochs": 3, "hidden": [16]},
    "eval": {"thd_probes": 2, "spectrogram_pairs": 1},
}


def small(out_dir, **extra):
    import copy
    cfg = copy.deepcopy(SMALL)
    cfg["out_dir"] = str(out_dir)
    for group, values in extra.items():
        if isinstance(values, dict):
            cfg.setdefault(group, {}).update(values)
        else:
            cfg[group] = values
    return cfg
