import numpy as np
import pytest

from backbay.audio import AudioClip
from backbay.errors import ShapeError
from backbay.poison import (
    AttackObjectiveConfig,
    LabeledDataset,
    load_dataset,
    poison_dataset,
    replace_label,
    save_dataset,
)
from backbay.policy import PoisonPolicy
from backbay.rng import make_rng


def toy_dataset(n=40, n_classes=10, length=64, seed=0):
    rng = np.random.default_rng(seed)
    clips = [AudioClip(rng.uniform(-0.5, 0.5, length)) for _ in range(n)]
    return LabeledDataset(clips, np.arange(n) % n_classes, n_classes)


def flat(n):
    return np.full(n, 0.5)


def test_replace_label_rules():
    pol = PoisonPolicy(target_label=3, dirty_label=9, replace_prob=1.0)
    assert replace_label(4, pol, make_rng(0)) == 4
    assert replace_label(3, pol, make_rng(0)) == 9
    never = PoisonPolicy(target_label=3, dirty_label=9, replace_prob=0.0)
    assert replace_label(3, never, make_rng(0)) == 3


def test_policy_invariants():
    with pytest.raises(ValueError):
        PoisonPolicy(target_label=9, dirty_label=9)
    with pytest.raises(ValueError):
        PoisonPolicy(flip_prob=1.5)
    with pytest.raises(ValueError):
        PoisonPolicy(trigger_alpha=-0.1)


def test_zero_flip_is_identity():
    ds = toy_dataset()
    out = poison_dataset(ds, PoisonPolicy(flip_prob=0.0), flat, make_rng(1))
    assert out.identical(ds)
    assert not out.poison_mask.any()


def test_full_flip_counts():
    ds = toy_dataset(n=100)
    pol = PoisonPolicy(target_label=2, dirty_label=9, flip_prob=1.0, replace_prob=1.0, trigger_alpha=0.1)
    out = poison_dataset(ds, pol, flat, make_rng(2))
    # counting oracle
    n_target = sum(1 for y in ds.labels if y == 2)
    assert sum(1 for y0, y1 in zip(ds.labels, out.labels) if y0 == 2 and y1 == 9) == n_target
    assert all(y1 == y0 for y0, y1 in zip(ds.labels, out.labels) if y0 != 2)
    assert all(not a.identical(b) for a, b in zip(ds.clips, out.clips))
    assert out.poison_mask.all()


def test_dirty_label_nine_with_all_targets():
    ds = toy_dataset(n=50)
    out = poison_dataset(ds, PoisonPolicy(flip_prob=1.0), flat, make_rng(3))
    assert np.all(out.labels == 9)


def test_mask_iff_changed_and_shape_preserved():
    ds = toy_dataset(n=200)
    out = poison_dataset(ds, PoisonPolicy(flip_prob=0.3, target_label=(1, 2)), flat, make_rng(4))
    assert len(out) == len(ds)
    for a, b, ya, yb, m in zip(ds.clips, out.clips, ds.labels, out.labels, out.poison_mask):
        assert len(a) == len(b) and a.sample_rate == b.sample_rate
        assert m == (not a.identical(b) or ya != yb)
        assert np.all(np.abs(b.samples) <= 1.0)


def test_alpha_zero_keeps_audio():
    ds = toy_dataset()
    out = poison_dataset(ds, PoisonPolicy(flip_prob=1.0, trigger_alpha=0.0), flat, make_rng(5))
    assert all(a.identical(b) for a, b in zip(ds.clips, out.clips))
    assert np.all(out.labels == 9)


def test_clamp_keeps_range():
    ds = toy_dataset()
    out = poison_dataset(ds, PoisonPolicy(flip_prob=1.0, trigger_alpha=5.0), flat, make_rng(6))
    assert max(np.abs(c.samples).max() for c in out.clips) == 1.0


def test_flip_fraction_statistics():
    n, fp = 4000, 0.2
    ds = toy_dataset(n=n, length=8)
    out = poison_dataset(ds, PoisonPolicy(flip_prob=fp), flat, make_rng(7))
    frac = out.poison_mask.mean()
    assert abs(frac - fp) <= 3 * np.sqrt(fp * (1 - fp) / n)


def test_generator_length_mismatch():
    with pytest.raises(ShapeError):
        poison_dataset(toy_dataset(), PoisonPolicy(flip_prob=1.0), lambda n: np.zeros(n + 1), make_rng(0))


def _fixed_probs(table):
    return lambda clip: table[round(float(clip.samples[0]), 3)]


def test_objective_by_hand():
    from backbay.poison import attack_objective
    benign = LabeledDataset([AudioClip([0.1, 0.0]), AudioClip([0.2, 0.0])], [0, 1], 2)
    poisoned = LabeledDataset([AudioClip([0.3, 0.0]), AudioClip([0.2, 0.0])], [1, 1], 2)
    table = {0.1: np.array([0.8, 0.2]), 0.2: np.array([0.4, 0.6]), 0.3: np.array([0.1, 0.9])}
    f = _fixed_probs(table)
    total, pl, bl, dist = attack_objective(f, benign, poisoned, AttackObjectiveConfig(2.0, 10.0))
    want_pl = (-np.log(0.9) - np.log(0.6)) / 2
    want_bl = (-np.log(0.8) - np.log(0.6)) / 2
    want_d = ((0.2 ** 2) / 2 + 0.0) / 2
    assert pl == pytest.approx(want_pl)
    assert bl == pytest.approx(want_bl)
    assert dist == pytest.approx(want_d)
    assert total == pytest.approx(want_pl + 2 * want_bl + 10 * want_d)

    total0, pl0, _, _ = attack_objective(f, benign, poisoned, AttackObjectiveConfig(0.0, 0.0))
    assert total0 == pl0
    _, _, _, d_same = attack_objective(f, benign, benign)
    assert d_same == 0.0
    with pytest.raises(ShapeError):
        attack_objective(f, benign, poisoned.subset([0]))


def test_linf_distance():
    from backbay.poison import attack_objective
    a = LabeledDataset([AudioClip([0.1, 0.0])], [0], 2)
    b = LabeledDataset([AudioClip([0.1, -0.4])], [0], 2)
    _, _, _, d = attack_objective(lambda c: np.array([0.5, 0.5]), a, b, AttackObjectiveConfig(distance="linf"))
    assert d == pytest.approx(0.4)


def test_manifest_round_trip(tmp_path):
    ds = poison_dataset(toy_dataset(n=30), PoisonPolicy(flip_prob=0.5), flat, make_rng(8))
    save_dataset(ds, tmp_path / "d", seed=11, config_hash="abc")
    back = load_dataset(tmp_path / "d")
    assert np.array_equal(back.labels, ds.labels)
    assert np.array_equal(back.orig_labels, ds.orig_labels)
    assert np.array_equal(back.poison_mask, ds.poison_mask)
    for a, b in zip(ds.clips, back.clips):
        assert np.max(np.abs(a.samples - b.samples)) <= 1 / 32768
    import json
    first = json.loads((tmp_path / "d" / "manifest.jsonl").read_text().splitlines()[0])
    assert {"path", "original_label", "final_label", "poisoned", "seed", "config_hash"} <= set(first)
    assert first["seed"] == 11
