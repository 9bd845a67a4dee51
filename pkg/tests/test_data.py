import numpy as np
import pytest

from backbay.audio import AudioClip, clip_features, read_wav, write_wav
from backbay.data import ingest_corpus, stratified_split, synth_speaker_dataset
from backbay.errors import DatasetError, EmptyCorpusError, SampleRateError
from conftest import sine


def test_synthetic_labels_and_shape():
    ds = synth_speaker_dataset(10, 4, 100.0, seed=0)
    assert len(ds) == 40
    assert set(ds.labels.tolist()) == set(range(10))
    assert all(len(c) == 1600 for c in ds.clips)
    assert ds.names[5] == "spk001_0001"


def test_synthetic_deterministic_and_seeded():
    a = synth_speaker_dataset(3, 5, 50.0, seed=7)
    b = synth_speaker_dataset(3, 5, 50.0, seed=7)
    c = synth_speaker_dataset(3, 5, 50.0, seed=8)
    assert a.identical(b)
    assert not a.identical(c)


def test_synthetic_on_pcm_grid(tmp_path):
    ds = synth_speaker_dataset(2, 2, 50.0, seed=0)
    write_wav(ds.clips[0], tmp_path / "x.wav")
    assert read_wav(tmp_path / "x.wav").identical(ds.clips[0])


def test_speakers_are_separable_by_mfcc():
    ds = synth_speaker_dataset(10, 20, 500.0, seed=3)
    feats = np.stack([clip_features(c) for c in ds.clips])
    tr, te = stratified_split(ds, 0.5, seed=0)
    cents = np.stack([feats[tr][ds.labels[tr] == k].mean(axis=0) for k in range(10)])
    d = ((feats[te][:, None, :] - cents[None]) ** 2).sum(axis=-1)
    assert np.mean(np.argmin(d, axis=1) == ds.labels[te]) >= 0.9


def test_synthetic_rejects_bad_sizes():
    with pytest.raises(DatasetError):
        synth_speaker_dataset(1, 5)
    with pytest.raises(DatasetError):
        synth_speaker_dataset(3, 0)


def _write_corpus(root, speakers=("alice", "bob"), per=3, sr=16000):
    for s, name in enumerate(speakers):
        d = root / name
        d.mkdir(parents=True)
        for j in range(per):
            write_wav(AudioClip(sine(200.0 * (s + 1) + j, 800), sr), d / f"u{j}.wav")


def test_ingest_corpus(tmp_path):
    _write_corpus(tmp_path)
    ds = ingest_corpus(tmp_path)
    assert len(ds) == 6
    assert ds.labels.tolist() == [0, 0, 0, 1, 1, 1]
    assert ds.n_classes == 2
    assert ds.names[0] == "alice__u0"


def test_ingest_empty_and_bad_rate(tmp_path):
    with pytest.raises(EmptyCorpusError):
        ingest_corpus(tmp_path)
    with pytest.raises(EmptyCorpusError):
        ingest_corpus(tmp_path / "missing")
    _write_corpus(tmp_path)
    bad = tmp_path / "bob" / "odd.wav"
    write_wav(AudioClip(np.zeros(100), 22050), bad)
    with pytest.raises(SampleRateError, match="odd.wav"):
        ingest_corpus(tmp_path)


def test_stratified_split():
    ds = synth_speaker_dataset(4, 10, 20.0, seed=0)
    tr, te = stratified_split(ds, 0.2, seed=1)
    assert not set(tr) & set(te)
    assert len(tr) + len(te) == len(ds)
    assert all(np.sum(ds.labels[te] == k) == 2 for k in range(4))
    tr2, te2 = stratified_split(ds, 0.2, seed=1)
    assert np.array_equal(te, te2)
    with pytest.raises(ValueError):
        stratified_split(ds, 1.0, seed=0)
