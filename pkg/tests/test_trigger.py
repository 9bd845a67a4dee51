import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backbay.audio import AudioClip, write_wav
from backbay.errors import SampleRateError, SilentTriggerError
from backbay.trigger import TriggerSpec, load_trigger, render_trigger, synth_clap


def test_clap_length_and_peak():
    spec = synth_clap(100, 15, 0)
    assert len(spec) == 1600
    assert abs(spec.peak - 1.0) <= 1e-6


def test_clap_deterministic():
    a = synth_clap(50, 10, 7).waveform.samples
    b = synth_clap(50, 10, 7).waveform.samples
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != synth_clap(50, 10, 8).waveform.samples.tobytes()


@pytest.mark.parametrize("seed", range(5))
def test_clap_envelope_bound(seed):
    duration, tau = 100.0, 15.0
    x = synth_clap(duration, tau, seed).waveform.samples
    # Envelope-bound oracle: |x(t)| = |noise(t)| e^{-t/tau} / max|noise e^{-t/tau}|. The
    # normalizer is at least the largest |noise| over the first 5 ms (envelope >= e^{-5/tau}),
    # so over the second half |x| <= e^{-(T/2)/tau} * max|noise| / (e^{-5/tau} max_{t<5ms}|noise|).
    noise = np.random.default_rng(seed).standard_normal(len(x))
    slack = np.abs(noise).max() / (np.exp(-5 / tau) * np.abs(noise[:80]).max())
    second_half = np.abs(x[len(x) // 2:]).max()
    assert second_half <= np.exp(-(duration / 2) / tau) * slack
    assert second_half < 0.2


def test_clap_rejects_bad_durations():
    with pytest.raises(ValueError):
        synth_clap(0, 10)
    with pytest.raises(ValueError):
        synth_clap(10, -1)


def test_load_trigger(tmp_path):
    write_wav(AudioClip(0.25 * np.sin(np.linspace(0, 20, 800))), tmp_path / "clap.wav")
    spec = load_trigger(tmp_path / "clap.wav")
    assert spec.peak == pytest.approx(1.0, abs=1e-6)

    write_wav(AudioClip(np.full(100, 0.5), 8000), tmp_path / "slow.wav")
    with pytest.raises(SampleRateError):
        load_trigger(tmp_path / "slow.wav")

    write_wav(AudioClip(np.zeros(100)), tmp_path / "silent.wav")
    with pytest.raises(SilentTriggerError):
        load_trigger(tmp_path / "silent.wav")


def test_render_identity_and_tiling():
    spec = synth_clap(10, 3, 1)
    w = spec.waveform.samples
    n = len(w)
    assert np.array_equal(render_trigger(spec, n), w)
    assert np.array_equal(render_trigger(spec, 2 * n), np.concatenate([w, w]))
    out = render_trigger(spec, n + n // 2)
    for i in range(len(out)):  # index-arithmetic oracle
        assert out[i] == w[i % n]
    with pytest.raises(ValueError):
        render_trigger(spec, 0)


@given(st.integers(1, 5000))
def test_render_length_and_peak(target_len):
    out = render_trigger(synth_clap(7, 2, 3), target_len)
    assert len(out) == target_len
    assert np.max(np.abs(out)) <= 1.0


def test_trigger_spec_rejects_wrong_rate():
    with pytest.raises(SampleRateError):
        TriggerSpec(AudioClip(np.ones(10), 8000))
