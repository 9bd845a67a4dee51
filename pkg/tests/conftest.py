import numpy as np
import pytest

from backbay.audio import SAMPLE_RATE, AudioClip


def sine(freq, n, amp=0.5, sr=SAMPLE_RATE, phase=0.0):
    t = np.arange(n) / sr
    return amp * np.sin(2 * np.pi * freq * t + phase)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tone_clip():
    return AudioClip(sine(1000.0, 8000))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])
