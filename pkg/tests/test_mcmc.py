import numpy as np
import pytest

from backbay.errors import SamplerError
from backbay.rng import make_rng
from backbay.sampler import metropolis_sample


def std_normal(x):
    return -0.5 * x * x


def test_zero_proposal_is_constant():
    chain = metropolis_sample(std_normal, 0.7, 500, 0.0, make_rng(0))
    assert np.all(chain == 0.7)


def test_uniform_target_accepts_everything():
    chain, acc = metropolis_sample(lambda x: 0.0, 0.0, 2000, 1.0, make_rng(1), return_acceptance=True)
    assert acc == 1.0
    assert np.all(np.diff(chain) != 0)


def test_standard_normal_moments():
    chain = metropolis_sample(std_normal, 0.0, 100_000, 2.4, make_rng(2))
    assert abs(chain.mean()) < 0.05
    assert abs(chain.var() - 1.0) < 0.1


def test_deterministic():
    a = metropolis_sample(std_normal, 0.0, 1000, 1.0, make_rng(3))
    b = metropolis_sample(std_normal, 0.0, 1000, 1.0, make_rng(3))
    assert a.tobytes() == b.tobytes()


def test_non_finite_init_rejected():
    with pytest.raises(SamplerError):
        metropolis_sample(lambda x: -np.inf, 0.0, 10, 1.0, make_rng(0))
