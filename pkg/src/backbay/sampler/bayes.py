"""State-space posterior and logistic posterior-predictive estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit

from ..errors import SamplerError
from .mcmc import SamplerConfig, metropolis_sample, thin

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LinearGaussianModel:
    """1-D random walk observed in Gaussian noise, plus a logistic weight prior."""

    transition_std: float = 1.0
    observation_std: float = 1.0
    weight_prior_mean: float = 0.0
    weight_prior_std: float = 1.0

    def __post_init__(self):
        for name in ("transition_std", "observation_std", "weight_prior_std"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def normal_logpdf(x, mean, std):
    z = (np.asarray(x, dtype=np.float64) - mean) / std
    return -0.5 * z * z - math.log(std) - _LOG_SQRT_2PI


def posterior_log_density(states: Sequence[float], obs: Sequence[float], model: LinearGaussianModel) -> float:
    """Unnormalized log P(x | y, theta): transition plus observation terms.

    ``states`` holds x_0..x_T and ``obs`` holds y_1..y_T.
    """
    x = np.asarray(states, dtype=np.float64)
    y = np.asarray(obs, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y) + 1:
        raise ValueError(f"need len(states) == len(obs) + 1, got {len(x)} and {len(y)}")
    if len(y) == 0:
        return 0.0
    trans = normal_logpdf(x[1:], x[:-1], model.transition_std)
    emit = normal_logpdf(y, x[1:], model.observation_std)
    return float(np.sum(trans + emit))


def logistic_likelihood(x_star, w):
    """P(y = 1 | x, w) = 1 / (1 + exp(-w x))."""
    return expit(np.multiply(w, x_star))


def posterior_predictive_mean(x_star, weight_samples, model: LinearGaussianModel | None = None):
    """Monte Carlo average of the logistic likelihood over weight draws.

    ``x_star`` may be an array; the result then has its shape.
    """
    w = np.asarray(weight_samples, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("weight_samples is empty")
    x = np.asarray(x_star, dtype=np.float64)
    probs = expit(np.multiply.outer(x, w))
    out = probs.mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def weight_log_posterior(w: float, xs: np.ndarray, ys: np.ndarray, model: LinearGaussianModel) -> float:
    prior = float(normal_logpdf(w, model.weight_prior_mean, model.weight_prior_std))
    if len(xs) == 0:
        return prior
    z = w * xs
    return prior + float(np.sum(np.where(ys == 1, log_expit(z), log_expit(-z))))


def sample_weights_posterior(data, model: LinearGaussianModel, n: int, rng: np.random.Generator,
                             sampler: SamplerConfig = SamplerConfig()) -> np.ndarray:
    """``n`` Metropolis draws of the logistic weight given (x, y in {0,1}) pairs.

    The chain is run for max(sampler.steps, n / (1 - burn_in)) steps from the
    prior mean, the burn-in prefix is dropped and the rest thinned evenly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pairs = list(data)
    xs = np.array([p[0] for p in pairs], dtype=np.float64)
    ys = np.array([p[1] for p in pairs], dtype=np.int64)
    if np.any((ys != 0) & (ys != 1)):
        raise ValueError("labels must be 0 or 1")
    n_steps = max(sampler.steps, math.ceil(n / (1.0 - sampler.burn_in_frac)) + 1)
    chain = metropolis_sample(
        lambda w: weight_log_posterior(w, xs, ys, model),
        model.weight_prior_mean, n_steps, sampler.proposal_std, rng,
    )
    draws = thin(chain, n, sampler.burn_in_frac)
    if not np.all(np.isfinite(draws)):
        raise SamplerError("weight posterior chain produced non-finite draws")
    return draws
