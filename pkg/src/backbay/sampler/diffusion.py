"""Reverse-time backdoor diffusion sampling."""
from __future__ import annotations

import numpy as np

from ..errors import SamplerError
from ..policy import PoisonPolicy
from ..trigger import TriggerSpec, render_trigger
from .bayes import (
    LinearGaussianModel,
    normal_logpdf,
    posterior_predictive_mean,
    sample_weights_posterior,
)
from .fokker_planck import fp_drift
from .mcmc import SamplerConfig


def back_diffusion_step(x_prev, sched, t: int, m):
    """x_prev + alpha(t) m + beta(t) m + sigma(t) m."""
    m = np.asarray(m, dtype=np.float64)
    if np.any((m < 0) | (m > 1)):
        raise ValueError("predictive mean must lie in [0, 1]")
    out = x_prev + (sched.alpha(t) + sched.beta(t) + sched.sigma(t)) * m
    return float(out) if np.ndim(out) == 0 else out


def init_chains(trigger: TriggerSpec, target_len: int, policy: PoisonPolicy, rng: np.random.Generator) -> np.ndarray:
    """x_T ~ Normal(mu, 1) per sample; mu is the prior mean with probability
    ``poison_rate`` and the rendered trigger sample otherwise."""
    trig = render_trigger(trigger, target_len)
    u = rng.random(target_len)
    mu = np.where(u < policy.poison_rate, policy.prior_mean, trig)
    return mu + rng.standard_normal(target_len)


def trigger_weight_data(trigger: TriggerSpec, target_len: int, n: int, rng: np.random.Generator):
    """(amplitude, polarity) pairs drawn from the rendered trigger."""
    trig = render_trigger(trigger, target_len)
    idx = np.sort(rng.choice(target_len, size=min(n, target_len), replace=False))
    return list(zip(trig[idx], (trig[idx] > 0).astype(int)))


def bayes_backdoor_sample(trigger: TriggerSpec, target_len: int, policy: PoisonPolicy, sched,
                          model: LinearGaussianModel, rng: np.random.Generator,
                          n_weight_samples: int = 64, sampler: SamplerConfig = SamplerConfig(),
                          n_weight_data: int = 128) -> np.ndarray:
    """Peak-normalized perturbation of ``target_len`` samples.

    One scalar chain runs per output sample. After :func:`init_chains`, each
    step t = T-1 .. 1 draws x ~ Normal(fp_drift(x, t), 1) and then applies
    :func:`back_diffusion_step` with the posterior-predictive mean of the
    current value under weights sampled from the trigger's polarity data.
    With T = 1 no step is taken and no weights are sampled.
    """
    if target_len <= 0:
        raise ValueError("target_len must be positive")
    if sched.T < 1:
        raise ValueError("schedule needs T >= 1")

    weights = None
    if sched.T >= 2:
        data = trigger_weight_data(trigger, target_len, n_weight_data, rng)
        weights = sample_weights_posterior(data, model, n_weight_samples, rng, sampler)

    x = init_chains(trigger, target_len, policy, rng)
    for t in range(sched.T - 1, 0, -1):
        n1 = sched.beta(t) * rng.standard_normal(target_len)
        n2 = rng.standard_normal(target_len)
        x = fp_drift(x, t, sched, n1, n2) + rng.standard_normal(target_len)
        x = back_diffusion_step(x, sched, t, posterior_predictive_mean(x, weights, model))
        if not np.all(np.isfinite(x)):
            raise SamplerError(f"chains diverged at t={t}; lower diffusion.T")

    peak = np.max(np.abs(x))
    return x / peak if peak > 0 else x


def chain_log_joint(traj, sched) -> float:
    """sum_t log N(x_t; fp_drift(x_{t+1}, t, n1=0, n2=0), 1) over t < len(traj) - 1."""
    x = np.asarray(traj, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("trajectory must be a nonempty 1-D sequence")
    if len(x) - 1 > sched.T:
        raise ValueError(f"trajectory has {len(x) - 1} steps, schedule only {sched.T}")
    total = 0.0
    for t in range(len(x) - 1):
        total += float(normal_logpdf(x[t], fp_drift(x[t + 1], t, sched, 0.0, 0.0), 1.0))
    return total
