"""Stochastic machinery: Fokker-Planck drift and density evolution,
Metropolis sampling, Bayesian posterior estimates and backdoor diffusion."""

from .bayes import (
    LinearGaussianModel,
    posterior_log_density,
    posterior_predictive_mean,
    sample_weights_posterior,
)
from .diffusion import back_diffusion_step, bayes_backdoor_sample, chain_log_joint
from .fokker_planck import DensityGrid, evolve_density, fp_drift, fp_nondec_rhs
from .mcmc import SamplerConfig, metropolis_sample
from .schedule import DiffusionSchedule, FpNonDecParams

__all__ = [
    "DensityGrid",
    "DiffusionSchedule",
    "FpNonDecParams",
    "LinearGaussianModel",
    "SamplerConfig",
    "back_diffusion_step",
    "bayes_backdoor_sample",
    "chain_log_joint",
    "evolve_density",
    "fp_drift",
    "fp_nondec_rhs",
    "metropolis_sample",
    "posterior_log_density",
    "posterior_predictive_mean",
    "sample_weights_posterior",
]
