"""Desk-scale Bayesian-diffusion audio backdoor toolkit."""

__version__ = "0.1.0"
