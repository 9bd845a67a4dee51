"""Random-walk Metropolis."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import SamplerError


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 2000
    proposal_std: float = 0.5
    burn_in_frac: float = 0.2

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("sampler.steps must be >= 1")
        if self.proposal_std < 0:
            raise ValueError("sampler.proposal_std must be >= 0")
        if not 0.0 <= self.burn_in_frac < 1.0:
            raise ValueError("sampler.burn_in_frac must be in [0, 1)")


def metropolis_sample(log_target: Callable[[float], float], init: float, n_steps: int,
                      proposal_std: float, rng: np.random.Generator,
                      return_acceptance: bool = False):
    """Gaussian random-walk Metropolis chain of ``n_steps`` states.

    The returned states are those after each step; ``init`` itself is not
    included. With ``return_acceptance`` the accepted fraction is returned
    alongside the chain.
    """
    if proposal_std < 0:
        raise ValueError("proposal_std must be nonnegative")
    x = float(init)
    logp = float(log_target(x))
    if not math.isfinite(logp):
        raise SamplerError(f"log_target({init}) = {logp} is not finite")

    steps = rng.standard_normal(n_steps) * proposal_std
    log_u = np.log(rng.random(n_steps))
    chain = np.empty(n_steps)
    accepted = 0
    for i in range(n_steps):
        cand = x + steps[i]
        cand_logp = float(log_target(cand))
        # NaN compares false, so a NaN proposal is rejected
        if log_u[i] < cand_logp - logp:
            x, logp = cand, cand_logp
            accepted += 1
        chain[i] = x
    if return_acceptance:
        return chain, accepted / max(n_steps, 1)
    return chain


def thin(chain: np.ndarray, n: int, burn_in_frac: float) -> np.ndarray:
    """Drop the burn-in prefix and keep ``n`` evenly spaced states."""
    kept = chain[int(len(chain) * burn_in_frac):]
    if len(kept) == 0:
        raise SamplerError("burn-in consumed the whole chain")
    idx = np.round(np.linspace(0, len(kept) - 1, n)).astype(int)
    return kept[idx]
