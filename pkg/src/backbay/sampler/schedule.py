from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

ScheduleSpec = Union[str, float, Sequence[float]]


def _tabulate(spec: ScheduleSpec, T: int, name: str) -> np.ndarray:
    ts = np.arange(T + 1, dtype=np.float64)
    if isinstance(spec, str):
        if spec == "linear":
            return ts / T
        if spec == "cosine":
            return np.sin(0.5 * np.pi * ts / T) ** 2
        raise ValueError(f"unknown {name} schedule {spec!r}")
    if np.isscalar(spec):
        return np.full(T + 1, float(spec))
    values = np.asarray(spec, dtype=np.float64)
    if values.shape != (T + 1,):
        raise ValueError(f"{name} table needs {T + 1} entries, got {values.shape}")
    return values


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """Per-step alpha/beta/sigma tables over t = 0..T.

    Build with :meth:`build`; each schedule may be given as a constant, a
    table of T+1 values, or a named shape ("linear" = t/T, "cosine").
    """

    alphas: np.ndarray
    betas: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        n = len(self.alphas)
        if n < 2:
            raise ValueError("schedule needs T >= 1")
        if len(self.betas) != n or len(self.sigmas) != n:
            raise ValueError("alpha, beta and sigma tables must share length T+1")
        if np.any((self.alphas < 0) | (self.alphas > 1)):
            raise ValueError("alpha(t) must lie in [0, 1]")
        if np.any(self.sigmas < 0):
            raise ValueError("sigma(t) must be nonnegative")

    @classmethod
    def build(cls, T: int = 50, alpha: ScheduleSpec = "linear", beta: ScheduleSpec = 0.01,
              sigma: ScheduleSpec = 0.1) -> "DiffusionSchedule":
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        return cls(_tabulate(alpha, T, "alpha"), _tabulate(beta, T, "beta"), _tabulate(sigma, T, "sigma"))

    @property
    def T(self) -> int:
        return len(self.alphas) - 1

    def alpha(self, t: int) -> float:
        return float(self.alphas[t])

    def beta(self, t: int) -> float:
        return float(self.betas[t])

    def sigma(self, t: int) -> float:
        return float(self.sigmas[t])


@dataclass(frozen=True)
class FpNonDecParams:
    mu: float
    nu: float
    sigma2: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
