"""Modified Fokker-Planck drift and an explicit 1-D density solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import StabilityError
from .schedule import FpNonDecParams


def fp_drift(x, t: int, sched, n1, n2):
    """exp(sqrt(a)) * (x - exp(sqrt(1 - a)) * n1) + sigma * n2, a = alpha(t).

    ``n1`` is a draw of noise(beta(t)) and ``n2`` a unit draw; both come from
    the caller. Works elementwise on arrays.
    """
    a = sched.alpha(t)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"alpha({t}) = {a} outside [0, 1]")
    return np.exp(np.sqrt(a)) * (x - np.exp(np.sqrt(1.0 - a)) * n1) + sched.sigma(t) * n2


def fp_nondec_rhs(p, params: FpNonDecParams):
    """d/dp [mu p^2 - nu p + sigma^2] = 2 mu p - nu."""
    return 2.0 * params.mu * p - params.nu


def drift_coefficient(x, alpha: float):
    """b(x) = exp(sqrt(a)) * (x - exp(sqrt(1 - a)))."""
    return np.exp(np.sqrt(alpha)) * (x - np.exp(np.sqrt(1.0 - alpha)))


@dataclass(frozen=True, eq=False)
class DensityGrid:
    xs: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if self.xs.shape != self.p.shape or self.xs.ndim != 1 or len(self.xs) < 3:
            raise ValueError("xs and p must be matching 1-D arrays of length >= 3")
        steps = np.diff(self.xs)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or steps[0] <= 0:
            raise ValueError("grid must be uniformly spaced and increasing")

    @property
    def dx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def mass(self) -> float:
        return float(self.p.sum() * self.dx)

    def moment(self, k: int) -> float:
        return float(np.sum(self.xs ** k * self.p) * self.dx)

    @property
    def variance(self) -> float:
        m = self.moment(1)
        return float(np.sum((self.xs - m) ** 2 * self.p) * self.dx)

    @classmethod
    def from_density(cls, xs, p) -> "DensityGrid":
        """Normalize ``p`` to unit mass on the grid ``xs``."""
        xs = np.asarray(xs, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        if np.any(p < 0):
            raise ValueError("density must be nonnegative")
        total = p.sum() * (xs[1] - xs[0])
        if total <= 0:
            raise ValueError("density has zero mass")
        grid = cls(xs, p / total)
        if abs(grid.mass - 1.0) > 1e-9:
            raise ValueError("density could not be normalized")
        return grid

    @classmethod
    def gaussian(cls, lo: float, hi: float, n: int, mean: float = 0.0, std: float = 1.0) -> "DensityGrid":
        xs = np.linspace(lo, hi, n)
        return cls.from_density(xs, np.exp(-0.5 * ((xs - mean) / std) ** 2))


def max_stable_dt(grid: DensityGrid, alpha: float, diffusion: float = 1.0, drift_scale: float = 1.0) -> float:
    """Largest dt for which one explicit step keeps every entry nonnegative."""
    dx = grid.dx
    faces = 0.5 * (grid.xs[1:] + grid.xs[:-1])
    b = drift_scale * drift_coefficient(faces, alpha)
    outflow = np.zeros(len(grid.xs))
    outflow[:-1] += np.maximum(b, 0.0) / dx + diffusion / dx ** 2
    outflow[1:] += np.maximum(-b, 0.0) / dx + diffusion / dx ** 2
    worst = outflow.max()
    return np.inf if worst == 0 else 1.0 / worst


def evolve_density(grid: DensityGrid, sched, t: int, dt: float, steps: int,
                   diffusion: float = 1.0, drift_scale: float = 1.0) -> DensityGrid:
    """Explicit conservative update of dP/dt = -d/dx(b P) + D d2P/dx2.

    Face fluxes use first-order upwinding for the drift and central
    differences for diffusion; both boundary fluxes are zero, so total mass
    is conserved to rounding. ``drift_scale`` multiplies b(x) (0 disables it).
    """
    if dt <= 0 or steps < 0:
        raise ValueError("dt must be positive and steps nonnegative")
    if diffusion < 0:
        raise ValueError("diffusion must be nonnegative")
    alpha = sched.alpha(t)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha({t}) = {alpha} outside [0, 1]")
    dx = grid.dx
    if diffusion > 0 and dt > dx * dx / (2.0 * diffusion):
        raise StabilityError(f"dt={dt} exceeds dx^2/(2D)={dx * dx / (2 * diffusion)}")
    limit = max_stable_dt(grid, alpha, diffusion, drift_scale)
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt} exceeds positivity limit {limit}")

    faces = 0.5 * (grid.xs[1:] + grid.xs[:-1])
    b = drift_scale * drift_coefficient(faces, alpha)
    b_pos, b_neg = np.maximum(b, 0.0), np.minimum(b, 0.0)
    p = grid.p.copy()
    flux = np.zeros(len(p) + 1)
    for _ in range(steps):
        flux[1:-1] = b_pos * p[:-1] + b_neg * p[1:] - diffusion * (p[1:] - p[:-1]) / dx
        p -= dt / dx * (flux[1:] - flux[:-1])
        if p.min() < -1e-12:
            raise StabilityError(f"density went negative ({p.min():.3e})")
    return DensityGrid(grid.xs, p)
