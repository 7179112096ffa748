"""High-probability Lipschitz constants for sample paths of a GP prior.

Each partial derivative of a sample is itself a GP whose covariance is the
corresponding derivative kernel.  Bounding the supremum of every derivative
process (metric-entropy bound on the expected supremum plus Borell-TIS
concentration) and union-bounding over the d coordinates yields a constant
that dominates the path's Lipschitz constant with probability 1 - delta_L.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Domain
from .kernels import KernelConstants, StationaryKernel

ENTROPY_CONSTANT = 12.0


def expected_sup_bound(kernel_max: float, lipschitz: float, diameter: float, d: int) -> float:
    """12 sqrt(6 d) max(sqrt(max k), sqrt(r L_k)) bounds E[sup f] for a GP with kernel k."""
    if min(kernel_max, lipschitz, diameter) < 0 or d < 1:
        raise ValueError("inputs must be non-negative and d >= 1")
    return ENTROPY_CONSTANT * math.sqrt(6.0 * d) * max(math.sqrt(kernel_max), math.sqrt(diameter * lipschitz))


def sup_bound(kernel_max: float, lipschitz: float, diameter: float, d: int, delta: float) -> float:
    """Value exceeded by sup f with probability at most ``delta``."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return expected_sup_bound(kernel_max, lipschitz, diameter, d) + math.sqrt(
        2.0 * math.log(1.0 / delta)
    ) * math.sqrt(kernel_max)


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    delta_l: float
    per_dimension: np.ndarray
    diameter: float

    def to_dict(self):
        return {
            "value": self.value,
            "delta_l": self.delta_l,
            "per_dimension": np.asarray(self.per_dimension).tolist(),
            "diameter": self.diameter,
        }


def probabilistic_lipschitz(
    kernel: StationaryKernel, constants: KernelConstants, domain: Domain, delta_l: float
) -> LipschitzEstimate:
    """Lipschitz constant of a GP sample on ``domain`` valid with probability >= 1 - delta_l.

    Each coordinate's derivative process gets failure budget ``delta_l / d``;
    the sup bound is applied to both signs, hence the ``2d / delta_l`` term.
    """
    if not 0 < delta_l < 1:
        raise ValueError(f"delta_l must lie in (0, 1), got {delta_l}")
    d = kernel.dimension
    if domain.dimension != d:
        raise ValueError("domain and kernel dimensions differ")
    r = domain.diameter
    concentration = math.sqrt(2.0 * math.log(2.0 * d / delta_l))
    per_dim = np.array(
        [
            concentration * math.sqrt(kd) + expected_sup_bound(kd, lk, r, d)
            for kd, lk in zip(constants.deriv_kernel_diag, constants.deriv_kernel_lipschitz)
        ]
    )
    return LipschitzEstimate(float(np.linalg.norm(per_dim)), float(delta_l), per_dim, r)


def empirical_path_lipschitz(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Largest absolute finite-difference slope of each 1-D path (rows of ``values``).

    Under-estimates the true path constant; resolution is set by ``grid``.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    slopes = np.abs(np.diff(values, axis=-1)) / np.diff(grid)
    return slopes.max(axis=-1)
