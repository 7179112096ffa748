"""Stationary covariance kernels and the constants the error bounds need.

Every kernel here is stationary, so all quantities are written as functions
of the lag ``D = x - x'``.  Arrays of lags have shape ``(..., d)``.

Only the squared-exponential kernel with automatic relevance determination
(:class:`SEARDKernel`, exported as :data:`KernelSpec`) ships.  A new family
needs to implement the five ``*_from_lag`` hooks of :class:`StationaryKernel`.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .domain import Domain

__all__ = [
    "StationaryKernel",
    "SEARDKernel",
    "KernelSpec",
    "KernelConstants",
    "evaluate",
    "derivative_kernel",
    "kernel_constants",
]

SAFETY_FACTOR = 1.01
POINTS_PER_DIM = 32
_MAX_GRID = 2**21


class StationaryKernel(ABC):
    """Covariance k(x, x') = kappa(x - x')."""

    dimension: int

    @abstractmethod
    def value_from_lag(self, lag: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def grad_from_lag(self, lag: np.ndarray) -> np.ndarray:
        """Gradient of k with respect to its first argument."""

    @abstractmethod
    def deriv_value_from_lag(self, i: int, lag: np.ndarray) -> np.ndarray:
        """Partial derivative kernel d^2 k / dx_i dx'_i (0-based ``i``)."""

    @abstractmethod
    def deriv_grad_from_lag(self, i: int, lag: np.ndarray) -> np.ndarray:
        """Gradient of the i-th derivative kernel in its first argument."""

    @abstractmethod
    def deriv_diag(self) -> np.ndarray:
        """k^{di}(x, x) for every i; constant in x for stationary kernels."""

    @property
    @abstractmethod
    def prior_variance(self) -> float:
        """k(x, x)."""

    def __call__(self, X, Z=None) -> np.ndarray:
        """Gram matrix between the rows of ``X`` and ``Z``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=float))
        return self.value_from_lag(X[:, None, :] - Z[None, :, :])

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a point of length {self.dimension}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite entries")
        return x


@dataclass(frozen=True, eq=False)
class SEARDKernel(StationaryKernel):
    """Squared-exponential kernel with one lengthscale per input dimension.

    k(x, x') = signal_variance * exp(-0.5 * sum_i (x_i - x'_i)^2 / l_i^2)
    """

    signal_variance: float
    lengthscales: np.ndarray

    def __post_init__(self):
        sf2 = float(self.signal_variance)
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        if not np.isfinite(sf2) or sf2 <= 0:
            raise ValueError(f"signal_variance must be positive and finite, got {sf2}")
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("lengthscales must be a non-empty vector")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError(f"lengthscales must be positive and finite, got {ls}")
        ls.flags.writeable = False
        object.__setattr__(self, "signal_variance", sf2)
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dimension(self) -> int:
        return self.lengthscales.size

    @property
    def prior_variance(self) -> float:
        return self.signal_variance

    def __eq__(self, other):
        if not isinstance(other, SEARDKernel):
            return NotImplemented
        return self.signal_variance == other.signal_variance and np.array_equal(
            self.lengthscales, other.lengthscales
        )

    def __hash__(self):
        return hash((self.signal_variance, self.lengthscales.tobytes()))

    def __repr__(self):
        return f"SEARDKernel(signal_variance={self.signal_variance!r}, lengthscales={self.lengthscales.tolist()!r})"

    def scaled(self, signal_factor=1.0, length_factor=1.0) -> "SEARDKernel":
        return SEARDKernel(self.signal_variance * signal_factor, self.lengthscales * length_factor)

    def to_dict(self):
        return {
            "family": "se-ard",
            "signal_variance": self.signal_variance,
            "lengthscales": self.lengthscales.tolist(),
        }

    def _envelope(self, lag):
        return np.exp(-0.5 * np.sum((lag / self.lengthscales) ** 2, axis=-1))

    def value_from_lag(self, lag):
        return self.signal_variance * self._envelope(np.asarray(lag, dtype=float))

    def grad_from_lag(self, lag):
        lag = np.asarray(lag, dtype=float)
        k = self.value_from_lag(lag)
        return -k[..., None] * lag / self.lengthscales**2

    def deriv_value_from_lag(self, i, lag):
        lag = np.asarray(lag, dtype=float)
        li2 = self.lengthscales[i] ** 2
        return (self.signal_variance / li2) * (1.0 - lag[..., i] ** 2 / li2) * self._envelope(lag)

    def deriv_grad_from_lag(self, i, lag):
        lag = np.asarray(lag, dtype=float)
        li2 = self.lengthscales[i] ** 2
        c = self.signal_variance / li2
        env = self._envelope(lag)
        poly = 1.0 - lag[..., i] ** 2 / li2
        grad = -(c * poly * env)[..., None] * lag / self.lengthscales**2
        grad[..., i] = c * env * (lag[..., i] / li2) * (lag[..., i] ** 2 / li2 - 3.0)
        return grad

    def deriv_diag(self):
        return self.signal_variance / self.lengthscales**2


KernelSpec = SEARDKernel


def evaluate(kernel: StationaryKernel, x, x2) -> float:
    """Covariance between two single points."""
    x = kernel._check_point(x)
    x2 = kernel._check_point(x2)
    return float(kernel.value_from_lag(x - x2))


def derivative_kernel(kernel: StationaryKernel, i: int, x, x2) -> float:
    """Covariance of the i-th partial-derivative process (``i`` is 1-based)."""
    if not 1 <= i <= kernel.dimension:
        raise ValueError(f"derivative index {i} out of range 1..{kernel.dimension}")
    x = kernel._check_point(x)
    x2 = kernel._check_point(x2)
    return float(kernel.deriv_value_from_lag(i - 1, x - x2))


@dataclass(frozen=True)
class KernelConstants:
    lipschitz_k: float
    deriv_kernel_diag: np.ndarray
    deriv_kernel_lipschitz: np.ndarray
    max_kernel: float
    safety_factor: float = SAFETY_FACTOR

    def to_dict(self):
        return {
            "lipschitz_k": self.lipschitz_k,
            "deriv_kernel_diag": np.asarray(self.deriv_kernel_diag).tolist(),
            "deriv_kernel_lipschitz": np.asarray(self.deriv_kernel_lipschitz).tolist(),
            "max_kernel": self.max_kernel,
            "safety_factor": self.safety_factor,
        }


def _lag_grid(widths, points_per_dim, rng):
    d = widths.size
    if points_per_dim**d <= _MAX_GRID:
        axes = [np.linspace(0.0, w, points_per_dim) for w in widths]
        return np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    # too many dimensions for a tensor grid: fall back to uniform random starts
    return rng.uniform(0.0, 1.0, size=(_MAX_GRID, d)) * widths


def maximize_over_lags(objective, widths, points_per_dim=POINTS_PER_DIM, n_refine=8, seed=0):
    """Maximize a vectorized ``objective(lags)`` over the box ``[0, widths]``.

    The objectives used here are even in every lag component, so the positive
    orthant of the realizable lag box ``[-w, w]`` suffices.  A dense grid picks
    the starting points; bounded L-BFGS-B polishes the best ``n_refine`` of them.
    """
    widths = np.asarray(widths, dtype=float)
    rng = np.random.default_rng(seed)
    lags = _lag_grid(widths, points_per_dim, rng)
    values = objective(lags)
    best = float(np.max(values))
    order = np.argsort(values)[::-1][:n_refine]
    bounds = [(0.0, float(w)) for w in widths]
    for idx in order:
        res = minimize(
            lambda z: -float(objective(z[None, :])[0]),
            lags[idx],
            method="L-BFGS-B",
            bounds=bounds,
        )
        if np.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


def kernel_constants(
    kernel: StationaryKernel,
    domain: Domain,
    safety: float = SAFETY_FACTOR,
    points_per_dim: int = POINTS_PER_DIM,
) -> KernelConstants:
    """Lipschitz constants of k and of its partial derivative kernels on ``domain``.

    Suprema over the domain are taken over lags realizable in it, i.e. the box
    ``[-w, w]`` with ``w`` the domain widths, and inflated by ``safety``.
    Zero-lag quantities (max k, k^{di}(x, x)) are exact.
    """
    if domain is None:
        raise ValueError("empty domain")
    if domain.dimension != kernel.dimension:
        raise ValueError(f"domain has dimension {domain.dimension}, kernel has {kernel.dimension}")
    widths = domain.widths
    lk = maximize_over_lags(
        lambda D: np.linalg.norm(kernel.grad_from_lag(D), axis=-1), widths, points_per_dim
    )
    deriv_lip = np.array(
        [
            maximize_over_lags(
                lambda D, i=i: np.linalg.norm(kernel.deriv_grad_from_lag(i, D), axis=-1),
                widths,
                points_per_dim,
            )
            for i in range(kernel.dimension)
        ]
    )
    return KernelConstants(
        lipschitz_k=safety * lk,
        deriv_kernel_diag=np.asarray(kernel.deriv_diag(), dtype=float),
        deriv_kernel_lipschitz=safety * deriv_lip,
        max_kernel=kernel.prior_variance,
        safety_factor=safety,
    )
