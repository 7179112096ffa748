"""Exact GP regression: conditioning, prediction, hyperparameter fitting, sampling."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh, solve_triangular
from scipy.linalg.lapack import dpotrf
from scipy.optimize import minimize

from .errors import NumericalError
from .kernels import SEARDKernel, StationaryKernel

log = logging.getLogger(__name__)

NEGATIVE_VARIANCE_TOL = 1e-12
EIGEN_SOLVE_MAX_N = 2000
_CHUNK = 4096


class HyperparameterWarning(UserWarning):
    """No optimizer start improved on the initial hyperparameters."""


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    noise_variance: float

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError(f"inputs have {X.shape[0]} rows but there are {y.size} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        noise = float(self.noise_variance)
        if not math.isfinite(noise) or noise < 0:
            raise ValueError(f"noise_variance must be finite and >= 0, got {noise}")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "noise_variance", noise)

    @property
    def size(self) -> int:
        return self.targets.size

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]

    @classmethod
    def empty(cls, dimension, noise_variance=0.0):
        return cls(np.empty((0, dimension)), np.empty(0), noise_variance)

    def with_targets(self, targets) -> "Dataset":
        return Dataset(self.inputs, targets, self.noise_variance)


def write_dataset_csv(dataset: Dataset, path, header_lines=()):
    """Write columns ``x_1..x_d, y``; optional ``#`` comment lines precede the header."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(dataset.dimension)] + ["y"])
        for x, y in zip(dataset.inputs, dataset.targets):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def read_dataset_csv(path, noise_variance) -> Dataset:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise ValueError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x_{i + 1}" for i in range(d)] + ["y"]:
        raise ValueError(f"{path}: header must be x_1..x_d,y, got {header}")
    body = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    if body.size == 0:
        return Dataset.empty(d, noise_variance)
    return Dataset(body[:, :d], body[:, d], noise_variance)


def cholesky(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NumericalError` carrying the failing pivot."""
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    c, info = dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NumericalError(
            f"matrix is not positive definite (leading minor {info} failed)", pivot=int(info)
        )
    if info < 0:
        raise NumericalError(f"invalid argument {-info} to dpotrf")
    return np.tril(c)


@dataclass(frozen=True, eq=False)
class Posterior:
    """A GP conditioned on a dataset.  Immutable after :func:`fit`."""

    dataset: Dataset
    kernel: StationaryKernel
    factor: np.ndarray
    alpha: np.ndarray
    min_eigenvalue: float
    min_eigenvalue_source: str = field(default="eigen-solve")

    @property
    def size(self) -> int:
        return self.dataset.size

    @property
    def inverse_norm(self) -> float:
        """Spectral norm of (K + sigma_n^2 I)^{-1}."""
        return 1.0 / self.min_eigenvalue if self.size else 0.0

    def _cross(self, X):
        return self.kernel(X, self.dataset.inputs)

    def _as_points(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[-1] != self.kernel.dimension:
            raise ValueError(f"query points must have dimension {self.kernel.dimension}")
        return X

    def mean(self, X) -> np.ndarray:
        """Posterior mean at the rows of ``X``."""
        X = self._as_points(X)
        if self.size == 0:
            return np.zeros(X.shape[0])
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _CHUNK):
            out[s : s + _CHUNK] = self._cross(X[s : s + _CHUNK]) @ self.alpha
        return out

    def variance(self, X) -> np.ndarray:
        """Posterior variance at the rows of ``X``, clamped at zero within round-off."""
        X = self._as_points(X)
        prior = self.kernel.prior_variance
        if self.size == 0:
            return np.full(X.shape[0], prior)
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _CHUNK):
            v = solve_triangular(self.factor, self._cross(X[s : s + _CHUNK]).T, lower=True)
            out[s : s + _CHUNK] = prior - np.einsum("ij,ij->j", v, v)
        worst = out.min()
        if worst < -NEGATIVE_VARIANCE_TOL:
            raise NumericalError(f"posterior variance {worst:.3e} is below the round-off threshold")
        return np.clip(out, 0.0, prior)

    def std(self, X) -> np.ndarray:
        return np.sqrt(self.variance(X))

    def predict_many(self, X):
        return self.mean(X), self.variance(X)

    def mean_at(self, x) -> float:
        """Scalar mean at a single point without validation (hot path for simulation)."""
        if self.size == 0:
            return 0.0
        return float(self.kernel.value_from_lag(self.dataset.inputs - x) @ self.alpha)


def fit(dataset: Dataset, kernel: StationaryKernel) -> Posterior:
    """Condition the zero-mean GP with ``kernel`` on ``dataset``."""
    if dataset.dimension != kernel.dimension:
        raise ValueError(
            f"dataset has dimension {dataset.dimension}, kernel has {kernel.dimension}"
        )
    n = dataset.size
    if n == 0:
        return Posterior(dataset, kernel, np.zeros((0, 0)), np.zeros(0), math.inf, "prior")
    A = kernel(dataset.inputs)
    A[np.diag_indices(n)] += dataset.noise_variance
    L = cholesky(A)
    alpha = solve_triangular(L.T, solve_triangular(L, dataset.targets, lower=True), lower=False)
    if n <= EIGEN_SOLVE_MAX_N:
        lam = float(eigvalsh(A, subset_by_index=[0, 0])[0])
        # the eigen-solve can undershoot by round-off; sigma_n^2 is a rigorous lower bound
        lam, source = max(lam, dataset.noise_variance), "eigen-solve"
    else:
        lam, source = dataset.noise_variance, "noise-fallback"
    if lam <= 0:
        raise NumericalError("smallest eigenvalue of the regularized Gram matrix is not positive")
    return Posterior(dataset, kernel, L, alpha, lam, source)


def predict(posterior: Posterior, x):
    """Posterior ``(mean, variance)`` at a single point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (posterior.kernel.dimension,):
        raise ValueError(f"expected a point of length {posterior.kernel.dimension}")
    m, v = posterior.predict_many(x[None, :])
    return float(m[0]), float(v[0])


# -- hyperparameters -------------------------------------------------------

_LOG_BOUNDS_SF2 = (math.log(1e-6), math.log(1e6))
_LOG_BOUNDS_L = (math.log(1e-3), math.log(1e3))
_LOG_BOUNDS_NOISE = (math.log(1e-8), math.log(1e2))


def log_marginal_likelihood(dataset: Dataset, kernel: SEARDKernel, noise_variance=None) -> float:
    noise = dataset.noise_variance if noise_variance is None else noise_variance
    nll, _ = _nll_and_grad(
        _pack(kernel, noise), dataset.inputs, dataset.targets, noise, optimize_noise=False
    )
    return -nll


def _pack(kernel, noise):
    return np.concatenate(
        [[math.log(kernel.signal_variance)], np.log(kernel.lengthscales), [math.log(max(noise, 1e-300))]]
    )


def _nll_and_grad(theta, X, y, fixed_noise, optimize_noise):
    n, d = X.shape
    sf2 = math.exp(theta[0])
    ls = np.exp(theta[1 : 1 + d])
    noise = math.exp(theta[1 + d]) if optimize_noise else fixed_noise
    lag = X[:, None, :] - X[None, :, :]
    scaled_sq = (lag / ls) ** 2
    Kf = sf2 * np.exp(-0.5 * scaled_sq.sum(-1))
    A = Kf.copy()
    A[np.diag_indices(n)] += noise
    try:
        L = cholesky(A)
    except NumericalError:
        return 1e25, np.zeros(theta.size if optimize_noise else theta.size - 1)
    alpha = solve_triangular(L.T, solve_triangular(L, y, lower=True), lower=False)
    nll = 0.5 * y @ alpha + np.log(np.diag(L)).sum() + 0.5 * n * math.log(2 * math.pi)
    Ainv = solve_triangular(L.T, solve_triangular(L, np.eye(n), lower=True), lower=False)
    W = np.outer(alpha, alpha) - Ainv
    grads = [-0.5 * np.sum(W * Kf)]
    for i in range(d):
        grads.append(-0.5 * np.sum(W * Kf * scaled_sq[..., i]))
    if optimize_noise:
        grads.append(-0.5 * noise * np.trace(W))
    return float(nll), np.array(grads)


@dataclass(frozen=True)
class HyperparameterResult:
    kernel: SEARDKernel
    noise_variance: float
    log_marginal_likelihood: float
    initial_log_marginal_likelihood: float
    improved: bool
    n_starts: int
    seed: int


def optimize_hyperparameters(
    dataset: Dataset,
    init: SEARDKernel,
    *,
    seed: int = 0,
    n_starts: int = 8,
    optimize_noise: bool = False,
    perturbation: float = 1.0,
) -> HyperparameterResult:
    """Multi-start L-BFGS-B ascent of the log marginal likelihood in log-parameter space.

    The first start is ``init`` itself; the others perturb it with log-normal
    noise of scale ``perturbation`` drawn from ``seed``.
    """
    if dataset.size < 2:
        raise ValueError("hyperparameter fitting needs at least 2 observations")
    if dataset.dimension != init.dimension:
        raise ValueError("dataset and kernel dimensions differ")
    d = init.dimension
    noise0 = dataset.noise_variance
    if optimize_noise and noise0 <= 0:
        noise0 = 1e-4
    theta0 = _pack(init, noise0)
    if not optimize_noise:
        theta0 = theta0[:-1]
    bounds = [_LOG_BOUNDS_SF2] + [_LOG_BOUNDS_L] * d + ([_LOG_BOUNDS_NOISE] if optimize_noise else [])
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def objective(theta):
        return _nll_and_grad(theta, dataset.inputs, dataset.targets, dataset.noise_variance, optimize_noise)

    init_nll, _ = objective(np.clip(theta0, lo, hi))
    rng = np.random.default_rng(seed)
    starts = [np.clip(theta0, lo, hi)]
    for _ in range(max(n_starts, 1) - 1):
        starts.append(np.clip(theta0 + perturbation * rng.standard_normal(theta0.size), lo, hi))

    best_theta, best_nll = starts[0], init_nll
    for start in starts:
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_nll:
            best_theta, best_nll = res.x, float(res.fun)

    improved = best_nll < init_nll
    if not improved:
        return HyperparameterResult(init, dataset.noise_variance, -init_nll, -init_nll, False, n_starts, seed)
    kernel = SEARDKernel(math.exp(best_theta[0]), np.exp(best_theta[1 : 1 + d]))
    noise = math.exp(best_theta[1 + d]) if optimize_noise else dataset.noise_variance
    log.debug("hyperparameters %r noise=%g lml=%.6f", kernel, noise, -best_nll)
    return HyperparameterResult(kernel, noise, -best_nll, -init_nll, True, n_starts, seed)


def fit_hyperparameters(dataset: Dataset, init: SEARDKernel, *, seed: int = 0, n_starts: int = 8) -> SEARDKernel:
    """Maximize the marginal likelihood over signal variance and lengthscales.

    Noise variance stays fixed at ``dataset.noise_variance``.  If no start
    improves on ``init``, ``init`` is returned and a
    :class:`HyperparameterWarning` is emitted.
    """
    result = optimize_hyperparameters(dataset, init, seed=seed, n_starts=n_starts)
    if not result.improved:
        warnings.warn("no optimizer start improved the marginal likelihood", HyperparameterWarning)
    return result.kernel


# -- sampling --------------------------------------------------------------

JITTER_START = 1e-10
JITTER_MAX = 1e-6


def sample_function(kernel: StationaryKernel, grid, seed, count: int) -> np.ndarray:
    """Draw ``count`` zero-mean GP sample vectors on ``grid`` (rows of the result)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[0] == 0:
        raise ValueError("grid must be non-empty")
    # repeated points share one latent value
    unique, inverse = np.unique(grid, axis=0, return_inverse=True)
    K = kernel(unique)
    jitter = JITTER_START
    while True:
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]))
            break
        except NumericalError as exc:
            jitter *= 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise NumericalError(
                    f"Gram matrix not factorizable with jitter up to {JITTER_MAX:g}", pivot=exc.pivot
                ) from exc
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, unique.shape[0]))
    return (z @ L.T)[:, np.ravel(inverse)]
