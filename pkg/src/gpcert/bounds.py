"""Uniform error certificates for GP regression and the large-N harness.

A certificate bundles the constants of the bound

    |f(x) - mean(x)| <= sqrt(beta) * std(x) + gamma    for all x in the domain,

which holds with probability at least ``1 - delta`` when ``f`` is a sample of
the GP prior, observations carry i.i.d. Gaussian noise and ``f_lipschitz`` is
a Lipschitz constant of ``f``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import Domain
from .errors import CapacityError
from .gp import Dataset, Posterior, fit
from .kernels import KernelConstants, StationaryKernel, kernel_constants

CERTIFICATE_SCHEMA = "gpcert.certificate/v1"


def _check_tau(tau):
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau}")


def _check_delta(delta, name="delta"):
    if not 0 < delta < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {delta}")


def covering_factors(domain: Domain, tau: float) -> list[int]:
    _check_tau(tau)
    return [math.ceil(1.0 + w / tau) for w in domain.widths]


def covering_number_bound(domain: Domain, tau: float) -> int:
    """Grid-construction bound prod_i ceil(1 + w_i / tau) on the tau-covering number.

    Returned as an exact Python integer; it overflows 64 bits for small ``tau``
    in four dimensions.
    """
    return math.prod(covering_factors(domain, tau))


def log_covering_number_bound(domain: Domain, tau: float) -> float:
    return float(sum(math.log(m) for m in covering_factors(domain, tau)))


def beta(domain: Domain, tau: float, delta: float) -> float:
    """Scaling 2 log(M / delta) of the posterior standard deviation."""
    _check_delta(delta)
    return 2.0 * (log_covering_number_bound(domain, tau) - math.log(delta))


def mean_lipschitz_bound(posterior: Posterior, constants: KernelConstants) -> float:
    """Lipschitz constant L_k sqrt(N) ||alpha|| of the posterior mean."""
    n = posterior.size
    if n == 0:
        return 0.0
    return constants.lipschitz_k * math.sqrt(n) * float(np.linalg.norm(posterior.alpha))


def std_modulus(posterior: Posterior, constants: KernelConstants, tau: float) -> float:
    """Modulus of continuity of the posterior standard deviation evaluated at ``tau``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    n = posterior.size
    inner = 1.0 + n * posterior.inverse_norm * constants.max_kernel
    return math.sqrt(2.0 * tau * constants.lipschitz_k * inner)


@dataclass(frozen=True, eq=False)
class ErrorCertificate:
    tau: float
    delta: float
    beta: float
    gamma: float
    mean_lipschitz: float
    std_modulus_at_tau: float
    f_lipschitz: float
    posterior: Posterior
    domain: Domain
    constants: KernelConstants
    covering_number: int
    provenance: dict = field(default_factory=dict)

    @property
    def sqrt_beta(self) -> float:
        return math.sqrt(self.beta)

    def eta(self, X) -> np.ndarray:
        """Pointwise bound sqrt(beta) * std(x) + gamma at the rows of ``X``."""
        return self.sqrt_beta * self.posterior.std(X) + self.gamma

    def eta_at(self, x) -> float:
        return float(self.eta(np.asarray(x, dtype=float)[None, :])[0])

    @property
    def gamma_split(self) -> dict:
        return {
            "lipschitz_term": (self.mean_lipschitz + self.f_lipschitz) * self.tau,
            "modulus_term": self.sqrt_beta * self.std_modulus_at_tau,
        }

    def to_dict(self) -> dict:
        post = self.posterior
        return {
            "schema": CERTIFICATE_SCHEMA,
            "domain": self.domain.to_dict(),
            "kernel": post.kernel.to_dict(),
            "noise_variance": post.dataset.noise_variance,
            "n_train": post.size,
            "tau": self.tau,
            "delta": self.delta,
            "covering_number": str(self.covering_number),
            "log_covering_number": math.log(self.covering_number),
            "beta": self.beta,
            "gamma": self.gamma,
            "gamma_split": self.gamma_split,
            "mean_lipschitz": self.mean_lipschitz,
            "std_modulus_at_tau": self.std_modulus_at_tau,
            "f_lipschitz": self.f_lipschitz,
            "inverse_gram_norm": post.inverse_norm,
            "min_eigenvalue": post.min_eigenvalue,
            "kernel_constants": self.constants.to_dict(),
            "provenance": dict(self.provenance),
        }


def certify(
    posterior: Posterior,
    constants: KernelConstants,
    domain: Domain,
    tau: float,
    delta: float,
    f_lipschitz: float,
    f_lipschitz_source: str = "supplied",
) -> ErrorCertificate:
    """Build the uniform error certificate for ``posterior`` on ``domain``."""
    _check_tau(tau)
    _check_delta(delta)
    if not (f_lipschitz >= 0 and math.isfinite(f_lipschitz)):
        raise ValueError(f"f_lipschitz must be finite and >= 0, got {f_lipschitz}")
    if domain.dimension != posterior.kernel.dimension:
        raise ValueError("domain and posterior dimensions differ")
    b = beta(domain, tau, delta)
    l_mean = mean_lipschitz_bound(posterior, constants)
    omega = std_modulus(posterior, constants, tau)
    gamma = (l_mean + f_lipschitz) * tau + math.sqrt(b) * omega
    provenance = {
        "covering_number": "product-grid bound prod ceil(1 + w_i/tau)",
        "lipschitz_k": f"numeric maximization over lags (safety {constants.safety_factor})",
        "max_kernel": "analytic (zero lag)",
        "inverse_gram_norm": posterior.min_eigenvalue_source,
        "mean_lipschitz": "L_k sqrt(N) ||alpha||",
        "std_modulus": "sqrt(2 tau L_k (1 + N ||(K+s2 I)^-1|| max k))",
        "f_lipschitz": f_lipschitz_source,
    }
    return ErrorCertificate(
        tau=float(tau),
        delta=float(delta),
        beta=b,
        gamma=gamma,
        mean_lipschitz=l_mean,
        std_modulus_at_tau=omega,
        f_lipschitz=float(f_lipschitz),
        posterior=posterior,
        domain=domain,
        constants=constants,
        covering_number=covering_number_bound(domain, tau),
        provenance=provenance,
    )


def certify_multi(
    posteriors: Sequence[Posterior],
    constants: Sequence[KernelConstants],
    domain: Domain | Sequence[Domain],
    tau: float,
    delta: float,
    f_lipschitz: float | Sequence[float],
    f_lipschitz_source: str = "supplied",
) -> list[ErrorCertificate]:
    """Certify each output dimension with ``delta / d_out`` so the joint failure is at most ``delta``."""
    d_out = len(posteriors)
    if d_out < 1:
        raise ValueError("need at least one output posterior")
    if len(constants) != d_out:
        raise ValueError("one KernelConstants per output is required")
    domains = [domain] * d_out if isinstance(domain, Domain) else list(domain)
    if len(domains) != d_out or any(dm != domains[0] for dm in domains):
        raise ValueError("all outputs must be certified on the same domain")
    lips = [f_lipschitz] * d_out if np.isscalar(f_lipschitz) else list(f_lipschitz)
    if len(lips) != d_out:
        raise ValueError("one f_lipschitz per output is required")
    _check_delta(delta)
    share = delta / d_out
    return [
        certify(p, c, domains[0], tau, share, lf, f_lipschitz_source)
        for p, c, lf in zip(posteriors, constants, lips)
    ]


def write_certificate(path, certificates, manifest: dict):
    """Write one or more certificates as JSON with a leading manifest block."""
    if isinstance(certificates, ErrorCertificate):
        certificates = [certificates]
    doc = {"manifest": manifest, "certificates": [c.to_dict() for c in certificates]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


# -- asymptotics -----------------------------------------------------------


def noise_norm_bound(n: int, delta: float) -> float:
    """High-probability bound on ||xi_N||^2 / sigma_n^2 for N i.i.d. Gaussian noise terms.

    Laurent-Massart chi-square tail with eta_N = log(pi^2 N^2 / (3 delta));
    union-bounded over all N >= 1.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    _check_delta(delta)
    eta = math.log(math.pi**2 * n**2 / (3.0 * delta))
    return 2.0 * math.sqrt(n * eta) + 2.0 * eta + n


def beta_schedule(domain: Domain, tau: float, n: int, delta: float) -> float:
    """beta_N = 2 log(M(tau) pi^2 N^2 / (3 delta))."""
    _check_delta(delta)
    return 2.0 * (
        log_covering_number_bound(domain, tau) + math.log(math.pi**2 * n**2 / (3.0 * delta))
    )


def mean_lipschitz_growth_bound(lipschitz_k, n, f_bar, noise_variance, delta) -> float:
    """Data-independent bound L_k (N f_bar + sqrt(N chi2_N) sigma_n) / sigma_n^2."""
    sn = math.sqrt(noise_variance)
    return lipschitz_k * (n * f_bar + math.sqrt(n * noise_norm_bound(n, delta)) * sn) / noise_variance


@dataclass(frozen=True)
class AsymptoticRow:
    n: int
    tau: float
    sup_error: float
    bound: float
    beta_n: float
    gamma_n: float
    max_sigma: float
    mean_lipschitz: float


@dataclass(frozen=True)
class AsymptoticTable:
    rows: list
    slope_loglog: float
    eval_points: int
    seed: int

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def _uniform_design(domain: Domain, n: int) -> np.ndarray:
    d = domain.dimension
    m = max(1, math.ceil(round(n ** (1.0 / d), 9)))
    grid = domain.grid(m)
    if grid.shape[0] == n:
        return grid
    idx = np.unique(np.round(np.linspace(0, grid.shape[0] - 1, n)).astype(int))
    return grid[idx]


def _eval_grid(domain: Domain, per_dim: int, cap: int) -> np.ndarray:
    d = domain.dimension
    per_dim = min(per_dim, int(math.floor(cap ** (1.0 / d) + 1e-9)))
    return domain.grid(max(per_dim, 2))


def asymptotic_harness(
    kernel: StationaryKernel,
    domain: Domain,
    truth: Callable[[np.ndarray], np.ndarray],
    schedule: Sequence[int],
    delta: float,
    seed: int,
    *,
    noise_variance: float,
    f_bar: float,
    f_lipschitz: float,
    tau0: float = 1.0,
    eval_per_dim: int = 400,
    eval_cap: int = 100_000,
    dense_cap: int = 4000,
    constants: KernelConstants | None = None,
) -> AsymptoticTable:
    """Track the uniform bound and the realized sup error as the gridded dataset grows.

    For each N, tau(N) = tau0 / N^2.  The mean Lipschitz constant uses the
    data-independent growth bound (requires ``noise_variance > 0``); with
    noise-free data the data-dependent L_k sqrt(N) ||alpha|| is used instead.
    """
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise ValueError("schedule must be non-empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise ValueError("schedule must be strictly increasing positive integers")
    if schedule[-1] > dense_cap:
        raise CapacityError(f"N={schedule[-1]} exceeds the dense-solve cap {dense_cap}")
    _check_delta(delta)
    if constants is None:
        constants = kernel_constants(kernel, domain)
    Xe = _eval_grid(domain, eval_per_dim, eval_cap)
    fe = np.asarray(truth(Xe), dtype=float)
    rows = []
    for n in schedule:
        rng = np.random.default_rng([seed, n])
        X = _uniform_design(domain, n)
        y = np.asarray(truth(X), dtype=float)
        if noise_variance > 0:
            y = y + math.sqrt(noise_variance) * rng.standard_normal(y.size)
        post = fit(Dataset(X, y, noise_variance), kernel)
        tau = tau0 / n**2
        b = beta_schedule(domain, tau, n, delta)
        if noise_variance > 0:
            l_mean = mean_lipschitz_growth_bound(constants.lipschitz_k, n, f_bar, noise_variance, delta)
        else:
            l_mean = mean_lipschitz_bound(post, constants)
        omega = std_modulus(post, constants, tau)
        gamma = (l_mean + f_lipschitz) * tau + math.sqrt(b) * omega
        mu, var = post.predict_many(Xe)
        sigma = np.sqrt(var)
        rows.append(
            AsymptoticRow(
                n=n,
                tau=tau,
                sup_error=float(np.max(np.abs(mu - fe))),
                bound=float(np.max(math.sqrt(b) * sigma)) + gamma,
                beta_n=b,
                gamma_n=gamma,
                max_sigma=float(sigma.max()),
                mean_lipschitz=l_mean,
            )
        )
    slope = float("nan")
    if len(rows) >= 2 and all(r.n > 1 for r in rows):
        ll = np.log(np.log([r.n for r in rows]))
        lb = np.log([r.bound for r in rows])
        slope = float(np.polyfit(ll, lb, 1)[0])
    return AsymptoticTable(rows, slope, Xe.shape[0], seed)
