"""Gaussian-process regression with certified uniform error bounds and safe tracking control."""

__version__ = "0.1.0"

from .bounds import ErrorCertificate, certify, certify_multi  # noqa: E402
from .domain import Domain  # noqa: E402
from .gp import Dataset, Posterior, fit, predict  # noqa: E402
from .kernels import KernelConstants, SEARDKernel, kernel_constants  # noqa: E402
from .lipschitz import probabilistic_lipschitz  # noqa: E402

__all__ = [
    "Dataset",
    "Domain",
    "ErrorCertificate",
    "KernelConstants",
    "Posterior",
    "SEARDKernel",
    "__version__",
    "certify",
    "certify_multi",
    "fit",
    "kernel_constants",
    "predict",
    "probabilistic_lipschitz",
]
