"""Axis-aligned boxes used as input sets for certificates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Domain:
    """Compact hyperrectangle ``[lower, upper]`` in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("domain bounds must be 1-D vectors of equal length")
        if lower.size == 0:
            raise ValueError("empty domain")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("domain bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("empty domain: every lower bound must be below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low, high, dim):
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        """Maximal extension max ||x - x'|| over the box (its diagonal)."""
        return float(np.linalg.norm(self.widths))

    def __eq__(self, other):
        if not isinstance(other, Domain):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def contains(self, x, tol=1e-12) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        inside = np.all((x >= self.lower - tol) & (x <= self.upper + tol), axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def grid(self, counts) -> np.ndarray:
        """Uniform tensor grid with ``counts[i]`` nodes along dimension i, endpoints included."""
        counts = np.broadcast_to(np.asarray(counts, dtype=int), (self.dimension,))
        if np.any(counts < 1):
            raise ValueError("grid counts must be >= 1")
        axes = [
            np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2.0])
            for lo, hi, n in zip(self.lower, self.upper, counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, n, rng) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dimension))

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}
