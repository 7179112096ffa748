"""Experiment configuration: strict schema, defaults for the two reproduction runs, hashing."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


def _probability(v, name):
    if not 0 < v < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {v}")
    return v


class BoxConfig(_Strict):
    lower: List[float]
    upper: List[float]

    @model_validator(mode="after")
    def _ordered(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower and upper must be non-empty and equally long")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("every lower bound must be below its upper bound")
        return self


class TrainingGridConfig(BoxConfig):
    counts: List[int]

    @field_validator("counts")
    @classmethod
    def _positive(cls, v):
        if any(c < 1 for c in v):
            raise ValueError("grid counts must be >= 1")
        return v

    @model_validator(mode="after")
    def _lengths(self):
        if len(self.counts) not in (1, len(self.lower)):
            raise ValueError("counts must have one entry or one per dimension")
        return self


class KernelConfig(_Strict):
    signal_variance: float = 1.0
    lengthscales: List[float]
    fit: bool = True
    n_starts: int = Field(8, ge=1)

    @model_validator(mode="after")
    def _positive(self):
        if not self.signal_variance > 0 or any(not l > 0 for l in self.lengthscales):
            raise ValueError("kernel hyperparameters must be positive")
        return self


class GainsConfig(_Strict):
    k_c: float = Field(gt=0)
    lam: float = Field(alias="lambda", gt=0)


class ReferenceConfig(_Strict):
    amplitude: List[float]
    frequency: Union[float, List[float]] = 1.0
    phase: Union[float, List[float]] = 0.0
    offset: Union[float, List[float]] = 0.0


class IntegratorConfig(_Strict):
    dt: float = Field(1e-3, gt=0)
    t_end: float = Field(20.0, gt=0)


class AsymptoticsConfig(_Strict):
    schedule: List[int]
    domain: BoxConfig
    truth: Literal["sin-product", "zero"] = "sin-product"
    f_bar: float = Field(ge=0)
    f_lipschitz: float = Field(ge=0)
    signal_variance: float = Field(1.0, gt=0)
    lengthscales: List[float]
    noise_variance: float = Field(0.01, ge=0)
    tau0: float = Field(1.0, gt=0)
    eval_per_dim: int = Field(400, ge=2)
    eval_cap: int = Field(100_000, ge=4)
    dense_cap: int = Field(4000, ge=1)


class ExperimentConfig(_Strict):
    experiment: Literal["synthetic", "robot"] = "synthetic"
    kernel: Optional[KernelConfig] = None
    noise_variance: float = Field(0.01, ge=0)
    domain: Optional[BoxConfig] = None
    training: Optional[TrainingGridConfig] = None
    data_csv: Optional[str] = None
    delta: float = 0.01
    delta_l: float = 0.01
    tau: float = 1e-8
    f_lipschitz: Optional[float] = None
    gains: Optional[GainsConfig] = None
    reference: Optional[ReferenceConfig] = None
    integrator: IntegratorConfig = IntegratorConfig()
    initial_state: Optional[List[float]] = None
    gravity: float = 9.81
    transient_time: Optional[float] = None
    bound_grid_points: int = Field(100, ge=2)
    seed: int = Field(0, ge=0)
    output_dir: str = "out"
    asymptotics: Optional[AsymptoticsConfig] = None

    @field_validator("delta", "delta_l")
    @classmethod
    def _prob(cls, v, info):
        return _probability(v, info.field_name)

    @field_validator("tau")
    @classmethod
    def _tau(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("tau must be positive")
        return v

    def digest(self) -> str:
        """SHA-256 over the canonical JSON of every field except the output directory."""
        payload = self.model_dump(mode="json", by_alias=True, exclude={"output_dir"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def manifest(self, provenance=()) -> dict:
        return {
            "artifact": "gpcert",
            "version": __version__,
            "config_hash": self.digest(),
            "seed": self.seed,
            "provenance": list(provenance),
        }


def load_config(path) -> ExperimentConfig:
    """Read a YAML or JSON config; unknown keys are rejected."""
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return ExperimentConfig.model_validate(data)


def synthetic_defaults(**overrides) -> ExperimentConfig:
    """Constants of the two-state synthetic tracking experiment."""
    base = dict(
        experiment="synthetic",
        kernel=KernelConfig(signal_variance=1.0, lengthscales=[1.0, 1.0], fit=True),
        noise_variance=0.01,
        domain=BoxConfig(lower=[-6.0, -4.0], upper=[4.0, 4.0]),
        training=TrainingGridConfig(lower=[0.0, -3.0], upper=[3.0, 3.0], counts=[9, 9]),
        delta=0.01,
        delta_l=0.01,
        tau=1e-8,
        gains=GainsConfig(k_c=2.0, lam=1.0),
        reference=ReferenceConfig(amplitude=[2.0], frequency=1.0),
        integrator=IntegratorConfig(dt=1e-3, t_end=20.0),
        initial_state=[-6.0, 0.0],
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def robot_defaults(**overrides) -> ExperimentConfig:
    """Constants of the two-link manipulator experiment."""
    pi = math.pi
    base = dict(
        experiment="robot",
        kernel=KernelConfig(signal_variance=1.0, lengthscales=[1.0] * 4, fit=True),
        noise_variance=0.01,
        domain=BoxConfig(lower=[-pi] * 4, upper=[pi] * 4),
        training=TrainingGridConfig(lower=[-1.0] * 4, upper=[1.0] * 4, counts=[3]),
        delta=0.01,
        delta_l=0.01,
        tau=1e-8,
        gains=GainsConfig(k_c=7.0, lam=1.0),
        reference=ReferenceConfig(amplitude=[0.5, 0.5], frequency=1.0, phase=[0.0, pi / 2]),
        integrator=IntegratorConfig(dt=1e-3, t_end=20.0),
        initial_state=[0.0, 0.0, 0.0, 0.0],
        gravity=9.81,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def asymptotics_defaults(**overrides) -> ExperimentConfig:
    asym = AsymptoticsConfig(
        schedule=[25, 100, 400, 1600],
        domain=BoxConfig(lower=[0.0, 0.0], upper=[1.0, 1.0]),
        truth="sin-product",
        f_bar=1.0,
        f_lipschitz=math.hypot(2.0, 3.0),
        signal_variance=1.0,
        lengthscales=[0.3, 0.3],
        noise_variance=0.01,
    )
    base = dict(asymptotics=asym, delta=0.01)
    base.update(overrides)
    return ExperimentConfig(**base)
