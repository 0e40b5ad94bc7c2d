"""
Pydantic Models for Run Configuration
One section per experiment; a JSON config file and command-line flags both
validate through RunConfig.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

import configs
from models.ball_gas import BallGasConfig


class ExperimentKind(str, Enum):
    """Available experiments (CLI sub-commands)"""
    CONCENTRATION = "concentration"
    QET = "qet"
    MEASURE = "measure"
    SCHMIDT = "schmidt"


# ========================================================================
# Experiment Sections
# ========================================================================

class ConcentrationParams(BaseModel):
    """Monte Carlo test of the concentration of rho_1 around I/n1"""
    n1: int = Field(4, ge=1, description="Dimension of the kept subsystem")
    n2: int = Field(64, ge=1, description="Dimension of the traced-out subsystem")
    trials: int = Field(10000, ge=100, description="Number of uniformly sampled states")
    epsilons: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2], min_length=1,
                                  description="Strictly increasing deviation thresholds")
    diagonal_index: int = Field(0, ge=0, description="j of the tracked diagonal entry (rho_1)_jj")
    off_diagonal_pair: Tuple[int, int] = Field((0, 1), description="(j, k) of the tracked off-diagonal entry")
    gradient_samples: int = Field(1000, ge=1, description="States used for the gradient-norm check")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {"n1": 4, "n2": 64, "trials": 10000, "epsilons": [0.05, 0.1, 0.2]}
            ]
        },
    }

    @field_validator("epsilons", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("epsilons")
    @classmethod
    def _increasing(cls, value: List[float]) -> List[float]:
        if any(eps <= 0 for eps in value):
            raise ValueError("every epsilon must be > 0")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("epsilons must be strictly increasing")
        return value


class QetParams(BaseModel):
    """Ball-gas evolution and macro-cell time statistics"""
    model: BallGasConfig = Field(default_factory=BallGasConfig, description="Ball-gas model; its seed is replaced by the run seed")
    shell_lo: Optional[float] = Field(None, description="Lower shell edge (inclusive); with shell_hi overrides shell_dimension")
    shell_hi: Optional[float] = Field(None, description="Upper shell edge (exclusive)")
    shell_dimension: int = Field(26, ge=1, description="Size of the mid-spectrum shell when no edges are given")
    cells: int = Field(4, ge=1, description="Number of equal ball-position bins (macro cells); must divide the lattice length")
    initial_cell: int = Field(0, ge=0, description="Macro cell the initial state is localised in")
    t_max: Optional[float] = Field(None, gt=0, description="Time horizon; default horizon_factor / (minimum occupied gap)")
    horizon_factor: float = Field(100.0, gt=0, description="Multiple of the inverse minimum occupied gap used for t_max")
    n_times: int = Field(2000, ge=2, description="Number of uniformly spaced sample times")
    epsilon: Optional[float] = Field(None, gt=0, description="Ergodic tolerance; default 2 * max temporal std")
    threshold: Optional[float] = Field(None, gt=0, lt=1, description="Branch threshold; default 0.5 * min d/D")
    degeneracy_tol: float = Field(1e-9, gt=0, description="Tolerance of the level and gap degeneracy check")
    max_attempts: int = Field(10, ge=1, description="Reseeding attempts for a nondegenerate spectrum")
    project: bool = Field(False, description="Project an out-of-shell initial state instead of failing")
    entropy_samples: int = Field(200, ge=1, description="Times at which ball-gas entanglement entropy is reported")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {"model": {"sites": 8, "n_gas": 1, "tilt": 1e-3, "eta": 1e-6},
                 "shell_dimension": 26, "cells": 4, "n_times": 2000}
            ]
        },
    }

    @model_validator(mode="after")
    def _check_layout(self):
        if (self.shell_lo is None) != (self.shell_hi is None):
            raise ValueError("shell_lo and shell_hi must be given together")
        if self.shell_lo is not None and not self.shell_lo < self.shell_hi:
            raise ValueError("shell_lo must be below shell_hi")
        if self.initial_cell >= self.cells:
            raise ValueError("initial_cell must be below cells")
        if self.model.sites % self.cells:
            raise ValueError(f"cells={self.cells} does not divide the lattice length {self.model.sites}")
        return self


class MeasureParams(BaseModel):
    """Qubit measured by a pointer of N rotated spins"""
    theta: float = Field(0.451, description="Rotation angle per spin (radians)")
    n_spins: int = Field(50, ge=1, description="Number of pointer spins N")
    c_plus: str = Field("0.7071067811865476", description="Qubit amplitude of |+>, Python complex literal")
    c_minus: str = Field("0.7071067811865476", description="Qubit amplitude of |->, Python complex literal")
    n_values: List[int] = Field(default_factory=lambda: [1, 2, 5, 10, 20, 40, 50],
                                description="Pointer sizes of the overlap-decay table")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {"theta": 0.451, "n_spins": 50, "c_plus": "0.6", "c_minus": "0.8j"}
            ]
        },
    }

    @field_validator("c_plus", "c_minus")
    @classmethod
    def _complex_literal(cls, value: str) -> str:
        try:
            complex(value.replace(" ", ""))
        except ValueError:
            raise ValueError(f"{value!r} is not a complex number") from None
        return value

    @field_validator("n_values")
    @classmethod
    def _positive_sizes(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("n_values must be a non-empty list of positive integers")
        return value

    @model_validator(mode="after")
    def _normalised(self):
        norm = abs(self.plus_amplitude) ** 2 + abs(self.minus_amplitude) ** 2
        if abs(norm - 1.0) > configs.NORM_TOL:
            raise ValueError(f"|c_plus|^2 + |c_minus|^2 must be 1, got {norm!r}")
        return self

    @property
    def plus_amplitude(self) -> complex:
        return complex(self.c_plus.replace(" ", ""))

    @property
    def minus_amplitude(self) -> complex:
        return complex(self.c_minus.replace(" ", ""))


class SchmidtParams(BaseModel):
    """Schmidt decomposition of random bipartite states"""
    n1: int = Field(3, ge=1, description="Dimension of subsystem 1")
    n2: int = Field(4, ge=1, description="Dimension of subsystem 2")
    samples: int = Field(200, ge=1, description="Number of sampled states")

    model_config = {"extra": "forbid"}


# ========================================================================
# Run Configuration
# ========================================================================

class RunConfig(BaseModel):
    """Everything that determines a run"""
    experiment: ExperimentKind = Field(..., description="Experiment to run")
    seed: int = Field(configs.DEFAULT_SEED, ge=0, lt=2**64, description="Root seed of every random stream")
    out: str = Field(configs.OUTPUT_DIR, description="Report directory")
    threads: int = Field(configs.DEFAULT_THREADS, ge=1, description="Worker threads; reports do not depend on it")
    concentration: ConcentrationParams = Field(default_factory=ConcentrationParams)
    qet: QetParams = Field(default_factory=QetParams)
    measure: MeasureParams = Field(default_factory=MeasureParams)
    schmidt: SchmidtParams = Field(default_factory=SchmidtParams)

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {"experiment": "measure", "seed": 42, "out": "reports",
                 "measure": {"theta": 0.451, "n_spins": 50}}
            ]
        },
    }

    def provenance(self) -> dict:
        """Config echo for reports: everything except where and how many threads it ran with."""
        return self.model_dump(mode="json", exclude={"out", "threads"})
