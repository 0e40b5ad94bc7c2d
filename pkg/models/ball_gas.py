"""
Pydantic model for the lattice ball-and-gas toy system.
"""

import math
from enum import Enum

from pydantic import BaseModel, Field, model_validator

import configs


class GasStatistics(str, Enum):
    """How gas particles are counted on the lattice"""
    DISTINGUISHABLE = "distinguishable"
    HARDCORE_BOSONS = "hardcore_bosons"


class BallGasConfig(BaseModel):
    """One heavy ball and n_gas light particles on an open 1-D lattice of L sites"""
    sites: int = Field(8, ge=1, description="Lattice length L")
    n_gas: int = Field(1, ge=0, description="Number of gas particles")
    ball_hop: float = Field(0.4, description="Ball nearest-neighbour hopping t_B (energy)")
    gas_hop: float = Field(1.0, description="Gas nearest-neighbour hopping t_G (energy)")
    exchange_hop: float = Field(0.9, description="Hop t_X of a gas particle over the adjacent ball to the mirrored site (energy)")
    contact: float = Field(0.5, ge=0.0, description="Repulsion U_C per gas particle next to the ball (energy)")
    tilt: float = Field(1e-3, description="Slope v of the ball potential V(Q) = v*Q (energy)")
    hard_core: bool = Field(True, description="Exclude gas from the ball site (basis restriction)")
    exclusion: float = Field(0.0, ge=0.0, description="Soft ball-gas same-site repulsion U_X, used when hard_core is off")
    eta: float = Field(1e-6, ge=0.0, description="Amplitude of the random diagonal perturbation")
    seed: int = Field(0, ge=0, lt=2**64, description="Seed of the diagonal perturbation")
    statistics: GasStatistics = Field(GasStatistics.DISTINGUISHABLE, description="Gas particle statistics")
    dimension_cap: int = Field(configs.DIMENSION_CAP, ge=1, description="Largest admissible Hilbert dimension")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "examples": [
                {"sites": 8, "n_gas": 1, "ball_hop": 0.4, "gas_hop": 1.0, "exchange_hop": 0.9,
                 "contact": 0.5, "tilt": 1e-3, "hard_core": True, "eta": 1e-6, "seed": 0}
            ]
        },
    }

    @model_validator(mode="after")
    def _gas_fits(self):
        free_sites = self.sites - 1 if self.hard_core else self.sites
        if self.n_gas > free_sites:
            raise ValueError(f"{self.n_gas} hard-core gas particles do not fit on {free_sites} free sites")
        return self

    @property
    def gas_sites(self) -> int:
        """Sites available to the gas for a fixed ball position."""
        return self.sites - 1 if self.hard_core else self.sites

    def gas_configuration_count(self, sites: int) -> int:
        if self.statistics == GasStatistics.DISTINGUISHABLE:
            return math.perm(sites, self.n_gas)
        return math.comb(sites, self.n_gas)

    @property
    def dimension(self) -> int:
        """Total Hilbert dimension L * (gas configurations per ball site)."""
        return self.sites * self.gas_configuration_count(self.gas_sites)
