"""Toda Verifier - Configuration Module"""
import os
from pathlib import Path
from typing import Mapping

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from toda_verifier.errors import ConfigError

# Load environment variables
load_dotenv()

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent.parent
OUTPUT_DIR = Path(os.getenv("TODA_OUT", str(PROJECT_ROOT / "output")))

# Environment overrides for the command line (TODA_<FLAG>)
ENV_PREFIX = "TODA_"
DEFAULT_CONFIG = os.getenv("TODA_CONFIG") or None
DEFAULT_THREADS = int(os.getenv("TODA_THREADS", "1"))
DEFAULT_TOLERANCES = os.getenv("TODA_TOLERANCE", "")
LOG_LEVEL = os.getenv("TODA_LOG_LEVEL", "WARNING")

# Series settings
DEFAULT_TRUNCATION_ORDER = 48
VALIDITY_CAP = 1.0
TAIL_TOLERANCE = 1e-9

# Sampling settings
BRANCH_OFFSET = 1e-6
THETA_SAMPLES = 128
QUADRATURE_LIMIT = 200
CONE_RADII = (1e-2, 1e-3, 1e-4)
ENERGY_CUTOFFS = (1e-2, 1e-3, 1e-4)
ENERGY_RADIUS = 0.5


class Tolerances(BaseModel):
    """Named tolerances, one per identity that is checked numerically."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    algebraic: float = Field(default=1e-12, description="Exact algebraic identities (exponents, Wronskian at 0)")
    series_roundtrip: float = Field(default=1e-9, description="Series round trips (power, reversion)")
    normalization: float = Field(default=1e-10, description="Deviation of G_n from 1 after normalizing")
    route_agreement: float = Field(default=1e-10, description="u_k by norms vs 2*gamma_k*log|z| + R_k")
    chart: float = Field(default=1e-8, description="Chart invariance of the first metric")
    trace: float = Field(default=1e-10, description="Vanishing y^(n) coefficient of the operator")
    operator: float = Field(default=1e-9, description="Operator applied to the curve components")
    exponent: float = Field(default=1e-10, description="Indicial roots vs beta")
    obstruction: float = Field(default=1e-8, description="Frobenius obstruction at resonant orders")
    pde: float = Field(default=1e-6, description="Toda PDE residual")
    plucker: float = Field(default=1e-6, description="Infinitesimal Plucker residual")
    fd_order: float = Field(default=0.2, description="Allowed deviation of the measured FD order from 2")
    cone_angle: float = Field(default=0.01, description="Relative error of the extrapolated cone angle")
    energy: float = Field(default=1e-6, description="Absolute floor for the energy Cauchy differences")
    branch: float = Field(default=1e-10, description="Branch-cut discrepancy of norms")

    def with_overrides(self, overrides: Mapping[str, float]) -> "Tolerances":
        """Return a copy with some tolerances replaced."""
        unknown = sorted(set(overrides) - set(type(self).model_fields))
        if unknown:
            raise ConfigError(f"unknown tolerance name(s): {', '.join(unknown)}")
        return self.model_copy(update={name: float(value) for name, value in overrides.items()})


def parse_tolerance_overrides(items) -> dict[str, float]:
    """Parse NAME=VALUE strings (or one comma-separated string) into a mapping."""
    if isinstance(items, str):
        items = [part for part in items.split(",") if part.strip()]

    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override '{item}' is not of the form NAME=VALUE")
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance override '{item}' has a non-numeric value") from None
    return overrides
