"""Toda Verifier - Scenario Loader Module"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from toda_verifier.checks.report import GridSpec
from toda_verifier.config import (
    CONE_RADII,
    DEFAULT_TRUNCATION_ORDER,
    ENERGY_CUTOFFS,
    ENERGY_RADIUS,
    Tolerances,
)
from toda_verifier.errors import ArityMismatch, ConfigError, IllegalWeight, InsufficientOrder
from toda_verifier.exponents import make_exponent_data
from toda_verifier.wronskian_engine import SeedData

logger = logging.getLogger(__name__)

TaskName = Literal["normalize", "pde", "plucker", "fuchsian", "cone-angle", "energy", "metric-grid", "chart", "branch"]


class OutputNames(BaseModel):
    """File names written under the output directory."""
    model_config = ConfigDict(extra="forbid")

    report: str = "report.json"
    metric_grid: str = "metric_grid.csv"
    normalized_seed: str = "normalized_seed.json"
    operator: str = "fuchsian_operator.json"


class ScenarioConfig(BaseModel):
    """One verification scenario: weights, seed polynomials and the tasks to run."""
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1, description="Rank of SU(n+1)")
    gamma: list[float] = Field(description="Source weights, each > -1")
    g: list[list[tuple[float, float]]] = Field(description="Taylor coefficients of g_0..g_n as [re, im] pairs")
    truncation_order: int = Field(default=DEFAULT_TRUNCATION_ORDER, description="Series truncation order N")
    tasks: list[TaskName] = Field(default_factory=list)
    grid: GridSpec = Field(default_factory=GridSpec)
    tolerances: dict[str, float] = Field(default_factory=dict)
    cone_radii: list[float] = Field(default_factory=lambda: list(CONE_RADII))
    energy_radius: float = Field(default=ENERGY_RADIUS, gt=0)
    energy_cutoffs: list[float] = Field(default_factory=lambda: list(ENERGY_CUTOFFS))
    output: OutputNames = Field(default_factory=OutputNames)

    @field_validator("tasks")
    @classmethod
    def _unique_tasks(cls, tasks: list[str]) -> list[str]:
        return list(dict.fromkeys(tasks))

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, tolerances: dict[str, float]) -> dict[str, float]:
        unknown = sorted(set(tolerances) - set(Tolerances.model_fields))
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {', '.join(unknown)}")
        return tolerances

    @model_validator(mode="after")
    def _check_consistency(self):
        if len(self.gamma) != self.n:
            raise ArityMismatch(f"gamma has {len(self.gamma)} entries, rank {self.n} needs {self.n}")
        for i, g in enumerate(self.gamma, start=1):
            if g <= -1:
                raise IllegalWeight(f"gamma_{i} = {g} must be > -1")
        if len(self.g) != self.n + 1:
            raise ArityMismatch(f"g has {len(self.g)} series, rank {self.n} needs {self.n + 1}")
        if self.truncation_order < self.n + 4:
            raise InsufficientOrder(f"truncation_order {self.truncation_order} is below n + 4 = {self.n + 4}")
        for i, coefficients in enumerate(self.g):
            if not coefficients:
                raise ArityMismatch(f"g_{i} has no coefficients")
            if len(coefficients) > self.truncation_order + 1:
                raise InsufficientOrder(f"g_{i} has degree {len(coefficients) - 1} above truncation_order {self.truncation_order}")
        return self

    def effective_tolerances(self, overrides: dict[str, float] | None = None) -> Tolerances:
        return Tolerances().with_overrides({**self.tolerances, **(overrides or {})})


class ScenarioLoader:
    """Reads scenario files and turns them into seeds."""

    @staticmethod
    def load_config(path: str | Path) -> ScenarioConfig:
        """Parse and validate a JSON scenario file."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc.strerror}", path) from None

        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}", path) from None

        return ScenarioLoader.from_payload(payload, path)

    @staticmethod
    def from_payload(payload: dict, path: Path | None = None) -> ScenarioConfig:
        try:
            return ScenarioConfig.model_validate(payload)
        except ValidationError as exc:
            raise ConfigError(ScenarioLoader.describe_errors(exc), path) from None

    @staticmethod
    def describe_errors(exc: ValidationError) -> str:
        """One 'field: ErrorName: reason' line per validation problem."""
        lines = []
        for error in exc.errors():
            location = ".".join(str(part) for part in error["loc"]) or "<root>"
            cause = error.get("ctx", {}).get("error")
            if isinstance(cause, Exception):
                lines.append(f"{location}: {type(cause).__name__}: {cause}")
            else:
                lines.append(f"{location}: {error['msg']}")
        return "invalid scenario\n  " + "\n  ".join(lines)

    @staticmethod
    def build_seed(config: ScenarioConfig, tolerances: Tolerances | None = None) -> SeedData:
        exponents = make_exponent_data(config.n, config.gamma, tolerances)
        coefficients = [[complex(re, im) for re, im in series] for series in config.g]
        return SeedData.from_coefficients(exponents, coefficients, config.truncation_order)

    @staticmethod
    def seed_fingerprint(config: ScenarioConfig) -> str:
        """SHA-256 of the canonical JSON of everything that defines the seed."""
        canonical = json.dumps(
            {"n": config.n, "gamma": config.gamma, "g": config.g, "truncation_order": config.truncation_order},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path: str | Path) -> ScenarioConfig:
    return ScenarioLoader.load_config(path)
