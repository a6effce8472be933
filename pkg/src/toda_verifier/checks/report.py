"""Toda Verifier - Check Results and Reports"""
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from toda_verifier.errors import GridSpecError

CheckStatus = Literal["pass", "fail", "error", "skipped"]

# Fitted grids keep their outer stencils inside this fraction of the validity radius
FIT_MARGIN = 0.95


class GridSpec(BaseModel):
    """Polar sampling grid on an annulus around the source point."""

    r_min: float = Field(default=0.2, gt=0, description="Inner radius")
    r_max: float = Field(default=0.6, gt=0, description="Outer radius")
    n_r: int = Field(default=5, ge=0, description="Number of radii")
    n_theta: int = Field(default=8, ge=0, description="Number of angles per radius")
    fd_step: float = Field(default=1e-3, gt=0, description="Finite-difference step h")

    @model_validator(mode="after")
    def _check_geometry(self):
        if self.r_min >= self.r_max:
            raise GridSpecError(f"r_min = {self.r_min} must be below r_max = {self.r_max}")
        if self.r_min - 2 * self.fd_step <= 0:
            raise GridSpecError(f"stencils of step {self.fd_step} around r_min = {self.r_min} reach the origin")
        if self.fd_step > self.r_min / 10:
            raise GridSpecError(f"fd_step = {self.fd_step} exceeds r_min / 10 = {self.r_min / 10}")
        return self

    @property
    def is_empty(self) -> bool:
        return self.n_r == 0 or self.n_theta == 0

    def radii(self) -> np.ndarray:
        if self.n_r == 1:
            return np.array([self.r_min])
        return np.linspace(self.r_min, self.r_max, self.n_r)

    def angles(self) -> np.ndarray:
        # offset by half a cell so no sample sits on the negative real axis
        return 2 * np.pi * (np.arange(self.n_theta) + 0.5) / self.n_theta - np.pi

    def points(self) -> np.ndarray:
        """All grid points, radius-major, as a flat complex array."""
        if self.is_empty:
            return np.zeros(0, dtype=complex)
        radius, theta = np.meshgrid(self.radii(), self.angles(), indexing="ij")
        return (radius * np.exp(1j * theta)).ravel()

    def fitted(self, radius: float) -> "GridSpec":
        """This grid, or a copy pulled inside `radius` when its outer stencils would reach past it."""
        if self.is_empty or self.r_max + 2 * self.fd_step <= radius:
            return self
        r_max = FIT_MARGIN * radius
        r_min = min(self.r_min, r_max / 2)
        fd_step = min(self.fd_step, r_min / 10)
        return GridSpec(**{**self.model_dump(), "r_min": r_min, "r_max": r_max - 2 * fd_step, "fd_step": fd_step})


class CheckResult(BaseModel):
    """One report entry."""

    name: str = Field(description="Task name")
    status: CheckStatus
    max_residual: Optional[float] = Field(default=None, description="Largest residual the check measured")
    tolerance: Optional[float] = Field(default=None, description="Tolerance the residual was held to")
    parameters: dict[str, Any] = Field(default_factory=dict, description="Everything needed to reproduce the check")
    message: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "skipped")

    @classmethod
    def skipped(cls, name: str, reason: str, **parameters) -> "CheckResult":
        return cls(name=name, status="skipped", message=reason, parameters=parameters)

    @classmethod
    def from_error(cls, name: str, error: Exception, tolerance: Optional[float] = None) -> "CheckResult":
        return cls(name=name, status="error", tolerance=tolerance, message=f"{type(error).__name__}: {error}")


class VerificationReport(BaseModel):
    """Outcome of one scenario run."""

    checks: list[CheckResult] = Field(default_factory=list)
    seed_fingerprint: str = Field(description="SHA-256 of the canonical seed JSON")
    seed: dict[str, Any] = Field(default_factory=dict, description="Normalization root, G_n(0) and validity radius")
    config: dict[str, Any] = Field(default_factory=dict, description="Effective scenario configuration")
    timings: dict[str, float] = Field(default_factory=dict, description="Wall-clock seconds per task")

    @model_validator(mode="after")
    def _unique_names(self):
        names = [check.name for check in self.checks]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate check entries in report: {names}")
        return self

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def summary_rows(self) -> list[list[Any]]:
        return [
            [check.name, check.status, check.max_residual, check.tolerance, check.message or ""]
            for check in self.checks
        ]

    def without_timings(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"timings"})
