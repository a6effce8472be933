"""Toda Verifier - Numerical Checks"""
from toda_verifier.checks.metric_checks import (
    branch_consistency,
    cone_angle,
    cone_angles,
    energies,
    energy,
)
from toda_verifier.checks.report import CheckResult, GridSpec, VerificationReport
from toda_verifier.checks.residuals import pde_residual, plucker_residual

__all__ = [
    "CheckResult",
    "GridSpec",
    "VerificationReport",
    "branch_consistency",
    "cone_angle",
    "cone_angles",
    "energies",
    "energy",
    "pde_residual",
    "plucker_residual",
]
