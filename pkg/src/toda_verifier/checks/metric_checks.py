"""Toda Verifier - Metric Checks

Cone angles at the source point, finite energy near it, and independence of
the norms from the branch of the multivalued curve.
"""
import logging
import warnings
from typing import Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from toda_verifier.checks.report import CheckResult, GridSpec
from toda_verifier.checks.residuals import CurveSource, as_curve, require_inside
from toda_verifier.config import (
    BRANCH_OFFSET,
    CONE_RADII,
    ENERGY_CUTOFFS,
    ENERGY_RADIUS,
    QUADRATURE_LIMIT,
    THETA_SAMPLES,
    Tolerances,
)
from toda_verifier.errors import ArityMismatch, QuadratureFailure
from toda_verifier.toda_geometry import CanonicalCurve

logger = logging.getLogger(__name__)


def _quad(func, a: float, b: float, what: str, **kwargs) -> float:
    """scipy quad with its warnings promoted to QuadratureFailure."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, error = quad(func, a, b, limit=QUADRATURE_LIMIT, epsabs=1e-14, epsrel=1e-10, **kwargs)
        except IntegrationWarning as exc:
            raise QuadratureFailure(f"{what} on [{a:g}, {b:g}]: {exc}") from None
    if not np.isfinite(value) or error > max(1e-8 * abs(value), 1e-13):
        raise QuadratureFailure(f"{what} on [{a:g}, {b:g}] has error estimate {error:.3e} for value {value:.6g}")
    return float(value)


def _theta_grid(samples: int = THETA_SAMPLES) -> np.ndarray:
    return 2 * np.pi * np.arange(samples) / samples


def aitken_limit(values: Sequence[float]) -> float:
    """Aitken delta-squared extrapolation of the last three terms of a sequence."""
    if len(values) < 3:
        return float(values[-1])
    x0, x1, x2 = values[-3:]
    denominator = x2 - 2 * x1 + x0
    if abs(denominator) <= 1e-14 * max(abs(x0), abs(x1), abs(x2)):
        return float(x2)
    limit = x2 - (x2 - x1) ** 2 / denominator
    # fall back when the sequence is not geometrically convergent
    if abs(limit - x2) > 10 * abs(x2 - x1):
        return float(x2)
    return float(limit)


def _check_index(curve: CanonicalCurve, k: int) -> None:
    if not 1 <= k <= curve.n:
        raise ArityMismatch(f"metric index {k} outside 1..{curve.n}")


def cone_ratios(curve: CanonicalCurve, k: int, radii: Sequence[float], theta0: float = 0.0) -> list[dict]:
    """Circumference L(r) and radial length d(r) of e^{u_k}|dz|^2 for each radius."""
    _check_index(curve, k)
    gamma = curve.exponents.gamma[k - 1]
    theta = _theta_grid()
    direction = np.exp(1j * theta0)

    def half_density(t):
        return float(np.exp(curve.remainders(np.array([t * direction]))[k - 1, 0] / 2))

    rows = []
    for r in radii:
        circle = curve.remainders(r * np.exp(1j * theta))[k - 1]
        # periodic trapezoid rule
        circumference = 2 * np.pi * r ** (1 + gamma) * float(np.mean(np.exp(circle / 2)))
        # e^{u/2} = t^gamma e^{R/2}, integrated against the algebraic weight t^gamma
        radial = _quad(half_density, 0.0, r, f"radial length of metric {k}", weight="alg", wvar=(gamma, 0.0))
        rows.append({"radius": float(r), "circumference": circumference, "radial_length": radial,
                     "ratio": circumference / radial})
    return rows


def cone_angle(source: CurveSource, k: int, radii: Sequence[float] = CONE_RADII, theta0: float = 0.0,
               tolerances: Tolerances | None = None, name: str = "cone-angle") -> CheckResult:
    """Extrapolated L(r)/d(r) against 2 pi (1 + gamma_k)."""
    tolerances = tolerances or Tolerances()
    curve = as_curve(source)
    rows = cone_ratios(curve, k, sorted(radii, reverse=True), theta0)
    limit = aitken_limit([row["ratio"] for row in rows])
    expected = 2 * np.pi * (1 + curve.exponents.gamma[k - 1])
    error = abs(limit - expected) / expected

    status = "pass" if error <= tolerances.cone_angle else "fail"
    logger.info("Cone angle of metric %d: %.8g (expected %.8g)", k, limit, expected)
    return CheckResult(
        name=name,
        status=status,
        max_residual=error,
        tolerance=tolerances.cone_angle,
        parameters={"k": k, "theta0": theta0, "samples": rows, "limit": limit, "expected": expected},
        message=None if status == "pass" else f"cone angle {limit:.6g} differs from {expected:.6g}",
    )


def cone_angles(source: CurveSource, radii: Sequence[float] = CONE_RADII, theta0: float = 0.0,
                tolerances: Tolerances | None = None) -> CheckResult:
    """cone_angle for every k, folded into one report entry."""
    curve = as_curve(source)
    results = [cone_angle(curve, k, radii, theta0, tolerances) for k in range(1, curve.n + 1)]
    return _fold("cone-angle", results)


def energy_values(curve: CanonicalCurve, k: int, r: float, cutoffs: Sequence[float]) -> list[float]:
    """Area of e^{u_k}|dz|^2 over eps < |z| < r for each cutoff eps (descending)."""
    _check_index(curve, k)
    gamma = curve.exponents.gamma[k - 1]
    theta = _theta_grid()

    def radial(rho):
        ring = curve.remainders(rho * np.exp(1j * theta))[k - 1]
        return rho ** (2 * gamma + 1) * 2 * np.pi * float(np.mean(np.exp(ring)))

    values = []
    total = 0.0
    upper = r
    for eps in cutoffs:
        total += _quad(radial, eps, upper, f"energy of metric {k}")
        values.append(total)
        upper = eps
    return values


def energy(source: CurveSource, k: int, r: float = ENERGY_RADIUS, cutoffs: Sequence[float] = ENERGY_CUTOFFS,
           tolerances: Tolerances | None = None, name: str = "energy") -> CheckResult:
    """Convergence of the truncated energies as the cutoff shrinks."""
    tolerances = tolerances or Tolerances()
    curve = as_curve(source)
    cutoffs = sorted(cutoffs, reverse=True)
    values = energy_values(curve, k, r, cutoffs)

    differences = np.diff(values)
    extrapolated = values[-1]
    ratio = None
    if differences.size >= 2:
        first, last = differences[-2], differences[-1]
        if abs(first) > 0:
            ratio = float(last / first)
        converged = (ratio is not None and 0 <= ratio < 1) or max(abs(first), abs(last)) <= tolerances.energy
        if ratio is not None and 0 <= ratio < 1:
            extrapolated = values[-1] + last * ratio / (1 - ratio)
    else:
        converged = True

    gamma = curve.exponents.gamma[k - 1]
    status = "pass" if converged else "fail"
    residual = float(abs(differences[-1])) if differences.size else 0.0
    logger.info("Energy of metric %d on |z| < %g: %.10g (ratio %s)", k, r, extrapolated, ratio)
    return CheckResult(
        name=name,
        status=status,
        max_residual=residual,
        tolerance=tolerances.energy,
        parameters={
            "k": k,
            "radius": r,
            "cutoffs": list(cutoffs),
            "values": values,
            "cauchy_ratio": ratio,
            "expected_ratio": float((cutoffs[-1] / cutoffs[-2]) ** (2 * gamma + 2)) if len(cutoffs) > 1 else None,
            "extrapolated": float(extrapolated),
        },
        message=None if converged else f"energies {values} do not converge",
    )


def energies(source: CurveSource, r: float = ENERGY_RADIUS, cutoffs: Sequence[float] = ENERGY_CUTOFFS,
             tolerances: Tolerances | None = None) -> CheckResult:
    curve = as_curve(source)
    results = [energy(curve, k, r, cutoffs, tolerances) for k in range(1, curve.n + 1)]
    return _fold("energy", results)


def branch_consistency(source: CurveSource, grid: GridSpec, tolerances: Tolerances | None = None,
                       offset: float = BRANCH_OFFSET, name: str = "branch") -> CheckResult:
    """Norms by moduli vs by complex branched coordinates at points straddling the cut."""
    tolerances = tolerances or Tolerances()
    if grid.is_empty:
        return CheckResult.skipped(name, "empty grid", **grid.model_dump())

    curve = as_curve(source)
    require_inside(grid, curve)
    radii = grid.radii()
    above = radii * np.exp(1j * (np.pi - offset))
    below = radii * np.exp(-1j * (np.pi - offset))

    discrepancy = 0.0
    for k in range(curve.n + 1):
        for points in (above, below):
            moduli = curve.norm_sq(k, points)
            for sheet in (0, 1 if points is below else -1):
                branched = curve.norm_sq_branched(k, points, sheet=sheet)
                discrepancy = max(discrepancy, float(np.max(np.abs(branched - moduli) / moduli)))

    conjugate = None
    if all(np.all(np.isreal(term[3].coeffs)) for level in curve.levels for term in level):
        u_above = curve.u(above)
        u_below = curve.u(below)
        conjugate = float(np.max(np.abs(u_above - u_below)))
        discrepancy = max(discrepancy, conjugate)

    status = "pass" if discrepancy <= tolerances.branch else "fail"
    logger.info("Branch consistency: discrepancy %.3e", discrepancy)
    return CheckResult(
        name=name,
        status=status,
        max_residual=discrepancy,
        tolerance=tolerances.branch,
        parameters={**grid.model_dump(), "radii": radii.tolist(), "offset": offset, "conjugate_pair_difference": conjugate},
        message=None if status == "pass" else f"branch discrepancy {discrepancy:.3e}",
    )


def _fold(name: str, results: list[CheckResult]) -> CheckResult:
    """Merge per-index results into one entry; the worst status wins."""
    rank = {"skipped": 0, "pass": 1, "fail": 2, "error": 3}
    worst = max(results, key=lambda result: rank[result.status])
    residuals = [r.max_residual for r in results if r.max_residual is not None]
    messages = [f"k={r.parameters.get('k')}: {r.message}" for r in results if r.message]
    return CheckResult(
        name=name,
        status=worst.status,
        max_residual=max(residuals) if residuals else None,
        tolerance=results[0].tolerance if results else None,
        parameters={"per_index": [r.parameters for r in results]},
        message="; ".join(messages) or None,
    )
