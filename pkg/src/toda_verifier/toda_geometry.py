"""Toda Verifier - Canonical Curve Geometry

Evaluates the associated curves Lambda_k of a canonical curve, the Toda
solutions u_k = -sum_j a_kj log ||Lambda_{j-1}||^2 with their bounded
remainders, and the simplified metric in the normalizing chart xi.
"""
import logging
import warnings
from itertools import combinations
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from toda_verifier.config import TAIL_TOLERANCE, Tolerances, VALIDITY_CAP
from toda_verifier.errors import (
    ArityMismatch,
    DegenerateSeed,
    InternalInconsistency,
    OutOfDomainWarning,
    SingularEvaluation,
    UnnormalizedSeed,
)
from toda_verifier.exponents import ExponentData
from toda_verifier.series_core import (
    TruncatedSeries,
    compose,
    derivative,
    div,
    is_negligible,
    mul,
    power,
    principal_log,
    revert,
    tail_radius,
)
from toda_verifier.wronskian_engine import SeedData, associated_terms, reduced_wronskian

logger = logging.getLogger(__name__)


class MetricSample(BaseModel):
    """Value of the k-th metric at one point."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    z: complex = Field(description="Sample point")
    k: int = Field(ge=1, description="Metric index 1..n")
    density: float = Field(gt=0, description="e^{u_k}, density against |dz|^2")
    u: float = Field(description="u_k(z)")
    remainder: float = Field(description="R_k(z) = u_k - 2 gamma_k log|z|")


class NormalizedChart(BaseModel):
    """Coordinate xi in which the curve reads [xi^beta_0, xi^beta_1, xi^beta_j g~_j(xi)]."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    forward: TruncatedSeries = Field(description="xi as a series in z")
    reversion: TruncatedSeries = Field(description="z as a series in xi")
    tilde_g: tuple[TruncatedSeries, ...] = Field(description="g~_2..g~_n")
    validity_radius: float = Field(gt=0, description="Radius in the xi disc where the series are trusted")


def seed_validity_radius(gs: Sequence[TruncatedSeries], tol: float = TAIL_TOLERANCE, cap: float = VALIDITY_CAP) -> float:
    return min(tail_radius(g, tol, cap) for g in gs)


class CanonicalCurve:
    """Associated-curve data of z -> [z^beta_i g_i(z)], evaluated on arrays of points.

    For each level k the terms of Lambda_k are kept as (shift, coefficient)
    pairs with shift = e_S + alpha_{k+1} >= 0, so that
    r_{k+1} = |z|^{2 alpha_{k+1}} ||Lambda_k||^2 = sum |z|^{2 shift} |G_S(z)|^2
    never needs a logarithm of a vanishing quantity.
    """

    def __init__(self, exponents: ExponentData, g: Sequence[TruncatedSeries], validity_radius: float | None = None,
                 tolerances: Tolerances | None = None):
        if len(g) != exponents.n + 1:
            raise ArityMismatch(f"rank {exponents.n} needs {exponents.n + 1} seed series, got {len(g)}")
        self.exponents = exponents
        self.n = exponents.n
        self.tolerances = tolerances or Tolerances()
        self.validity_radius = validity_radius if validity_radius is not None else seed_validity_radius(g)

        levels = associated_terms(exponents.beta, g, self.n)
        self.levels = []
        for k, terms in enumerate(levels):
            lowest = tuple(range(k + 1))
            alpha_next = exponents.alpha_at(k + 1)
            level = []
            for subset, term in terms.items():
                shift = 0.0 if subset == lowest else max(term.exponent + alpha_next, 0.0)
                level.append((subset, term.exponent, shift, term.coefficient))
            self.levels.append(level)

        self._cartan = exponents.cartan_array
        self._gamma = np.array(exponents.gamma)
        logger.debug("Canonical curve of rank %d with validity radius %.4g", self.n, self.validity_radius)

    @classmethod
    def from_seed(cls, seed: SeedData, tolerances: Tolerances | None = None) -> "CanonicalCurve":
        if not seed.normalized:
            raise UnnormalizedSeed("the canonical curve needs a normalized seed")
        return cls(seed.exponents, seed.g, tolerances=tolerances)

    # Point handling

    def _points(self, z, allow_origin: bool = False) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if not allow_origin and np.any(z == 0):
            raise SingularEvaluation("the metric is not defined at the source point z = 0")
        if np.any(np.abs(z) > self.validity_radius):
            message = f"evaluating at |z| = {np.max(np.abs(z)):.4g} beyond the validity radius {self.validity_radius:.4g}"
            logger.warning(message)
            warnings.warn(message, OutOfDomainWarning, stacklevel=3)
        return z

    # Norms

    def reduced_norm_sq(self, k: int, z) -> np.ndarray:
        """r_{k+1}(z) = |z|^{2 alpha_{k+1}} ||Lambda_k(z)||^2, bounded and positive near 0."""
        z = self._points(z, allow_origin=True)
        if k < 0:
            return np.ones(z.shape)
        radius_sq = np.abs(z) ** 2
        total = np.zeros(z.shape)
        for _, _, shift, coefficient in self.levels[k]:
            weight = np.ones(z.shape) if shift == 0.0 else radius_sq ** shift
            total = total + weight * np.abs(coefficient(z)) ** 2
        return total

    def norm_sq(self, k: int, z) -> np.ndarray:
        """||Lambda_k(z)||^2 summed term by term; ||Lambda_{-1}|| = 1."""
        z = self._points(z)
        if k < 0:
            return np.ones(z.shape)
        radius = np.abs(z)
        total = np.zeros(z.shape)
        for _, exponent, _, coefficient in self.levels[k]:
            total = total + radius ** (2 * exponent) * np.abs(coefficient(z)) ** 2
        return total

    def norm_sq_branched(self, k: int, z, sheet: int = 0) -> np.ndarray:
        """||Lambda_k||^2 from complex branched coordinates z^{e_S} G_S(z) on a given sheet."""
        z = self._points(z)
        if k < 0:
            return np.ones(z.shape)
        logs = principal_log(z) + 2j * np.pi * sheet
        total = np.zeros(z.shape)
        for _, exponent, _, coefficient in self.levels[k]:
            total = total + np.abs(np.exp(exponent * logs) * coefficient(z)) ** 2
        return total

    def log_norm_sq(self, k: int, z) -> np.ndarray:
        z = self._points(z)
        if k < 0:
            return np.zeros(z.shape)
        return -2 * self.exponents.alpha_at(k + 1) * np.log(np.abs(z)) + np.log(self.reduced_norm_sq(k, z))

    # Toda solutions

    def remainders(self, z) -> np.ndarray:
        """R_k = -sum_j a_kj log r_j for k = 1..n, shape (n, *z.shape)."""
        z = self._points(z, allow_origin=True)
        log_r = np.stack([np.log(self.reduced_norm_sq(j - 1, z)) for j in range(1, self.n + 1)])
        return -np.tensordot(self._cartan, log_r, axes=1)

    def u(self, z) -> np.ndarray:
        """u_k for k = 1..n, computed by norms and cross-checked against 2 gamma_k log|z| + R_k."""
        z = self._points(z)
        log_norms = np.stack([np.log(self.norm_sq(j - 1, z)) for j in range(1, self.n + 1)])
        by_norms = -np.tensordot(self._cartan, log_norms, axes=1)
        by_remainder = self.u_from_remainders(z)

        scale = np.maximum(1.0, np.abs(by_norms))
        discrepancy = float(np.max(np.abs(by_norms - by_remainder) / scale)) if by_norms.size else 0.0
        logger.debug("u route discrepancy %.3e", discrepancy)
        if discrepancy > self.tolerances.route_agreement:
            raise InternalInconsistency(f"u_k by norms and by remainders differ by {discrepancy:.3e}")
        return by_remainder

    def u_from_remainders(self, z) -> np.ndarray:
        z = self._points(z)
        log_radius = np.log(np.abs(z))
        return 2 * self._gamma.reshape((-1,) + (1,) * z.ndim) * log_radius + self.remainders(z)

    def density(self, z) -> np.ndarray:
        """e^{u_k} for k = 1..n."""
        return np.exp(self.u(z))

    def plucker_quotient(self, k: int, z) -> np.ndarray:
        """||Lambda_{k-1}||^2 ||Lambda_{k+1}||^2 / ||Lambda_k||^4 for k = 0..n-1."""
        if not 0 <= k < self.n:
            raise ArityMismatch(f"Plucker level {k} outside 0..{self.n - 1}")
        z = self._points(z)
        log_value = self.log_norm_sq(k - 1, z) + self.log_norm_sq(k + 1, z) - 2 * self.log_norm_sq(k, z)
        return np.exp(log_value)

    def sample(self, k: int, z: complex) -> MetricSample:
        if not 1 <= k <= self.n:
            raise ArityMismatch(f"metric index {k} outside 1..{self.n}")
        u = self.u(np.array([z]))[k - 1, 0]
        remainder = self.remainders(np.array([z]))[k - 1, 0]
        return MetricSample(z=complex(z), k=k, density=float(np.exp(u)), u=float(u), remainder=float(remainder))


def lambda_norm_sq(seed: SeedData, k: int, z: complex) -> float:
    """||Lambda_k(z)||^2 for a normalized seed."""
    curve = CanonicalCurve.from_seed(seed)
    if not 0 <= k <= seed.n:
        raise ArityMismatch(f"level {k} outside 0..{seed.n}")
    return float(curve.norm_sq(k, np.array([z]))[0])


def u_value(seed: SeedData, k: int, z: complex) -> MetricSample:
    return CanonicalCurve.from_seed(seed).sample(k, z)


def fubini_study_density(curve: CanonicalCurve, k: int, z) -> np.ndarray:
    """Pulled-back Fubini-Study density of the k-th associated curve."""
    return curve.plucker_quotient(k, z)


# Normalizing chart

def normalized_chart(seed: SeedData) -> NormalizedChart:
    """Coordinate xi = z (g_1/g_0)^{1/(beta_1 - beta_0)} and the seeds g~_j in it."""
    if not seed.normalized:
        raise UnnormalizedSeed("the normalizing chart needs a normalized seed")
    g0, g1 = seed.g[0], seed.g[1]
    if is_negligible(g0[0], g0.lead_scale()) or is_negligible(g1[0], g1.lead_scale()):
        raise DegenerateSeed("g_0(0) g_1(0) = 0")

    beta = seed.beta
    factor = power(div(g1, g0), 1.0 / (beta[1] - beta[0]))
    forward = factor.shift(1).truncate(factor.order)
    reversion = revert(forward)
    z_over_xi = reversion.unshift(1)

    tilde_g = []
    for j in range(2, seed.n + 1):
        ratio = compose(div(seed.g[j], g0), reversion)
        tilde = mul(power(z_over_xi, beta[j] - beta[0]), ratio)
        if is_negligible(tilde[0], tilde.lead_scale()):
            raise DegenerateSeed(f"g~_{j}(0) = 0")
        tilde_g.append(tilde)

    radius = min(
        abs(factor[0]) * seed_validity_radius(seed.g),
        tail_radius(reversion),
        *(tail_radius(t) for t in tilde_g),
    )
    logger.debug("Normalizing chart: xi'(0) = %s, radius %.4g", complex(factor[0]), radius)
    return NormalizedChart(forward=forward, reversion=reversion, tilde_g=tuple(tilde_g), validity_radius=radius)


def chart_units(chart: NormalizedChart) -> tuple[TruncatedSeries, ...]:
    """Unit series of the curve in the xi chart: 1, 1, g~_2, ..., g~_n."""
    order = chart.reversion.order
    one = TruncatedSeries.constant(1.0, order)
    return (one, one, *chart.tilde_g)


def chart_leading_units(seed: SeedData, chart: NormalizedChart) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Units of the first two components recomputed from the seed; both should be 1."""
    beta = seed.beta
    z_over_xi = chart.reversion.unshift(1)
    second = mul(power(z_over_xi, beta[1] - beta[0]), compose(div(seed.g[1], seed.g[0]), chart.reversion))
    first = TruncatedSeries.constant(1.0, second.order)
    return first, second


def chart_unit_error(seed: SeedData, chart: NormalizedChart) -> float:
    """Deviation of the second unit from 1 on the chart disc, as max_k |c_k - delta_k0| rho^k."""
    first, second = chart_leading_units(seed, chart)
    return (second - first).disc_scale(chart.validity_radius)


def chart_curve(chart: NormalizedChart, exponents: ExponentData) -> CanonicalCurve:
    return CanonicalCurve(exponents, chart_units(chart), validity_radius=chart.validity_radius)


def xi_metric_density(chart: NormalizedChart, exponents: ExponentData, xi, k: int = 1) -> np.ndarray:
    """Density of e^{u_k} |dz|^2 written in the xi coordinate."""
    xi = np.asarray(xi, dtype=complex)
    if np.any(xi == 0):
        raise SingularEvaluation("the xi-chart metric is only defined off the source point")
    if not 1 <= k <= exponents.n:
        raise ArityMismatch(f"metric index {k} outside 1..{exponents.n}")
    if k > 1:
        return chart_curve(chart, exponents).plucker_quotient(k - 1, xi)

    if np.any(np.abs(xi) > chart.validity_radius):
        warnings.warn(f"evaluating beyond the chart radius {chart.validity_radius:.4g}", OutOfDomainWarning, stacklevel=2)

    beta = exponents.beta
    units = chart_units(chart)
    radius = np.abs(xi)
    alpha2 = exponents.alpha_at(2)

    numerator = np.full(xi.shape, (beta[1] - beta[0]) ** 2)
    for i0, i1 in combinations(range(exponents.n + 1), 2):
        if i1 <= 1:
            continue
        pair = reduced_wronskian((beta[i0], beta[i1]), (units[i0], units[i1]))
        numerator = numerator + radius ** (2 * (beta[i0] + beta[i1] - 1 + alpha2)) * np.abs(pair(xi)) ** 2

    denominator = sum(radius ** (2 * (beta[j] - beta[0])) * np.abs(units[j](xi)) ** 2 for j in range(exponents.n + 1))
    return radius ** (2 * exponents.gamma[0]) * numerator / denominator ** 2


def pullback_density(curve: CanonicalCurve, chart: NormalizedChart, xi, k: int = 1) -> np.ndarray:
    """e^{u_k(z(xi))} |dz/dxi|^2 from the chart's reversion series."""
    xi = np.asarray(xi, dtype=complex)
    z = chart.reversion(xi)
    jacobian = derivative(chart.reversion)(xi)
    return curve.density(z)[k - 1] * np.abs(jacobian) ** 2
