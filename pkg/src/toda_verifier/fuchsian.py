"""Toda Verifier - Fuchsian Operator Side

Builds the operator y^(n+1) + sum_{k<n} Z_{k+1} y^(k) annihilating the
components of a canonical curve, reads off its local exponents at 0 and
rebuilds a fundamental system by Frobenius series.
"""
import logging
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field, model_validator

from toda_verifier.config import Tolerances
from toda_verifier.errors import (
    ArityMismatch,
    DegenerateSeed,
    InsufficientOrder,
    LogarithmRequired,
    NonRealExponents,
    NonvanishingTrace,
    NotAnExponent,
    RepeatedExponents,
)
from toda_verifier.exponents import ExponentData
from toda_verifier.series_core import (
    BranchedFunction,
    TruncatedSeries,
    div,
    evaluate,
    falling_factorial,
    is_negligible,
    mul,
)
from toda_verifier.wronskian_engine import (
    SeedData,
    laplace_minors,
    leibniz_rows,
    normalize,
    reduced_wronskian,
)

logger = logging.getLogger(__name__)

# Distance under which two indicial values count as the same root
ROOT_MATCH = 1e-8
# Largest imaginary part tolerated in the leading operator coefficients
NEGLIGIBLE_IMAG = 1e-10
# Root gap below which the companion eigenvalues are taken as one double root
REPEATED_GAP = 1e-6


class LaurentCoefficient(BaseModel):
    """z^{-pole_order} * taylor(z)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pole_order: int = Field(ge=0)
    taylor: TruncatedSeries

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return z ** (-self.pole_order) * self.taylor(z)


class FuchsianOperator(BaseModel):
    """y^(n+1) + sum_{k=0}^{n-1} Z[k] y^(k); Z[k] is the coefficient of y^(k)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    Z: tuple[LaurentCoefficient, ...]
    trace_residual: float = Field(default=0.0, description="Largest coefficient of the dropped y^(n) term")

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.Z) != self.n:
            raise ArityMismatch(f"order {self.n + 1} operator needs {self.n} coefficients, got {len(self.Z)}")
        for k, coefficient in enumerate(self.Z):
            if coefficient.pole_order > self.n + 1 - k:
                raise ValueError(f"coefficient of y^({k}) has pole order {coefficient.pole_order} > {self.n + 1 - k}")
        return self

    @classmethod
    def from_coefficients(cls, n: int, taylor: Sequence[Sequence[complex]], order: int) -> "FuchsianOperator":
        """Operator whose y^(k) coefficient is z^{-(n+1-k)} times the given Taylor series."""
        Z = tuple(
            LaurentCoefficient(pole_order=n + 1 - k, taylor=TruncatedSeries.from_coefficients(c, order))
            for k, c in enumerate(taylor)
        )
        return cls(n=n, Z=Z)

    @property
    def order(self) -> int:
        return min(c.taylor.order for c in self.Z)

    def normalized_taylor(self, k: int) -> TruncatedSeries:
        """Taylor series of z^{n+1-k} Z[k]; k = n is the absent trace term, k = n+1 the leading 1."""
        if k == self.n + 1:
            return TruncatedSeries.constant(1.0, self.order)
        if k == self.n:
            return TruncatedSeries.constant(0.0, self.order)
        coefficient = self.Z[k]
        return coefficient.taylor.shift(self.n + 1 - k - coefficient.pole_order).truncate(self.order)


def reconstruct(seed: SeedData, tolerances: Tolerances | None = None) -> FuchsianOperator:
    """Operator annihilating z^beta_i g_i, from bordered reduced Wronskians."""
    tolerances = tolerances or Tolerances()
    n = seed.n
    if seed.order < n + 1:
        raise InsufficientOrder(f"reconstruction needs seed order >= {n + 1}, got {seed.order}")

    columns = [leibniz_rows(beta, g, n + 1) for beta, g in zip(seed.beta, seed.g)]
    full = tuple(range(n + 1))
    wronskian = laplace_minors(columns, n)[full]
    if is_negligible(wronskian[0], wronskian.lead_scale()):
        raise DegenerateSeed("G_n(0) = 0: the components are not a fundamental system at 0")

    out_order = seed.order - (n + 1)
    taylor = []
    for k in range(n + 1):
        rows = [ell for ell in range(n + 2) if ell != k]
        bordered = [[column[ell] for ell in rows] for column in columns]
        minor = laplace_minors(bordered, n)[full]
        sign = -1.0 if (k + n + 1) % 2 else 1.0
        taylor.append((div(minor, wronskian) * sign).truncate(out_order))

    # sizes are taken on the seed's trusted disc, where the operator series are trusted too
    radius = seed.validity_radius
    scale = max(1.0, max(t.disc_scale(radius) for t in taylor[:n]))
    trace = taylor[n].disc_scale(radius)
    if trace > tolerances.trace * scale:
        raise NonvanishingTrace(f"y^({n}) coefficient has size {trace:.3e}; the seed is not normalized")

    Z = tuple(LaurentCoefficient(pole_order=n + 1 - k, taylor=taylor[k]) for k in range(n))
    logger.info("Reconstructed order-%d operator to order %d (trace residual %.2e)", n + 1, out_order, trace)
    return FuchsianOperator(n=n, Z=Z, trace_residual=trace)


def falling_factorial_polynomial(p: int) -> Polynomial:
    if p == 0:
        return Polynomial([1.0])
    return Polynomial.fromroots(np.arange(p, dtype=float))


def indicial_polynomial(op: FuchsianOperator) -> Polynomial:
    """(rho)_{n+1} + sum_k c_k (rho)_k with c_k the most singular coefficient of Z[k]."""
    leading = [op.normalized_taylor(k)[0] for k in range(op.n)]
    imaginary = max((abs(c.imag) for c in leading), default=0.0)
    if imaginary > NEGLIGIBLE_IMAG * max(1.0, max(abs(c) for c in leading)):
        raise NonRealExponents(f"indicial coefficients have imaginary parts up to {imaginary:.3e}")
    polynomial = falling_factorial_polynomial(op.n + 1)
    for k, c in enumerate(leading):
        polynomial = polynomial + c.real * falling_factorial_polynomial(k)
    return polynomial


def indicial_roots(op: FuchsianOperator, tolerances: Tolerances | None = None) -> tuple[float, ...]:
    """Real, distinct local exponents at 0, ascending."""
    tolerances = tolerances or Tolerances()
    polynomial = indicial_polynomial(op)
    roots = polynomial.roots()

    imaginary = np.abs(np.imag(roots))
    if np.any(imaginary > 1e-7 * np.maximum(1.0, np.abs(roots))):
        raise NonRealExponents(f"indicial roots {np.round(roots, 6).tolist()} are not all real")

    slope = polynomial.deriv()
    polished = []
    for root in np.sort(np.real(roots)):
        for _ in range(3):
            step_slope = slope(root)
            if step_slope == 0:
                break
            root = root - polynomial(root) / step_slope
        polished.append(float(root))

    gaps = np.diff(polished)
    if gaps.size and np.min(gaps) <= max(tolerances.exponent, REPEATED_GAP) * max(1.0, max(abs(r) for r in polished)):
        raise RepeatedExponents(f"indicial roots {polished} contain a repeated root")
    logger.debug("Indicial roots %s", polished)
    return tuple(polished)


def apply_operator(op: FuchsianOperator, f: BranchedFunction) -> BranchedFunction:
    """L(f) as z^{rho-n-1} times a series; zero series when f solves L f = 0."""
    n = op.n
    if f.unit.order < n + 1:
        raise InsufficientOrder(f"applying an order-{n + 1} operator needs a series of order >= {n + 1}")
    rows = leibniz_rows(f.exponent, f.unit, n + 1)
    residual = rows[n + 1]
    for k in range(n):
        residual = residual + mul(op.normalized_taylor(k), rows[k])
    order = min(f.unit.order - (n + 1), op.order)
    return BranchedFunction.model_construct(exponent=f.exponent - (n + 1), unit=residual.truncate(order))


def _recursion_polynomials(op: FuchsianOperator, order: int):
    """P_j(sigma) = sum_k t_{k,j} (sigma)_k for j = 0..order."""
    series = [op.normalized_taylor(k) for k in range(op.n + 2)]

    def evaluate_p(j: int, sigma: float) -> complex:
        return sum(series[k][j] * falling_factorial(sigma, k) for k in range(op.n + 2) if j <= series[k].order)

    return evaluate_p


def frobenius_series(op: FuchsianOperator, rho: float, order: int, tolerances: Tolerances | None = None,
                     resonant_values: Mapping[int, complex] | None = None) -> TruncatedSeries:
    """Unit series g with L(z^rho g) = 0, g(0) = 1.

    The coefficient at a resonant order m (rho + m another exponent) is free;
    it is taken from `resonant_values[m]` and is 0 when not given there.
    """
    tolerances = tolerances or Tolerances()
    resonant_values = resonant_values or {}
    roots = indicial_roots(op, tolerances)
    if min(abs(rho - r) for r in roots) > ROOT_MATCH * max(1.0, abs(rho)):
        raise NotAnExponent(f"{rho} is not a local exponent (roots {roots})")
    if order > op.order:
        raise InsufficientOrder(f"operator known to order {op.order}, requested {order}")

    p = _recursion_polynomials(op, order)
    coefficients = np.zeros(order + 1, dtype=complex)
    coefficients[0] = 1.0
    for m in range(1, order + 1):
        terms = [coefficients[j] * p(m - j, rho + j) for j in range(m)]
        rhs = -sum(terms)
        resonant = any(abs(rho + m - r) <= ROOT_MATCH * max(1.0, abs(r)) for r in roots)
        if resonant:
            scale = max(1.0, max(abs(t) for t in terms))
            if abs(rhs) > tolerances.obstruction * scale:
                raise LogarithmRequired(f"resonance at rho + {m} = {rho + m} is obstructed by {abs(rhs):.3e}")
            coefficients[m] = resonant_values.get(m, 0.0)
            logger.debug("Resonant Frobenius order %d at rho = %g, free coefficient %s", m, rho, coefficients[m])
        else:
            coefficients[m] = rhs / p(0, rho + m)
    return TruncatedSeries(coeffs=coefficients)


def resonant_orders(op: FuchsianOperator, rho: float, order: int, tolerances: Tolerances | None = None) -> list[int]:
    """Orders m in 1..order at which rho + m is again a local exponent."""
    roots = indicial_roots(op, tolerances)
    return [m for m in range(1, order + 1) if any(abs(rho + m - r) <= ROOT_MATCH * max(1.0, abs(r)) for r in roots)]


def resynthesize_seed(
    op: FuchsianOperator,
    exponents: ExponentData,
    leading: Sequence[complex],
    order: int | None = None,
    tolerances: Tolerances | None = None,
    reference: SeedData | None = None,
) -> SeedData:
    """Seed g_i = leading_i * (Frobenius series at beta_i), normalized.

    With a `reference` seed the free coefficients at resonant orders are read
    off its g_i, so a seed whose exponents differ by integers is rebuilt exactly.
    """
    if len(leading) != exponents.n + 1:
        raise ArityMismatch(f"{len(leading)} leading coefficients for rank {exponents.n}")
    order = op.order if order is None else order
    g = []
    for i, (beta, c) in enumerate(zip(exponents.beta, leading)):
        free = {}
        if reference is not None:
            unit = reference.g[i]
            free = {m: unit[m] / unit[0] for m in resonant_orders(op, beta, order, tolerances) if m <= unit.order}
        g.append(frobenius_series(op, beta, order, tolerances, free) * complex(c))
    return normalize(SeedData(exponents=exponents, g=tuple(g), order=order), tolerances)


def wronskian_at_point(op: FuchsianOperator, exponents: ExponentData, z0: complex) -> complex:
    """Full Wronskian of the Frobenius solutions z^beta_i phi_i at a point off 0."""
    n = op.n
    phis = [frobenius_series(op, beta, op.order) for beta in exponents.beta]
    reduced = reduced_wronskian(exponents.beta, phis)
    monomial = BranchedFunction(exponent=sum(exponents.beta) - n * (n + 1) / 2, unit=TruncatedSeries.constant(1.0, 0))
    return complex(evaluate(monomial, z0) * reduced(z0))


def seed_components(seed: SeedData) -> list[BranchedFunction]:
    return [BranchedFunction(exponent=beta, unit=g) for beta, g in zip(seed.beta, seed.g)]


def operator_residuals(op: FuchsianOperator, seed: SeedData) -> list[float]:
    """Size of L(nu_i) for every component, as max_k |c_k| rho^k on the seed's trusted disc."""
    radius = seed.validity_radius
    return [apply_operator(op, f).unit.disc_scale(radius) for f in seed_components(seed)]

