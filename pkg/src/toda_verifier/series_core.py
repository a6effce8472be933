"""Toda Verifier - Truncated Power Series Kernel

Complex power series known up to a fixed order N, and functions of the form
z**beta * g(z) with g a unit series.  Every operation returns a series whose
order is at most the smallest order among its inputs.
"""
import logging
import math
import warnings
from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from toda_verifier.config import TAIL_TOLERANCE, VALIDITY_CAP
from toda_verifier.errors import (
    DegenerateDivision,
    DegenerateRoot,
    IllegalComposition,
    InsufficientOrder,
    NotInvertibleAtOrigin,
    OutOfDomainWarning,
    SingularEvaluation,
)

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]

# Relative threshold below which a leading coefficient counts as zero
NEGLIGIBLE = 1e-14
# Zero tests on c_m compare against |c_m|..|c_{m+LEAD_TERMS-1}| only
LEAD_TERMS = 4


def is_negligible(value: complex, scale: float = 1.0) -> bool:
    return abs(value) <= NEGLIGIBLE * max(1.0, scale)


class TruncatedSeries(BaseModel):
    """Coefficients c_0..c_N of sum c_k z^k, known up to order N."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coeffs: np.ndarray = Field(description="Complex coefficients c_0..c_N")

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_readonly_array(cls, value):
        array = np.array(value, dtype=complex).ravel()
        if array.size == 0:
            raise ValueError("a truncated series needs at least one coefficient")
        if not np.all(np.isfinite(array)):
            raise ValueError("series coefficients must be finite")
        array.setflags(write=False)
        return array

    @field_serializer("coeffs")
    def _serialize_coeffs(self, coeffs: np.ndarray):
        return [[float(c.real), float(c.imag)] for c in coeffs]

    # Constructors

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[Scalar], order: int | None = None) -> "TruncatedSeries":
        """Build a series from leading coefficients, zero padded (or cut) to `order`."""
        array = np.array(coeffs, dtype=complex).ravel()
        if order is None:
            return cls(coeffs=array)
        padded = np.zeros(order + 1, dtype=complex)
        keep = min(order + 1, array.size)
        padded[:keep] = array[:keep]
        return cls(coeffs=padded)

    @classmethod
    def constant(cls, value: Scalar, order: int) -> "TruncatedSeries":
        return cls.from_coefficients([value], order)

    @classmethod
    def monomial(cls, degree: int, order: int, value: Scalar = 1.0) -> "TruncatedSeries":
        if degree > order:
            return cls.from_coefficients([0.0], order)
        coeffs = np.zeros(order + 1, dtype=complex)
        coeffs[degree] = value
        return cls(coeffs=coeffs)

    @classmethod
    def _raw(cls, coeffs: np.ndarray) -> "TruncatedSeries":
        """Wrap an already validated array without another copy."""
        coeffs = np.asarray(coeffs, dtype=complex)
        coeffs.setflags(write=False)
        return cls.model_construct(coeffs=coeffs)

    # Accessors

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def lead_scale(self, start: int = 0, count: int = LEAD_TERMS) -> float:
        """Largest |c_k| for start <= k < start + count."""
        return float(np.max(np.abs(self.coeffs[start : start + count]), initial=0.0))

    def disc_scale(self, radius: float) -> float:
        """max_k |c_k| radius^k, the size of the series on the disc where it is trusted."""
        return float(np.max(np.abs(self.coeffs) * radius ** np.arange(self.order + 1)))

    def __getitem__(self, index):
        return self.coeffs[index]

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.coeffs)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise InsufficientOrder(f"cannot extend a series of order {self.order} to order {order}")
        if order < 0:
            raise InsufficientOrder("truncation order must be non-negative")
        return TruncatedSeries._raw(self.coeffs[: order + 1].copy())

    def shift(self, m: int) -> "TruncatedSeries":
        """Multiply by z**m; the product is known to order N + m."""
        if m == 0:
            return self
        return TruncatedSeries._raw(np.concatenate([np.zeros(m, dtype=complex), self.coeffs]))

    def unshift(self, m: int) -> "TruncatedSeries":
        """Divide by z**m; the first m coefficients must vanish."""
        if m == 0:
            return self
        if m > self.order:
            raise InsufficientOrder(f"cannot divide a series of order {self.order} by z^{m}")
        scale = self.lead_scale(0, m + LEAD_TERMS)
        if not all(is_negligible(c, scale) for c in self.coeffs[:m]):
            raise DegenerateDivision(f"series is not divisible by z^{m}")
        return TruncatedSeries._raw(self.coeffs[m:].copy())

    def is_unit(self) -> bool:
        return not is_negligible(self.coeffs[0], self.lead_scale())

    # Operators

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -other)

    def __rsub__(self, other):
        return add(-self, other)

    def __neg__(self):
        return TruncatedSeries._raw(-self.coeffs)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return div(self, other)
        return TruncatedSeries._raw(self.coeffs / other)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"TruncatedSeries(order={self.order}, coeffs={np.array2string(self.coeffs[:4], precision=6)}...)"


def _as_series(value, order: int) -> TruncatedSeries:
    if isinstance(value, TruncatedSeries):
        return value
    return TruncatedSeries.constant(value, order)


def add(a, b) -> TruncatedSeries:
    if not isinstance(a, TruncatedSeries):
        a, b = b, a
    b = _as_series(b, a.order)
    order = min(a.order, b.order)
    return TruncatedSeries._raw(a.coeffs[: order + 1] + b.coeffs[: order + 1])


def mul(a, b) -> TruncatedSeries:
    if not isinstance(a, TruncatedSeries):
        a, b = b, a
    if not isinstance(b, TruncatedSeries):
        return TruncatedSeries._raw(a.coeffs * b)
    order = min(a.order, b.order)
    product = np.convolve(a.coeffs[: order + 1], b.coeffs[: order + 1])[: order + 1]
    return TruncatedSeries._raw(product)


def div(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    if is_negligible(b.coeffs[0], b.lead_scale()):
        raise DegenerateDivision("divisor has a vanishing constant term")
    order = min(a.order, b.order)
    num = a.coeffs[: order + 1]
    den = b.coeffs[: order + 1]
    out = np.zeros(order + 1, dtype=complex)
    inv_lead = 1.0 / den[0]
    for k in range(order + 1):
        acc = num[k] - np.dot(den[1 : k + 1], out[k - 1 :: -1][:k]) if k else num[0]
        out[k] = acc * inv_lead
    return TruncatedSeries._raw(out)


def derivative(a: TruncatedSeries, times: int = 1) -> TruncatedSeries:
    """m-th derivative, known to order N - m."""
    if times == 0:
        return a
    if times > a.order:
        raise InsufficientOrder(f"cannot differentiate a series of order {a.order} {times} times")
    coeffs = a.coeffs
    for _ in range(times):
        coeffs = coeffs[1:] * np.arange(1, coeffs.size)
    return TruncatedSeries._raw(coeffs)


def integral(a: TruncatedSeries, constant: Scalar = 0.0) -> TruncatedSeries:
    coeffs = np.concatenate([[constant], a.coeffs / np.arange(1, a.order + 2)])
    return TruncatedSeries._raw(coeffs.astype(complex))


def log(a: TruncatedSeries) -> TruncatedSeries:
    """Principal logarithm of a unit series."""
    if is_negligible(a.coeffs[0], a.lead_scale()):
        raise DegenerateRoot("logarithm of a series vanishing at 0")
    lead = np.log(complex(a.coeffs[0]))
    if a.order == 0:
        return TruncatedSeries.constant(lead, 0)
    return integral(div(derivative(a), a), lead)


def exp(a: TruncatedSeries) -> TruncatedSeries:
    coeffs = a.coeffs
    out = np.zeros_like(coeffs)
    out[0] = np.exp(coeffs[0])
    weighted = coeffs * np.arange(coeffs.size)
    for k in range(1, coeffs.size):
        out[k] = np.dot(weighted[1 : k + 1], out[k - 1 :: -1][:k]) / k
    return TruncatedSeries._raw(out)


def power(a: TruncatedSeries, s: Scalar) -> TruncatedSeries:
    """a**s on the principal branch at the constant term."""
    if is_negligible(a.coeffs[0], a.lead_scale()):
        raise DegenerateRoot(f"cannot raise a series vanishing at 0 to the power {s}")
    if not isinstance(s, complex) and float(s).is_integer() and s >= 0:
        result = TruncatedSeries.constant(1.0, a.order)
        for _ in range(int(s)):
            result = mul(result, a)
        return result
    return exp(mul(log(a), s))


def compose(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """a(b(z)) for b(0) = 0, by Horner's scheme."""
    if not is_negligible(b.coeffs[0], b.lead_scale()):
        raise IllegalComposition("inner series must vanish at 0")
    order = min(a.order, b.order)
    inner = b.coeffs[: order + 1].copy()
    inner[0] = 0.0
    acc = np.zeros(order + 1, dtype=complex)
    acc[0] = a.coeffs[order]
    for k in range(order - 1, -1, -1):
        acc = np.convolve(acc, inner)[: order + 1]
        acc[0] += a.coeffs[k]
    return TruncatedSeries._raw(acc)


def revert(b: TruncatedSeries, max_iterations: int = 64) -> TruncatedSeries:
    """Compositional inverse w of b (b(w(x)) = x) by Newton iteration.

    Each Newton step doubles the number of correct coefficients, so
    ceil(log2(N + 1)) + 1 steps settle every coefficient up to order N.
    """
    if not is_negligible(b.coeffs[0], b.lead_scale()):
        raise IllegalComposition("only series vanishing at 0 can be reverted")
    if b.order < 1 or is_negligible(b.coeffs[1], b.lead_scale()):
        raise NotInvertibleAtOrigin("b'(0) = 0")

    order = b.order
    coeffs = b.coeffs.copy()
    coeffs[0] = 0.0
    b = TruncatedSeries._raw(coeffs)
    identity = TruncatedSeries.monomial(1, order)
    slope = derivative(b)
    w = TruncatedSeries.monomial(1, order, 1.0 / b.coeffs[1])

    steps = math.ceil(math.log2(order + 1)) + 1
    if steps > max_iterations:
        logger.warning("Series reversion capped at %d of %d Newton steps", max_iterations, steps)
        steps = max_iterations
    for _ in range(steps):
        residual = compose(b, w) - identity
        # residual(0) == 0 so dividing by the order N-1 slope keeps order N
        correction = div(residual.unshift(1), compose(slope, w)).shift(1)
        w = w - correction
    logger.debug("Series reversion of order %d after %d Newton steps", order, steps)
    return w


def falling_factorial(x: Scalar, p: int):
    """(x)_p = x (x-1) ... (x-p+1)."""
    result = 1.0
    for i in range(p):
        result = result * (x - i)
    return result


def leibniz_unit(beta: float, g: TruncatedSeries, ell: int) -> TruncatedSeries:
    """Unit part of the ell-th derivative of z**beta g(z).

    d^ell/dz^ell (z^beta g) = z^(beta - ell) * sum_m C(ell, m) (beta)_(ell-m) z^m g^(m)
    """
    if ell > g.order:
        raise InsufficientOrder(f"derivative of order {ell} needs a series of order >= {ell}")
    acc = np.zeros(g.order + 1, dtype=complex)
    current = g
    for m in range(ell + 1):
        if m:
            current = derivative(current)
        factor = math.comb(ell, m) * falling_factorial(beta, ell - m)
        if factor != 0:
            acc[m:] += factor * current.coeffs
    return TruncatedSeries._raw(acc)


def tail_radius(a: TruncatedSeries, tol: float = TAIL_TOLERANCE, cap: float = VALIDITY_CAP) -> float:
    """Radius below which the last few coefficients stay under `tol`."""
    radius = cap
    start = max(1, a.order - 3)
    for k in range(start, a.order + 1):
        magnitude = abs(a.coeffs[k])
        if magnitude > 0:
            radius = min(radius, (tol / magnitude) ** (1.0 / k))
    return radius


def principal_log(z):
    """log|z| + i Arg z with Arg in (-pi, pi]."""
    z = np.asarray(z, dtype=complex)
    arg = np.angle(z)
    arg = np.where(arg <= -np.pi, np.pi, arg)
    return np.log(np.abs(z)) + 1j * arg


class BranchedFunction(BaseModel):
    """z**exponent * unit(z) with unit(0) != 0."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    exponent: float
    unit: TruncatedSeries

    @field_validator("unit")
    @classmethod
    def _unit_nonvanishing(cls, unit: TruncatedSeries) -> TruncatedSeries:
        if not unit.is_unit():
            raise ValueError("the unit part of a branched function must not vanish at 0")
        return unit

    def __call__(self, z, radius: float | None = None, sheet: int = 0):
        return evaluate(self, z, radius=radius, sheet=sheet)


def evaluate(f: BranchedFunction, z, radius: float | None = None, sheet: int = 0):
    """Evaluate z^beta g(z) on the principal branch (or `sheet` turns beyond it)."""
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    at_origin = z == 0
    if np.any(at_origin) and f.exponent < 0:
        raise SingularEvaluation(f"z^{f.exponent} is unbounded at 0")
    if radius is not None and np.any(np.abs(z) > radius):
        warnings.warn(
            f"evaluating beyond the validity radius {radius:.3g}",
            OutOfDomainWarning,
            stacklevel=2,
        )

    safe = np.where(at_origin, 1.0, z)
    branch = np.exp(f.exponent * (principal_log(safe) + 2j * np.pi * sheet))
    if f.exponent == 0:
        branch = np.ones_like(branch)
    branch = np.where(at_origin, 1.0 if f.exponent == 0 else 0.0, branch)
    values = branch * f.unit(z)
    return complex(values[0]) if scalar else values


def branched_derivative(f: BranchedFunction, times: int = 1) -> BranchedFunction:
    unit = leibniz_unit(f.exponent, f.unit, times)
    return BranchedFunction.model_construct(exponent=f.exponent - times, unit=unit)
