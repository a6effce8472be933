"""Toda Verifier - Reduced Wronskians and Seed Normalization

A column of a Wronskian matrix is z^beta_i g_i together with its derivatives.
Writing the l-th derivative as z^(beta_i - l) g_il(z) (Leibniz rule with
falling factorials) pulls the monomial z^(sum beta - k(k+1)/2) out of the
determinant, leaving the holomorphic reduced Wronskian G_k.  Determinants of
series are expanded by a memoised Laplace recursion over column subsets, so
one table serves every minor needed at every level.
"""
import logging
from itertools import combinations
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from toda_verifier.config import Tolerances
from toda_verifier.errors import ArityMismatch, DegenerateSeed, InsufficientOrder, InternalInconsistency, UnnormalizedSeed
from toda_verifier.exponents import ExponentData
from toda_verifier.series_core import TruncatedSeries, div, is_negligible, leibniz_unit, mul, power, tail_radius

logger = logging.getLogger(__name__)

Subset = tuple[int, ...]


class SeedData(BaseModel):
    """Seed functions g_0..g_n of a canonical curve z -> [z^beta_i g_i(z)]."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    exponents: ExponentData
    g: tuple[TruncatedSeries, ...]
    order: int = Field(ge=0, description="Common truncation order N")
    normalized: bool = False
    applied_root: complex | None = Field(
        default=None, description="Principal (n+1)-th root of G_n(0) divided out by normalize"
    )

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.g) != self.exponents.n + 1:
            raise ArityMismatch(f"rank {self.exponents.n} needs {self.exponents.n + 1} seed series, got {len(self.g)}")
        for i, series in enumerate(self.g):
            if series.order != self.order:
                raise InsufficientOrder(f"g_{i} has order {series.order}, expected {self.order}")
        return self

    @classmethod
    def from_coefficients(cls, exponents: ExponentData, coefficients: Sequence[Sequence[complex]], order: int) -> "SeedData":
        """Build a seed from leading Taylor coefficients of each g_i, zero padded to `order`."""
        if len(coefficients) != exponents.n + 1:
            raise ArityMismatch(f"rank {exponents.n} needs {exponents.n + 1} seed series, got {len(coefficients)}")
        g = tuple(TruncatedSeries.from_coefficients(c, order) for c in coefficients)
        return cls(exponents=exponents, g=g, order=order)

    @property
    def n(self) -> int:
        return self.exponents.n

    @property
    def beta(self) -> tuple[float, ...]:
        return self.exponents.beta

    @property
    def validity_radius(self) -> float:
        """Radius of the disc on which every truncated g_i is trusted."""
        return min(tail_radius(g) for g in self.g)


class LambdaTerm(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    exponent: float
    coefficient: TruncatedSeries


class LambdaExpansion(BaseModel):
    """Lambda_k = sum over (k+1)-subsets S of z^(e_S) G_k(S) e_S."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k: int
    terms: dict[Subset, LambdaTerm]

    @property
    def lowest(self) -> LambdaTerm:
        return self.terms[tuple(range(self.k + 1))]


def leibniz_rows(beta: float, g: TruncatedSeries, depth: int) -> list[TruncatedSeries]:
    """Rows g_i0..g_i,depth of one Wronskian column."""
    return [leibniz_unit(beta, g, ell) for ell in range(depth + 1)]


def laplace_minors(columns: Sequence[Sequence[TruncatedSeries]], depth: int) -> dict[Subset, TruncatedSeries]:
    """Minors on the first |S| rows for every column subset S with |S| <= depth + 1.

    `columns[c][r]` is the entry in row r of column c.  Each minor is expanded
    along its last row using the minors one level down.
    """
    width = len(columns)
    minors: dict[Subset, TruncatedSeries] = {(c,): columns[c][0] for c in range(width)}
    for level in range(1, min(depth, width - 1) + 1):
        for subset in combinations(range(width), level + 1):
            total = None
            for position, column in enumerate(subset):
                rest = subset[:position] + subset[position + 1 :]
                term = mul(columns[column][level], minors[rest])
                if (level + position) % 2:
                    term = -term
                total = term if total is None else total + term
            minors[subset] = total
    return minors


def _common_order(gs: Sequence[TruncatedSeries]) -> int:
    return min(g.order for g in gs)


def reduced_wronskian(betas: Sequence[float], gs: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """G_k(beta_0..beta_k; g_0..g_k), valid to order N - k."""
    if len(betas) != len(gs):
        raise ArityMismatch(f"{len(betas)} exponents for {len(gs)} series")
    k = len(gs) - 1
    order = _common_order(gs)
    if order < k:
        raise InsufficientOrder(f"G_{k} needs series of order >= {k}, got {order}")

    columns = [leibniz_rows(beta, g.truncate(order), k) for beta, g in zip(betas, gs)]
    minors = laplace_minors(columns, k)
    return minors[tuple(range(k + 1))].truncate(order - k)


def wronskian_at_zero(betas: Sequence[float], gs: Sequence[TruncatedSeries]) -> complex:
    """prod g_i(0) * prod_{i<j} (beta_j - beta_i)."""
    value = complex(np.prod([g[0] for g in gs]))
    for i, j in combinations(range(len(betas)), 2):
        value *= betas[j] - betas[i]
    return value


def associated_terms(betas: Sequence[float], gs: Sequence[TruncatedSeries], max_level: int) -> list[dict[Subset, LambdaTerm]]:
    """Lambda_0..Lambda_max_level terms from one shared table of minors."""
    order = _common_order(gs)
    if order < max_level:
        raise InsufficientOrder(f"Lambda_{max_level} needs series of order >= {max_level}, got {order}")

    columns = [leibniz_rows(beta, g.truncate(order), max_level) for beta, g in zip(betas, gs)]
    minors = laplace_minors(columns, max_level)

    levels = []
    for k in range(max_level + 1):
        terms = {}
        for subset in combinations(range(len(gs)), k + 1):
            exponent = sum(betas[i] for i in subset) - k * (k + 1) / 2
            terms[subset] = LambdaTerm(exponent=exponent, coefficient=minors[subset].truncate(order - k))
        levels.append(terms)
    return levels


def is_normalized(seed: SeedData, tolerance: float) -> bool:
    """True when G_n == 1 within `tolerance` on the trusted disc."""
    return normalization_deviation(seed) <= tolerance


def normalization_deviation(seed: SeedData) -> float:
    """Bound on |G_n - 1| over the disc where the seed series are trusted.

    Coefficient k enters as |c_k - delta_k0| * rho^k with rho the seed's
    validity radius, so round-off in the top coefficients of a series that
    grows like rho^-k does not count as a normalization defect.
    """
    gn = reduced_wronskian(seed.beta, seed.g)
    return _unit_deviation(gn, seed.validity_radius)


def _unit_deviation(gn: TruncatedSeries, radius: float) -> float:
    return (gn - TruncatedSeries.constant(1.0, gn.order)).disc_scale(radius)


def normalize(seed: SeedData, tolerances: Tolerances | None = None) -> SeedData:
    """Divide every g_i by the principal (n+1)-th root of G_n so that G_n == 1."""
    if seed.normalized:
        return seed
    tolerances = tolerances or Tolerances()

    n = seed.n
    gn = reduced_wronskian(seed.beta, seed.g)
    if is_negligible(gn[0], gn.lead_scale()):
        raise DegenerateSeed("G_n(0) = 0: the curve is ramified at the origin")
    for i, g in enumerate(seed.g):
        if is_negligible(g[0], g.lead_scale()):
            raise DegenerateSeed(f"g_{i}(0) = 0")

    if _unit_deviation(gn, seed.validity_radius) <= tolerances.normalization:
        logger.debug("Seed already satisfies G_n == 1")
        return seed.model_copy(update={"normalized": True, "applied_root": 1.0 + 0j})

    root = power(gn, 1.0 / (n + 1))
    g = tuple(div(gi.truncate(root.order), root) for gi in seed.g)
    result = SeedData(
        exponents=seed.exponents,
        g=g,
        order=root.order,
        normalized=True,
        applied_root=complex(root[0]),
    )

    deviation = normalization_deviation(result)
    if deviation > tolerances.normalization:
        raise InternalInconsistency(f"normalized seed has |G_n - 1| = {deviation:.3e}")
    logger.info("Normalized seed with root %s (order %d -> %d)", complex(root[0]), seed.order, result.order)
    return result


def lambda_expansion(seed: SeedData, k: int) -> LambdaExpansion:
    """Formula for Lambda_k as a sum over (k+1)-subsets of the seed."""
    if not seed.normalized:
        raise UnnormalizedSeed("lambda_expansion needs a normalized seed")
    if not 0 <= k <= seed.n:
        raise ArityMismatch(f"level {k} outside 0..{seed.n}")
    terms = associated_terms(seed.beta, seed.g, k)[k]
    return LambdaExpansion(k=k, terms=terms)
