"""Toda Verifier - Exponent Data

Cartan matrix of SU(n+1), the weights alpha = A^{-1} gamma and the
exponents beta of a canonical curve.  The exponents are computed exactly in
rational arithmetic from the binary value of each gamma, then rounded once.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, field_serializer

from toda_verifier.config import Tolerances
from toda_verifier.errors import ArityMismatch, IllegalWeight, InternalInconsistency

logger = logging.getLogger(__name__)


def cartan_matrix(n: int) -> np.ndarray:
    """Tridiagonal (2, -1) Cartan matrix of SU(n+1)."""
    if n < 1:
        raise ArityMismatch(f"rank must be >= 1, got {n}")
    return (2 * np.eye(n, dtype=int) - np.eye(n, k=1, dtype=int) - np.eye(n, k=-1, dtype=int))


@lru_cache(maxsize=None)
def cartan_inverse(n: int) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse of the Cartan matrix, checked against the identity."""
    cartan = sympy.Matrix(cartan_matrix(n).tolist())
    inverse = cartan.inv()
    if cartan * inverse != sympy.eye(n):
        raise InternalInconsistency("Cartan matrix times its inverse is not the identity")
    return tuple(tuple(Fraction(int(entry.p), int(entry.q)) for entry in inverse.row(i)) for i in range(n))


class ExponentData(BaseModel):
    """Weights, alpha and beta for one source configuration."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1, description="Rank of SU(n+1)")
    gamma: tuple[float, ...] = Field(description="Source weights gamma_1..gamma_n, each > -1")
    alpha: tuple[float, ...] = Field(description="alpha = A^{-1} gamma")
    beta: tuple[float, ...] = Field(description="Strictly increasing exponents beta_0..beta_n")
    cartan: tuple[tuple[int, ...], ...]
    cartan_inverse: tuple[tuple[Fraction, ...], ...]

    @field_serializer("cartan_inverse")
    def _serialize_inverse(self, inverse):
        return [[str(entry) for entry in row] for row in inverse]

    def alpha_at(self, j: int) -> float:
        """alpha_j with the convention alpha_0 = alpha_{n+1} = 0."""
        if j < 0 or j > self.n + 1:
            raise IndexError(f"alpha index {j} outside 0..{self.n + 1}")
        if j == 0 or j == self.n + 1:
            return 0.0
        return self.alpha[j - 1]

    @property
    def cartan_array(self) -> np.ndarray:
        return np.array(self.cartan, dtype=float)


def _telescoped_beta(gamma: Sequence[float]) -> np.ndarray:
    """beta from its consecutive gaps gamma_i + 1 and the sum condition sum beta_i = n(n+1)/2."""
    n = len(gamma)
    shifted = np.asarray(gamma, dtype=float) + 1.0
    beta0 = (n * (n + 1) / 2 - sum((n - l + 1) * shifted[l - 1] for l in range(1, n + 1))) / (n + 1)
    return beta0 + np.concatenate([[0.0], np.cumsum(shifted)])


def make_exponent_data(n: int, gamma: Sequence[float], tolerances: Tolerances | None = None) -> ExponentData:
    """Compute A, A^{-1}, alpha and beta for weights gamma."""
    tolerances = tolerances or Tolerances()
    if n < 1:
        raise ArityMismatch(f"rank must be >= 1, got {n}")
    if len(gamma) != n:
        raise ArityMismatch(f"expected {n} weights, got {len(gamma)}")
    for i, g in enumerate(gamma, start=1):
        if not np.isfinite(g) or g <= -1:
            raise IllegalWeight(f"gamma_{i} = {g} must be a finite number > -1")

    cartan = cartan_matrix(n)
    inverse = cartan_inverse(n)

    exact_gamma = [Fraction(float(g)) for g in gamma]
    exact_alpha = [sum(inverse[i][j] * exact_gamma[j] for j in range(n)) for i in range(n)]

    # beta_i = alpha_i - alpha_{i+1} + i with alpha_0 = alpha_{n+1} = 0
    padded = [Fraction(0)] + exact_alpha + [Fraction(0)]
    exact_beta = [padded[i] - padded[i + 1] + i for i in range(n + 1)]

    alpha = tuple(float(a) for a in exact_alpha)
    beta = tuple(float(b) for b in exact_beta)

    telescoped = _telescoped_beta(gamma)
    deviation = float(np.max(np.abs(np.array(beta) - telescoped)))
    if deviation > tolerances.algebraic * max(1.0, max(abs(b) for b in beta)):
        raise InternalInconsistency(f"beta routes disagree by {deviation:.3e}")

    logger.debug("Exponents for gamma=%s: beta=%s", tuple(gamma), beta)
    return ExponentData(
        n=n,
        gamma=tuple(float(g) for g in gamma),
        alpha=alpha,
        beta=beta,
        cartan=tuple(tuple(int(x) for x in row) for row in cartan),
        cartan_inverse=inverse,
    )


def exponent_invariant_residuals(data: ExponentData) -> dict[str, float]:
    """Residuals of the identities tying gamma, alpha and beta together."""
    n = data.n
    beta = np.array(data.beta)
    gamma = np.array(data.gamma)
    alpha = np.array(data.alpha)
    return {
        "cartan": float(np.max(np.abs(data.cartan_array @ alpha - gamma))),
        "beta_sum": float(abs(beta.sum() - n * (n + 1) / 2)),
        "beta_gaps": float(np.max(np.abs(np.diff(beta) - (gamma + 1.0)))),
        "beta_low": float(abs(beta[0] + data.alpha_at(1))),
        "beta_high": float(abs(beta[n] - data.alpha_at(n) - n)),
    }


def w_from_u(u: Sequence[float]) -> tuple[float, ...]:
    """Potentials w_0..w_n with w_i - w_{i-1} = u_i / 2 and sum w_i = 0."""
    u = np.asarray(u, dtype=float)
    n = u.size
    w0 = -sum((n - i + 1) * u[i - 1] for i in range(1, n + 1)) / (2 * (n + 1))
    return tuple(float(x) for x in w0 + np.concatenate([[0.0], np.cumsum(u) / 2]))


def u_from_w(w: Sequence[float]) -> tuple[float, ...]:
    """u_i = 2 (w_i - w_{i-1})."""
    return tuple(float(x) for x in 2.0 * np.diff(np.asarray(w, dtype=float)))
