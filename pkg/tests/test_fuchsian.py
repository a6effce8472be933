import numpy as np
import pytest

from conftest import bryant_seed, liouville_seed, make_seed, veronese_seed
from toda_verifier.errors import (
    LogarithmRequired,
    NonRealExponents,
    NonvanishingTrace,
    NotAnExponent,
    RepeatedExponents,
)
from toda_verifier.fuchsian import (
    FuchsianOperator,
    apply_operator,
    frobenius_series,
    indicial_roots,
    operator_residuals,
    reconstruct,
    resonant_orders,
    resynthesize_seed,
    wronskian_at_point,
)
from toda_verifier.series_core import BranchedFunction, TruncatedSeries
from toda_verifier.toda_geometry import CanonicalCurve


def second_order(c, *tail, order=16):
    """y'' + (c + tail) / z^2 y."""
    return FuchsianOperator.from_coefficients(1, [[c, *tail]], order)


def test_flat_curves_give_trivial_operators():
    for seed in (liouville_seed(), veronese_seed()):
        op = reconstruct(seed)
        for coefficient in op.Z:
            np.testing.assert_allclose(coefficient.taylor.coeffs, 0, atol=1e-13)
        assert op.trace_residual <= 1e-13


def test_bryant_operator():
    op = reconstruct(bryant_seed(1.0))
    assert op.Z[0].pole_order == 2
    assert op.normalized_taylor(0)[0] == pytest.approx(-0.75)
    np.testing.assert_allclose(op.Z[0].taylor.coeffs[1:], 0, atol=1e-12)
    assert indicial_roots(op) == pytest.approx((-0.5, 1.5), abs=1e-12)


def test_reconstruct_rejects_unnormalized_seed():
    seed = make_seed([0.0], [[1.0], [1.0, 0.2]], normalized=False)
    with pytest.raises(NonvanishingTrace):
        reconstruct(seed)


def test_indicial_roots_of_second_derivative():
    assert indicial_roots(second_order(0.0)) == pytest.approx((0.0, 1.0))


def test_apply_operator_to_branched_power():
    f = BranchedFunction(exponent=0.5, unit=TruncatedSeries.constant(1.0, 8))
    image = apply_operator(second_order(0.0), f)
    assert image.exponent == pytest.approx(-1.5)
    assert image.unit[0] == pytest.approx(-0.25)
    np.testing.assert_allclose(image.unit.coeffs[1:], 0)


def test_apply_operator_annihilates_solutions():
    op = second_order(-0.75)
    for rho in (-0.5, 1.5):
        f = BranchedFunction(exponent=rho, unit=TruncatedSeries.constant(2.0, 8))
        assert apply_operator(op, f).unit.scale <= 1e-14


def test_complex_exponents():
    with pytest.raises(NonRealExponents):
        indicial_roots(second_order(1.0))


def test_repeated_exponents():
    with pytest.raises(RepeatedExponents):
        indicial_roots(second_order(0.25))


def test_frobenius_series_without_resonance():
    op = second_order(-0.6, 0.3, 0.1)
    rho = indicial_roots(op)[0]
    phi = frobenius_series(op, rho, 12)
    assert phi[0] == 1.0
    f = BranchedFunction(exponent=rho, unit=phi)
    assert apply_operator(op, f).unit.scale <= 1e-13


def test_frobenius_resonant_free_coefficient_is_zero():
    phi = frobenius_series(second_order(0.0), 0.0, 8)
    np.testing.assert_allclose(phi.coeffs, np.eye(1, 9)[0])


def test_frobenius_takes_resonant_values():
    op = second_order(0.0)
    assert resonant_orders(op, 0.0, 8) == [1]
    assert resonant_orders(op, 1.0, 8) == []
    phi = frobenius_series(op, 0.0, 8, resonant_values={1: 0.5})
    np.testing.assert_allclose(phi.coeffs, [1.0, 0.5, 0, 0, 0, 0, 0, 0, 0])


def test_frobenius_rejects_non_exponent():
    with pytest.raises(NotAnExponent):
        frobenius_series(second_order(0.0), 0.5, 8)


def test_frobenius_obstructed_resonance():
    # y'' + y / z has exponents 0, 1 and needs a logarithm at 0
    op = second_order(0.0, 1.0)
    with pytest.raises(LogarithmRequired):
        frobenius_series(op, 0.0, 8)
    assert frobenius_series(op, 1.0, 8)[0] == 1.0


def test_random_seeds_round_trip(random_seeds):
    for seed in random_seeds[:8]:
        op = reconstruct(seed)
        assert op.trace_residual <= 1e-10
        np.testing.assert_allclose(indicial_roots(op), seed.beta, atol=1e-9)
        assert max(operator_residuals(op, seed)) <= 1e-9


@pytest.mark.parametrize("gamma", [[0.4], [0.3, 0.45], [0.2, 0.35, 0.15]])
def test_resynthesis_reproduces_seed(rng, gamma):
    n = len(gamma)
    coefficients = [[1.0, *(0.1 * rng.normal(size=2))] for _ in range(n + 1)]
    seed = make_seed(gamma, coefficients)
    op = reconstruct(seed)
    rebuilt = resynthesize_seed(op, seed.exponents, [g[0] for g in seed.g])
    assert rebuilt.normalized
    for original, again in zip(seed.g, rebuilt.g):
        np.testing.assert_allclose(again.coeffs[:24], original.coeffs[:24], atol=1e-8)


def test_resynthesis_with_resonant_exponents():
    # beta = (-1/3, 2/3, 8/3) differ by integers
    seed = make_seed([0.0, 1.0], [[1.0, 0.1], [1.0], [1.0, 0.0, -0.2]])
    op = reconstruct(seed)
    assert resonant_orders(op, seed.beta[0], op.order) == [1, 3]
    assert resonant_orders(op, seed.beta[1], op.order) == [2]

    rebuilt = resynthesize_seed(op, seed.exponents, [g[0] for g in seed.g], reference=seed)
    for original, again in zip(seed.g, rebuilt.g):
        np.testing.assert_allclose(again.coeffs[:24], original.coeffs[:24], atol=1e-8)
    z = 0.4 * np.exp(2j * np.pi * np.arange(5) / 5 + 0.2j)
    original, again = CanonicalCurve.from_seed(seed), CanonicalCurve.from_seed(rebuilt)
    for k in range(seed.n + 1):
        np.testing.assert_allclose(again.norm_sq(k, z), original.norm_sq(k, z), rtol=1e-8)


def test_fundamental_system_at_a_regular_point():
    op = reconstruct(bryant_seed(1.0))
    value = wronskian_at_point(op, bryant_seed(1.0).exponents, 0.3 + 0.2j)
    assert abs(value) > 1e-3
