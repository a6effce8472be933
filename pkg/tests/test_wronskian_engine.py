import numpy as np
import pytest
import sympy as sp

from conftest import make_seed, veronese_seed
from toda_verifier.errors import ArityMismatch, DegenerateSeed, UnnormalizedSeed
from toda_verifier.series_core import BranchedFunction, TruncatedSeries, evaluate, mul, power, tail_radius
from toda_verifier.wronskian_engine import (
    lambda_expansion,
    normalization_deviation,
    normalize,
    reduced_wronskian,
    wronskian_at_zero,
)


def constants(*values, order=12):
    return [TruncatedSeries.constant(v, order) for v in values]


def test_reduced_wronskian_of_rank_one_flat_seed():
    g = reduced_wronskian((0.0, 1.0), constants(1.0, 1.0))
    np.testing.assert_allclose(g.coeffs, np.eye(1, g.order + 1)[0], atol=1e-15)


def test_reduced_wronskian_of_monomials_is_vandermonde():
    betas = (-1.0, 1.0, 3.0)
    g = reduced_wronskian(betas, constants(1.0, 1.0, 1.0))
    assert g[0] == pytest.approx(16.0)
    assert g.order == 10
    np.testing.assert_allclose(g.coeffs[1:], 0, atol=1e-13)
    assert wronskian_at_zero(betas, constants(1.0, 1.0, 1.0)) == pytest.approx(16.0)


def test_level_zero_is_the_series_itself():
    g0 = TruncatedSeries.from_coefficients([2.0, 0.5, -1.0], 8)
    assert reduced_wronskian((0.7,), [g0]) == g0


def test_value_at_zero_matches_closed_form(rng):
    betas = (-0.4, 0.9, 2.3)
    gs = [TruncatedSeries.from_coefficients(rng.normal(size=4) + 1j * rng.normal(size=4), 16) for _ in betas]
    g = reduced_wronskian(betas, gs)
    assert g[0] == pytest.approx(wronskian_at_zero(betas, gs), rel=1e-12)


def test_unit_rescaling_scales_by_power():
    betas = (-0.25, 0.5, 1.75)
    gs = [TruncatedSeries.from_coefficients(c, 24) for c in ([1.0, 0.2], [0.5, -0.1, 0.3], [2.0, 0.0, 0.0, 1.0])]
    f = TruncatedSeries.from_coefficients([1.0, 0.3, -0.2], 24)
    scaled = reduced_wronskian(betas, [mul(f, g) for g in gs])
    expected = mul(power(f, 3), reduced_wronskian(betas, gs))
    np.testing.assert_allclose(scaled.coeffs, expected.coeffs, atol=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_matches_symbolic_wronskian_determinant(k):
    betas = (-0.3, 0.8, 1.9, 3.2)[: k + 1]
    polys = ([1.0, 0.2], [0.5, -0.1, 0.3], [2.0, 0.0, 0.0, 1.0], [1.0, 0.5j])[: k + 1]
    z = sp.symbols("z")
    components = [z ** sp.Float(b) * sum(sp.sympify(c) * z**m for m, c in enumerate(p)) for b, p in zip(betas, polys)]

    radius = np.linspace(0.1, 0.5, 20)
    theta = np.linspace(-np.pi + 0.1, np.pi - 0.1, 20)
    z0 = radius * np.exp(1j * theta)
    entries = [
        [sp.lambdify(z, sp.diff(f, z, row), "numpy")(z0 + 0j) * np.ones_like(z0) for f in components]
        for row in range(k + 1)
    ]
    brute_force = np.linalg.det(np.moveaxis(np.array(entries, dtype=complex), -1, 0))

    g = reduced_wronskian(betas, [TruncatedSeries.from_coefficients(p, 20) for p in polys])
    monomial = BranchedFunction(exponent=sum(betas) - k * (k + 1) / 2, unit=TruncatedSeries.constant(1.0, 0))
    np.testing.assert_allclose(evaluate(monomial, z0) * g(z0), brute_force, rtol=1e-9)


def test_swapping_columns_flips_sign():
    betas = (0.0, 1.5)
    gs = [TruncatedSeries.from_coefficients(c, 10) for c in ([1.0, 0.4], [0.7, 0.0, 0.2])]
    forward = reduced_wronskian(betas, gs)
    swapped = reduced_wronskian(betas[::-1], gs[::-1])
    np.testing.assert_allclose(swapped.coeffs, -forward.coeffs, atol=1e-14)


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        reduced_wronskian((0.0, 1.0), constants(1.0))


def test_normalize_constant_seed():
    seed = normalize(make_seed([0.0], [[2.0], [1.0]], order=8, normalized=False))
    assert seed.normalized
    assert seed.applied_root == pytest.approx(np.sqrt(2.0))
    assert seed.g[0][0] == pytest.approx(np.sqrt(2.0))
    assert seed.g[1][0] == pytest.approx(1 / np.sqrt(2.0))
    assert normalization_deviation(seed) <= 1e-14


def test_normalize_polynomial_seed():
    seed = normalize(make_seed([0.5, 0.0], [[1.0, 0.3], [2.0, -0.1j], [0.5, 0.0, 0.2]], order=32, normalized=False))
    assert normalization_deviation(seed) <= 1e-10


def test_normalize_is_idempotent():
    seed = normalize(make_seed([0.0], [[2.0, 0.5], [1.0]], order=16, normalized=False))
    assert normalize(seed) is seed
    again = normalize(seed.model_copy(update={"normalized": False}))
    assert again.applied_root == 1.0
    for first, second in zip(seed.g, again.g):
        np.testing.assert_allclose(first.coeffs, second.coeffs)


def test_normalize_rejects_ramified_seed():
    seed = make_seed([0.0], [[0.0, 1.0], [1.0]], order=8, normalized=False)
    with pytest.raises(DegenerateSeed):
        normalize(seed)


def test_lambda_expansion_of_veronese_curve():
    seed = veronese_seed()
    level0 = lambda_expansion(seed, 0)
    assert [term.exponent for term in level0.terms.values()] == [0.0, 1.0, 2.0]
    assert [term.coefficient[0] for term in level0.terms.values()] == pytest.approx([1.0, 1.0, 0.5])

    level1 = lambda_expansion(seed, 1)
    assert level1.lowest.exponent == 0.0
    assert {s: t.exponent for s, t in level1.terms.items()} == {(0, 1): 0.0, (0, 2): 1.0, (1, 2): 2.0}
    assert [t.coefficient[0] for t in level1.terms.values()] == pytest.approx([1.0, 1.0, 0.5])


def test_lambda_expansion_needs_normalized_seed():
    seed = make_seed([0.0], [[2.0], [1.0]], order=8, normalized=False)
    with pytest.raises(UnnormalizedSeed):
        lambda_expansion(seed, 0)
    with pytest.raises(ArityMismatch):
        lambda_expansion(normalize(seed), 2)


def test_normalize_commutes_with_scaling():
    seed = make_seed([0.5, 0.0], [[1.0, 0.3], [2.0, -0.1j], [0.5, 0.0, 0.2]], order=24, normalized=False)
    scaled = seed.model_copy(update={"g": tuple(g * 2.5 for g in seed.g)})
    for first, second in zip(normalize(seed).g, normalize(scaled).g):
        np.testing.assert_allclose(second.coeffs, first.coeffs, atol=1e-12)


@pytest.mark.parametrize("order", [24, 48, 64])
def test_normalize_random_polynomial_seeds(order):
    generator = np.random.default_rng(order)
    for _ in range(30):
        n = int(generator.integers(2, 4))
        gamma = generator.uniform(-0.9, 3.0, size=n)
        coefficients = [[1.0, *(generator.uniform(-1, 1, 3) + 1j * generator.uniform(-1, 1, 3))] for _ in range(n + 1)]
        seed = normalize(make_seed(gamma, coefficients, order=order, normalized=False))
        assert normalization_deviation(seed) <= 1e-10

        radius = seed.validity_radius
        assert radius == min(tail_radius(g) for g in seed.g)
        z = 0.5 * radius * np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
        np.testing.assert_allclose(reduced_wronskian(seed.beta, seed.g)(z), 1.0, atol=1e-9)
