import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to sys.path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from toda_verifier.exponents import make_exponent_data
from toda_verifier.wronskian_engine import SeedData, normalize

ORDER = 64


def make_seed(gamma, coefficients, order=ORDER, normalized=True):
    """Seed from weights and leading Taylor coefficients of g_0..g_n."""
    exponents = make_exponent_data(len(gamma), list(gamma))
    seed = SeedData.from_coefficients(exponents, coefficients, order)
    return normalize(seed) if normalized else seed


def liouville_seed():
    """nu = (1, z): e^u = 1 / (1 + |z|^2)^2."""
    return make_seed([0.0], [[1.0], [1.0]])


def bryant_seed(gamma=1.0):
    return make_seed([gamma], [[1.0], [1.0]])


def veronese_seed():
    """nu = (1, z, z^2 / 2), already normalized."""
    return make_seed([0.0, 0.0], [[1.0], [1.0], [0.5]])


def random_seed(rng, n, degree=3, scale=0.3, gamma_range=(-0.9, 3.0), order=ORDER):
    """Normalized seed from polynomials g_i = 1 + sum c_ij z^j with c_ij uniform in a complex square."""
    gamma = rng.uniform(*gamma_range, size=n)
    coefficients = []
    for _ in range(n + 1):
        tail = scale * (rng.uniform(-1, 1, degree) + 1j * rng.uniform(-1, 1, degree))
        coefficients.append([1.0, *tail])
    return make_seed(gamma, coefficients, order)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_seeds():
    """Twenty random normalized seeds with n in {2, 3}."""
    generator = np.random.default_rng(7)
    return [random_seed(generator, 2 + (i % 2)) for i in range(20)]


def write_scenario(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path
