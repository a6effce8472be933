"""Toda Verifier Package"""
__version__ = "0.1.0"

from .config import Tolerances
from .exponents import ExponentData, make_exponent_data
from .series_core import BranchedFunction, TruncatedSeries
from .wronskian_engine import SeedData, normalize, reduced_wronskian
from .toda_geometry import CanonicalCurve, normalized_chart, u_value, xi_metric_density
from .fuchsian import FuchsianOperator, reconstruct, indicial_roots
from .scenario import ScenarioConfig, ScenarioLoader

__all__ = [
    'Tolerances',
    'ExponentData',
    'make_exponent_data',
    'BranchedFunction',
    'TruncatedSeries',
    'SeedData',
    'normalize',
    'reduced_wronskian',
    'CanonicalCurve',
    'normalized_chart',
    'u_value',
    'xi_metric_density',
    'FuchsianOperator',
    'reconstruct',
    'indicial_roots',
    'ScenarioConfig',
    'ScenarioLoader',
]
