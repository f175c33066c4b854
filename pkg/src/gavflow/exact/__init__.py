"""Exact algebra over Q(sqrt 2): scalars, truncated series, trigonometric polynomials."""

from .scalar import ONE, SQRT2, ZERO, ExactScalar
from .serialize import dumps, from_json, loads, to_json
from .series import BivariateSeries, UnivariateSeries
from .trig import TrigPolynomial, TrigSeries, sin_cos_monomial

__all__ = [
    "ExactScalar",
    "ZERO",
    "ONE",
    "SQRT2",
    "UnivariateSeries",
    "BivariateSeries",
    "TrigPolynomial",
    "TrigSeries",
    "sin_cos_monomial",
    "to_json",
    "from_json",
    "dumps",
    "loads",
]
