"""Exact trigonometric polynomials and power series with trigonometric coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .scalar import ExactScalar, Rational
from .series import UnivariateSeries

Scalar = ExactScalar | Rational


def _clean(coeffs: Mapping[int, Scalar]) -> dict[int, ExactScalar]:
    out = {}
    for k, v in coeffs.items():
        v = ExactScalar.coerce(v)
        if not v.is_zero():
            out[k] = v
    return out


class TrigPolynomial:
    """``c_0 + sum_k (c_k cos k*theta + s_k sin k*theta)`` with exact coefficients."""

    __slots__ = ("cos", "sin")

    def __init__(
        self, cos: Mapping[int, Scalar] | None = None, sin: Mapping[int, Scalar] | None = None
    ) -> None:
        cos = dict(cos or {})
        sin = dict(sin or {})
        if any(k < 0 for k in cos) or any(k < 1 for k in sin):
            raise ValueError("cosine harmonics must be >= 0 and sine harmonics >= 1")
        self.cos: dict[int, ExactScalar] = _clean(cos)
        self.sin: dict[int, ExactScalar] = _clean(sin)

    @classmethod
    def constant(cls, value: Scalar) -> TrigPolynomial:
        return cls({0: value})

    @classmethod
    def cos_theta(cls) -> TrigPolynomial:
        return cls({1: 1})

    @classmethod
    def sin_theta(cls) -> TrigPolynomial:
        return cls(sin={1: 1})

    def is_zero(self) -> bool:
        return not self.cos and not self.sin

    def is_constant(self) -> bool:
        return not self.sin and all(k == 0 for k in self.cos)

    def average(self) -> ExactScalar:
        """Mean over one period."""
        return self.cos.get(0, ExactScalar(0))

    def cos_coefficient(self, k: int) -> ExactScalar:
        return self.cos.get(k, ExactScalar(0))

    def sin_coefficient(self, k: int) -> ExactScalar:
        return self.sin.get(k, ExactScalar(0))

    def degree(self) -> int:
        return max([*self.cos, *self.sin], default=0)

    def parity(self) -> int | None:
        """``+1`` for even (cosines only), ``-1`` for odd (sines only), else ``None``."""
        if not self.sin:
            return 1
        if not self.cos:
            return -1
        return None

    def __add__(self, other: TrigPolynomial | Scalar) -> TrigPolynomial:
        if not isinstance(other, TrigPolynomial):
            other = TrigPolynomial.constant(other)
        cos = dict(self.cos)
        for k, v in other.cos.items():
            cos[k] = cos.get(k, 0) + v
        sin = dict(self.sin)
        for k, v in other.sin.items():
            sin[k] = sin.get(k, 0) + v
        return TrigPolynomial(cos, sin)

    __radd__ = __add__

    def __neg__(self) -> TrigPolynomial:
        return TrigPolynomial(
            {k: -v for k, v in self.cos.items()}, {k: -v for k, v in self.sin.items()}
        )

    def __sub__(self, other: TrigPolynomial | Scalar) -> TrigPolynomial:
        return self + (-other)

    def __rsub__(self, other: Scalar) -> TrigPolynomial:
        return (-self) + other

    def __mul__(self, other: TrigPolynomial | Scalar) -> TrigPolynomial:
        if not isinstance(other, TrigPolynomial):
            s = ExactScalar.coerce(other)
            return TrigPolynomial(
                {k: v * s for k, v in self.cos.items()}, {k: v * s for k, v in self.sin.items()}
            )
        half = ExactScalar(1, 0) / 2
        cos: dict[int, ExactScalar] = {}
        sin: dict[int, ExactScalar] = {}

        def add_cos(k: int, v: ExactScalar) -> None:
            k = abs(k)
            cos[k] = cos.get(k, 0) + v

        def add_sin(k: int, v: ExactScalar) -> None:
            if k == 0:
                return
            if k < 0:
                k, v = -k, -v
            sin[k] = sin.get(k, 0) + v

        for a, ca in self.cos.items():
            for b, cb in other.cos.items():
                p = ca * cb * half
                add_cos(a - b, p)
                add_cos(a + b, p)
            for b, sb in other.sin.items():
                p = ca * sb * half
                add_sin(b + a, p)
                add_sin(b - a, p)
        for a, sa in self.sin.items():
            for b, cb in other.cos.items():
                p = sa * cb * half
                add_sin(a + b, p)
                add_sin(a - b, p)
            for b, sb in other.sin.items():
                p = sa * sb * half
                add_cos(a - b, p)
                add_cos(a + b, -p)
        return TrigPolynomial(cos, sin)

    __rmul__ = __mul__

    def __truediv__(self, other: TrigPolynomial | Scalar) -> TrigPolynomial:
        if isinstance(other, TrigPolynomial):
            if not other.is_constant():
                raise ValueError("division by a non-constant trigonometric polynomial")
            other = other.average()
        return self * ExactScalar.coerce(other).inverse()

    def __pow__(self, n: int) -> TrigPolynomial:
        if n < 0:
            raise ValueError("negative powers are not supported")
        result = TrigPolynomial.constant(1)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = TrigPolynomial.constant(other)
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return self.cos == other.cos and self.sin == other.sin

    def __hash__(self) -> int:
        return hash((frozenset(self.cos.items()), frozenset(self.sin.items())))

    def derivative(self) -> TrigPolynomial:
        return TrigPolynomial(
            {k: v * k for k, v in self.sin.items()}, {k: -v * k for k, v in self.cos.items() if k}
        )

    def __call__(self, theta: float | np.ndarray) -> float | np.ndarray:
        theta = np.asarray(theta, dtype=float)
        acc = np.zeros_like(theta)
        for k, v in self.cos.items():
            acc = acc + float(v) * np.cos(k * theta)
        for k, v in self.sin.items():
            acc = acc + float(v) * np.sin(k * theta)
        return float(acc) if acc.ndim == 0 else acc

    def __repr__(self) -> str:
        parts = [f"({self.cos[0]})"] if 0 in self.cos else []
        parts += [f"({v})cos{k}t" for k, v in sorted(self.cos.items()) if k]
        parts += [f"({v})sin{k}t" for k, v in sorted(self.sin.items())]
        return " + ".join(parts) or "0"


def sin_cos_monomial(k: int, j: int) -> TrigPolynomial:
    """``sin^k(theta) cos^j(theta)`` as a trigonometric polynomial."""
    return TrigPolynomial.sin_theta() ** k * TrigPolynomial.cos_theta() ** j


class TrigSeries:
    """``sum_n T_n(theta) mu^n`` known modulo ``mu^order``."""

    __slots__ = ("terms", "order")

    def __init__(self, terms: Mapping[int, TrigPolynomial], order: int) -> None:
        self.order = order
        self.terms: dict[int, TrigPolynomial] = {
            n: t for n, t in terms.items() if n < order and not t.is_zero()
        }
        if any(n < 0 for n in self.terms):
            raise ValueError("negative powers of mu")

    @classmethod
    def from_sequence(cls, terms: Sequence[TrigPolynomial], order: int | None = None) -> TrigSeries:
        return cls(dict(enumerate(terms)), len(terms) if order is None else order)

    @classmethod
    def constant(cls, value: Scalar | TrigPolynomial, order: int) -> TrigSeries:
        if not isinstance(value, TrigPolynomial):
            value = TrigPolynomial.constant(value)
        return cls({0: value}, order)

    @classmethod
    def mu(cls, order: int) -> TrigSeries:
        return cls({1: TrigPolynomial.constant(1)}, order)

    def coefficient(self, n: int) -> TrigPolynomial:
        if n >= self.order:
            raise IndexError(f"coefficient mu^{n} lies beyond the truncation order {self.order}")
        return self.terms.get(n, TrigPolynomial())

    def __getitem__(self, n: int) -> TrigPolynomial:
        return self.coefficient(n)

    def valuation(self) -> int:
        return min(self.terms, default=self.order)

    def truncate(self, order: int) -> TrigSeries:
        return TrigSeries(self.terms, min(order, self.order))

    def __add__(self, other: TrigSeries | TrigPolynomial | Scalar) -> TrigSeries:
        if not isinstance(other, TrigSeries):
            other = TrigSeries.constant(other, self.order)
        terms = dict(self.terms)
        for n, t in other.terms.items():
            terms[n] = terms[n] + t if n in terms else t
        return TrigSeries(terms, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> TrigSeries:
        return TrigSeries({n: -t for n, t in self.terms.items()}, self.order)

    def __sub__(self, other: TrigSeries | TrigPolynomial | Scalar) -> TrigSeries:
        return self + (-other)

    def __rsub__(self, other: TrigPolynomial | Scalar) -> TrigSeries:
        return (-self) + other

    def __mul__(self, other: TrigSeries | TrigPolynomial | Scalar) -> TrigSeries:
        if not isinstance(other, TrigSeries):
            return TrigSeries({n: t * other for n, t in self.terms.items()}, self.order)
        order = min(self.order + other.valuation(), other.order + self.valuation())
        terms: dict[int, TrigPolynomial] = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                if i + j < order:
                    p = a * b
                    terms[i + j] = terms[i + j] + p if i + j in terms else p
        return TrigSeries(terms, order)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> TrigSeries:
        result = TrigSeries.constant(1, self.order)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrigSeries):
            return NotImplemented
        return self.order == other.order and self.terms == other.terms

    def shift(self, k: int) -> TrigSeries:
        """Multiply by ``mu^k``; negative ``k`` needs ``val >= -k``."""
        if k < 0 and self.valuation() < -k:
            raise ValueError(f"series has no factor mu^{-k}")
        return TrigSeries({n + k: t for n, t in self.terms.items()}, self.order + k)

    def mu_derivative(self) -> TrigSeries:
        return TrigSeries(
            {n - 1: t * n for n, t in self.terms.items() if n > 0}, max(self.order - 1, 0)
        )

    def compose(self, inner: TrigSeries) -> TrigSeries:
        """Substitute ``mu -> inner(theta, mu)`` for ``inner`` with no ``mu^0`` term,
        keeping the trigonometric coefficients of ``self`` as multipliers."""
        if 0 in inner.terms:
            raise ValueError("inner series must vanish at mu = 0")
        cap = self.order * inner.valuation()
        result = TrigSeries({0: self.terms.get(0, TrigPolynomial())}, cap)
        power = TrigSeries.constant(1, cap)
        for n in range(1, self.order):
            power = (power * inner).truncate(cap)
            t = self.terms.get(n)
            if t is not None:
                result = result + power * t
        return result

    def apply(self, outer: UnivariateSeries) -> TrigSeries:
        """``outer(self)`` for a scalar power series ``outer`` and ``self`` vanishing at 0."""
        if 0 in self.terms:
            raise ValueError("series must vanish at mu = 0")
        cap = outer.order * self.valuation()
        result = TrigSeries.constant(outer.coeffs.get(0, 0), cap)
        power = TrigSeries.constant(1, cap)
        for k in range(1, outer.order):
            power = (power * self).truncate(cap)
            ck = outer.coeffs.get(k)
            if ck is not None:
                result = result + power * ck
        return result

    def averages(self) -> UnivariateSeries:
        """Period average of each coefficient, as a series in ``mu``."""
        return UnivariateSeries({n: t.average() for n, t in self.terms.items()}, self.order)

    def __call__(self, theta: float | np.ndarray, mu: float) -> float | np.ndarray:
        acc = 0.0
        for n in sorted(self.terms, reverse=True):
            acc = acc + self.terms[n](theta) * mu**n
        return acc

    def __repr__(self) -> str:
        body = " + ".join(f"[{t}]mu^{n}" for n, t in sorted(self.terms.items())) or "0"
        return f"{body} + O(mu^{self.order})"

