"""Truncated power series with exact Q(sqrt 2) coefficients.

A series carries an ``order``: it is known modulo terms of (total) degree
``>= order``.  Arithmetic propagates orders so that every coefficient below
the result's order is exact; the product of two truncated series ``f`` and
``g`` is known to ``min(f.order + val(g), g.order + val(f))``.  Composition
inherits its order from these products, capped by ``outer.order * val(inner)``.
"""

from __future__ import annotations

from typing import Callable, Iterator, Mapping

from ..errors import SingularReversionError
from .scalar import ExactScalar, Rational

Scalar = ExactScalar | Rational


def _clean(coeffs: Mapping, keep: Callable[[object], bool]) -> dict:
    out = {}
    for key, value in coeffs.items():
        value = ExactScalar.coerce(value)
        if not value.is_zero() and keep(key):
            out[key] = value
    return out


class UnivariateSeries:
    """Sparse series ``sum c_k t^k`` known modulo ``t^order``."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Mapping[int, Scalar], order: int) -> None:
        if order < 0:
            raise ValueError("order must be non-negative")
        for k in coeffs:
            if k < 0:
                raise ValueError("negative exponent in power series")
        self.order = order
        self.coeffs: dict[int, ExactScalar] = _clean(coeffs, lambda k: k < order)

    @classmethod
    def from_list(cls, values: list[Scalar], order: int | None = None) -> UnivariateSeries:
        return cls(dict(enumerate(values)), len(values) if order is None else order)

    @classmethod
    def variable(cls, order: int) -> UnivariateSeries:
        return cls({1: 1}, order)

    @classmethod
    def constant(cls, value: Scalar, order: int) -> UnivariateSeries:
        return cls({0: value}, order)

    def __getitem__(self, k: int) -> ExactScalar:
        return self.coefficient(k)

    def coefficient(self, k: int) -> ExactScalar:
        if k >= self.order:
            raise IndexError(f"coefficient t^{k} lies beyond the truncation order {self.order}")
        return self.coeffs.get(k, ExactScalar(0))

    def coefficient_list(self) -> list[ExactScalar]:
        return [self.coefficient(k) for k in range(self.order)]

    def valuation(self) -> int:
        return min(self.coeffs, default=self.order)

    def truncate(self, order: int) -> UnivariateSeries:
        return UnivariateSeries(self.coeffs, min(order, self.order))

    def __add__(self, other: UnivariateSeries | Scalar) -> UnivariateSeries:
        if not isinstance(other, UnivariateSeries):
            other = UnivariateSeries({0: other}, self.order)
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return UnivariateSeries(out, order)

    __radd__ = __add__

    def __neg__(self) -> UnivariateSeries:
        return UnivariateSeries({k: -v for k, v in self.coeffs.items()}, self.order)

    def __sub__(self, other: UnivariateSeries | Scalar) -> UnivariateSeries:
        return self + (-other)

    def __rsub__(self, other: Scalar) -> UnivariateSeries:
        return (-self) + other

    def __mul__(self, other: UnivariateSeries | Scalar) -> UnivariateSeries:
        if not isinstance(other, UnivariateSeries):
            s = ExactScalar.coerce(other)
            return UnivariateSeries({k: v * s for k, v in self.coeffs.items()}, self.order)
        order = min(self.order + other.valuation(), other.order + self.valuation())
        out: dict[int, ExactScalar] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                if i + j < order:
                    out[i + j] = out.get(i + j, 0) + a * b
        return UnivariateSeries(out, order)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> UnivariateSeries:
        s = ExactScalar.coerce(other).inverse()
        return self * s

    def __pow__(self, n: int) -> UnivariateSeries:
        if n < 0:
            return self.reciprocal() ** (-n)
        result = UnivariateSeries({0: 1}, self.order)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnivariateSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.order, frozenset(self.coeffs.items())))

    def shift(self, k: int) -> UnivariateSeries:
        """Multiply by ``t^k``; negative ``k`` divides and needs ``val >= -k``."""
        if k < 0 and self.valuation() < -k:
            raise ValueError(f"series has no factor t^{-k}")
        return UnivariateSeries({i + k: v for i, v in self.coeffs.items()}, self.order + k)

    def derivative(self) -> UnivariateSeries:
        return UnivariateSeries(
            {k - 1: v * k for k, v in self.coeffs.items() if k > 0}, max(self.order - 1, 0)
        )

    def reciprocal(self) -> UnivariateSeries:
        c0 = self.coefficient(0)
        if c0.is_zero():
            raise ZeroDivisionError("reciprocal of a series with zero constant term")
        inv0 = c0.inverse()
        out = [inv0]
        for n in range(1, self.order):
            acc = ExactScalar(0)
            for k in range(1, n + 1):
                ck = self.coeffs.get(k)
                if ck is not None:
                    acc = acc + ck * out[n - k]
            out.append(-acc * inv0)
        return UnivariateSeries(dict(enumerate(out)), self.order)

    def compose(self, inner: UnivariateSeries) -> UnivariateSeries:
        """``self(inner(t))`` for ``inner`` with zero constant term."""
        if 0 in inner.coeffs:
            raise ValueError("inner series must have zero constant term")
        cap = self.order * inner.valuation()
        result = UnivariateSeries({0: self.coeffs.get(0, 0)}, cap)
        power = UnivariateSeries({0: 1}, cap)
        for k in range(1, self.order):
            power = (power * inner).truncate(cap)
            ck = self.coeffs.get(k)
            if ck is not None:
                result = result + power * ck
        return result

    def revert(self) -> UnivariateSeries:
        """Compositional inverse ``g`` with ``self(g(t)) = t``."""
        if self.order < 2:
            raise SingularReversionError("series too short to revert")
        if not self.coefficient(0).is_zero():
            raise SingularReversionError("series to revert must vanish at 0")
        a1 = self.coefficient(1)
        if a1.is_zero():
            raise SingularReversionError("linear coefficient is zero; series is not invertible")
        inv = a1.inverse()
        g = UnivariateSeries({1: inv}, 2)
        for n in range(2, self.order):
            trial = UnivariateSeries(g.coeffs, n + 1)
            residual = self.truncate(n + 1).compose(trial).coefficient(n)
            g = UnivariateSeries({**g.coeffs, n: -residual * inv}, n + 1)
        return UnivariateSeries(g.coeffs, self.order)

    def sqrt(self) -> UnivariateSeries:
        """Square root with positive leading coefficient."""
        c0 = self.coefficient(0)
        if c0.sign() <= 0:
            raise ValueError("series square root needs a positive constant term")
        r0 = c0.sqrt()
        inv2 = (2 * r0).inverse()
        out = [r0]
        for n in range(1, self.order):
            acc = self.coefficient(n)
            for k in range(1, n):
                acc = acc - out[k] * out[n - k]
            out.append(acc * inv2)
        return UnivariateSeries(dict(enumerate(out)), self.order)

    def __call__(self, t: float) -> float:
        acc = 0.0
        for k in range(self.order - 1, -1, -1):
            acc = acc * t + float(self.coeffs.get(k, 0))
        return acc

    def float_coefficients(self) -> list[float]:
        return [float(self.coefficient(k)) for k in range(self.order)]

    def __repr__(self) -> str:
        terms = " + ".join(f"({v})t^{k}" for k, v in sorted(self.coeffs.items())) or "0"
        return f"{terms} + O(t^{self.order})"


class BivariateSeries:
    """Sparse series ``sum c_{k,j} x^k y^j`` known modulo total degree ``order``."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Mapping[tuple[int, int], Scalar], order: int) -> None:
        if order < 0:
            raise ValueError("order must be non-negative")
        for k, j in coeffs:
            if k < 0 or j < 0:
                raise ValueError("negative exponent in power series")
        self.order = order
        self.coeffs: dict[tuple[int, int], ExactScalar] = _clean(
            coeffs, lambda kj: kj[0] + kj[1] < order
        )

    @classmethod
    def x(cls, order: int) -> BivariateSeries:
        return cls({(1, 0): 1}, order)

    @classmethod
    def y(cls, order: int) -> BivariateSeries:
        return cls({(0, 1): 1}, order)

    @classmethod
    def constant(cls, value: Scalar, order: int) -> BivariateSeries:
        return cls({(0, 0): value}, order)

    def coefficient(self, k: int, j: int) -> ExactScalar:
        if k + j >= self.order:
            raise IndexError(
                f"coefficient x^{k} y^{j} lies beyond the truncation order {self.order}"
            )
        return self.coeffs.get((k, j), ExactScalar(0))

    def __getitem__(self, kj: tuple[int, int]) -> ExactScalar:
        return self.coefficient(*kj)

    def valuation(self) -> int:
        return min((k + j for k, j in self.coeffs), default=self.order)

    def truncate(self, order: int) -> BivariateSeries:
        return BivariateSeries(self.coeffs, min(order, self.order))

    def homogeneous(self, degree: int) -> dict[tuple[int, int], ExactScalar]:
        return {kj: v for kj, v in self.coeffs.items() if sum(kj) == degree}

    def monomials(self) -> Iterator[tuple[int, int, ExactScalar]]:
        for (k, j), v in sorted(self.coeffs.items(), key=lambda it: (sum(it[0]), -it[0][0])):
            yield k, j, v

    def __add__(self, other: BivariateSeries | Scalar) -> BivariateSeries:
        if not isinstance(other, BivariateSeries):
            other = BivariateSeries({(0, 0): other}, self.order)
        out = dict(self.coeffs)
        for kj, v in other.coeffs.items():
            out[kj] = out.get(kj, 0) + v
        return BivariateSeries(out, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> BivariateSeries:
        return BivariateSeries({kj: -v for kj, v in self.coeffs.items()}, self.order)

    def __sub__(self, other: BivariateSeries | Scalar) -> BivariateSeries:
        return self + (-other)

    def __rsub__(self, other: Scalar) -> BivariateSeries:
        return (-self) + other

    def __mul__(self, other: BivariateSeries | Scalar) -> BivariateSeries:
        if not isinstance(other, BivariateSeries):
            s = ExactScalar.coerce(other)
            return BivariateSeries({kj: v * s for kj, v in self.coeffs.items()}, self.order)
        order = min(self.order + other.valuation(), other.order + self.valuation())
        out: dict[tuple[int, int], ExactScalar] = {}
        for (k1, j1), a in self.coeffs.items():
            for (k2, j2), b in other.coeffs.items():
                if k1 + k2 + j1 + j2 < order:
                    key = (k1 + k2, j1 + j2)
                    out[key] = out.get(key, 0) + a * b
        return BivariateSeries(out, order)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> BivariateSeries:
        if n < 0:
            raise ValueError("negative powers of bivariate series are not supported")
        result = BivariateSeries({(0, 0): 1}, self.order)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BivariateSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.order, frozenset(self.coeffs.items())))

    def dx(self) -> BivariateSeries:
        return BivariateSeries(
            {(k - 1, j): v * k for (k, j), v in self.coeffs.items() if k > 0},
            max(self.order - 1, 0),
        )

    def dy(self) -> BivariateSeries:
        return BivariateSeries(
            {(k, j - 1): v * j for (k, j), v in self.coeffs.items() if j > 0},
            max(self.order - 1, 0),
        )

    def substitute_into(self, outer: UnivariateSeries) -> BivariateSeries:
        """``outer(self(x, y))`` for ``self`` with zero constant term."""
        if (0, 0) in self.coeffs:
            raise ValueError("inner series must have zero constant term")
        cap = outer.order * self.valuation()
        result = BivariateSeries({(0, 0): outer.coeffs.get(0, 0)}, cap)
        power = BivariateSeries({(0, 0): 1}, cap)
        for k in range(1, outer.order):
            power = (power * self).truncate(cap)
            ck = outer.coeffs.get(k)
            if ck is not None:
                result = result + power * ck
        return result

    def is_even_in_y(self) -> bool:
        return all(j % 2 == 0 for _, j in self.coeffs)

    def float_terms(self) -> list[tuple[int, int, float]]:
        return [(k, j, float(v)) for (k, j), v in sorted(self.coeffs.items())]

    def __call__(self, x: float, y: float) -> float:
        return sum(c * x**k * y**j for k, j, c in self.float_terms())

    def __repr__(self) -> str:
        terms = " + ".join(f"({v})x^{k}y^{j}" for k, j, v in self.monomials()) or "0"
        return f"{terms} + O_{self.order}"
