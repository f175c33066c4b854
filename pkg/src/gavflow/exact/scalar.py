"""Exact arithmetic in the quadratic field Q(sqrt 2)."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


def _as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an int or Fraction, got {type(value).__name__}")


class ExactScalar:
    """The number ``a + b*sqrt(2)`` with rational ``a`` and ``b``.

    Instances are immutable and hashable; equality is structural, which is
    also numerical equality because sqrt(2) is irrational.
    """

    __slots__ = ("a", "b")

    def __init__(self, a: Rational = 0, b: Rational = 0) -> None:
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ExactScalar is immutable")

    @classmethod
    def coerce(cls, value: ExactScalar | Rational) -> ExactScalar:
        if isinstance(value, ExactScalar):
            return value
        return cls(value)

    @classmethod
    def sqrt2(cls) -> ExactScalar:
        return cls(0, 1)

    def is_rational(self) -> bool:
        return self.b == 0

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def rational(self) -> Fraction:
        """The value as a Fraction; raises if the sqrt(2) part is nonzero."""
        if self.b != 0:
            raise ValueError(f"{self} is not rational")
        return self.a

    def conjugate(self) -> ExactScalar:
        return ExactScalar(self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - 2 * self.b * self.b

    def sign(self) -> int:
        """Exact sign of ``a + b*sqrt(2)``."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0 or sa == sb:
            return sa or sb
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with 2 b^2
        diff = self.a * self.a - 2 * self.b * self.b
        return sa if diff > 0 else sb

    def __add__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        o = ExactScalar.coerce(other)
        return ExactScalar(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> ExactScalar:
        return ExactScalar(-self.a, -self.b)

    def __pos__(self) -> ExactScalar:
        return self

    def __sub__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        o = ExactScalar.coerce(other)
        return ExactScalar(self.a - o.a, self.b - o.b)

    def __rsub__(self, other: ExactScalar | Rational) -> ExactScalar:
        return ExactScalar.coerce(other) - self

    def __mul__(self, other: ExactScalar | Rational) -> ExactScalar:
        if isinstance(other, (int, Fraction)):
            return ExactScalar(self.a * other, self.b * other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return ExactScalar(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def inverse(self) -> ExactScalar:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt 2)")
        return ExactScalar(self.a / n, -self.b / n)

    def __truediv__(self, other: ExactScalar | Rational) -> ExactScalar:
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero in Q(sqrt 2)")
            return ExactScalar(self.a / other, self.b / other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other: ExactScalar | Rational) -> ExactScalar:
        return ExactScalar.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> ExactScalar:
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ExactScalar(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExactScalar):
            return self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __lt__(self, other: ExactScalar | Rational) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other: ExactScalar | Rational) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other: ExactScalar | Rational) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other: ExactScalar | Rational) -> bool:
        return (self - other).sign() >= 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def sqrt(self) -> ExactScalar:
        """Exact square root when it lies in Q(sqrt 2) in one of the forms
        ``q`` or ``q*sqrt(2)`` with rational ``q``; raises otherwise."""
        if self.b != 0:
            raise ValueError(f"no closed-form square root for {self}")
        if self.a < 0:
            raise ValueError(f"square root of negative {self}")
        root = _rational_sqrt(self.a)
        if root is not None:
            return ExactScalar(root)
        root = _rational_sqrt(self.a / 2)
        if root is not None:
            return ExactScalar(0, root)
        raise ValueError(f"{self} has no square root in Q(sqrt 2)")

    def __float__(self) -> float:
        """Correctly rounded float value.

        Brackets sqrt(2) between consecutive dyadic rationals of growing
        precision until both ends of the value interval round to the same
        double, so cancellation between ``a`` and ``b*sqrt(2)`` is harmless.
        """
        if self.b == 0:
            return float(self.a)
        p = 64
        while True:
            lo_root = math.isqrt(2 << (2 * p))
            scale = 1 << p
            lo = self.a + self.b * Fraction(lo_root, scale)
            hi = self.a + self.b * Fraction(lo_root + 1, scale)
            f_lo, f_hi = float(lo), float(hi)
            if f_lo == f_hi:
                return f_lo
            p *= 2

    def __repr__(self) -> str:
        return f"ExactScalar({self.a!s}, {self.b!s})"

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        sign = "+" if self.b > 0 else "-"
        return f"{self.a} {sign} {abs(self.b)}*sqrt2"


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
SQRT2 = ExactScalar(0, 1)
