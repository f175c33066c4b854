"""Exact derivation of the pressure profile and its action/frequency series.

Pipeline, all in exact Q(sqrt 2) arithmetic:

* ``H`` from the input series ``psi`` via ``H(s) = 6 s (1/psi'(s) + 2 psi(s))``.
* ``alpha(x, y)`` in the local variables ``(x - 1, y)``, solved degree by
  degree from ``d_x alpha = F(x, alpha)`` and ``(d_y alpha)^2 = G(x, alpha)``
  with ``F(x, s) = -2 x psi(s) + 2 x^3`` and ``G = 12 x^2 s - F^2 - H(s)``.
* ``alpha2(rho, z) = alpha(rho, z / rho)`` and its polar coefficients
  ``P_n(theta)`` with ``rho - 1 = r sin(theta)``, ``z = r cos(theta)``.
* The radius series ``w(theta, mu)`` of the level curve ``alpha2 = mu^2``,
  the action density ``gamma = mu^2 w^2 / 2`` and the angular density ``m``.
* Period averages giving the action series ``h1``, its inverse ``h``, the
  pressure-action map ``K = h / 4`` and the frequency ratio series ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import ConfigurationError, DerivationError
from .exact import (
    BivariateSeries,
    ExactScalar,
    TrigPolynomial,
    TrigSeries,
    UnivariateSeries,
    sin_cos_monomial,
)

DEFAULT_ORDER = 7

# Taylor coefficients of psi at 0, through s^3.
PSI_COEFFICIENTS: tuple[Fraction, ...] = (
    Fraction(1),
    Fraction(-3, 4),
    Fraction(9, 128),
    Fraction(-21, 1024),
)

# Degree-2 part of alpha picking the non-degenerate branch of the square root.
ALPHA_SEED = {(2, 0): 2, (0, 2): 2}


def psi_series(coefficients: Sequence[Fraction] = PSI_COEFFICIENTS) -> UnivariateSeries:
    if len(coefficients) < 2 or coefficients[0] != 1:
        raise ConfigurationError("psi must start 1 + c1*s + ... with at least two terms")
    return UnivariateSeries.from_list(list(coefficients))


def max_order(psi: UnivariateSeries) -> int:
    """Largest alpha truncation order the psi data determine."""
    return 2 * psi.order


def derive_H(psi: UnivariateSeries) -> UnivariateSeries:
    return (psi.derivative().reciprocal() + psi * 2).shift(1) * 6


def _F(alpha: BivariateSeries, psi: UnivariateSeries) -> BivariateSeries:
    x = BivariateSeries.x(alpha.order) + 1
    return x * alpha.substitute_into(psi) * (-2) + x**3 * 2


def _G(alpha: BivariateSeries, psi: UnivariateSeries, H: UnivariateSeries) -> BivariateSeries:
    x = BivariateSeries.x(alpha.order) + 1
    F = _F(alpha, psi)
    return x * x * alpha * 12 - F * F - alpha.substitute_into(H)


def pde_residuals(
    alpha: BivariateSeries, psi: UnivariateSeries, H: UnivariateSeries
) -> tuple[BivariateSeries, BivariateSeries]:
    """``d_x alpha - F(x, alpha)`` and ``(d_y alpha)^2 - G(x, alpha)``."""
    dy = alpha.dy()
    return alpha.dx() - _F(alpha, psi), dy * dy - _G(alpha, psi, H)


def _solve_linear(matrix: list[list[ExactScalar]], rhs: list[ExactScalar]) -> list[ExactScalar]:
    n = len(rhs)
    a = [row[:] + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if pivot is None:
            raise DerivationError(f"singular matching system in unknown #{col}")
        a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col].inverse()
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _first_nonzero(series: BivariateSeries, below: int) -> tuple[int, int, ExactScalar] | None:
    for k, j, v in series.monomials():
        if k + j < below:
            return k, j, v
    return None


def derive_alpha(
    order: int = DEFAULT_ORDER, psi: UnivariateSeries | None = None, check: bool = True
) -> BivariateSeries:
    """Taylor polynomial of ``alpha`` in ``(x - 1, y)`` modulo total degree ``order``.

    Degree ``d >= 3`` is affine in its ``d + 1`` unknown coefficients: the ``d``
    monomials of ``d_x alpha - F`` at degree ``d - 1`` and the pure ``y^d``
    monomial of ``(d_y alpha)^2 - G`` give a square system.  The mixed
    monomials of the second equation are then consistency checks.
    """
    psi = psi_series() if psi is None else psi
    if order < 3:
        raise ConfigurationError("order must be at least 3 (the seed has degree 2)")
    if order > max_order(psi):
        raise ConfigurationError(
            f"order {order} exceeds {max_order(psi)}, the horizon fixed by psi through "
            f"s^{psi.order - 1}"
        )
    H = derive_H(psi)
    alpha = BivariateSeries(ALPHA_SEED, 3)
    for d in range(3, order):
        unknowns = [(k, d - k) for k in range(d, -1, -1)]

        def equations(values: dict[tuple[int, int], ExactScalar]) -> list[ExactScalar]:
            trial = BivariateSeries({**alpha.coeffs, **values}, d + 1)
            r1, r2 = pde_residuals(trial, psi, H)
            rows = [r1.coefficient(k - 1, j) for k, j in unknowns if k >= 1]
            rows.append(r2.coefficient(0, d))
            return rows

        base = equations({})
        columns = []
        for kj in unknowns:
            shifted = equations({kj: ExactScalar(1)})
            columns.append([s - b for s, b in zip(shifted, base)])
        matrix = [[columns[c][r] for c in range(len(unknowns))] for r in range(len(base))]
        solution = _solve_linear(matrix, [-b for b in base])
        alpha = BivariateSeries({**alpha.coeffs, **dict(zip(unknowns, solution))}, d + 1)
    if check:
        check_alpha(alpha, psi, H)
    return alpha


def check_alpha(alpha: BivariateSeries, psi: UnivariateSeries, H: UnivariateSeries) -> None:
    """Raise ``DerivationError`` naming the first monomial where the PDE system fails."""
    r1, r2 = pde_residuals(alpha, psi, H)
    bad = _first_nonzero(r1, alpha.order - 1)
    if bad is not None:
        k, j, v = bad
        raise DerivationError(f"d_x alpha - F has coefficient {v} at (x-1)^{k} y^{j}")
    bad = _first_nonzero(r2, alpha.order)
    if bad is not None:
        k, j, v = bad
        raise DerivationError(f"(d_y alpha)^2 - G has coefficient {v} at (x-1)^{k} y^{j}")
    if not alpha.is_even_in_y():
        raise DerivationError("alpha is not even in y")


def derive_alpha2(alpha: BivariateSeries) -> BivariateSeries:
    """``alpha(rho, z / rho)`` in ``(rho - 1, z)``."""
    n = alpha.order
    x = BivariateSeries.x(n)
    inv_rho = UnivariateSeries.from_list([(-1) ** k for k in range(n)])  # 1 / (1 + t)
    inv_rho = x.substitute_into(inv_rho)
    z = BivariateSeries.y(n)
    out = BivariateSeries({}, n)
    for (k, j), c in alpha.coeffs.items():
        out = out + x**k * z**j * inv_rho**j * c
    return out


def derive_polar(alpha2: BivariateSeries) -> list[TrigPolynomial]:
    """``P_n(theta)`` for ``n < order``: the ``r^n`` coefficient of
    ``alpha2(1 + r sin(theta), r cos(theta))``."""
    P = [TrigPolynomial() for _ in range(alpha2.order)]
    for (k, j), c in alpha2.coeffs.items():
        P[k + j] = P[k + j] + sin_cos_monomial(k, j) * c
    return P


def polar_series(P: Sequence[TrigPolynomial]) -> TrigSeries:
    return TrigSeries.from_sequence(list(P))


def derive_w(P: Sequence[TrigPolynomial]) -> TrigSeries:
    """Radius series ``w`` with ``sum_n P_n (mu w)^n = mu^2``, known modulo ``mu^(N-2)``."""
    alpha3 = polar_series(P)
    P2 = P[2]
    if not P2.is_constant() or P2.average().is_zero():
        raise DerivationError("leading polar coefficient must be a nonzero constant")
    W0 = (ExactScalar(1) / P2.average()).sqrt()
    terms = {0: TrigPolynomial.constant(W0)}
    pivot = P2.average() * W0 * 2
    for m in range(1, len(P) - 2):
        trial = TrigSeries(terms, m + 1).shift(1)
        residual = alpha3.compose(trial).coefficient(m + 2)
        terms[m] = residual * (-pivot.inverse())
    w = TrigSeries(terms, len(P) - 2)
    identity = alpha3.compose(w.shift(1)) - TrigSeries({2: TrigPolynomial.constant(1)}, len(P))
    if identity.terms:
        n = min(identity.terms)
        raise DerivationError(f"level-curve identity fails at mu^{n}")
    return w


def action_density(w: TrigSeries) -> TrigSeries:
    """``gamma(theta, mu) = mu^2 w^2 / 2``."""
    return (w * w).shift(2) * Fraction(1, 2)


def angular_density(w: TrigSeries, gamma: TrigSeries) -> tuple[TrigSeries, TrigSeries, TrigSeries]:
    """Return ``nu``, ``(1 + mu w sin)^-2`` and ``m = nu (1 + mu w sin)^-2``."""
    nu = gamma.mu_derivative().shift(-1) * Fraction(1, 2)
    u = w.shift(1) * TrigPolynomial.sin_theta()
    n = w.order + 2
    binomial = UnivariateSeries({k: (-1) ** k * (k + 1) for k in range(n)}, n)
    den = u.apply(binomial)
    return nu, den, nu * den


def _even_average_series(series: TrigSeries, what: str) -> UnivariateSeries:
    averages = series.averages()
    for n, v in averages.coeffs.items():
        if n % 2 and not v.is_zero():
            raise DerivationError(f"odd-order average of {what} at mu^{n} is {v}")
    order = (series.order + 1) // 2
    return UnivariateSeries({n // 2: v for n, v in averages.coeffs.items() if n % 2 == 0}, order)


def _require_rational(series: UnivariateSeries, name: str) -> UnivariateSeries:
    for k, v in series.coeffs.items():
        if not v.is_rational():
            raise DerivationError(f"{name} coefficient of degree {k} is irrational: {v}")
    return series


@dataclass(frozen=True)
class DerivedTables:
    """Everything the exact pipeline produces at one truncation order."""

    order: int
    psi: UnivariateSeries
    H: UnivariateSeries
    alpha: BivariateSeries
    alpha2: BivariateSeries
    P: tuple[TrigPolynomial, ...]
    w: TrigSeries
    gamma: TrigSeries
    nu: TrigSeries
    denominator: TrigSeries
    m: TrigSeries
    h1: UnivariateSeries
    h: UnivariateSeries
    K: UnivariateSeries
    J: UnivariateSeries
    H_of_h: UnivariateSeries
    B: UnivariateSeries
    R: UnivariateSeries
    averages: dict[str, ExactScalar] = field(default_factory=dict)

    @property
    def W(self) -> list[TrigPolynomial]:
        return [self.w.coefficient(n) for n in range(self.w.order)]

    @property
    def Q(self) -> list[TrigPolynomial]:
        return [self.gamma.coefficient(n) for n in range(self.gamma.order)]

    @property
    def M(self) -> list[TrigPolynomial]:
        return [self.m.coefficient(n) for n in range(self.m.order)]


def product_averages(P: Sequence[TrigPolynomial], W: Sequence[TrigPolynomial]) -> dict[str, ExactScalar]:
    """Period averages of the products that build the sixth-order action term."""
    out: dict[str, ExactScalar] = {}
    if len(P) > 3 and len(W) > 3:
        out["P3W3"] = (P[3] * W[3]).average()
    if len(P) > 3 and len(W) > 2:
        out["P3^2W2"] = (P[3] * P[3] * W[2]).average()
    if len(P) > 3:
        out["P3^4"] = (P[3] ** 4).average()
    if len(P) > 4 and len(W) > 2:
        out["P4W2"] = (P[4] * W[2]).average()
    if len(P) > 4:
        out["P3^2P4"] = (P[3] * P[3] * P[4]).average()
    if len(P) > 5:
        out["P3P5"] = (P[3] * P[5]).average()
    if len(P) > 6:
        out["P6"] = P[6].average()
    return out


def derive_tables(order: int = DEFAULT_ORDER, psi: Sequence[Fraction] = PSI_COEFFICIENTS) -> DerivedTables:
    return _derive_tables(order, tuple(Fraction(c) for c in psi))


@lru_cache(maxsize=8)
def _derive_tables(order: int, psi_coefficients: tuple[Fraction, ...]) -> DerivedTables:
    psi = psi_series(psi_coefficients)
    return tables_from_alpha(derive_alpha(order, psi), psi)


def tables_from_alpha(
    alpha: BivariateSeries,
    psi: UnivariateSeries | None = None,
    alpha2: BivariateSeries | None = None,
) -> DerivedTables:
    """Everything downstream of a given ``alpha``, at the truncation order of ``alpha``.

    ``alpha2`` replaces the rewritten profile when given, so that the two
    expansion steps can be checked independently.
    """
    psi = psi_series() if psi is None else psi
    order = alpha.order
    H = derive_H(psi)
    alpha2 = derive_alpha2(alpha) if alpha2 is None else alpha2
    P = derive_polar(alpha2)
    w = derive_w(P)
    gamma = action_density(w)
    nu, den, m = angular_density(w, gamma)
    h1 = _require_rational(_even_average_series(gamma, "gamma"), "h1")
    J = _require_rational(_even_average_series(m, "m"), "J")
    h = h1.revert()
    K = h / 4
    H_of_h = H.compose(h)
    B = (H_of_h.shift(-1) / 16).sqrt() * 4
    R = B * J.compose(h)
    return DerivedTables(
        order=order,
        psi=psi,
        H=H,
        alpha=alpha,
        alpha2=alpha2,
        P=tuple(P),
        w=w,
        gamma=gamma,
        nu=nu,
        denominator=den,
        m=m,
        h1=h1,
        h=h,
        K=K,
        J=J,
        H_of_h=H_of_h,
        B=B,
        R=_require_rational(R, "R"),
        averages=product_averages(P, [w.coefficient(n) for n in range(w.order)]),
    )


# Stage-by-stage entry points on the default tables.


def derive_Pn(order: int = DEFAULT_ORDER) -> list[TrigPolynomial]:
    return list(derive_tables(order).P)


def derive_Wn(count: int, order: int = DEFAULT_ORDER) -> list[TrigPolynomial]:
    W = derive_tables(order).W
    if count > len(W):
        raise ConfigurationError(f"only {len(W)} radius coefficients exist at order {order}")
    return W[:count]


def derive_Qn_and_averages(order: int = DEFAULT_ORDER) -> tuple[list[TrigPolynomial], dict[str, ExactScalar]]:
    """Action-density coefficients and the named period averages, including ``<Q_n>``."""
    t = derive_tables(order)
    averages = {f"Q{n}": q.average() for n, q in enumerate(t.Q) if n >= 2 and n % 2 == 0}
    averages.update(t.averages)
    return t.Q, averages


def derive_frequency_series(order: int = DEFAULT_ORDER) -> tuple[UnivariateSeries, ...]:
    """``(h1, h, K, J, B, R)``."""
    t = derive_tables(order)
    return t.h1, t.h, t.K, t.J, t.B, t.R
