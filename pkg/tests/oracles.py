"""Independent reference computations used by the tests."""

from __future__ import annotations

from fractions import Fraction

import sympy as sp
from sympy.polys.rings import ring


def _q(c: Fraction) -> sp.Rational:
    return sp.Rational(c.numerator, c.denominator)


def sympy_alpha(order: int, psi: list[Fraction]) -> dict[tuple[int, int], Fraction]:
    """Solve d_x alpha = F and (d_y alpha)^2 = G degree by degree with ``sympy.solve``,
    imposing every monomial of both equations (an overdetermined, consistent system)."""
    s = sp.Symbol("s")
    psi_expr = sum(_q(c) * s**k for k, c in enumerate(psi))
    H_expr = sp.series(6 * s * (1 / sp.diff(psi_expr, s) + 2 * psi_expr), s, 0, order).removeO()
    H = [H_expr.coeff(s, k) for k in range(order)]
    known: dict[tuple[int, int], sp.Rational] = {(2, 0): sp.Integer(2), (0, 2): sp.Integer(2)}
    for d in range(3, order):
        names = [f"c{k}" for k in range(d + 1)]
        R, X, Y, *cs = ring(["X", "Y", *names], sp.QQ)

        def cut(p, below):
            return R({m: v for m, v in p.items() if m[0] + m[1] < below})

        trial = sum((v * X**k * Y**j for (k, j), v in known.items()), R(0))
        trial += sum((c * X**k * Y**(d - k) for k, c in zip(range(d, -1, -1), cs)), R(0))
        powers = [R(1)]
        for _ in range(1, order):
            powers.append(cut(powers[-1] * trial, d + 1))
        x = 1 + X
        F = cut(-2 * x * sum(_q(c) * powers[k] for k, c in enumerate(psi)) + 2 * x**3, d + 1)
        G = 12 * x**2 * trial - cut(F * F, d + 1) - sum(H[k] * powers[k] for k in range(1, order))
        r1 = cut(trial.diff(X) - F, d)
        dy = trial.diff(Y)
        r2 = cut(dy * dy - G, d + 1)
        eqs = []
        for p in (r1, r2):
            grouped: dict[tuple[int, int], object] = {}
            for m, v in p.items():
                grouped[m[:2]] = grouped.get(m[:2], R(0)) + R({(0, 0) + m[2:]: v})
            eqs += [g.as_expr() for g in grouped.values()]
        syms = sp.symbols(names)
        sol = sp.solve(eqs, syms, dict=True)
        if len(sol) != 1:
            raise AssertionError(f"degree {d}: {len(sol)} solutions")
        for k, c in zip(range(d, -1, -1), syms):
            known[(k, d - k)] = sol[0][c]
    return {kj: Fraction(int(v.p), int(v.q)) for kj, v in known.items() if v != 0}
