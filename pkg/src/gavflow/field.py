"""The steady Euler field near the circle ``{rho = R, z = 0}`` and its cut-off.

With ``a(rho, z) = alpha(rho / R, z / R)`` the raw field is

    p = R^4 a / 4,   b = R^3 sqrt(H(a)) / 4,
    u_rho = d_z p / rho,   u_phi = b / rho,   u_z = -d_rho p / rho,

and the cut-off field is ``omega(p) U`` with pressure ``W(p) = int_0^p omega^2``.
``omega`` is the fixed bump ``exp(4 - eps^2 / ((s - eps)(2 eps - s)))`` on
``(eps, 2 eps)``, equal to 1 at ``3 eps / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .derivation import DEFAULT_ORDER, DerivedTables, derive_tables
from .errors import ConfigurationError, NumericDomainError

H_CLAMP = 1e-15
TAU_SAFETY = 0.9
ANNULUS_GRID = 720
W_NODES = 1024


@dataclass(frozen=True)
class FieldConfig:
    """Physical parameters; ``tau`` and ``epsilon`` default from ``delta``."""

    R: float = 1.0
    delta: float = 0.2
    tau: float | None = None
    epsilon: float | None = None
    order: int = DEFAULT_ORDER
    cutoff_sign: int = 1

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ConfigurationError("R must be positive")
        if not 0 < self.delta / self.R <= 0.5:
            raise ConfigurationError("delta / R must lie in (0, 1/2]")
        if self.cutoff_sign not in (1, -1):
            raise ConfigurationError("cutoff_sign must be +1 or -1")


# ---------------------------------------------------------------- cut-off


def bump(s: np.ndarray | float, eps: float) -> np.ndarray | float:
    """``omega_eps(s)``, smooth, supported in ``[eps, 2 eps]``."""
    s_arr = np.asarray(s, dtype=float)
    inside = (s_arr > eps) & (s_arr < 2 * eps)
    prod = np.where(inside, (s_arr - eps) * (2 * eps - s_arr), 1.0)
    out = np.where(inside, np.exp(4.0 - eps * eps / prod), 0.0)
    return float(out) if out.ndim == 0 else out


def bump_derivative(s: np.ndarray | float, eps: float) -> np.ndarray | float:
    s_arr = np.asarray(s, dtype=float)
    inside = (s_arr > eps) & (s_arr < 2 * eps)
    prod = np.where(inside, (s_arr - eps) * (2 * eps - s_arr), 1.0)
    dprod = 3 * eps - 2 * s_arr
    out = np.where(inside, np.exp(4.0 - eps * eps / prod) * eps * eps * dprod / prod**2, 0.0)
    return float(out) if out.ndim == 0 else out


def _unit_bump_sq(t: float) -> float:
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return math.exp(8.0 - 2.0 / (t * (1.0 - t)))


@lru_cache(maxsize=1)
def _unit_primitive() -> CubicHermiteSpline:
    """Primitive of ``omega_1(1 + t)^2`` on ``t in [0, 1]``.

    Nodal values come from adaptive Gauss-Kronrod quadrature on each cell;
    slopes are the exact integrand, so the Hermite interpolant is fourth order.
    """
    t = np.linspace(0.0, 1.0, W_NODES)
    cells = [quad(_unit_bump_sq, a, b, epsabs=1e-17, epsrel=1e-12, limit=200)[0] for a, b in zip(t[:-1], t[1:])]
    values = np.concatenate([[0.0], np.cumsum(cells)])
    slopes = np.array([_unit_bump_sq(v) for v in t])
    return CubicHermiteSpline(t, values, slopes)


def bump_primitive(s: np.ndarray | float, eps: float) -> np.ndarray | float:
    """``W_eps(s) = int_0^s omega_eps^2``; scale covariance ``W_eps(s) = eps W_1(s / eps)``."""
    spline = _unit_primitive()
    s_arr = np.asarray(s, dtype=float)
    t = np.clip((s_arr - eps) / eps, 0.0, 1.0)
    out = eps * spline(t)
    return float(out) if out.ndim == 0 else out


def bump_primitive_quad(s: float, eps: float) -> float:
    """Direct adaptive quadrature of ``W_eps``; reference for the spline."""
    if s <= eps:
        return 0.0
    upper = min(s, 2 * eps)
    return eps * quad(_unit_bump_sq, 0.0, (upper - eps) / eps, epsabs=1e-17, epsrel=1e-12, limit=200)[0]


# ---------------------------------------------------------------- the field


def _coefficient_matrix(series) -> np.ndarray:
    """Dense ``C[k, j]`` of ``sum C[k, j] X^k Y^j``."""
    terms = series.float_terms()
    size = max(max(t[0], t[1]) for t in terms) + 1
    mat = np.zeros((size, size))
    for k, j, c in terms:
        mat[k, j] = c
    return mat


def _differentiate(mat: np.ndarray, axis: int) -> np.ndarray:
    n = mat.shape[axis]
    weights = np.arange(n, dtype=float)
    out = np.moveaxis(mat, axis, 0) * weights[:, None]
    out = np.concatenate([out[1:], np.zeros_like(out[:1])])
    return np.moveaxis(out, 0, axis)


def _horner2(mat: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    inner = np.zeros((mat.shape[0],) + X.shape)
    for j in range(mat.shape[1] - 1, -1, -1):
        inner = inner * Y + mat[:, j].reshape((-1,) + (1,) * X.ndim)
    out = np.zeros(X.shape)
    for k in range(mat.shape[0] - 1, -1, -1):
        out = out * X + inner[k]
    return out


def _horner2_scalar(rows: list[list[float]], X: float, Y: float) -> float:
    out = 0.0
    for row in reversed(rows):
        inner = 0.0
        for c in reversed(row):
            inner = inner * Y + c
        out = out * X + inner
    return out


@dataclass
class LocalJet:
    """``alpha`` and its first and second derivatives at local points."""

    a: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    axx: np.ndarray | None
    axy: np.ndarray | None
    ayy: np.ndarray | None


class GavrilovField:
    """The field for one ``FieldConfig``, optionally rescaled by ``(lam, mu)``.

    Rescaling acts as ``U -> mu U(x / lam)``, ``P -> mu^2 P(x / lam)``, with
    ``eps -> mu^2 eps``, ``delta -> lam delta``, ``tau -> mu^2 tau``.
    """

    def __init__(
        self,
        config: FieldConfig | None = None,
        tables: DerivedTables | None = None,
        lam: float = 1.0,
        mu: float = 1.0,
    ) -> None:
        self.config = config or FieldConfig()
        self.tables = tables or derive_tables(self.config.order)
        if not (lam > 0 and mu > 0):
            raise ConfigurationError("rescaling parameters must be positive")
        self.lam = float(lam)
        self.mu = float(mu)
        a = _coefficient_matrix(self.tables.alpha)
        ax, ay = _differentiate(a, 0), _differentiate(a, 1)
        self._mats = {
            "a": a, "ax": ax, "ay": ay,
            "axx": _differentiate(ax, 0), "axy": _differentiate(ax, 1), "ayy": _differentiate(ay, 1),
        }
        self._rows = {name: mat.tolist() for name, mat in self._mats.items()}
        self._H = np.array(self.tables.H.float_coefficients())
        R = self.config.R
        delta1 = self.config.delta / R
        min_p1 = self._annulus_min_pressure(delta1)
        if min_p1 <= 0:
            raise ConfigurationError(
                f"alpha is not positive on the annulus for delta/R = {delta1}; use a smaller delta"
            )
        tau1 = TAU_SAFETY * min_p1 if self.config.tau is None else self.config.tau / R**4
        if not 0 < tau1 < min_p1:
            raise ConfigurationError(
                f"tau must lie in (0, {min_p1 * R**4:.6g}), the minimum pressure on the annulus"
            )
        eps1 = tau1 / 3 if self.config.epsilon is None else self.config.epsilon / R**4
        if not 0 < 3 * eps1 <= tau1 * (1 + 1e-12):
            raise ConfigurationError("need 0 < 3 epsilon <= tau")
        self._delta1, self._tau1, self._eps1, self._min_p1 = delta1, tau1, eps1, min_p1

    # -- parameters in the field's own units

    @property
    def radius(self) -> float:
        """Radius of the core circle."""
        return self.lam * self.config.R

    @property
    def delta(self) -> float:
        return self.lam * self.config.R * self._delta1

    @property
    def tau(self) -> float:
        return self.mu**2 * self.config.R**4 * self._tau1

    @property
    def epsilon(self) -> float:
        return self.mu**2 * self.config.R**4 * self._eps1

    @property
    def is_normalized(self) -> bool:
        return self.config.R == 1.0 and self.lam == 1.0 and self.mu == 1.0

    def rescaled(self, lam: float, mu: float) -> GavrilovField:
        return GavrilovField(self.config, self.tables, self.lam * lam, self.mu * mu)

    def with_config(self, **changes) -> GavrilovField:
        return GavrilovField(replace(self.config, **changes), None, self.lam, self.mu)

    # -- local polynomial evaluation (unit circle variables)

    def _alpha(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        return _horner2(self._mats["a"], X, Y)

    def _jet(self, X: np.ndarray, Y: np.ndarray, second: bool = True) -> LocalJet:
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        names = ("a", "ax", "ay", "axx", "axy", "ayy") if second else ("a", "ax", "ay")
        values = [_horner2(self._mats[n], X, Y) for n in names]
        return LocalJet(*values, *([None] * (6 - len(values))))

    def alpha_with_gradient(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, ...]:
        """``alpha``, ``d_x alpha``, ``d_y alpha`` at local variables ``(x - 1, y)``."""
        jet = self._jet(X, Y, second=False)
        return jet.a, jet.ax, jet.ay

    def H(self, s: np.ndarray | float) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c in self._H[::-1]:
            out = out * s + c
        return out

    def H_prime(self, s: np.ndarray | float) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k in range(len(self._H) - 1, 0, -1):
            out = out * s + k * self._H[k]
        return out

    def sqrt_H(self, s: np.ndarray | float) -> np.ndarray:
        h = np.asarray(self.H(s), dtype=float)
        if np.any(h < -H_CLAMP):
            raise NumericDomainError(
                "H(alpha) is negative: the point is outside the truncation domain; use a smaller delta"
            )
        return np.sqrt(np.maximum(h, 0.0))

    def _annulus_min_pressure(self, delta1: float) -> float:
        r = np.linspace(delta1 / 4, delta1, ANNULUS_GRID, endpoint=False)
        th = np.linspace(0.0, 2 * np.pi, ANNULUS_GRID, endpoint=False)
        rr, tt = np.meshgrid(r, th)
        return float(np.min(self._alpha(rr * np.sin(tt), rr * np.cos(tt)))) / 4

    @property
    def annulus_min_pressure(self) -> float:
        return self.mu**2 * self.config.R**4 * self._min_p1

    # -- coordinates

    def _unit_coordinates(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        """Cylindrical ``(rho, phi, z)`` of ``points / lam``."""
        p = np.asarray(points, dtype=float) / self.lam
        rho = np.hypot(p[..., 0], p[..., 1])
        phi = np.arctan2(p[..., 1], p[..., 0])
        return rho, phi, p[..., 2]

    def in_tube(self, points: np.ndarray) -> np.ndarray:
        rho, _, z = self._unit_coordinates(points)
        R = self.config.R
        return (rho - R) ** 2 + z**2 < (R * self._delta1) ** 2

    # -- raw field in cylindrical components (before the (lam, mu) scaling)

    def _raw_cylindrical(self, rho: np.ndarray, z: np.ndarray) -> dict[str, np.ndarray]:
        R = self.config.R
        jet = self._jet(rho / R - 1.0, z / R)
        p = R**4 * jet.a / 4
        p_rho, p_z = R**3 * jet.ax / 4, R**3 * jet.ay / 4
        sH = self.sqrt_H(jet.a)
        b = R**3 * sH / 4
        return {
            "p": p,
            "p_rho": p_rho,
            "p_z": p_z,
            "p_rr": R**2 * jet.axx / 4,
            "p_rz": R**2 * jet.axy / 4,
            "p_zz": R**2 * jet.ayy / 4,
            "b": b,
            "sH": sH,
            "a": jet.a,
            "ax": jet.ax,
            "ay": jet.ay,
            "u_rho": p_z / rho,
            "u_phi": b / rho,
            "u_z": -p_rho / rho,
        }

    # -- public evaluation

    def pressure(self, points: np.ndarray) -> np.ndarray:
        """Raw pressure ``P``; defined on the tube."""
        rho, _, z = self._unit_coordinates(points)
        R = self.config.R
        return self.mu**2 * R**4 * self._alpha(rho / R - 1.0, z / R) / 4

    def velocity_raw(self, points: np.ndarray) -> np.ndarray:
        """Raw velocity ``U`` in Cartesian components."""
        pts = np.asarray(points, dtype=float)
        if not np.all(self.in_tube(pts)):
            raise NumericDomainError("point outside the tube where the field is defined")
        rho, phi, z = self._unit_coordinates(pts)
        f = self._raw_cylindrical(rho, z)
        return self.mu * _to_cartesian(f["u_rho"], f["u_phi"], f["u_z"], phi)

    def cutoff(self, s: np.ndarray | float) -> np.ndarray | float:
        return self.config.cutoff_sign * bump(s, self.epsilon)

    def velocity_cut(self, points: np.ndarray) -> np.ndarray:
        """Cut-off velocity ``omega(P) U``; zero outside the tube."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 3)
        out = np.zeros_like(flat)
        idx = np.flatnonzero(self.in_tube(flat))
        if idx.size:
            w = np.asarray(self.cutoff(self.pressure(flat[idx])))
            idx, w = idx[w != 0], w[w != 0]
        if idx.size:
            rho, phi, z = self._unit_coordinates(flat[idx])
            f = self._raw_cylindrical(rho, z)
            vel = _to_cartesian(f["u_rho"], f["u_phi"], f["u_z"], phi)
            out[idx] = self.mu * w[:, None] * vel
        return out.reshape(pts.shape)

    def point_velocity_cut(self, x: float, y: float, z: float) -> tuple[float, float, float]:
        """``velocity_cut`` at one point in plain floats, for ODE right-hand sides."""
        lam, R = self.lam, self.config.R
        rho = math.hypot(x, y)
        X = rho / (lam * R) - 1.0
        Y = z / (lam * R)
        if X * X + Y * Y >= self._delta1 * self._delta1 or rho == 0.0:
            return 0.0, 0.0, 0.0
        a, ax, ay = (_horner2_scalar(self._rows[n], X, Y) for n in ("a", "ax", "ay"))
        eps = self.epsilon
        P = self.mu**2 * R**4 * a / 4
        if not eps < P < 2 * eps:
            return 0.0, 0.0, 0.0
        w = self.config.cutoff_sign * math.exp(4.0 - eps * eps / ((P - eps) * (2 * eps - P)))
        h = 0.0
        for c in self._H[::-1]:
            h = h * a + c
        if h < -H_CLAMP:
            raise NumericDomainError(
                "H(alpha) is negative: the point is outside the truncation domain; use a smaller delta"
            )
        rho1 = rho / lam
        scale = self.mu * w * R**3 / (4 * rho1)
        u_rho, u_phi, u_z = scale * ay, scale * math.sqrt(max(h, 0.0)), -scale * ax
        c, s = x / rho, y / rho
        return u_rho * c - u_phi * s, u_rho * s + u_phi * c, u_z

    def pressure_cut(self, points: np.ndarray) -> np.ndarray | float:
        """Cut-off pressure ``W(P)``; equal to ``W(2 eps)`` outside the tube."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 3)
        out = np.full(len(flat), bump_primitive(2 * self.epsilon, self.epsilon))
        inside = self.in_tube(flat)
        if np.any(inside):
            out[inside] = bump_primitive(self.pressure(flat[inside]), self.epsilon)
        out = out.reshape(pts.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def euler_residual(self, points: np.ndarray) -> dict[str, np.ndarray]:
        """Residuals of the raw steady Euler system in cylindrical form.

        ``div``, ``transport`` (``U . grad P``) and the three momentum
        components, all with derivatives taken analytically on the polynomial.
        """
        pts = np.asarray(points, dtype=float)
        rho, _, z = self._unit_coordinates(pts)
        R = self.config.R
        f = self._raw_cylindrical(rho, z)
        ur, uf, uz = f["u_rho"], f["u_phi"], f["u_z"]
        p_r, p_z, b = f["p_rho"], f["p_z"], f["b"]
        safe = np.where(f["sH"] > 0, f["sH"], np.inf)
        dH = self.H_prime(f["a"])
        b_r = R**2 * dH * f["ax"] / (8 * safe)
        b_z = R**2 * dH * f["ay"] / (8 * safe)
        dur_r = f["p_rz"] / rho - p_z / rho**2
        dur_z = f["p_zz"] / rho
        duz_r = -f["p_rr"] / rho + p_r / rho**2
        duz_z = -f["p_rz"] / rho
        duf_r = b_r / rho - b / rho**2
        duf_z = b_z / rho
        mom_rho = ur * dur_r + uz * dur_z - uf**2 / rho + p_r
        mom_phi = ur * duf_r + uz * duf_z + ur * uf / rho
        mom_z = ur * duz_r + uz * duz_z + p_z
        # (lam, mu) scaling: velocities by mu, lengths by lam
        s_acc = self.mu**2 / self.lam
        return {
            "div": (ur / rho + dur_r + duz_z) * self.mu / self.lam,
            "transport": (ur * p_r + uz * p_z) * self.mu**3 / self.lam,
            "rho": mom_rho * s_acc,
            "phi": mom_phi * s_acc,
            "z": mom_z * s_acc,
        }

    def sample_shell(self, count: int, seed: int) -> np.ndarray:
        """Seeded points with ``0 < P < tau``, drawn in the annulus of radius ``delta / 4``."""
        rng = np.random.default_rng(seed)
        out = []
        R = self.config.R
        while len(out) < count:
            r = R * self._delta1 / 4 * np.sqrt(rng.uniform(0, 1, 4 * count))
            th = rng.uniform(0, 2 * np.pi, 4 * count)
            ph = rng.uniform(-np.pi, np.pi, 4 * count)
            rho = R + r * np.sin(th)
            z = r * np.cos(th)
            pts = self.lam * np.stack([rho * np.cos(ph), rho * np.sin(ph), z], axis=-1)
            P = self.pressure(pts)
            keep = (P > 0) & (P < self.tau) & (r > 0)
            out.extend(pts[keep])
        return np.array(out[:count])

    def describe(self) -> dict[str, float]:
        return {
            "R": self.radius,
            "delta": self.delta,
            "tau": self.tau,
            "epsilon": self.epsilon,
            "annulus_min_pressure": self.annulus_min_pressure,
            "order": self.config.order,
            "lam": self.lam,
            "mu": self.mu,
        }


def _to_cartesian(ur, uf, uz, phi) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([ur * c - uf * s, ur * s + uf * c, np.broadcast_to(uz, np.shape(ur))], axis=-1)


@dataclass(frozen=True)
class RescaleParams:
    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not (self.lam > 0 and self.mu > 0):
            raise ConfigurationError("rescaling parameters must be positive")

    def compose(self, other: RescaleParams) -> RescaleParams:
        """``A(self) A(other) = A(self.lam * other.lam, self.mu * other.mu)``."""
        return RescaleParams(self.lam * other.lam, self.mu * other.mu)


def field_rescale(params: RescaleParams, fld: GavrilovField) -> GavrilovField:
    return fld.rescaled(params.lam, params.mu)

