"""Numerical action-angle chart of the cut-off field on a unit-radius core circle.

Coordinates, from the outside in:

* ``(rho, phi, z)`` cylindrical; ``zhat = rho z`` straightens the level sets,
  so that ``alpha2(rho, zhat) = alpha(rho, zhat / rho)`` is four times the
  pressure;
* ``(theta, phi, xi)`` with ``rho = 1 + r sin(theta)``, ``zhat = r cos(theta)``,
  ``xi = r^2 / 2``; the level curve ``alpha3 = c`` is ``xi = gamma(theta)``;
* ``(sigma, beta, I)`` with action ``I = <gamma>`` and angles in which the flow
  is linear: ``sigma' = omega1(I)``, ``beta' = omega2(I)``.

With ``chi(c) = omega(c / 4) / 4`` the frequencies are ``omega1 = chi(c) h'(I)``
and ``omega2 = chi(c) Q0`` at ``c = h(I)``, the inverse of the action map.
All period integrals use composite Gauss-Legendre rules with 16 panels of
64 nodes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConvergenceError, NoMotionError, NumericDomainError
from .field import GavrilovField, bump

TWO_PI = 2.0 * math.pi
PANELS = 16
NODES = 64
NEWTON_TOL = 1e-14
NEWTON_MAXIT = 50
CACHE_QUANTUM = 1e-12
CACHE_LIMIT = 512

_GL_X, _GL_W = np.polynomial.legendre.leggauss(NODES)


def reduce_angle(a: np.ndarray | float) -> np.ndarray | float:
    """Representative in ``[0, 2 pi)``."""
    out = np.mod(a, TWO_PI)
    out = np.where(out >= TWO_PI, 0.0, out)
    return _as_output(out)


def angle_distance(a: np.ndarray | float, b: np.ndarray | float) -> np.ndarray | float:
    """Circle metric ``min(|a - b|, 2 pi - |a - b|)``."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return _as_output(np.minimum(d, TWO_PI - d))


def _as_output(a: np.ndarray) -> np.ndarray | float:
    return float(a) if np.ndim(a) == 0 else np.asarray(a)


_ARC_X, _ARC_W = np.polynomial.legendre.leggauss(8)


def _arc_integral(fn, start: float, length: float) -> float:
    """``int_start^{start + length} fn`` for a short arc."""
    half = length / 2
    return float(np.asarray(fn(start + half + half * _ARC_X)) @ _ARC_W * half)


class PeriodicPrimitive:
    """``x -> int_0^x f`` for a smooth ``2 pi``-periodic vectorised ``f``."""

    def __init__(self, f) -> None:
        self.f = f
        self.edges = np.linspace(0.0, TWO_PI, PANELS + 1)
        half = (self.edges[1] - self.edges[0]) / 2
        mids = (self.edges[:-1] + self.edges[1:]) / 2
        nodes = mids[:, None] + half * _GL_X[None, :]
        sums = (np.asarray(f(nodes.ravel())).reshape(PANELS, NODES) @ _GL_W) * half
        self.cumulative = np.concatenate([[0.0], np.cumsum(sums)])
        self.total = float(self.cumulative[-1])

    def __call__(self, x: np.ndarray | float) -> np.ndarray | float:
        x_arr = np.asarray(x, dtype=float)
        flat = x_arr.ravel()
        turns = np.floor(flat / TWO_PI)
        rem = flat - turns * TWO_PI
        panel = np.clip((rem / (TWO_PI / PANELS)).astype(int), 0, PANELS - 1)
        start = self.edges[panel]
        half = (rem - start) / 2
        nodes = (start + half)[:, None] + half[:, None] * _GL_X[None, :]
        values = np.asarray(self.f(nodes.ravel())).reshape(len(flat), NODES)
        partial = (values @ _GL_W) * half
        out = (turns * self.total + self.cumulative[panel] + partial).reshape(x_arr.shape)
        return _as_output(out)

    def mean(self) -> float:
        return self.total / TWO_PI


class LevelCurve:
    """The closed curve ``alpha3(theta, xi) = c`` as a graph ``xi = gamma(theta)``."""

    def __init__(self, chart: Chart, c: float) -> None:
        if not c > 0:
            raise NumericDomainError(f"level c = {c} must be positive")
        self.chart = chart
        self.c = float(c)

    def _solve(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # one polishing step after the residual test passes
        xi = np.full(theta.shape, self.c / 4)
        polished = False
        # iterates leaving xi > 0 turn into nan and are rejected below
        with np.errstate(invalid="ignore"):
            for _ in range(NEWTON_MAXIT):
                a, a_xi, _ = self.chart.alpha3(theta, xi)
                done = bool(np.all(np.abs(a - self.c) <= NEWTON_TOL))
                xi = xi - (a - self.c) / a_xi
                if done:
                    polished = True
                    break
        if not polished or np.any(~(xi > 0)):
            raise ConvergenceError(f"level curve Newton did not converge at c = {self.c}")
        a, a_xi, _ = self.chart.alpha3(theta, xi)
        return xi, a_xi

    def gamma(self, theta: np.ndarray | float) -> np.ndarray | float:
        """``gamma(theta)`` by Newton iteration from ``xi = c / 4``."""
        return _as_output(self._solve(np.asarray(theta, dtype=float))[0])

    def dgamma_dc(self, theta: np.ndarray | float) -> np.ndarray | float:
        """``d gamma / d c = 1 / d_xi alpha3`` on the curve."""
        return _as_output(1.0 / self._solve(np.asarray(theta, dtype=float))[1])

    def angular_density(self, theta: np.ndarray | float) -> np.ndarray | float:
        """``(d gamma / d c) / (1 + sqrt(2 gamma) sin(theta))^2``."""
        th = np.asarray(theta, dtype=float)
        xi, a_xi = self._solve(th)
        return _as_output(1.0 / (a_xi * (1.0 + np.sqrt(2 * xi) * np.sin(th)) ** 2))

    def residual(self, theta: np.ndarray) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        return self.chart.alpha3(th, self._solve(th)[0])[0] - self.c


class ActionChart:
    """Angle and action data on one level: the ``theta <-> sigma`` circle maps,
    the action ``I``, the mean angular rate ``Q0`` and the phase correction ``eta``.
    """

    def __init__(self, level: LevelCurve) -> None:
        self.level = level
        self.c = level.c
        self._dgamma = PeriodicPrimitive(level.dgamma_dc)
        self.Fc2pi = self._dgamma.total
        self.I = PeriodicPrimitive(level.gamma).mean()
        self.h_prime = TWO_PI / self.Fc2pi
        self.sqrt_H = float(level.chart.field.sqrt_H(self.c))

    @cached_property
    def _angular(self) -> PeriodicPrimitive:
        return PeriodicPrimitive(self.level.angular_density)

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        table_th = np.linspace(0.0, TWO_PI, 257)
        return np.asarray(self.f(table_th)), table_th

    @property
    def J(self) -> float:
        """Mean of the angular density."""
        return self._angular.mean()

    @property
    def ratio(self) -> float:
        """Frequency ratio ``omega2 / omega1 = sqrt(H(c)) J``."""
        return self.sqrt_H * self.J

    @property
    def Q0(self) -> float:
        """Mean angular rate ``h' sqrt(H(c)) J``."""
        return self.h_prime * self.ratio

    def F(self, theta: np.ndarray | float) -> np.ndarray | float:
        """``int_0^theta d gamma / d c``."""
        return self._dgamma(theta)

    def f(self, theta: np.ndarray | float) -> np.ndarray | float:
        """Circle map ``theta -> sigma``."""
        return _as_output(TWO_PI * np.asarray(self._dgamma(theta)) / self.Fc2pi)

    def g(self, sigma: np.ndarray | float) -> np.ndarray | float:
        """Circle map ``sigma -> theta``, the inverse of ``f``."""
        s = np.asarray(sigma, dtype=float)
        turns = np.floor(s / TWO_PI)
        rem = s - turns * TWO_PI
        table_f, table_th = self._table
        th = np.interp(rem, table_f, table_th)
        for _ in range(NEWTON_MAXIT):
            slope = self.h_prime * np.asarray(self.level.dgamma_dc(th))
            step = (np.asarray(self.f(th)) - rem) / slope
            th = th - step
            if np.all(np.abs(step) <= 1e-14):
                break
        else:
            raise ConvergenceError(f"angle inversion did not converge at c = {self.c}")
        return _as_output(th + turns * TWO_PI)

    def angular_rate(self, sigma: np.ndarray | float) -> np.ndarray | float:
        """``sqrt(H(c)) / (1 + sqrt(2 gamma) sin(theta))^2`` at ``theta = g(sigma)``."""
        th = np.asarray(self.g(sigma))
        xi = np.asarray(self.level.gamma(th))
        return _as_output(self.sqrt_H / (1.0 + np.sqrt(2 * xi) * np.sin(th)) ** 2)

    def eta(self, sigma: np.ndarray | float) -> np.ndarray | float:
        """``(1 / h') int_0^sigma (angular_rate - Q0)``, integrated in ``theta``."""
        s = np.asarray(sigma, dtype=float)
        inner = np.asarray(self._angular(np.asarray(self.g(s))))
        return _as_output(self.sqrt_H * (inner - self.J * s))

    def g_increment(self, sigma: float, dsigma: float) -> float:
        """``g(sigma + dsigma) - g(sigma)`` for a short step, by Newton on the
        integral of ``d gamma / d c`` over the arc itself rather than a
        difference of two full primitives."""
        th = float(self.g(sigma))
        step = dsigma / (self.h_prime * float(self.level.dgamma_dc(th)))
        for _ in range(NEWTON_MAXIT):
            arc = self.h_prime * _arc_integral(self.level.dgamma_dc, th, step)
            correction = (arc - dsigma) / (self.h_prime * float(self.level.dgamma_dc(th + step)))
            step -= correction
            if abs(correction) <= 1e-15 * abs(step) or correction == 0:
                return step
        raise ConvergenceError(f"angle increment did not converge at c = {self.c}")

    def eta_increment(self, sigma: float, dsigma: float) -> float:
        """``eta(sigma + dsigma) - eta(sigma)`` for a short step, integrated over the arc."""
        th = float(self.g(sigma))
        arc = _arc_integral(self.level.angular_density, th, self.g_increment(sigma, dsigma))
        return self.sqrt_H * (arc - self.J * dsigma)

    def eta_by_sigma_quadrature(self, sigma: np.ndarray | float) -> np.ndarray | float:
        """Reference for ``eta``: quadrature directly in ``sigma`` through ``g``."""
        prim = PeriodicPrimitive(lambda s: np.asarray(self.angular_rate(s)) - self.Q0)
        return _as_output(np.asarray(prim(sigma)) / self.h_prime)

    def Q0_by_sigma_quadrature(self) -> float:
        """Reference for ``Q0``: the ``sigma``-average of the angular rate."""
        return PeriodicPrimitive(self.angular_rate).mean()

    def summary(self) -> dict[str, float]:
        return {"c": self.c, "Fc2pi": self.Fc2pi, "I": self.I, "Q0": self.Q0,
                "h_prime": self.h_prime, "J": self.J, "ratio": self.ratio}


@dataclass(frozen=True)
class ChartPoint:
    """``(sigma, beta, action)`` with angles reduced to ``[0, 2 pi)``."""

    sigma: float
    beta: float
    action: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", reduce_angle(float(self.sigma)))
        object.__setattr__(self, "beta", reduce_angle(float(self.beta)))


@dataclass(frozen=True)
class Frequencies:
    action: float
    level: float
    omega1: float
    omega2: float
    ratio: float

    def as_dict(self) -> dict[str, float]:
        return {"I": self.action, "c": self.level, "omega1": self.omega1,
                "omega2": self.omega2, "ratio": self.ratio}


class Chart:
    """Action-angle chart for a normalised field (core radius 1, no rescaling).

    ``unit_chi`` replaces the cut-off factor by 1, which leaves the frequency
    ratio unchanged and keeps both frequencies nonzero for every action.
    Charts are cached on a ``1e-12`` grid in ``c``.
    """

    def __init__(self, field: GavrilovField | None = None, unit_chi: bool = False) -> None:
        field = field or GavrilovField()
        if not field.is_normalized:
            raise NumericDomainError("the chart is built for the unit-radius, unscaled field")
        self.field = field
        self.unit_chi = unit_chi
        self._charts: dict[int, ActionChart] = {}
        self._levels_of_action: dict[float, float] = {}
        self._lock = threading.Lock()

    def with_unit_chi(self) -> Chart:
        """Same chart, sharing caches, with the cut-off factor replaced by 1."""
        other = Chart(self.field, unit_chi=True)
        other._charts, other._levels_of_action, other._lock = (
            self._charts, self._levels_of_action, self._lock)
        return other

    # -- pressure profile in polar variables

    def alpha3(self, theta: np.ndarray, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``alpha3``, ``d_xi alpha3`` and ``d_theta alpha3`` at ``(theta, xi)``."""
        r = np.sqrt(2 * xi)
        s, co = np.sin(theta), np.cos(theta)
        rho = 1.0 + r * s
        zhat = r * co
        a, ax, ay = self.field.alpha_with_gradient(rho - 1.0, zhat / rho)
        d_rho = ax - ay * zhat / rho**2
        d_zhat = ay / rho
        a_xi = (d_rho * s + d_zhat * co) / r
        a_th = r * (d_rho * co - d_zhat * s)
        return a, a_xi, a_th

    def chi(self, c: np.ndarray | float) -> np.ndarray | float:
        """Cut-off factor ``omega(c / 4) / 4`` in the level variable, or 1 under the hook."""
        c_arr = np.asarray(c, dtype=float)
        if self.unit_chi:
            return _as_output(np.ones_like(c_arr))
        sign = self.field.config.cutoff_sign
        return _as_output(sign * np.asarray(bump(c_arr / 4, self.field.epsilon)) / 4)

    # -- levels and charts

    def level_curve(self, c: float) -> LevelCurve:
        return LevelCurve(self, c)

    def action_chart(self, c: float) -> ActionChart:
        key = round(float(c) / CACHE_QUANTUM)
        with self._lock:
            chart = self._charts.get(key)
        if chart is not None:
            return chart
        chart = ActionChart(LevelCurve(self, c))
        with self._lock:
            if len(self._charts) >= CACHE_LIMIT:
                self._charts.clear()
            return self._charts.setdefault(key, chart)

    def action(self, c: float) -> float:
        """Action of the level ``c``: the mean of ``gamma``."""
        return self.action_chart(c).I

    @cached_property
    def I_star(self) -> float:
        """Action of the level ``c = 4 tau``, the edge of the chart domain."""
        return self.action(4 * self.field.tau)

    def level_of_action(self, I: float) -> float:
        """Level ``c`` with action ``I``, by Newton iteration from ``4 I``."""
        if not I > 0:
            raise NumericDomainError(f"action I = {I} must be positive")
        key = float(I)
        with self._lock:
            cached = self._levels_of_action.get(key)
        if cached is not None:
            return cached
        c = 4 * key
        for _ in range(NEWTON_MAXIT):
            chart = ActionChart(LevelCurve(self, c))
            step = (chart.I - key) * chart.h_prime
            c = c - step
            # quadratic convergence: the step after this one is below roundoff
            if abs(step) <= 1e-12 * c:
                break
        else:
            raise ConvergenceError(f"action inversion did not converge at I = {I}")
        with self._lock:
            if len(self._levels_of_action) >= CACHE_LIMIT:
                self._levels_of_action.clear()
            self._levels_of_action[key] = c
        return c

    def chart_of_action(self, I: float) -> ActionChart:
        return self.action_chart(self.level_of_action(I))

    def period_Tc(self, c: float) -> float:
        """Time for ``theta`` to advance by ``2 pi`` on the level ``c``."""
        chi = float(self.chi(c))
        if chi == 0:
            raise NoMotionError(f"the cut-off vanishes at level c = {c}: the orbit does not move")
        return self.action_chart(c).Fc2pi / abs(chi)

    def frequencies(self, I: float) -> Frequencies:
        c = self.level_of_action(I)
        chart = self.action_chart(c)
        chi = float(self.chi(c))
        return Frequencies(action=I, level=c, omega1=chi * chart.h_prime,
                           omega2=chi * chart.Q0, ratio=chart.ratio)

    # -- the chart and its inverse

    def _check_action(self, I: float) -> None:
        if not 0 < I < self.I_star:
            raise NumericDomainError(f"action {I} outside (0, I*) = (0, {self.I_star:.6g})")

    def forward(self, sigma, beta, I: float) -> np.ndarray:
        """Cartesian points for arrays of angles on the torus of action ``I``."""
        self._check_action(I)
        chart = self.chart_of_action(I)
        sigma = np.asarray(sigma, dtype=float)
        beta = np.asarray(beta, dtype=float)
        th = np.asarray(chart.g(sigma))
        r = np.sqrt(2 * np.asarray(chart.level.gamma(th)))
        rho = 1.0 + r * np.sin(th)
        z = r * np.cos(th) / rho
        phi = beta + np.asarray(chart.eta(sigma))
        x, y, z = np.broadcast_arrays(rho * np.cos(phi), rho * np.sin(phi), z)
        return np.stack([x, y, z], axis=-1)

    def chart_forward(self, point: ChartPoint) -> np.ndarray:
        return self.forward(point.sigma, point.beta, point.action)

    def chart_inverse(self, point) -> ChartPoint:
        """``(sigma, beta, action)`` of one Cartesian point with ``0 < P < tau``."""
        x, y, z = (float(v) for v in point)
        P = float(self.field.pressure(np.array([x, y, z])))
        if not 0 < P < self.field.tau:
            raise NumericDomainError(f"pressure {P:.6g} outside (0, tau) = (0, {self.field.tau:.6g})")
        rho = math.hypot(x, y)
        theta = math.atan2(rho - 1.0, z * rho) % TWO_PI
        chart = self.action_chart(4 * P)
        sigma = float(chart.f(theta))
        beta = math.atan2(y, x) - float(chart.eta(sigma))
        return ChartPoint(sigma=sigma, beta=beta, action=chart.I)
