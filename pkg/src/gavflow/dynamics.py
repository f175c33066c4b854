"""Particle paths of the cut-off field and the instruments that measure them.

Integration is adaptive Runge-Kutta 5(4) with dense output. The section used
for return maps is the half-plane ``{z = 0, rho > 1}`` crossed in the direction
of the flow (``z`` decreasing for the default cut-off sign).

The transformed systems follow the chart coordinates stage by stage:

====== ====================== ==========================================
stage  coordinates            map to the previous stage
====== ====================== ==========================================
0      ``(x, y, z)``           --
1      ``(rho, phi, z)``       cylindrical to Cartesian
2      ``(rho, phi, zhat)``    ``z = zhat / rho``
3      ``(theta, phi, xi)``    symplectic polar coordinates
4      ``(sigma, phi, I)``     ``theta = g(sigma)``, ``xi = gamma(theta)``
5      ``(sigma, beta, I)``    ``phi = beta + eta(sigma)``
====== ====================== ==========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .chart import TWO_PI, Chart, ChartPoint, angle_distance
from .errors import ConfigurationError, IntegrationError, NumericDomainError
from .field import GavrilovField

Vector = np.ndarray
RightHandSide = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    event_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (self.rtol > 0 and self.atol > 0 and self.max_step > 0 and self.event_tol > 0):
            raise ConfigurationError("integrator tolerances and max_step must be positive")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dense: Callable[[np.ndarray], np.ndarray] = dataclass_field(repr=False)

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        """States at ``t``, shape ``(..., 3)``."""
        return np.moveaxis(np.asarray(self.dense(np.asarray(t, dtype=float))), 0, -1)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class SectionRecord:
    times: np.ndarray
    points: np.ndarray
    phis: np.ndarray

    @property
    def windings(self) -> np.ndarray:
        """Increments of the unwrapped azimuth between successive crossings."""
        return np.diff(self.phis)

    @property
    def return_times(self) -> np.ndarray:
        return np.diff(self.times)


def field_rhs(fld: GavrilovField) -> RightHandSide:
    velocity = fld.point_velocity_cut

    def rhs(_t: float, s: np.ndarray) -> np.ndarray:
        return np.array(velocity(s[0], s[1], s[2]))

    return rhs


def integrate(
    system: GavrilovField | RightHandSide,
    x0,
    t_end: float,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Adaptive solution of ``x' = V(x)`` on ``[0, t_end]`` with dense output."""
    config = config or IntegratorConfig()
    rhs = field_rhs(system) if isinstance(system, GavrilovField) else system
    if not t_end > 0:
        raise ConfigurationError("t_end must be positive")
    sol = solve_ivp(
        rhs, (0.0, float(t_end)), np.asarray(x0, dtype=float), method=config.method,
        rtol=config.rtol, atol=config.atol, max_step=config.max_step, dense_output=True,
    )
    if sol.status != 0:
        raise IntegrationError(f"integration stopped at t = {sol.t[-1]:.6g}: {sol.message}; state {sol.y[:, -1]}")
    return Trajectory(times=sol.t, states=sol.y.T, dense=sol.sol)


# ---------------------------------------------------------------- section


def poincare_section(
    traj: Trajectory,
    direction: int = -1,
    guard: float | None = None,
    event_tol: float = 1e-12,
) -> SectionRecord:
    """Crossings of ``{z = 0, rho > 1}`` with ``sign(z') = direction``.

    Sign changes on the step grid are polished by Brent's method on the dense
    output. Crossings closer than ``guard`` to the previous one are dropped;
    by default ``guard`` is ``1e-3`` of the median gap.
    """
    z = traj.states[:, 2]
    rho = np.hypot(traj.states[:, 0], traj.states[:, 1])
    if direction < 0:
        idx = np.flatnonzero((z[:-1] > 0) & (z[1:] <= 0))
    else:
        idx = np.flatnonzero((z[:-1] < 0) & (z[1:] >= 0))
    times = []
    for i in idx:
        if rho[i] <= 1.0 and rho[i + 1] <= 1.0:
            continue
        a, b = traj.times[i], traj.times[i + 1]
        t = b if traj(b)[2] == 0 else brentq(lambda s: traj(s)[2], a, b, xtol=event_tol, rtol=1e-15)
        if math.hypot(*traj(t)[:2]) > 1.0:
            times.append(t)
    times = np.array(times)
    if len(times) > 2:
        gap = guard if guard is not None else 1e-3 * float(np.median(np.diff(times)))
        keep = np.concatenate([[True], np.diff(times) > gap])
        times = times[keep]
    points = traj(times) if len(times) else np.zeros((0, 3))
    return SectionRecord(times=times, points=points, phis=_unwrapped_azimuth(traj, times))


def _unwrapped_azimuth(traj: Trajectory, times: np.ndarray) -> np.ndarray:
    if len(times) == 0:
        return np.zeros(0)
    grid = np.union1d(traj.times, times)
    states = traj(grid)
    phi = np.arctan2(states[:, 1], states[:, 0])
    jumps = np.abs(angle_distance(phi[1:], phi[:-1]))
    if np.any(jumps >= math.pi / 2):
        raise IntegrationError("azimuth changes by more than pi/2 in one step; reduce max_step")
    unwrapped = np.unwrap(phi)
    return unwrapped[np.searchsorted(grid, times)]


# ---------------------------------------------------------------- conjugacy


@dataclass(frozen=True)
class ConjugacyReport:
    start: ChartPoint
    omega1: float
    omega2: float
    times: np.ndarray
    deviations: np.ndarray
    action_drift: float

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations))

    def as_dict(self) -> dict:
        return {
            "sigma0": self.start.sigma, "beta0": self.start.beta, "I0": self.start.action,
            "omega1": self.omega1, "omega2": self.omega2, "t_end": float(self.times[-1]),
            "samples": len(self.times), "max_deviation": self.max_deviation,
            "action_drift": self.action_drift,
        }


def linear_orbit(chart: Chart, start: ChartPoint, times: np.ndarray) -> np.ndarray:
    """``Phi(sigma0 + omega1 t, beta0 + omega2 t, I0)``."""
    fr = chart.frequencies(start.action)
    t = np.asarray(times, dtype=float)
    return chart.forward(start.sigma + fr.omega1 * t, start.beta + fr.omega2 * t, start.action)


def conjugacy_check(
    chart: Chart,
    x0,
    t_samples,
    config: IntegratorConfig | None = None,
    action_samples: int = 16,
) -> ConjugacyReport:
    """Integrated orbit of the cut-off field against the linear flow in the chart."""
    if chart.unit_chi:
        raise ConfigurationError("the conjugacy is checked against the real cut-off field")
    x0 = np.asarray(x0, dtype=float)
    start = chart.chart_inverse(x0)
    fr = chart.frequencies(start.action)
    t = np.asarray(t_samples, dtype=float)
    closed = linear_orbit(chart, start, t)
    if t.max() > 0:
        traj = integrate(chart.field, x0, float(t.max()), config)
        numeric = traj(t)
    else:
        numeric = np.broadcast_to(x0, closed.shape)
    deviations = np.linalg.norm(numeric - closed, axis=-1)
    picks = numeric[np.linspace(0, len(t) - 1, min(action_samples, len(t))).astype(int)]
    P = chart.field.pressure(picks)
    drift = max(abs(chart.action(4 * p) - start.action) for p in np.atleast_1d(P))
    return ConjugacyReport(start, fr.omega1, fr.omega2, t, deviations, float(drift))


# ---------------------------------------------------------------- transformed systems


STAGES = range(6)


def _cut_factor(chart: Chart, P: float) -> float:
    """``omega(P)``, or the constant matching the unit hook ``chi = 1``."""
    return 4.0 * float(chart.chi(4.0 * P))


def _alpha2_gradient(chart: Chart, rho: float, zhat: float) -> tuple[float, float, float]:
    a, ax, ay = chart.field.alpha_with_gradient(np.array(rho - 1.0), np.array(zhat / rho))
    return float(a), float(ax - ay * zhat / rho**2), float(ay / rho)


def transformed_field(chart: Chart, stage: int) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of the particle ODE in the stage coordinates."""
    fld = chart.field
    if stage not in STAGES:
        raise ConfigurationError(f"stage must be one of 0..5, got {stage}")

    if stage == 0:
        def v0(v: np.ndarray) -> np.ndarray:
            x, y, z = v
            P = float(fld.pressure(np.array([x, y, z])))
            w = _cut_factor(chart, P)
            if w == 0 or not fld.in_tube(np.array([x, y, z])):
                return np.zeros(3)
            return w * fld.velocity_raw(np.array([x, y, z]))
        return v0

    if stage == 1:
        def v1(v: np.ndarray) -> np.ndarray:
            rho, _, z = v
            f = fld._raw_cylindrical(np.array(rho), np.array(z))
            w = _cut_factor(chart, float(f["p"]))
            return w * np.array([float(f["u_rho"]), float(f["u_phi"]) / rho, float(f["u_z"])])
        return v1

    if stage == 2:
        def v2(v: np.ndarray) -> np.ndarray:
            rho, _, zhat = v
            a, a_rho, a_zhat = _alpha2_gradient(chart, rho, zhat)
            chi = float(chart.chi(a))
            return chi * np.array([a_zhat, float(fld.sqrt_H(a)) / rho**2, -a_rho])
        return v2

    if stage == 3:
        def v3(v: np.ndarray) -> np.ndarray:
            theta, _, xi = v
            a, a_xi, a_th = (float(q) for q in chart.alpha3(np.array(theta), np.array(xi)))
            rho = 1.0 + math.sqrt(2 * xi) * math.sin(theta)
            chi = float(chart.chi(a))
            return chi * np.array([a_xi, float(fld.sqrt_H(a)) / rho**2, -a_th])
        return v3

    if stage == 4:
        def v4(v: np.ndarray) -> np.ndarray:
            sigma, _, I = v
            ac = chart.chart_of_action(I)
            chi = float(chart.chi(ac.c))
            th = float(ac.g(sigma))
            rho = 1.0 + math.sqrt(2 * float(ac.level.gamma(th))) * math.sin(th)
            return np.array([chi * ac.h_prime, chi * ac.sqrt_H / rho**2, 0.0])
        return v4

    def v5(v: np.ndarray) -> np.ndarray:
        fr = chart.frequencies(v[2])
        return np.array([fr.omega1, fr.omega2, 0.0])
    return v5


def stage_map(chart: Chart, stage: int) -> Callable[[np.ndarray], np.ndarray]:
    """Map from the coordinates of ``stage`` to those of ``stage - 1``."""
    if stage == 1:
        return lambda v: np.array([v[0] * math.cos(v[1]), v[0] * math.sin(v[1]), v[2]])
    if stage == 2:
        return lambda v: np.array([v[0], v[1], v[2] / v[0]])
    if stage == 3:
        def phi3(v: np.ndarray) -> np.ndarray:
            r = math.sqrt(2 * v[2])
            return np.array([1.0 + r * math.sin(v[0]), v[1], r * math.cos(v[0])])
        return phi3
    if stage == 4:
        def phi4(v: np.ndarray) -> np.ndarray:
            ac = chart.chart_of_action(v[2])
            th = float(ac.g(v[0]))
            return np.array([th, v[1], float(ac.level.gamma(th))])
        return phi4
    if stage == 5:
        def phi5(v: np.ndarray) -> np.ndarray:
            ac = chart.chart_of_action(v[2])
            return np.array([v[0], v[1] + float(ac.eta(v[0])), v[2]])
        return phi5
    raise ConfigurationError(f"stage maps exist for stages 1..5, got {stage}")


def stage_inverse(chart: Chart, stage: int) -> Callable[[np.ndarray], np.ndarray]:
    """Map from the coordinates of ``stage - 1`` to those of ``stage``."""
    if stage == 1:
        return lambda v: np.array([math.hypot(v[0], v[1]), math.atan2(v[1], v[0]), v[2]])
    if stage == 2:
        return lambda v: np.array([v[0], v[1], v[2] * v[0]])
    if stage == 3:
        def inv3(v: np.ndarray) -> np.ndarray:
            d = v[0] - 1.0
            return np.array([math.atan2(d, v[2]) % TWO_PI, v[1], (d * d + v[2] ** 2) / 2])
        return inv3
    if stage == 4:
        def inv4(v: np.ndarray) -> np.ndarray:
            c = float(chart.alpha3(np.array(v[0]), np.array(v[2]))[0])
            if not 0 < c < 4 * chart.field.tau:
                raise NumericDomainError(f"level {c:.6g} outside the chart domain (0, {4 * chart.field.tau:.6g})")
            ac = chart.action_chart(c)
            return np.array([float(ac.f(v[0])), v[1], ac.I])
        return inv4
    if stage == 5:
        def inv5(v: np.ndarray) -> np.ndarray:
            ac = chart.chart_of_action(v[2])
            return np.array([v[0], v[1] - float(ac.eta(v[0])), v[2]])
        return inv5
    raise ConfigurationError(f"stage maps exist for stages 1..5, got {stage}")


def to_stage(chart: Chart, stage: int, xyz) -> np.ndarray:
    v = np.asarray(xyz, dtype=float)
    for k in range(1, stage + 1):
        v = stage_inverse(chart, k)(v)
    return v


def from_stage(chart: Chart, stage: int, v) -> np.ndarray:
    out = np.asarray(v, dtype=float)
    for k in range(stage, 0, -1):
        out = stage_map(chart, k)(out)
    return out


def stage_displacement(chart: Chart, stage: int, v, dv) -> np.ndarray:
    """``Phi_k(v + dv) - Phi_k(v)`` without subtracting two values of order one.

    Angle and radius increments are expanded with half-angle identities, and the
    circle map and phase increments are integrated over the short arc. A step in
    the action of stages 4 and 5 falls back to the plain difference.
    """
    v, dv = np.asarray(v, dtype=float), np.asarray(dv, dtype=float)
    a, b, c = v
    da, db, dc = dv
    if stage == 1:
        half = 2 * math.sin(db / 2)
        return np.array([
            da * math.cos(b + db) - a * half * math.sin(b + db / 2),
            da * math.sin(b + db) + a * half * math.cos(b + db / 2),
            dc,
        ])
    if stage == 2:
        return np.array([da, db, (dc * a - c * da) / (a * (a + da))])
    if stage == 3:
        r, r_new = math.sqrt(2 * c), math.sqrt(2 * (c + dc))
        dr = 2 * dc / (r + r_new) if dc else 0.0
        half = 2 * math.sin(da / 2)
        return np.array([
            dr * math.sin(a + da) + r * half * math.cos(a + da / 2),
            db,
            dr * math.cos(a + da) - r * half * math.sin(a + da / 2),
        ])
    if stage in (4, 5):
        if dc:
            phi = stage_map(chart, stage)
            return phi(v + dv) - phi(v)
        ac = chart.chart_of_action(c)
        if stage == 5:
            return np.array([da, db + ac.eta_increment(a, da), 0.0])
        th = float(ac.g(a))
        dth = ac.g_increment(a, da)
        return np.array([dth, db, float(ac.level.gamma(th + dth)) - float(ac.level.gamma(th))])
    raise ConfigurationError(f"stage maps exist for stages 1..5, got {stage}")


def pushforward_defect(chart: Chart, stage: int, v, step: float = 1e-6) -> float:
    """``|D Phi_k(v) V_k(v) - V_{k-1}(Phi_k(v))|``, the Jacobian applied to ``V_k``
    by a central difference of :func:`stage_displacement` along ``V_k``."""
    v = np.asarray(v, dtype=float)
    vk = transformed_field(chart, stage)(v)
    target = transformed_field(chart, stage - 1)(stage_map(chart, stage)(v))
    speed = float(np.linalg.norm(vk))
    if speed == 0:
        return float(np.linalg.norm(target))
    d = step * vk / speed
    push = (stage_displacement(chart, stage, v, d) - stage_displacement(chart, stage, v, -d)) / (2 * step) * speed
    return float(np.linalg.norm(push - target))


def trace(
    chart: Chart,
    x0,
    t_end: float,
    stage: int = 0,
    config: IntegratorConfig | None = None,
    samples: int = 201,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate in stage coordinates and return ``(t, xyz)`` sampled uniformly."""
    start = to_stage(chart, stage, x0)
    if stage == 0:
        traj = integrate(chart.field, start, t_end, config)
    else:
        rhs = transformed_field(chart, stage)
        traj = integrate(lambda _t, s: rhs(s), start, t_end, config)
    t = np.linspace(0.0, t_end, samples)
    states = traj(t)
    xyz = np.array([from_stage(chart, stage, s) for s in states]) if stage else states
    return t, xyz


# ---------------------------------------------------------------- closed and recurrent orbits


def action_for_ratio(chart: Chart, ratio: float) -> float:
    """Action in ``(0, I*)`` whose frequency ratio equals ``ratio``, by bracketed root finding."""
    unit = chart.with_unit_chi()
    lo, hi = chart.I_star * 1e-6, chart.I_star * (1 - 1e-9)
    r_lo, r_hi = unit.chart_of_action(lo).ratio, unit.chart_of_action(hi).ratio
    if not (r_lo - ratio) * (r_hi - ratio) < 0:
        raise NumericDomainError(
            f"ratio {ratio} is not attained for actions in (0, I*): the ratio ranges over "
            f"[{r_lo:.6g}, {r_hi:.6g}]"
        )
    return brentq(lambda I: unit.chart_of_action(I).ratio - ratio, lo, hi, xtol=1e-17, rtol=1e-15)


@dataclass(frozen=True)
class ClosureReport:
    action: float
    ratio: float
    returns: int
    closure_distance: float
    min_earlier_distance: float
    windings: np.ndarray

    def as_dict(self) -> dict:
        return {
            "I": self.action, "ratio": self.ratio, "returns": self.returns,
            "closure_distance": self.closure_distance,
            "min_earlier_distance": self.min_earlier_distance,
            "total_winding_over_2pi": float(np.sum(self.windings) / TWO_PI),
        }


def _section_start(chart: Chart, I: float) -> np.ndarray:
    ac = chart.chart_of_action(I)
    return chart.forward(ac.f(math.pi / 2), 0.0, I)


def _section_direction(chart: Chart) -> int:
    return -chart.field.config.cutoff_sign


def closed_orbit(
    chart: Chart,
    numerator: int,
    denominator: int,
    config: IntegratorConfig | None = None,
) -> ClosureReport:
    """Orbit with frequency ratio ``numerator / denominator``, checked to close after
    ``denominator`` section returns."""
    if not (numerator > 0 and denominator > 0):
        raise ConfigurationError("the ratio must be a positive fraction")
    ratio = numerator / denominator
    I = action_for_ratio(chart, ratio)
    x0 = _section_start(chart, I)
    period = chart.period_Tc(chart.level_of_action(I))
    traj = integrate(chart.field, x0, (denominator + 0.5) * period, config)
    sec = poincare_section(traj, _section_direction(chart))
    later = sec.times > 0.5 * period
    times, points = sec.times[later], sec.points[later]
    if len(times) < denominator:
        raise IntegrationError(f"only {len(times)} section returns found, expected {denominator}")
    dist = np.linalg.norm(points[:denominator] - x0, axis=1)
    return ClosureReport(
        action=I, ratio=ratio, returns=denominator, closure_distance=float(dist[-1]),
        min_earlier_distance=float(np.min(dist[:-1])) if denominator > 1 else math.inf,
        windings=np.diff(np.concatenate([[_unwrap_start(traj)], sec.phis[later][:denominator]])),
    )


def _unwrap_start(traj: Trajectory) -> float:
    return float(_unwrapped_azimuth(traj, np.array([0.0]))[0])


def recurrence_report(
    chart: Chart,
    I: float,
    returns: int = 200,
    config: IntegratorConfig | None = None,
) -> dict:
    """Return distances and section gaps of one orbit, at half and full length.

    Closed orbits show a return distance near zero; for an irrational ratio the
    return distance stays away from zero while the gaps between section points
    shrink as returns accumulate. Reported, not decided.
    """
    x0 = _section_start(chart, I)
    period = chart.period_Tc(chart.level_of_action(I))
    traj = integrate(chart.field, x0, (returns + 0.5) * period, config)
    sec = poincare_section(traj, _section_direction(chart))
    later = sec.times > 0.5 * period
    points = sec.points[later][:returns]
    phis = np.mod(np.arctan2(points[:, 1], points[:, 0]), TWO_PI)

    def stats(n: int) -> dict:
        ph = np.sort(phis[:n])
        gaps = np.diff(np.concatenate([ph, [ph[0] + TWO_PI]]))
        return {
            "returns": int(n),
            "min_return_distance": float(np.min(np.linalg.norm(points[:n] - x0, axis=1))),
            "min_section_gap": float(np.min(gaps)),
        }

    ratio = chart.with_unit_chi().chart_of_action(I).ratio
    return {"I": I, "ratio": ratio, "half": stats(len(points) // 2), "full": stats(len(points))}
