"""Measurement suites behind the verification report.

Each suite returns plain measurements plus a ``pass`` flag computed against
the thresholds below.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .chart import TWO_PI, Chart
from .derivation import DEFAULT_ORDER, derive_tables
from .dynamics import (
    IntegratorConfig,
    _section_start,
    closed_orbit,
    conjugacy_check,
    integrate,
    poincare_section,
)
from .errors import GavflowError
from .field import FieldConfig, GavrilovField
from .reference import verify_expansions

# Thresholds of the six suites.
IDENTITY_TOL = 1e-12
MOMENTUM_RADII = np.logspace(-3, -1, 9)
RESCALE_TOL = 1e-8
GAMMA_TOL = 1e-13
INVERSE_TOL = 1e-11
JACOBIAN_TOL = 1e-10
ACTION_FACTOR = 10.0
PRESSURE_TOL = 1e-10
DRIFT_TOL = 1e-8
PERIOD_TOL = 1e-6
WINDING_TOL = 1e-3
CONJUGACY_TOL = 1e-6
CLOSURE_TOL = 1e-6

# Field for the particle suites: a cut-off shell centred on pressure 1e-3, so
# that the action 1e-3 sits where the cut-off peaks.
DYNAMICS_CONFIG = FieldConfig(delta=0.3, epsilon=2e-3 / 3)
DYNAMICS_ACTION = 1e-3


@lru_cache(maxsize=4)
def _chart(config: FieldConfig) -> Chart:
    return Chart(GavrilovField(config))


def expansion_suite(order: int = DEFAULT_ORDER) -> dict:
    rep = verify_expansions(order)
    failing = [r.name for r in rep.failures]
    return {
        "constants": sum(r.status in ("PASS", "FAIL") for r in rep.rows),
        "failing": failing,
        "consistency": rep.consistency or "ok",
        "pass": rep.passed,
    }


def momentum_slope(fld: GavrilovField, radii: np.ndarray = MOMENTUM_RADII) -> tuple[float, float, list[float]]:
    """Log-log slope (and its standard error) of the max rho/z momentum residual
    on circles of radius ``r`` around the core."""
    th = np.linspace(0, TWO_PI, 16, endpoint=False)
    peaks = []
    for r in radii:
        pts = np.stack([1 + r * np.sin(th), np.zeros_like(th), r * np.cos(th)], axis=-1)
        res = fld.euler_residual(pts)
        peaks.append(float(np.max(np.hypot(res["rho"], res["z"]))))
    coef, cov = np.polyfit(np.log(radii), np.log(peaks), 1, cov=True)
    return float(coef[0]), float(math.sqrt(cov[0, 0])), peaks


def field_identity_suite(seed: int = 0, samples: int = 1000) -> dict:
    fld = GavrilovField()
    res = fld.euler_residual(fld.sample_shell(samples, seed))
    div, transport, phi = (float(np.max(np.abs(res[k]))) for k in ("div", "transport", "phi"))
    slope, stderr, _ = momentum_slope(fld)
    need = fld.config.order - 2
    return {
        "max_div": div, "max_transport": transport, "max_phi_momentum": phi,
        "momentum_slope": slope, "slope_stderr": stderr, "slope_required": need,
        "pass": max(div, transport, phi) <= IDENTITY_TOL and slope >= need and stderr <= 0.5,
    }


def _rescaled_evaluator(fn, lam: float, mu: float, power: int):
    """``x -> mu^power fn(x / lam)``."""
    return lambda x: mu**power * fn(np.asarray(x) / lam)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def rescaling_suite(seed: int = 0) -> dict:
    base = GavrilovField()
    pts = base.sample_shell(200, seed)
    group = 0.0
    for (l1, m1), (l2, m2) in [((2.0, 0.5), (0.7, 3.0)), ((1.3, 1.1), (0.4, 0.9))]:
        composed_u = _rescaled_evaluator(_rescaled_evaluator(base.velocity_cut, l2, m2, 1), l1, m1, 1)
        composed_p = _rescaled_evaluator(_rescaled_evaluator(base.pressure_cut, l2, m2, 2), l1, m1, 2)
        direct = base.rescaled(l1 * l2, m1 * m2)
        x = pts * l1 * l2
        group = max(group, _relative(composed_u(x), direct.velocity_cut(x)),
                    _relative(composed_p(x), direct.pressure_cut(x)))
    family = 0.0
    trajectory = 0.0
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-15)
    x1 = _section_start(_chart(FieldConfig()), mid_shell_action(_chart(FieldConfig())))
    T = 2 * _chart(FieldConfig()).period_Tc(4 * float(base.pressure(x1)))
    t = np.linspace(0.0, T, 41)
    traj1 = integrate(base, x1, T, cfg)
    for R in (0.5, 2.0):
        fR = GavrilovField(FieldConfig(R=R, delta=0.2 * R))
        xs = pts * R
        family = max(family, _relative(fR.velocity_cut(xs), R**2 * base.velocity_cut(pts)))
        trajR = integrate(fR, R * x1, T / R, cfg)
        trajectory = max(trajectory, _relative(trajR(t / R), R * traj1(t)))
    return {
        "group_law": group, "family_law": family, "trajectory_law": trajectory,
        "pass": max(group, family, trajectory) <= RESCALE_TOL,
    }


def mid_shell_action(chart: Chart) -> float:
    """Action of the level where the cut-off peaks."""
    return chart.action(6 * chart.field.epsilon)


def chart_suite(seed: int = 0) -> dict:
    chart = _chart(FieldConfig())
    tables = derive_tables()
    q6 = float(tables.gamma.coefficient(6).average())
    th = np.linspace(0, TWO_PI, 256)
    levels = np.geomspace(1e-4, 1e-2, 9)
    gamma_res = inverse = jac = action = 0.0
    for c in levels:
        ac = chart.action_chart(c)
        gamma_res = max(gamma_res, float(np.max(np.abs(ac.level.residual(th)))))
        inverse = max(inverse, float(np.max(np.abs(np.asarray(ac.g(ac.f(th))) - th))))
        jac = max(jac, abs(ac.h_prime * ac.Fc2pi - TWO_PI))
        action = max(action, float(abs(ac.I - (c / 4 + q6 * c**3)) / (ACTION_FACTOR * c**4)))
    rng = np.random.default_rng(seed)
    pressure = 0.0
    for I in rng.uniform(0.05, 0.95, 8) * chart.I_star:
        s, b = rng.uniform(0, TWO_PI, 16), rng.uniform(0, TWO_PI, 16)
        P = chart.field.pressure(chart.forward(s, b, I))
        pressure = max(pressure, float(np.max(np.abs(P - chart.level_of_action(I) / 4))))
    return {
        "gamma_residual": gamma_res, "g_of_f": inverse, "jacobian": jac,
        "action_excess": action, "Q6": q6, "pressure_on_torus": pressure,
        "pass": gamma_res <= GAMMA_TOL and inverse <= INVERSE_TOL and jac <= JACOBIAN_TOL
        and action <= 1.0 and pressure <= PRESSURE_TOL,
    }


def dynamics_suite() -> dict:
    chart = _chart(DYNAMICS_CONFIG)
    fld = chart.field
    I = DYNAMICS_ACTION
    fr = chart.frequencies(I)
    T = chart.period_Tc(fr.level)
    x0 = _section_start(chart, I)
    traj = integrate(fld, x0, 10.5 * T)
    P = fld.pressure(traj.states)
    drift = float(np.max(np.abs(P - P[0])))
    sec = poincare_section(traj, -fld.config.cutoff_sign)
    period = float(np.max(np.abs(sec.return_times - T)) / T)
    series = math.sqrt(I) * derive_tables().R(I)
    winding = float(np.max(np.abs(sec.windings / TWO_PI - series)) / series)
    conj = conjugacy_check(chart, x0, np.linspace(0.0, 5 * T, 101))
    out = {
        "pressure_drift": drift, "period_error": period, "winding_error": winding,
        "returns": int(len(sec.times)), "conjugacy_deviation": conj.max_deviation,
        "action_drift": conj.action_drift,
    }
    try:
        half = closed_orbit(chart, 1, 2)
        out["closure_1_2"] = half.closure_distance
    except GavflowError as exc:
        out["closure_1_2"] = None
        out["closure_1_2_error"] = str(exc)
    small = closed_orbit(chart, 1, 32)
    out["closure_1_32"] = small.closure_distance
    out["pass"] = (
        drift <= DRIFT_TOL and period <= PERIOD_TOL and winding <= WINDING_TOL
        and conj.max_deviation <= CONJUGACY_TOL
        and out["closure_1_2"] is not None and out["closure_1_2"] <= CLOSURE_TOL
    )
    return out


def monotonicity_suite(points: int = 100) -> dict:
    chart = _chart(FieldConfig()).with_unit_chi()
    grid = np.linspace(0, chart.I_star, points + 2)[1:-1]
    ratios = np.array([chart.frequencies(I).ratio for I in grid])
    steps = np.diff(ratios)
    return {
        "points": points, "I_star": chart.I_star, "min_step": float(np.min(steps)),
        "pass": bool(np.all(steps > 0)),
    }


def full_report(seed: int = 0, skip_dynamics: bool = False) -> dict:
    """All six suites in a fixed order; a failing suite does not stop the others."""
    suites = {
        "expansions": lambda: expansion_suite(),
        "field_identities": lambda: field_identity_suite(seed),
        "rescaling": lambda: rescaling_suite(seed),
        "chart": lambda: chart_suite(seed),
        "dynamics": dynamics_suite,
        "monotonicity": monotonicity_suite,
    }
    report: dict = {"seed": seed}
    for name, run in suites.items():
        if name == "dynamics" and skip_dynamics:
            report[name] = {"pass": "skipped"}
            continue
        try:
            report[name] = run()
        except GavflowError as exc:
            report[name] = {"pass": False, "error": str(exc)}
    report["pass"] = all(v["pass"] in (True, "skipped") for k, v in report.items() if k != "seed")
    return report
