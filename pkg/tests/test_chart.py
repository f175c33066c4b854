import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from gavflow.chart import TWO_PI, Chart, ChartPoint, PeriodicPrimitive, angle_distance, reduce_angle
from gavflow.derivation import derive_tables
from gavflow.errors import NoMotionError, NumericDomainError
from gavflow.field import FieldConfig, GavrilovField, bump


@pytest.fixture(scope="module")
def chart():
    return Chart()


@pytest.fixture(scope="module")
def tables():
    return derive_tables()


def contour_action(fld: GavrilovField, c: float, n: int = 256) -> float:
    """Area inside ``{alpha2 = c}`` in the (rho, zhat) plane over 2 pi, from a
    bracketed root along each ray and the trapezoid rule."""
    def alpha2(rho, zhat):
        return float(fld.alpha_with_gradient(np.array(rho - 1.0), np.array(zhat / rho))[0])

    t = np.linspace(0, TWO_PI, n, endpoint=False)
    radii = [brentq(lambda s: alpha2(1 + s * math.sin(a), s * math.cos(a)) - c, 1e-9, 0.5, xtol=1e-16)
             for a in t]
    return float(np.mean(np.square(radii)) / 2)


# ---------------------------------------------------------------- helpers


def test_periodic_primitive_of_known_function():
    prim = PeriodicPrimitive(lambda x: 1.5 + np.cos(x) + 0.3 * np.sin(2 * x))
    x = np.array([-7.0, 0.0, 1.0, 4.0, 13.0])
    exact = 1.5 * x + np.sin(x) + 0.15 * (1 - np.cos(2 * x))
    assert np.allclose(prim(x), exact, rtol=0, atol=1e-13)
    assert prim.total == pytest.approx(3 * math.pi, rel=1e-15)
    assert prim.mean() == pytest.approx(1.5, rel=1e-15)


@given(st.floats(-100, 100))
def test_angle_reduction(a):
    r = reduce_angle(a)
    assert 0 <= r < TWO_PI
    assert angle_distance(r, a) <= 1e-12


# ---------------------------------------------------------------- levels and actions


@pytest.mark.parametrize("c", [1e-4, 1e-3, 4e-3])
def test_level_curve_residual(chart, c):
    th = np.linspace(0, TWO_PI, 101)
    assert np.max(np.abs(chart.level_curve(c).residual(th))) <= 1e-13


@pytest.mark.parametrize("c", [2e-4, 2e-3])
def test_action_against_contour_area(chart, c):
    assert chart.action(c) == pytest.approx(contour_action(chart.field, c), rel=1e-12)


@pytest.mark.parametrize("c", [5e-4, 3e-3])
def test_period_integral_is_action_derivative(chart, c):
    h = 1e-4 * c
    dI = (chart.action(c + h) - chart.action(c - h)) / (2 * h)
    assert chart.action_chart(c).Fc2pi == pytest.approx(TWO_PI * dI, rel=1e-8)


def test_action_series_at_small_levels(chart, tables):
    """The numeric action follows the exact series; its c^3 term is <Q6>."""
    excess = []
    for c in np.geomspace(1e-3, 1e-2, 5):
        series = float(tables.h1(c))
        excess.append((chart.action(c) - series) / c**4)
    assert max(abs(e) for e in excess) <= 10
    # a c^3 term of the size -1065/65536 would dominate these values
    assert max(abs(e) for e in excess) * 1e-2 < 1065 / 65536


def test_level_of_action_inverts_action(chart):
    for c in (1e-4, 1e-3, 3.5e-3):
        assert chart.level_of_action(chart.action(c)) == pytest.approx(c, rel=1e-12)
    with pytest.raises(NumericDomainError):
        chart.level_of_action(0.0)


def test_circle_maps(chart):
    ac = chart.action_chart(2e-3)
    th = np.linspace(-3, 10, 60)
    assert np.max(np.abs(ac.g(ac.f(th)) - th)) <= 1e-11
    sig = np.linspace(0, TWO_PI, 60)
    assert np.max(np.abs(ac.f(ac.g(sig)) - sig)) <= 1e-11
    assert ac.f(0.0) == 0.0 and ac.f(TWO_PI) == pytest.approx(TWO_PI, rel=1e-15)
    assert np.all(np.diff(ac.f(np.linspace(0, TWO_PI, 200))) > 0)
    assert ac.h_prime * ac.Fc2pi == pytest.approx(TWO_PI, rel=1e-15)


def test_mean_rate_and_phase_against_sigma_quadrature(chart):
    ac = chart.action_chart(2e-3)
    assert ac.Q0 == pytest.approx(ac.Q0_by_sigma_quadrature(), rel=1e-12)
    s = np.linspace(0, TWO_PI, 11)
    assert np.allclose(ac.eta(s), ac.eta_by_sigma_quadrature(s), rtol=0, atol=1e-13)


def test_phase_correction_is_periodic_from_zero(chart):
    ac = chart.action_chart(2e-3)
    s = np.linspace(0, TWO_PI, 9)
    assert ac.eta(0.0) == 0.0
    assert np.allclose(ac.eta(s + TWO_PI), ac.eta(s), rtol=0, atol=1e-13)


def test_ratio_series_numerically(chart, tables):
    """ratio / sqrt(I) against the exact series through I^2; the remainder is O(I^3)."""
    unit = chart.with_unit_chi()
    for I in (1e-4, 3e-4, 1e-3):
        ratio = unit.frequencies(I).ratio
        assert abs(ratio / math.sqrt(I) - float(tables.R(I))) <= 100 * I**3


# ---------------------------------------------------------------- frequencies and the cut-off factor


def test_cutoff_factor(chart):
    eps = chart.field.epsilon
    c = np.array([4 * eps, 6 * eps, 7 * eps, 9 * eps])
    assert np.allclose(chart.chi(c), bump(c / 4, eps) / 4)
    assert chart.chi(6 * eps) == pytest.approx(0.25)
    assert chart.with_unit_chi().chi(1e-5) == 1.0


def test_frequencies(chart):
    I = chart.action(6 * chart.field.epsilon)
    fr = chart.frequencies(I)
    ac = chart.chart_of_action(I)
    assert fr.omega1 == pytest.approx(0.25 * ac.h_prime, rel=1e-10)
    assert fr.omega2 / fr.omega1 == pytest.approx(fr.ratio, rel=1e-14)
    assert chart.period_Tc(fr.level) == pytest.approx(TWO_PI / fr.omega1, rel=1e-10)


def test_cutoff_sign_preserves_ratio():
    plus, minus = Chart(), Chart(GavrilovField(FieldConfig(cutoff_sign=-1)))
    I = plus.action(6 * plus.field.epsilon)
    a, b = plus.frequencies(I), minus.frequencies(I)
    assert b.omega1 == pytest.approx(-a.omega1) and b.ratio == a.ratio


def test_no_motion_outside_cutoff(chart):
    with pytest.raises(NoMotionError):
        chart.period_Tc(0.5 * chart.field.epsilon)


def test_chart_needs_normalized_field():
    with pytest.raises(NumericDomainError):
        Chart(GavrilovField().rescaled(2.0, 1.0))


def test_ratio_is_increasing(chart):
    unit = chart.with_unit_chi()
    grid = np.linspace(0, unit.I_star, 22)[1:-1]
    assert np.all(np.diff([unit.frequencies(I).ratio for I in grid]) > 0)


# ---------------------------------------------------------------- the chart map


@given(st.floats(0, TWO_PI), st.floats(0, TWO_PI), st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_chart_round_trip(sigma, beta, frac):
    chart = _shared_chart()
    I = frac * chart.I_star
    point = ChartPoint(sigma, beta, I)
    xyz = chart.chart_forward(point)
    back = chart.chart_inverse(xyz)
    assert angle_distance(back.sigma, point.sigma) <= 1e-10
    assert angle_distance(back.beta, point.beta) <= 1e-10
    assert back.action == pytest.approx(I, rel=1e-10)


_CHART = []


def _shared_chart() -> Chart:
    if not _CHART:
        _CHART.append(Chart())
    return _CHART[0]


def test_pressure_on_torus(chart):
    rng = np.random.default_rng(0)
    for I in (0.1 * chart.I_star, 0.7 * chart.I_star):
        xyz = chart.forward(rng.uniform(0, TWO_PI, 30), rng.uniform(0, TWO_PI, 30), I)
        P = chart.field.pressure(xyz)
        assert np.max(np.abs(P - chart.level_of_action(I) / 4)) <= 1e-10


def test_forward_shape_and_domain(chart):
    xyz = chart.forward(np.zeros((2, 3)), 0.0, 0.5 * chart.I_star)
    assert xyz.shape == (2, 3, 3)
    with pytest.raises(NumericDomainError):
        chart.forward(0.0, 0.0, chart.I_star * 1.01)
    with pytest.raises(NumericDomainError):
        chart.chart_inverse((3.0, 0.0, 0.0))


def test_summary_keys(chart):
    s = chart.action_chart(1e-3).summary()
    assert set(s) == {"c", "Fc2pi", "I", "Q0", "h_prime", "J", "ratio"}
