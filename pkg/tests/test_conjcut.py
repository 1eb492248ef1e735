import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from randers_cut.conjcut import (ArcKind, CurvatureKind, CutLocusArc, classify_curvature,
                                 cut_locus_equator_case, cut_locus_theorem, first_F_conjugate,
                                 first_h_conjugate, half_period_decreasing,
                                 meridian_conjugate_distance, pole_cut, tangent_conjugate,
                                 theta_of)
from randers_cut.errors import DomainError, HypothesisError
from randers_cut.geodesics import finsler_speed, flow_deviate, shoot_h_geodesic
from randers_cut.halfperiod import h_half_period
from randers_cut.quadrature import h_arc_length
from randers_cut.surfaces import NavigationData, ProfileSpec

ROUND = ProfileSpec.round(1.0)
EX1 = ProfileSpec.example1(1.0)
EX2 = ProfileSpec.example2(0.5)
MU_EX1 = 0.5 / math.sqrt(2)


def jacobi_oracle(spec, u, nu, dr_sign=-1, s_max=20.0):
    """First zero of the normal Jacobi field along the geodesic, from the ODE system."""
    m0 = spec.m(u)

    def rhs(_s, y):
        r, _, dr, j, dj = y
        m, m1, m2 = spec.derivs(r)
        return (dr, nu / m**2, m1 * nu**2 / m**3, dj, (m2 / m) * j)

    def zero(s, y):
        return y[3] if s > 1e-3 else 1.0

    zero.terminal, zero.direction = True, -1
    y0 = (u, 0.0, dr_sign * math.sqrt(1 - (nu / m0) ** 2), 0.0, 1.0)
    sol = solve_ivp(rhs, (0, s_max), y0, method="DOP853", rtol=1e-12, atol=1e-13, events=zero)
    s = sol.t_events[0][0]
    r, theta = sol.y_events[0][0][:2]
    return r, theta, s


def test_theta_of_examples():
    u, nu = 1.0, 0.5
    assert theta_of(EX2, 2 * EX2.a - u, u, nu) == pytest.approx(h_half_period(EX2, nu), abs=1e-12)
    for v in (0.2, 0.6):
        assert theta_of(ROUND, math.pi - 0.9, 0.9, v) == pytest.approx(math.pi, abs=1e-9)
    with pytest.raises(DomainError):
        theta_of(EX2, 0.01, u, nu)


def test_theta_of_matches_ode():
    # equator start: the rising branch crosses r = a at theta = H
    nu = 0.6
    s = np.linspace(0, 6, 60001)
    path = shoot_h_geodesic(EX1, (EX1.a, 0.0), nu, -1, 6.0, s_eval=s)
    for r in (1.0, 1.3, EX1.a, 1.9):
        rising = (path.dr > 0) & (path.s < 5)
        k = np.nonzero(rising[:-1] & (path.r[:-1] <= r) & (path.r[1:] > r))[0][0]
        theta = np.interp(r, path.r[k:k + 2], path.theta[k:k + 2])
        assert theta_of(EX1, r, EX1.a, nu) == pytest.approx(theta, abs=1e-5)


def test_round_conjugate_is_antipode():
    for nu in (0.2, 0.7):
        cp = first_h_conjugate(ROUND, math.pi / 2, nu)
        assert (cp.r, cp.theta, cp.s) == pytest.approx((math.pi / 2, math.pi, math.pi), abs=1e-7)


@pytest.mark.parametrize("spec,u,nu", [(EX2, math.pi / 4, 0.4), (EX2, 3 * math.pi / 4, 0.4),
                                       (EX1, math.pi / 3, 0.7), (EX1, 1.2, 0.3)])
def test_conjugate_matches_jacobi_field(spec, u, nu):
    cp = first_h_conjugate(spec, u, nu)
    r, theta, s = jacobi_oracle(spec, u, nu)
    assert (cp.r, cp.theta, cp.s) == pytest.approx((r, theta, s), abs=1e-7)


def test_frozen_conjugate_values():
    # frozen from the Jacobi-field oracle above
    cp = first_h_conjugate(EX2, math.pi / 4, 0.4)
    assert (cp.r, cp.theta, cp.s) == pytest.approx((2.6243924, 2.8613741, 3.3646295), abs=1e-6)
    # a generic conjugate point does not sit on the antipodal parallel
    assert abs(cp.r - (2 * EX2.a - math.pi / 4)) > 0.2
    cp = first_h_conjugate(EX2, 3 * math.pi / 4, 0.4)
    assert (cp.r, cp.theta, cp.s) == pytest.approx((2.2905694, 3.0203673, 4.6283573), abs=1e-6)


@settings(max_examples=6)
@given(st.floats(0.4, 1.4), st.floats(0.1, 0.9))
def test_conjugate_mirror_symmetry(u, frac):
    nu = frac * EX2.m(u)
    down = first_h_conjugate(EX2, u, nu, -1)
    up = first_h_conjugate(EX2, 2 * EX2.a - u, nu, +1)
    assert up.r == pytest.approx(2 * EX2.a - down.r, abs=1e-9)
    assert (up.theta, up.s) == pytest.approx((down.theta, down.s), abs=1e-9)


def test_F_conjugate():
    nav0 = NavigationData(EX2, 0.0)
    h = first_h_conjugate(EX2, 1.0, 0.5)
    f = first_F_conjugate(nav0, 1.0, 0.5)
    assert (f.r, f.theta, f.s) == (h.r, h.theta, h.s)
    nav = NavigationData(ROUND, 0.3)
    f = first_F_conjugate(nav, math.pi / 2, 0.5)
    assert (f.r, f.theta) == pytest.approx((math.pi / 2, 1.3 * math.pi), abs=1e-7)
    nav = NavigationData(EX2, 0.2)
    fw, bw = first_F_conjugate(nav, 1.0, 0.5), first_F_conjugate(nav, 1.0, 0.5, "backward")
    assert 0.5 * (fw.theta + bw.theta) == pytest.approx(h.theta, abs=1e-12)


def test_curvature_classes(decreasing_profile):
    assert classify_curvature(ROUND).value is CurvatureKind.CONSTANT
    assert classify_curvature(EX2).value is CurvatureKind.NON_DECREASING
    # G = 2(1 - 2c)/(1 + c)^2 in c = cos^2 r is monotone; it loses monotonicity only for lambda > 2
    assert classify_curvature(EX1).value is CurvatureKind.NON_DECREASING
    assert classify_curvature(ProfileSpec.example1(3.0)).value is CurvatureKind.NON_MONOTONE
    cls = classify_curvature(decreasing_profile)
    assert cls.value is CurvatureKind.NON_INCREASING and cls.stable
    with pytest.raises(DomainError):
        classify_curvature(EX2, grid_n=10)


def test_round_single_point():
    for mu in (0.1, 0.25):
        arc = cut_locus_theorem(NavigationData(ROUND, mu), (math.pi / 3, 0.0))
        assert arc.kind is ArcKind.SINGLE_POINT and arc.metric == "F"
        assert (arc.r, arc.theta) == pytest.approx((2 * math.pi / 3, math.pi * (1 + mu)), abs=1e-14)
    big = cut_locus_theorem(NavigationData(ProfileSpec.round(2.0), 0.25), (1.0, 0.0))
    assert big.theta == pytest.approx(math.pi * 1.5)


def test_parallel_arc_example2():
    nav = NavigationData(EX2, 0.2)
    u = math.pi / 3
    arc = cut_locus_theorem(nav, (u, 0.0))
    assert arc.kind is ArcKind.PARALLEL_SUBARC and arc.r == pytest.approx(2 * math.pi / 3)
    assert arc.theta_interval == pytest.approx((2.27797254, 4.99867159), abs=1e-7)
    assert np.max(np.abs(arc.samples[:, 0] - (2 * EX2.a - u))) < 1e-8
    # left endpoint: H(m(u)) + mu * d_h(x, q0), from independent quadratures
    m_u = EX2.m(u)
    d_h = h_arc_length(EX2, m_u, u, 2 * EX2.a - u)
    lo, hi = arc.theta_interval
    assert lo == pytest.approx(h_half_period(EX2, m_u) + nav.mu * d_h, abs=1e-6)
    assert 0.5 * (lo + hi) == pytest.approx(math.pi + nav.mu * d_h, abs=1e-12)
    # nearly tangent geodesics have conjugate points converging to the left end
    cp = first_F_conjugate(nav, u, m_u * (1 - 1e-7))
    assert cp.r == pytest.approx(arc.r, abs=1e-3)
    assert cp.theta == pytest.approx(lo, abs=1e-3)


def test_meridian_arc(decreasing_profile):
    spec = decreasing_profile
    nav = NavigationData(spec, 0.2)
    u = math.pi / 3
    arc = cut_locus_theorem(nav, (u, 0.0), n_samples=8)
    assert arc.kind is ArcKind.MERIDIAN_SUBARC
    assert arc.r_interval == pytest.approx((1.10725, 2.65054), abs=1e-4)
    assert arc.samples[0, 0] == pytest.approx(arc.r_interval[0])
    assert np.all(np.diff(arc.samples[:, 0]) >= 0)
    # each sample sits on the meridian theta = pi, pushed by mu times its arclength
    assert np.all(arc.samples[:, 1] >= math.pi)


def _jacobi_meridian(u, through):
    # curvature of sin r / sqrt(1 + sin^2 r / 2) from a difference stencil on the
    # closed form, independent of the tabulated spline
    def m(r):
        return np.sin(r) / np.sqrt(1 + 0.5 * np.sin(r) ** 2)

    def G(r):
        h = 1e-4
        return -(m(r + h) - 2 * m(r) + m(r - h)) / (h * h) / m(r)

    start = u if through == "p" else math.pi - u

    def rhs(s, y):
        r = abs(start - s)
        r = r if r <= math.pi else 2 * math.pi - r
        return (y[1], -G(min(max(r, 1e-3), math.pi - 1e-3)) * y[0])

    def hit(s, y):
        return y[0]

    hit.terminal, hit.direction = True, -1
    sol = solve_ivp(rhs, (0, 2 * math.pi), (0, 1), rtol=1e-10, atol=1e-12, events=hit,
                    max_step=0.01)
    return sol.t_events[0][0]


def test_meridian_conjugate_distances(decreasing_profile):
    u = math.pi / 3
    s_p = meridian_conjugate_distance(decreasing_profile, u, "p")
    s_q = meridian_conjugate_distance(decreasing_profile, u, "q")
    assert (s_p, s_q) == pytest.approx((2.15444757, 2.58544576), abs=1e-6)
    assert s_p == pytest.approx(_jacobi_meridian(u, "p"), abs=1e-5)
    assert s_q == pytest.approx(_jacobi_meridian(u, "q"), abs=1e-5)
    assert meridian_conjugate_distance(ROUND, 0.7) == pytest.approx(math.pi, abs=1e-8)


def test_equator_case():
    nav = NavigationData(EX1, MU_EX1)
    arc = cut_locus_equator_case(nav, (math.pi / 3, 0.0))
    assert arc.r == pytest.approx(2 * math.pi / 3)
    assert arc.theta_interval == pytest.approx((2.6593, 5.38), abs=1e-3)
    assert half_period_decreasing(ProfileSpec.example2(0.65))
    arc = cut_locus_equator_case(NavigationData(ProfileSpec.example2(0.65), 0.2), (1.0, 0.0))
    assert arc.kind is ArcKind.PARALLEL_SUBARC and arc.r == pytest.approx(math.pi - 1.0)
    with pytest.raises(HypothesisError):
        cut_locus_equator_case(nav, (1.0, 0.0), premise=False)


def test_equator_point_limit():
    arc = cut_locus_theorem(NavigationData(EX2, 0.0), (EX2.a, 0.0))
    g = 2.0  # curvature at the equator
    m_a = EX2.m_at_equator()
    lo, hi = arc.theta_interval
    assert arc.r == pytest.approx(EX2.a)
    assert lo == pytest.approx(math.pi / math.sqrt(g) / m_a, abs=1e-12)
    assert hi == pytest.approx(2 * math.pi - lo, abs=1e-12)


def test_non_monotone_rejected():
    with pytest.raises(HypothesisError):
        cut_locus_theorem(NavigationData(ProfileSpec.example1(3.0), 0.1), (1.0, 0.0))


def test_zero_wind_degeneration(decreasing_profile):
    for spec, x in ((EX2, (math.pi / 3, 0.0)), (ROUND, (1.0, 0.0)), (decreasing_profile, (1.0, 0.0))):
        nav = NavigationData(spec, 0.0)
        arc = cut_locus_theorem(nav, x, n_samples=6)
        assert arc.metric == "h" and arc.shift == 0.0
        again = cut_locus_theorem(NavigationData(spec, 1e-300), x, n_samples=6)
        assert again.kind is arc.kind
        assert np.max(np.abs(again.samples - arc.samples)) < 1e-12


def test_pole_cut():
    nav = NavigationData(EX2, 0.3)
    q, d = pole_cut(nav)
    assert q[0] == 2 * EX2.a and d == 2 * EX2.a
    s = np.linspace(0, 2 * EX2.a - 2e-9, 4001)
    path = flow_deviate(shoot_h_geodesic(EX2, (1e-9, 0.0), 0.0, 1, s[-1], s_eval=s), nav.mu)
    speed = finsler_speed(path)
    assert np.max(np.abs(speed - 1)) < 1e-12
    assert float(np.sum(0.5 * (speed[1:] + speed[:-1]) * np.diff(s))) + 2e-9 == pytest.approx(
        2 * EX2.a, abs=1e-8)


def test_arc_json_round_trip():
    arc = cut_locus_theorem(NavigationData(EX2, 0.2), (1.0, 0.0), n_samples=4)
    obj = json.loads(json.dumps(arc.to_json()))
    assert obj["theta_interval_mod_2pi"][0] == pytest.approx(arc.theta_interval[0] % (2 * math.pi))
    back = CutLocusArc.from_json(obj)
    assert back.kind is arc.kind and back.r == arc.r
    assert np.array_equal(back.samples, arc.samples)


def test_tangent_conjugate_equator_limit():
    cp = tangent_conjugate(EX2, EX2.a)
    near = tangent_conjugate(EX2, EX2.a - 1e-3)
    assert cp.theta == pytest.approx(near.theta, abs=1e-4)
    assert cp.s == pytest.approx(near.s, abs=1e-4)
