"""Invariant suite shared by ``randers-cut verify`` and the test-suite.

Each check returns a :class:`CheckResult` carrying the measured worst-case
value next to the tolerance it was judged against.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .conjcut import cut_locus_theorem
from .errors import HypothesisError
from .geodesics import (finsler_clairaut_cos, finsler_speed, flow_deviate, measured_cos_psi,
                        shoot_h_geodesic)
from .halfperiod import closed_form_H, f_half_period, h_half_period
from .surfaces import (Family, NavigationData, ProfileSpec, finsler_norm, gaussian_curvature,
                       max_wind, symmetry_residual)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def _result(name, value, tol, detail=""):
    value = float(value)
    return CheckResult(name, bool(value < tol), value, float(tol), detail)


def default_surfaces() -> list[NavigationData]:
    """Closed-form families at half their admissible wind."""
    out = []
    for spec in (ProfileSpec.round(1.0), ProfileSpec.example1(1.0), ProfileSpec.example2(0.5)):
        out.append(NavigationData(spec, 0.5 * max_wind(spec)))
    return out


def _label(nav: NavigationData) -> str:
    spec = nav.profile
    if spec.family is Family.ROUND:
        return f"round(R={spec.radius:g})"
    if spec.family is Family.CUSTOM:
        return "custom"
    return f"{spec.family.value}(lambda={spec.lam:g})"


# -- surfaces ------------------------------------------------------------------

def check_symmetry(nav: NavigationData) -> CheckResult:
    tol = 1e-6 if nav.profile.family is Family.CUSTOM else 1e-10
    return _result(f"symmetry {_label(nav)}", symmetry_residual(nav.profile), tol)


def check_curvature_fd(nav: NavigationData, rng: np.random.Generator, n: int = 1000,
                       h: float = 1e-4) -> CheckResult:
    """``-m''/m`` against a second difference of ``m``.

    The error is taken relative to ``max(|G|, 1)`` since ``G`` changes sign on
    some profiles.
    """
    spec = nav.profile
    r = rng.uniform(0.05 * spec.a, 1.95 * spec.a, n)
    m = spec.m(r)
    fd = -(spec.m(r + h) - 2 * m + spec.m(r - h)) / (h * h) / m
    g = gaussian_curvature(spec, r)
    rel = np.abs(fd - g) / np.maximum(np.abs(g), 1.0)
    return _result(f"curvature finite difference {_label(nav)}", rel.max(), 1e-6)


def _random_vectors(nav, rng, n):
    spec = nav.profile
    r = rng.uniform(1e-3, 2 * spec.a - 1e-3, n)
    y = rng.normal(size=(2, n))
    return r, y


def check_norm_formulas(nav: NavigationData, rng: np.random.Generator, n: int = 1000) -> CheckResult:
    r, y = _random_vectors(nav, rng, n)
    a = finsler_norm(nav, r, y, "randers")
    b = finsler_norm(nav, r, y, "navigation")
    return _result(f"alpha+beta vs navigation {_label(nav)}",
                   np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))), 1e-12)


def check_homogeneity(nav: NavigationData, rng: np.random.Generator, n: int = 1000) -> CheckResult:
    r, y = _random_vectors(nav, rng, n)
    f1 = finsler_norm(nav, r, y)
    f2 = finsler_norm(nav, r, 2.5 * y)
    return _result(f"homogeneity {_label(nav)}", np.max(np.abs(f2 - 2.5 * f1) / f1), 1e-12)


def check_positivity(nav: NavigationData, rng: np.random.Generator, n: int = 1000) -> CheckResult:
    """``F >= (1 - mu m) |y|_h``; reports the worst violation (0 when none)."""
    r, y = _random_vectors(nav, rng, n)
    m = nav.profile.m(r)
    lower = (1 - nav.mu * m) * np.sqrt(y[0] ** 2 + (m * y[1]) ** 2)
    f = finsler_norm(nav, r, y)
    worst = max(0.0, float(np.max(lower - f)))
    return _result(f"positivity bound {_label(nav)}", worst, 1e-12)


# -- geodesics -----------------------------------------------------------------

def _second_order_geodesic(spec: ProfileSpec, start, nu, dr_sign, length, n_eval=400):
    # the plain geodesic equations, with theta' integrated rather than taken
    # from the first integral, so that conservation is a genuine test
    r0 = float(start[0])
    m0 = spec.m(r0)
    dr0 = dr_sign * math.sqrt(max(0.0, 1 - (nu / m0) ** 2))

    def rhs(_s, y):
        r, _, dr, dt = y
        m, m1, _ = spec.derivs(min(max(r, 1e-12), 2 * spec.a - 1e-12))
        return (dr, dt, m * m1 * dt * dt, -2 * m1 * dr * dt / m)

    s = np.linspace(0, length, n_eval)
    sol = solve_ivp(rhs, (0, length), (r0, float(start[1]), dr0, nu / (m0 * m0)),
                    method="DOP853", rtol=1e-12, atol=1e-13, t_eval=s)
    return sol


def _random_shot(spec: ProfileSpec, rng: np.random.Generator):
    while True:
        r0 = rng.uniform(0.1, 1.9) * spec.a
        phi = rng.uniform(-math.pi, math.pi)
        nu = float(spec.m(r0) * math.cos(phi))
        if abs(nu) > 1e-3 * spec.m(r0):
            return (r0, rng.uniform(0, 2 * math.pi)), nu, (1 if math.sin(phi) >= 0 else -1)


def check_clairaut(nav: NavigationData, rng: np.random.Generator, n_shots: int = 100) -> CheckResult:
    """``max |m^2 theta' - nu|`` along shots of length ``8a`` of the full geodesic ODE."""
    spec = nav.profile
    worst = 0.0
    for _ in range(n_shots):
        start, nu, sgn = _random_shot(spec, rng)
        sol = _second_order_geodesic(spec, start, nu, sgn, 8 * spec.a)
        m = spec.m(np.clip(sol.y[0], 0, 2 * spec.a))
        worst = max(worst, float(np.max(np.abs(m * m * sol.y[3] - nu))))
    return _result(f"Clairaut conservation {_label(nav)}", worst, 1e-7, f"{n_shots} shots")


def check_finsler_clairaut(nav: NavigationData, rng: np.random.Generator,
                           n_states: int = 1000) -> CheckResult:
    """Measured ``cos psi`` of deviated paths against the closed relation."""
    spec = nav.profile
    worst, seen = 0.0, 0
    while seen < n_states:
        start, nu, sgn = _random_shot(spec, rng)
        path = flow_deviate(shoot_h_geodesic(spec, start, nu, sgn, 4 * spec.a,
                                             s_eval=np.linspace(0, 4 * spec.a, 100)), nav.mu)
        err = np.abs(measured_cos_psi(path) - finsler_clairaut_cos(nav, path.r, nu))
        worst = max(worst, float(err.max()))
        seen += len(err)
    return _result(f"Finsler Clairaut relation {_label(nav)}", worst, 1e-8, f"{seen} states")


def equator_displacement(nav: NavigationData, length: float = math.pi, direction: str = "forward"):
    """``(theta, F-length)`` reached by the equator geodesic after h-arclength ``length``."""
    spec = nav.profile
    s = np.linspace(0, length, 2049)
    path = shoot_h_geodesic(spec, (spec.a, 0.0), spec.m_at_equator(), 0, length, s_eval=s)
    dev = flow_deviate(path, nav.mu, direction)
    speed = finsler_speed(dev)
    f_len = float(np.sum(0.5 * (speed[1:] + speed[:-1]) * np.diff(s)))
    return float(dev.theta[-1]), f_len


def check_equator_lemma(mu: float) -> list[CheckResult]:
    nav = NavigationData(ProfileSpec.round(1.0), mu)
    out = []
    for direction, sgn in (("forward", 1), ("backward", -1)):
        theta, f_len = equator_displacement(nav, math.pi, direction)
        err = max(abs(theta - math.pi * (1 + sgn * mu)), abs(f_len - math.pi))
        out.append(_result(f"equator displacement {direction} mu={mu:g}", err, 1e-8))
    return out


# -- half periods ---------------------------------------------------------------

def check_closed_form_H(n_nu: int = 50) -> list[CheckResult]:
    out = []
    cases = [ProfileSpec.example1(l) for l in (0.25, 0.5, 1.0, 2.0)]
    cases += [ProfileSpec.example2(l) for l in (0.3, 0.5)]
    for spec in cases:
        nu = spec.m_at_equator() * np.linspace(0, 1, n_nu + 2)[1:-1]
        err = max(abs(h_half_period(spec, v) - float(closed_form_H(spec, v))) for v in nu)
        out.append(_result(f"half period closed form {spec.family.value}(lambda={spec.lam:g})",
                           err, 1e-6))
    return out


def check_zero_wind(nav: NavigationData, n_nu: int = 20) -> CheckResult:
    """With ``mu = 0`` the Randers half periods and cut loci are the Riemannian ones."""
    still = nav.with_mu(0.0)
    spec = nav.profile
    nu = spec.m_at_equator() * np.linspace(0, 1, n_nu + 2)[1:-1]
    worst = 0.0
    for v in nu:
        H = h_half_period(spec, v)
        for d in ("forward", "backward"):
            worst = max(worst, abs(f_half_period(still, v, d) - H))
    try:
        arc = cut_locus_theorem(still, (spec.a / 1.5, 0.0), n_samples=8)
        if arc.metric != "h" or arc.shift != 0.0:
            worst = math.inf
    except HypothesisError:
        pass
    return _result(f"zero wind degeneration {_label(nav)}", worst, 1e-12)


def run_suite(navs: list[NavigationData] | None = None, seed: int = 0,
              n_shots: int = 20, n_states: int = 1000, include_closed_forms: bool = True
              ) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    navs = navs or default_surfaces()
    out: list[CheckResult] = []
    for nav in navs:
        out.append(check_symmetry(nav))
        if nav.profile.family is not Family.CUSTOM:
            # a spline's m'' is only piecewise linear, so the stencil sees its kinks
            out.append(check_curvature_fd(nav, rng))
        out += [check_norm_formulas(nav, rng), check_homogeneity(nav, rng), check_positivity(nav, rng),
                check_clairaut(nav, rng, n_shots), check_finsler_clairaut(nav, rng, n_states),
                check_zero_wind(nav)]
    if include_closed_forms:
        out += check_closed_form_H()
        out += check_equator_lemma(0.1) + check_equator_lemma(0.25)
    return out
