"""First conjugate points and theorem-driven cut loci.

Along an h-geodesic from ``(u, 0)`` with Clairaut constant ``nu`` the angle is
a function ``theta(r, u, nu)`` on each monotone-in-``r`` branch; a point is
conjugate to the start exactly when ``d theta / d nu = 0`` there.  The wind
flow ``theta -> theta + mu s`` maps conjugate and cut points of ``h`` to those
of the Randers metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, HypothesisError, NoConjugatePointError
from .halfperiod import closed_form_H, h_half_period, numerical_derivatives, xi
from .quadrature import h_arc_length, radial_integral
from .surfaces import Family, NavigationData, ProfileSpec, gaussian_curvature

TWO_PI = 2 * math.pi


# -- branch bookkeeping -----------------------------------------------------

@dataclass(frozen=True)
class _Branches:
    """Closed-form theta(r) and s(r) along a geodesic launched downward from ``u``.

    Branch 0 descends from ``u`` to ``xi``; branch ``k >= 1`` runs between
    the two tangent parallels ``xi`` and ``2a - xi`` (rising for odd ``k``).
    """

    spec: ProfileSpec
    u: float
    nu: float
    method: str = "fixed"
    xi: float = field(init=False)
    theta0: float = field(init=False)
    s0: float = field(init=False)
    theta_full: float = field(init=False)
    s_full: float = field(init=False)

    def __post_init__(self):
        spec, nu, kw = self.spec, self.nu, {"method": self.method, "check": False}
        x = xi(spec, nu)
        top = 2 * spec.a - x
        set_ = object.__setattr__
        set_(self, "xi", x)
        set_(self, "theta0", radial_integral(spec, nu, x, self.u, "theta", **kw))
        set_(self, "s0", radial_integral(spec, nu, x, self.u, "length", **kw))
        set_(self, "theta_full", radial_integral(spec, nu, x, top, "theta", **kw))
        set_(self, "s_full", radial_integral(spec, nu, x, top, "length", **kw))

    def bounds(self, k: int) -> tuple[float, float]:
        if k == 0:
            return self.xi, self.u
        return self.xi, 2 * self.spec.a - self.xi

    def _piece(self, k, r, kind):
        # partial integrals are taken over the shorter side of r, so a radius
        # next to a turning point never sits at the far end of a long interval
        spec, kw = self.spec, {"method": self.method, "check": False}
        nu, x, top = self.nu, self.xi, 2 * self.spec.a - self.xi
        lo, hi = self.bounds(k)
        r = min(max(float(r), lo), hi)
        whole0 = self.theta0 if kind == "theta" else self.s0
        whole = self.theta_full if kind == "theta" else self.s_full
        if k == 0:
            if r - x < self.u - r:
                return whole0 - radial_integral(spec, nu, x, r, kind, **kw)
            return radial_integral(spec, nu, r, self.u, kind, **kw)
        if k % 2:
            if r > spec.a:
                return whole - radial_integral(spec, nu, r, top, kind, **kw)
            return radial_integral(spec, nu, x, r, kind, **kw)
        if r < spec.a:
            return whole - radial_integral(spec, nu, x, r, kind, **kw)
        return radial_integral(spec, nu, r, top, kind, **kw)

    def theta(self, k: int, r: float) -> float:
        if k == 0:
            return self._piece(0, r, "theta")
        return self.theta0 + (k - 1) * self.theta_full + self._piece(k, r, "theta")

    def s(self, k: int, r: float) -> float:
        if k == 0:
            return self._piece(0, r, "length")
        return self.s0 + (k - 1) * self.s_full + self._piece(k, r, "length")

    def geodesic_order(self, k: int, t):
        """Map ``t in [0, 1]`` to radii on branch ``k`` in the order they are traversed."""
        lo, hi = self.bounds(k)
        t = np.asarray(t, dtype=float)
        descending = k % 2 == 0
        return hi - (hi - lo) * t if descending else lo + (hi - lo) * t


def _check_start(spec: ProfileSpec, u: float, nu: float) -> None:
    if not 0 < u < 2 * spec.a:
        raise DomainError("start radius must lie strictly between the poles")
    if not 0 < nu < min(spec.m(u), spec.m_at_equator()):
        raise DomainError(f"nu={nu} must lie in (0, min(m(u), m(a)))")


def theta_of(spec: ProfileSpec, r: float, u: float, nu: float) -> float:
    """Angle reached at radius ``r`` on the rising branch of the geodesic from ``(u, 0)``.

    ``theta(r, u, nu) = H(nu) - int_r^{2a-u} nu / (m sqrt(m^2 - nu^2)) dtau``.
    """
    _check_start(spec, u, nu)
    x = xi(spec, nu)
    if not x - 1e-12 <= r <= 2 * spec.a - x + 1e-12:
        raise DomainError(f"r={r} is not reached by the rising branch [{x}, {2 * spec.a - x}]")
    r = min(max(r, x), 2 * spec.a - x)
    return h_half_period(spec, nu) - radial_integral(spec, nu, r, 2 * spec.a - u, "theta")


# -- conjugate points -------------------------------------------------------

@dataclass(frozen=True)
class ConjugatePoint:
    r: float
    theta: float
    s: float
    nu: float
    u: float
    branch: int
    dr_sign: int = -1


def _dtheta_dnu(spec, u, nu, k, r, step):
    # central difference, one Richardson extrapolation; fixed-node quadrature
    # keeps theta a smooth function of nu so the differences are clean
    step = min(step, 0.25 * (spec.m(r) - nu))
    if step <= 0:
        return math.inf

    def theta_at(v):
        return _Branches(spec, u, v, method="fixed").theta(k, r)

    def central(h):
        return (theta_at(nu + h) - theta_at(nu - h)) / (2 * h)

    return (4 * central(step / 2) - central(step)) / 3


def _nu_step(spec, u, nu):
    room = min(spec.m(u), spec.m_at_equator()) - nu
    return min(1e-6 * spec.m_at_equator(), 0.25 * room, 0.25 * nu)


def _scan_fractions(n_scan: int) -> np.ndarray:
    # Chebyshev-spaced interior plus geometric clusters toward both turning
    # points, where conjugate points of nearly tangent geodesics hide
    cheb = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, n_scan + 2)[1:-1])
    edge = np.logspace(-13, -2, 23)
    return np.unique(np.concatenate([edge, cheb, 1 - edge]))


def first_h_conjugate(spec: ProfileSpec, u: float, nu: float, dr_sign: int = -1,
                      max_branches: int = 5, n_scan: int = 48) -> ConjugatePoint:
    """First conjugate point of ``(u, 0)`` along the h-geodesic with Clairaut constant ``nu``.

    Scans each branch of the geodesic for a sign change of ``d theta / d nu``
    and refines it with a bracketed root solve in ``r``.  ``dr_sign=+1``
    launches upward; it is handled through the equatorial reflection.
    """
    if dr_sign == 1:
        cp = first_h_conjugate(spec, 2 * spec.a - u, nu, -1, max_branches, n_scan)
        return ConjugatePoint(2 * spec.a - cp.r, cp.theta, cp.s, nu, u, cp.branch, 1)
    if dr_sign != -1:
        raise DomainError("dr_sign must be -1 or +1")
    _check_start(spec, u, nu)
    step = _nu_step(spec, u, nu)
    br = _Branches(spec, u, nu, method="fixed")
    # branch 0 only moves toward the tangent parallel and theta grows with nu
    # there, so the first nontrivial zero lies on branch 1 or later
    t = _scan_fractions(n_scan)
    for k in range(1, max_branches + 1):
        radii = br.geodesic_order(k, t)
        g = np.array([_dtheta_dnu(spec, u, nu, k, r, step) for r in radii])
        flips = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]
        if len(flips) == 0:
            continue
        i = flips[0]
        r_c = brentq(lambda r: _dtheta_dnu(spec, u, nu, k, r, step), radii[i], radii[i + 1],
                     xtol=1e-13, rtol=1e-12)
        exact = _Branches(spec, u, nu, method="adaptive")
        return ConjugatePoint(float(r_c), exact.theta(k, r_c), exact.s(k, r_c), nu, u, k, -1)
    raise NoConjugatePointError(f"no conjugate point within {max_branches} branches (u={u}, nu={nu})")


def first_F_conjugate(nav: NavigationData, u: float, nu: float, direction: str = "forward",
                      dr_sign: int = -1, **kw) -> ConjugatePoint:
    """First conjugate point of the wind-deviated geodesic: ``theta_c +/- mu s_c``."""
    sgn = {"forward": 1.0, "backward": -1.0}.get(direction)
    if sgn is None:
        raise ValueError("direction must be 'forward' or 'backward'")
    cp = first_h_conjugate(nav.profile, u, nu, dr_sign, **kw)
    return ConjugatePoint(cp.r, cp.theta + sgn * nav.mu * cp.s, cp.s, nu, u, cp.branch, dr_sign)


def meridian_conjugate_distance(spec: ProfileSpec, u: float, through: str = "p",
                                s_max: float | None = None) -> float:
    """Arclength to the first conjugate point along the meridian from radius ``u``.

    Solves ``j'' + G(r(s)) j = 0``, ``j(0)=0, j'(0)=1`` for the normal Jacobi
    field; ``through`` picks the meridian over pole ``p`` (r decreasing) or ``q``.
    """
    two_a = 2 * spec.a
    start = u if through == "p" else two_a - u
    s_max = s_max or 2 * two_a
    eps = 1e-7 * spec.a

    def G(s):
        # unfolded meridian: distance to the first pole is |start - s|, curvature
        # is symmetric through the pole and through the equator
        r = abs(start - s) % (2 * two_a)
        r = r if r <= two_a else 2 * two_a - r
        r = min(max(r, eps), two_a - eps)
        return float(gaussian_curvature(spec, r))

    def rhs(s, y):
        return (y[1], -G(s) * y[0])

    def hit(s, y):
        return y[0]

    hit.terminal, hit.direction = True, -1
    sol = solve_ivp(rhs, (0, s_max), (0.0, 1.0), method="RK45", rtol=1e-11, atol=1e-13,
                    events=hit, first_step=1e-6, max_step=spec.a / 50)
    if not len(sol.t_events[0]):
        raise NoConjugatePointError("no conjugate point along the meridian")
    return float(sol.t_events[0][0])


# -- curvature classes ------------------------------------------------------

class CurvatureKind(str, Enum):
    CONSTANT = "Constant"
    NON_INCREASING = "NonIncreasing"
    NON_DECREASING = "NonDecreasing"
    NON_MONOTONE = "NonMonotone"


@dataclass(frozen=True)
class CurvatureClass:
    value: CurvatureKind
    tolerance: float
    stable: bool


def _classify_once(spec: ProfileSpec, grid_n: int, tol: float) -> CurvatureKind:
    r = spec.a * np.arange(1, grid_n + 1) / grid_n
    G = gaussian_curvature(spec, r)
    d = np.diff(G)
    if np.sum(np.abs(d)) < 1e-9 * abs(G[-1]):
        return CurvatureKind.CONSTANT
    if np.all(d >= -tol):
        return CurvatureKind.NON_DECREASING
    if np.all(d <= tol):
        return CurvatureKind.NON_INCREASING
    return CurvatureKind.NON_MONOTONE


def classify_curvature(spec: ProfileSpec, grid_n: int = 256, tol: float = 1e-9) -> CurvatureClass:
    """Monotonicity of ``G`` along a meridian from the pole to the equator."""
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    if spec.family is Family.ROUND:
        return CurvatureClass(CurvatureKind.CONSTANT, tol, True)
    coarse = _classify_once(spec, grid_n, tol)
    fine = _classify_once(spec, 2 * grid_n, tol)
    return CurvatureClass(coarse, tol, coarse == fine)


# -- cut loci ---------------------------------------------------------------

class ArcKind(str, Enum):
    SINGLE_POINT = "SinglePoint"
    PARALLEL_SUBARC = "ParallelSubarc"
    MERIDIAN_SUBARC = "MeridianSubarc"


@dataclass(frozen=True)
class CutLocusArc:
    """Cut locus of a point, on the universal cover (theta unwrapped).

    ``r`` is the radius of a point or parallel; for a meridian subarc
    ``r_interval`` holds its radial extent and ``theta`` its base angle.
    ``samples`` is an ``(n, 2)`` array of ``(r, theta)`` points on the locus.
    """

    kind: ArcKind
    metric: str
    r: float | None = None
    theta: float | None = None
    theta_interval: tuple[float, float] | None = None
    r_interval: tuple[float, float] | None = None
    samples: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    shift: float = 0.0

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value, "metric": self.metric,
                               "r": self.r, "theta": self.theta}
        if self.theta_interval is not None:
            lo, hi = self.theta_interval
            out["theta_interval"] = [lo, hi]
            out["theta_interval_mod_2pi"] = [lo % TWO_PI, hi % TWO_PI]
        if self.r_interval is not None:
            out["r_interval"] = list(self.r_interval)
        if self.theta is not None:
            out["theta_mod_2pi"] = self.theta % TWO_PI
        samples = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        out["samples"] = samples.tolist()
        out["samples_mod_2pi"] = np.column_stack([samples[:, 0], samples[:, 1] % TWO_PI]).tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "CutLocusArc":
        return cls(
            kind=ArcKind(obj["kind"]), metric=obj["metric"], r=obj.get("r"),
            theta=obj.get("theta"),
            theta_interval=tuple(obj["theta_interval"]) if obj.get("theta_interval") else None,
            r_interval=tuple(obj["r_interval"]) if obj.get("r_interval") else None,
            samples=np.asarray(obj.get("samples", []), dtype=float).reshape(-1, 2),
        )


def _equator_limit(spec: ProfileSpec) -> tuple[float, float]:
    # nu -> m(a): small oscillations about the equator have s-half-period
    # pi / sqrt(G(a)) while theta advances at 1/m(a)
    g = float(gaussian_curvature(spec, spec.a))
    if g <= 0:
        raise HypothesisError("equator curvature must be positive")
    s_half = math.pi / math.sqrt(g)
    return s_half / spec.m_at_equator(), s_half


def tangent_conjugate(spec: ProfileSpec, u: float) -> ConjugatePoint:
    """Conjugate point of ``(u, 0)`` along the geodesic tangent to its parallel.

    Lies on the antipodal parallel at angle ``H(m(u))``; its distance is the
    h-length of the geodesic from ``u`` to ``2a - u`` with ``nu = m(u)``.
    """
    if not 0 < u < 2 * spec.a:
        raise DomainError("start radius must lie strictly between the poles")
    if abs(u - spec.a) < 1e-9 * spec.a:
        H, s = _equator_limit(spec)
        return ConjugatePoint(spec.a, H, s, spec.m_at_equator(), u, 1, 0)
    nu = spec.m(u)
    H = h_half_period(spec, nu)
    s = h_arc_length(spec, nu, u, 2 * spec.a - u)
    return ConjugatePoint(2 * spec.a - u, H, s, nu, u, 1, 0)


def pencil_cut_parallel(spec: ProfileSpec, u: float, nu: float) -> tuple[float, float]:
    """``(theta, s)`` where the downward and upward geodesics with Clairaut constant
    ``nu`` from ``(u, 0)`` meet on the antipodal parallel."""
    br = _Branches(spec, u, nu)
    return br.theta(1, 2 * spec.a - u), br.s(1, 2 * spec.a - u)


def _parallel_arc(nav: NavigationData, u: float, theta_x: float, n_samples: int) -> CutLocusArc:
    spec, mu = nav.profile, nav.mu
    tc = tangent_conjugate(spec, u)
    shift = mu * tc.s
    lo, hi = tc.theta + shift, TWO_PI - tc.theta + shift
    samples = []
    top = min(spec.m(u), spec.m_at_equator())
    if n_samples and abs(u - spec.a) > 1e-9 * spec.a:
        for nu in top * np.linspace(0, 1, n_samples + 2)[1:-1]:
            th, s = pencil_cut_parallel(spec, u, nu)
            samples.append((2 * spec.a - u, theta_x + th + mu * s))
            samples.append((2 * spec.a - u, theta_x + TWO_PI - th + mu * s))
    samples += [(2 * spec.a - u, theta_x + lo), (2 * spec.a - u, theta_x + hi)]
    samples = np.array(sorted(samples, key=lambda p: p[1]))
    return CutLocusArc(ArcKind.PARALLEL_SUBARC, "F" if mu > 0 else "h", r=2 * spec.a - u,
                       theta_interval=(theta_x + lo, theta_x + hi), samples=samples, shift=shift)


def meridian_crossing(spec: ProfileSpec, u: float, nu: float, dr_sign: int = -1,
                      target: float = math.pi, max_branches: int = 6) -> tuple[float, float]:
    """``(r, s)`` where the geodesic from ``(u, 0)`` first reaches ``theta = target``."""
    if dr_sign == 1:
        r, s = meridian_crossing(spec, 2 * spec.a - u, nu, -1, target, max_branches)
        return 2 * spec.a - r, s
    br = _Branches(spec, u, nu)
    for k in range(max_branches + 1):
        lo, hi = br.geodesic_order(k, 0.0), br.geodesic_order(k, 1.0)
        th_end = br.theta(k, float(hi))
        if th_end >= target:
            r = brentq(lambda rr: br.theta(k, rr) - target, min(lo, hi), max(lo, hi),
                       xtol=1e-14, rtol=1e-13)
            return float(r), br.s(k, r)
    raise NoConjugatePointError(f"theta={target} not reached within {max_branches} branches")


def _meridian_arc(nav: NavigationData, u: float, theta_x: float, n_samples: int) -> CutLocusArc:
    spec, mu = nav.profile, nav.mu
    two_a = 2 * spec.a
    # endpoints: conjugate points along the two meridians, continued past the poles
    s_p = meridian_conjugate_distance(spec, u, "p")
    s_q = meridian_conjugate_distance(spec, u, "q")
    c_lo, c_hi = s_p - u, two_a - (s_q - (two_a - u))
    if not 0 < c_lo <= c_hi < two_a:
        raise HypothesisError("meridian conjugate points do not bound a subarc of the opposite meridian")
    pts = [(c_lo, math.pi + mu * s_p), (c_hi, math.pi + mu * s_q)]
    top = min(spec.m(u), spec.m_at_equator())
    for sgn in (-1, 1):
        for nu in top * np.linspace(0, 1, n_samples + 2)[1:-1]:
            r, s = meridian_crossing(spec, u, nu, sgn)
            pts.append((r, math.pi + mu * s))
    samples = np.array(sorted(pts))
    samples[:, 1] += theta_x
    return CutLocusArc(ArcKind.MERIDIAN_SUBARC, "F" if mu > 0 else "h", theta=theta_x + math.pi,
                       r_interval=(c_lo, c_hi), samples=samples)


def _check_point(nav: NavigationData, x) -> tuple[float, float]:
    u, theta_x = float(x[0]), float(x[1])
    if not 0 < u < 2 * nav.a:
        raise DomainError("cut loci are computed for points off the poles")
    return u, theta_x


def cut_locus_theorem(nav: NavigationData, x, n_samples: int = 32,
                      curvature: CurvatureClass | None = None) -> CutLocusArc:
    """Cut locus of ``x`` predicted from the monotonicity class of the curvature.

    Constant curvature gives a single point; non-decreasing curvature a
    subarc of the antipodal parallel; non-increasing a subarc of the opposite
    bending meridian.  Raises :class:`HypothesisError` otherwise.
    """
    u, theta_x = _check_point(nav, x)
    spec, mu = nav.profile, nav.mu
    cls = curvature or classify_curvature(spec)
    metric = "F" if mu > 0 else "h"
    if cls.value is CurvatureKind.CONSTANT:
        g = float(gaussian_curvature(spec, spec.a))
        R = 1 / math.sqrt(g)
        theta = theta_x + math.pi * (1 + mu * R)
        return CutLocusArc(ArcKind.SINGLE_POINT, metric, r=2 * spec.a - u, theta=theta,
                           samples=np.array([[2 * spec.a - u, theta]]), shift=mu * math.pi * R)
    if cls.value is CurvatureKind.NON_DECREASING:
        return _parallel_arc(nav, u, theta_x, n_samples)
    if cls.value is CurvatureKind.NON_INCREASING:
        return _meridian_arc(nav, u, theta_x, n_samples)
    raise HypothesisError("curvature is not monotone along the meridian; "
                          "use the equator-case theorem or the mesh oracle")


def half_period_decreasing(spec: ProfileSpec, n: int = 400) -> bool:
    """Sufficient premise for the equator-case theorem: ``H' < 0`` on ``(0, m(a))``."""
    top = spec.m_at_equator()
    nu = top * np.linspace(0, 1, n + 2)[1:-1]
    if spec.family in (Family.EXAMPLE1, Family.EXAMPLE2):
        return bool(np.all(closed_form_H(spec, nu, order=1) < 0))
    # a coarse pass catches clear increases before the expensive fine one
    coarse = top * np.linspace(0, 1, 42)[1:-1]
    if np.any(np.diff([h_half_period(spec, v) for v in coarse]) > 1e-9):
        return False
    H = np.array([h_half_period(spec, v) for v in nu])
    return bool(np.all(numerical_derivatives(H, nu[1] - nu[0], 1) < 0))


def cut_locus_equator_case(nav: NavigationData, x, n_samples: int = 32,
                           premise: bool | None = None) -> CutLocusArc:
    """Cut locus when equator points have equatorial cut loci (no curvature assumption).

    The result is a subarc of the antipodal parallel whose ends are the
    forward and backward wind-shifted tangent conjugate points.  ``premise``
    may be supplied (e.g. from the mesh oracle); otherwise ``H' < 0`` is checked.
    """
    u, theta_x = _check_point(nav, x)
    ok = half_period_decreasing(nav.profile) if premise is None else premise
    if not ok:
        raise HypothesisError("equator cut loci are not known to be equatorial for this profile")
    return _parallel_arc(nav, u, theta_x, n_samples)


def pole_cut(nav: NavigationData) -> tuple[tuple[float, float], float]:
    """Cut point of the pole ``p`` (the other pole) and its Randers distance ``2a``."""
    return (2 * nav.a, 0.0), 2 * nav.a
