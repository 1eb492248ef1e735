"""Half-period functions H, H_F+/- and their convexity.

``H(nu)`` is the theta-advance of an equator-launched h-geodesic between
consecutive equator crossings; the Randers versions shift it by
``psi(nu) = 2 mu (a - xi(nu))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, UnsupportedProfileError
from .quadrature import radial_integral
from .surfaces import Family, NavigationData, ProfileSpec, max_wind


@lru_cache(maxsize=64)
def _rising_branch_ok(spec: ProfileSpec) -> bool:
    r = np.linspace(0, spec.a, 4097)[1:-1]
    return bool(np.all(spec.derivs(r)[1] > 0))


def _check_nu(spec: ProfileSpec, nu: float) -> None:
    top = spec.m_at_equator()
    if not 0 < nu < top:
        raise DomainError(f"nu={nu} outside (0, m(a)) = (0, {top})")


def xi(spec: ProfileSpec, nu: float) -> float:
    """Radius in ``(0, a)`` of the parallel tangent to geodesics with Clairaut constant ``nu``."""
    _check_nu(spec, nu)
    if not _rising_branch_ok(spec):
        raise UnsupportedProfileError("m must be strictly increasing on (0, a)")
    f = lambda r: spec.m(r) - nu
    r = brentq(f, 0.0, spec.a, xtol=1e-15, rtol=8.9e-16, maxiter=500)
    for _ in range(2):
        m0, m1, _ = spec.derivs(r)
        if m1 <= 0:
            break
        step = (m0 - nu) / m1
        if abs(step) > 1e-10:
            break
        r -= step
    return float(min(max(r, 0.0), spec.a))


def xi_squared(spec: ProfileSpec, nu: float) -> float:
    """Tangency radius under the ``xi(nu) = nu^2`` convention used by the closed forms
    of the two example families (not the inverse of ``m``)."""
    if spec.family not in (Family.EXAMPLE1, Family.EXAMPLE2):
        raise UnsupportedProfileError("the nu^2 convention only exists for the example families")
    _check_nu(spec, nu)
    return nu * nu


def h_half_period(spec: ProfileSpec, nu: float, method: str = "adaptive") -> float:
    """``H(nu) = 2 * int_{xi(nu)}^{a} nu / (m sqrt(m^2 - nu^2)) dtau``."""
    x = xi(spec, nu)
    return 2.0 * radial_integral(spec, nu, x, spec.a, kind="theta", method=method, check=False)


def psi(nav: NavigationData, nu: float, convention: str = "exact") -> float:
    """Wind shift ``2 mu (a - xi(nu))`` of the half period."""
    x = xi(nav.profile, nu) if convention == "exact" else xi_squared(nav.profile, nu)
    return 2.0 * nav.mu * (nav.a - x)


def f_half_period(nav: NavigationData, nu: float, direction: str = "forward",
                  convention: str = "exact") -> float:
    """Randers half period ``H +/- psi``; ``convention="squared"`` uses ``xi = nu^2``."""
    sgn = {"forward": 1.0, "backward": -1.0}.get(direction)
    if sgn is None:
        raise ValueError("direction must be 'forward' or 'backward'")
    return h_half_period(nav.profile, nu) + sgn * psi(nav, nu, convention)


# -- closed forms for the example families --------------------------------

def closed_form_H(spec: ProfileSpec, nu, order: int = 0):
    """Closed-form ``H``, ``H'`` or ``H''`` for the two example families."""
    nu = np.asarray(nu, dtype=float)
    lam = spec.lam
    if spec.family is Family.EXAMPLE1:
        k = math.sqrt(lam + 1)
        q = lam + 1 + lam * nu * nu
        return (
            math.pi - lam * math.pi * nu / (k * np.sqrt(q)),
            -math.pi * lam * k / q**1.5,
            3 * math.pi * lam * lam * nu * k / q**2.5,
        )[order]
    if spec.family is Family.EXAMPLE2:
        q = 1 + lam * nu * nu
        return (
            math.pi - math.pi * nu * lam / np.sqrt(q),
            -math.pi * lam / q**1.5,
            3 * math.pi * lam * lam * nu / q**2.5,
        )[order]
    if spec.family is Family.ROUND:
        return (np.full_like(nu, math.pi), np.zeros_like(nu), np.zeros_like(nu))[order]
    raise UnsupportedProfileError("no closed form for custom profiles")


def closed_form_HF_plus(nav: NavigationData, nu, order: int = 0):
    """Closed-form forward half period under the ``xi = nu^2`` convention.

    For ``mu = mu_max / 2`` this is ``H + (1/sqrt(lam+1)) (pi/2 - nu^2)`` on
    the first example family and ``H + sqrt(1-lam) (pi/2 - nu^2)`` on the second.
    """
    nu = np.asarray(nu, dtype=float)
    mu, a = nav.mu, nav.a
    shift = (2 * mu * (a - nu * nu), -4 * mu * nu, np.full_like(nu, -4 * mu))[order]
    return closed_form_H(nav.profile, nu, order) + shift


# -- curves and derivatives -----------------------------------------------

def numerical_derivatives(values, h: float, order: int = 1) -> np.ndarray:
    """Derivative of samples on a uniform grid of spacing ``h``.

    Fourth-order central stencils inside; five-point one-sided stencils at
    the two points nearest each end.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or len(f) < 5:
        raise DomainError("need at least 5 uniformly spaced samples")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    out = np.empty_like(f)
    if order == 1:
        out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
        lead = np.array([[-25, 48, -36, 16, -3], [-3, -10, 18, -6, 1]]) / (12 * h)
        out[0], out[1] = lead @ f[:5]
        out[-1], out[-2] = -(lead @ f[:-6:-1])
    else:
        out[2:-2] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
        lead = np.array([[35, -104, 114, -56, 11], [11, -20, 6, 4, -1]]) / (12 * h * h)
        out[0], out[1] = lead @ f[:5]
        out[-1], out[-2] = lead @ f[:-6:-1]
    return out


@dataclass(frozen=True)
class HalfPeriodCurve:
    nu_grid: np.ndarray
    H: np.ndarray
    HF_plus: np.ndarray
    HF_minus: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    mu: float = 0.0

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.nu_grid, self.H, self.HF_plus, self.HF_minus]),
                   delimiter=",", fmt="%.12e", comments="", header="nu,H,HF_plus,HF_minus")

    def second_derivative_csv(self, path, d2H, d2HF) -> None:
        np.savetxt(path, np.column_stack([self.nu_grid, d2H, d2HF]), delimiter=",",
                   fmt="%.12e", comments="", header="nu,d2H,d2HF_plus")


def half_period_curve(nav: NavigationData, nu_grid: Sequence[float],
                      convention: str = "exact", derivative_of: str = "HF_plus") -> HalfPeriodCurve:
    """Sample ``H`` and ``H_F+/-`` on ``nu_grid`` (numerical derivatives if uniform)."""
    nu = np.asarray(nu_grid, dtype=float)
    H = np.array([h_half_period(nav.profile, v) for v in nu])
    shift = np.array([psi(nav, v, convention) for v in nu])
    curve = {"H": H, "HF_plus": H + shift, "HF_minus": H - shift}
    d1 = d2 = None
    steps = np.diff(nu)
    if len(nu) >= 5 and np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        d1 = numerical_derivatives(curve[derivative_of], steps[0], 1)
        d2 = numerical_derivatives(curve[derivative_of], steps[0], 2)
    return HalfPeriodCurve(nu, H, curve["HF_plus"], curve["HF_minus"], d1, d2, nav.mu)


# -- convexity scans --------------------------------------------------------

@dataclass(frozen=True)
class ConvexityRow:
    lam: float
    mu: float
    d2_min: float
    d2_max: float
    sign: str  # "nonpositive" | "mixed" | "nonnegative"


def _classify_sign(lo: float, hi: float, tol: float = 0.0) -> str:
    if hi <= tol:
        return "nonpositive"
    if lo >= -tol:
        return "nonnegative"
    return "mixed"


def example_profile(family: str | Family, lam: float) -> ProfileSpec:
    fam = Family(family)
    if fam is Family.EXAMPLE1:
        return ProfileSpec.example1(lam)
    if fam is Family.EXAMPLE2:
        return ProfileSpec.example2(lam)
    raise UnsupportedProfileError("convexity scans are defined for example1/example2")


def convexity_scan(family: str | Family, lam_grid: Sequence[float], nu_resolution: int = 2001,
                   source: str = "analytic", mu_fraction: float = 0.5) -> list[ConvexityRow]:
    """Sign of ``(H_F+)''`` over ``nu in (0, m(a))`` for each ``lam``.

    The wind is fixed at ``mu = mu_fraction * mu_max(lam)``.  ``source`` picks
    the closed-form second derivative (``"analytic"``), numerical
    differentiation of the quadrature ``H`` with the ``xi = nu^2`` shift
    (``"numeric"``), or of ``H + 2 mu (a - xi(nu))`` with the true inverse
    ``xi`` (``"exact"``).
    """
    rows = []
    for lam in lam_grid:
        spec = example_profile(family, float(lam))
        nav = NavigationData(spec, mu_fraction * max_wind(spec))
        top = spec.m_at_equator()
        if source == "analytic":
            nu = np.linspace(0, top, nu_resolution + 2)[1:-1]
            d2 = closed_form_HF_plus(nav, nu, order=2)
        elif source in ("numeric", "exact"):
            # keep the stencil away from nu = m(a), where xi has a square-root branch
            nu = np.linspace(0, top, nu_resolution + 2)[1:-1]
            nu = nu[nu < top * (1 - 1e-3)]
            conv = "squared" if source == "numeric" else "exact"
            curve = half_period_curve(nav, nu, convention=conv)
            d2 = curve.d2
        else:
            raise ValueError(f"unknown source {source!r}")
        lo, hi = float(np.min(d2)), float(np.max(d2))
        rows.append(ConvexityRow(float(lam), nav.mu, lo, hi, _classify_sign(lo, hi)))
    return rows


def threshold_bracket(rows: Sequence[ConvexityRow]) -> tuple[float, float] | None:
    """``(last nonpositive lam, first non-nonpositive lam)`` if the sign flips once."""
    for prev, cur in zip(rows, rows[1:]):
        if prev.sign == "nonpositive" and cur.sign != "nonpositive":
            return prev.lam, cur.lam
    return None
