"""Radial integrals along geodesics with square-root endpoint singularities.

Both integrands below blow up like ``(tau - xi)^(-1/2)`` where the geodesic is
tangent to a parallel (``m(tau) = |nu|``).  Each integration interval is split
at its midpoint and each half is mapped with ``tau = end +/- L w^2``, which
cancels the singularity at either end and is harmless where there is none.
"""
from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError
from .surfaces import ProfileSpec

_KINDS = ("theta", "length")


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _integrand(spec: ProfileSpec, nu: float, kind: str, end: float, d):
    # m(tau)^2 - nu^2 is assembled as (m(tau) - m(end)) + (m(end) - |nu|) with the
    # first difference taken as an integral of m'; subtracting two nearly equal
    # values of m would lose all relative accuracy next to a tangency
    x, w = _gauss_legendre(10)
    dm = d * (spec.derivs(end + np.multiply.outer(d, x))[1] @ w)
    m_end = spec.m(end)
    resid = m_end - abs(nu)
    if abs(resid) < 64 * np.finfo(float).eps * m_end:
        # end is a tangency up to rounding; an O(eps) residual would otherwise
        # leak into the integral at O(sqrt(eps))
        resid = 0.0
    m = m_end + dm
    gap = (dm + resid) * (m + abs(nu))
    gap = np.maximum(gap, 1e-300)
    if kind == "theta":
        return nu / (m * np.sqrt(gap))
    return m / np.sqrt(gap)


def _half(spec, nu, kind, end, length, w):
    # tau = end + length * w^2 ; d tau = 2 length w dw ; length may be negative.
    # The offset is passed rather than tau so no rounding of tau leaks into the gap.
    return _integrand(spec, nu, kind, end, length * w * w) * 2 * abs(length) * w


def check_traversable(spec: ProfileSpec, nu: float, r1: float, r2: float, n: int = 257) -> None:
    """Raise unless ``m > |nu|`` strictly inside ``(r1, r2)``."""
    lo, hi = min(r1, r2), max(r1, r2)
    if hi - lo <= 0:
        return
    t = np.linspace(lo, hi, n)[1:-1]
    slack = spec.m(t) - abs(nu)
    if np.any(slack < -1e-13 * max(1.0, abs(nu))):
        raise DomainError(f"geodesic with nu={nu} cannot traverse [{lo}, {hi}] (m < |nu| inside)")


def radial_integral(spec: ProfileSpec, nu: float, r1: float, r2: float, kind: str = "theta",
                    method: str = "adaptive", n_nodes: int = 128, check: bool = True) -> float:
    """Signed integral from ``r1`` to ``r2`` of the theta- or length-density.

    ``kind="theta"``: ``nu / (m sqrt(m^2 - nu^2))`` (angle swept per unit ``r``).
    ``kind="length"``: ``m / sqrt(m^2 - nu^2)`` (``h``-arclength per unit ``r``).

    ``method="adaptive"`` uses QUADPACK (Gauss-Kronrod) on each half;
    ``method="fixed"`` uses an ``n_nodes`` Gauss-Legendre rule, which is a
    smooth function of ``nu`` and therefore safe to finite-difference.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    if r1 == r2:
        return 0.0
    if kind == "theta" and nu == 0:
        return 0.0
    sign = 1.0 if r2 > r1 else -1.0
    lo, hi = (r1, r2) if r2 > r1 else (r2, r1)
    if check:
        check_traversable(spec, nu, lo, hi)
    mid = 0.5 * (lo + hi)
    halves = ((lo, mid - lo), (hi, mid - hi))
    total = 0.0
    if method == "fixed":
        x, w = _gauss_legendre(n_nodes)
        for end, length in halves:
            total += float(np.dot(w, _half(spec, nu, kind, end, length, x)))
    elif method == "adaptive":
        with warnings.catch_warnings():
            # roundoff warnings fire once the 1e-13 target is met to machine precision
            warnings.simplefilter("ignore", IntegrationWarning)
            for end, length in halves:
                val, _ = quad(lambda t: _half(spec, nu, kind, end, length, t), 0.0, 1.0,
                              epsabs=1e-13, epsrel=1e-12, limit=400)
                total += val
    else:
        raise ValueError(f"unknown method {method!r}")
    return sign * total


def h_arc_length(spec: ProfileSpec, nu: float, r1: float, r2: float, **kw) -> float:
    """``h``-length of a monotone-in-``r`` geodesic piece between radii ``r1`` and ``r2``."""
    return abs(radial_integral(spec, nu, r1, r2, kind="length", **kw))
