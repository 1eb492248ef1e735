"""Profiles of 2-spheres of revolution and their Zermelo-induced Randers data.

A sphere of revolution carries the metric ``h = dr^2 + m(r)^2 dtheta^2`` with
``r`` in ``[0, 2a]`` measured from the pole ``p``.  Blowing the rotational wind
``W = mu * d/dtheta`` over it yields the Randers metric ``F = alpha + beta``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Mapping

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import ConvexityError, DomainError, UnsupportedProfileError

# radial margin kept between integrators and the poles
POLE_EPS = 1e-9


class Family(str, Enum):
    ROUND = "round"
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ProfileSpec:
    """Closed-form or tabulated profile ``m`` on ``[0, 2a]``.

    Use the ``round``, ``example1``, ``example2`` and ``custom`` constructors
    rather than building instances by hand.
    """

    family: Family
    a: float
    lam: float = 0.0
    radius: float = 1.0
    table: tuple[tuple[float, float], ...] | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def round(cls, radius: float = 1.0) -> "ProfileSpec":
        if not radius > 0:
            raise DomainError(f"radius must be positive, got {radius}")
        return cls(Family.ROUND, a=math.pi * radius / 2, radius=float(radius))

    @classmethod
    def example1(cls, lam: float) -> "ProfileSpec":
        """``m = sqrt(lam+1) sin r / sqrt(1 + lam cos^2 r)``, ``lam >= 0``."""
        if not lam >= 0:
            raise DomainError(f"example1 needs lambda >= 0, got {lam}")
        return cls(Family.EXAMPLE1, a=math.pi / 2, lam=float(lam))

    @classmethod
    def example2(cls, lam: float) -> "ProfileSpec":
        """``m = sin r / sqrt(1 - lam sin^2 r)``, ``0 < lam < 1``."""
        if not 0 < lam < 1:
            raise DomainError(f"example2 needs 0 < lambda < 1, got {lam}")
        return cls(Family.EXAMPLE2, a=math.pi / 2, lam=float(lam))

    @classmethod
    def custom(cls, table, a: float | None = None) -> "ProfileSpec":
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 8:
            raise DomainError("custom table needs at least 8 rows of (r, m)")
        r, m = arr[:, 0], arr[:, 1]
        if np.any(np.diff(r) <= 0):
            raise DomainError("custom table radii must be strictly increasing")
        if a is None:
            a = r[-1] / 2
        if abs(r[0]) > 1e-12 or abs(r[-1] - 2 * a) > 1e-9:
            raise DomainError("custom table must span [0, 2a]")
        if abs(m[0]) > 1e-9 or abs(m[-1]) > 1e-9:
            raise UnsupportedProfileError("m must vanish at both poles")
        if np.any(m[1:-1] <= 0):
            raise UnsupportedProfileError("m must be positive away from the poles")
        return cls(Family.CUSTOM, a=float(a), table=tuple(map(tuple, arr.tolist())))

    # -- evaluation ---------------------------------------------------------
    @cached_property
    def _spline(self) -> CubicSpline:
        # Odd reflection through both poles makes m a 4a-periodic odd function,
        # so the periodic spline has m''=0 at the poles and G stays finite there.
        arr = np.asarray(self.table)
        r, m = arr[:, 0], arr[:, 1].copy()
        m[0] = m[-1] = 0.0
        x = np.concatenate([-r[:0:-1], r])
        y = np.concatenate([-m[:0:-1], m])
        return CubicSpline(x, y, bc_type="periodic")

    def _check_domain(self, r: np.ndarray) -> None:
        tol = 1e-12 * max(1.0, self.a)
        if np.any(r < -tol) or np.any(r > 2 * self.a + tol):
            raise DomainError(f"r outside [0, 2a] = [0, {2 * self.a}]")

    def derivs(self, r):
        """Return ``(m, m', m'')`` at ``r`` (scalar or array)."""
        r = np.asarray(r, dtype=float)
        self._check_domain(r)
        lam = self.lam
        if self.family is Family.ROUND:
            R = self.radius
            s, c = np.sin(r / R), np.cos(r / R)
            out = (R * s, c, -s / R)
        elif self.family is Family.EXAMPLE1:
            s, c = np.sin(r), np.cos(r)
            q = 1 + lam * c * c
            k = math.sqrt(lam + 1)
            out = (
                k * s / np.sqrt(q),
                (lam + 1) * k * c / q**1.5,
                k * (lam + 1) * (2 * lam * c * c - 1) * s / q**2.5,
            )
        elif self.family is Family.EXAMPLE2:
            s, c = np.sin(r), np.cos(r)
            q = 1 - lam * s * s
            out = (
                s / np.sqrt(q),
                c / q**1.5,
                (2 * lam * c * c + lam - 1) * s / q**2.5,
            )
        else:
            sp = self._spline
            out = (sp(r), sp(r, 1), sp(r, 2))
        if out[0].ndim == 0:
            return tuple(float(v) for v in out)
        return out

    def m(self, r):
        return self.derivs(r)[0]

    def m_at_equator(self) -> float:
        return float(self.m(self.a))

    @cached_property
    def m_max(self) -> float:
        """Maximum of ``m`` on ``[0, 2a]``."""
        if self.family is not Family.CUSTOM:
            return self.m_at_equator()
        # golden section on a coarse bracket, then Newton on m' = 0
        grid = np.linspace(0, 2 * self.a, 2049)
        i = int(np.clip(np.argmax(self.m(grid)), 1, len(grid) - 2))
        try:
            res = minimize_scalar(lambda t: -self.m(t), method="golden",
                                  bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                  options={"xtol": 1e-10})
            r = float(np.clip(res.x, 0, 2 * self.a))
        except ValueError:  # flat top, bracket not strict
            r = float(grid[i])
        for _ in range(3):
            m0, m1, m2 = self.derivs(r)
            if m2 >= 0:
                break
            r = float(np.clip(r - m1 / m2, 0, 2 * self.a))
        return float(max(self.m(r), np.max(self.m(grid))))

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value, "a": self.a}
        if self.family is Family.ROUND:
            out["radius"] = self.radius
        elif self.family in (Family.EXAMPLE1, Family.EXAMPLE2):
            out["lambda"] = self.lam
        else:
            out["table"] = [list(row) for row in self.table]
        return out


def eval_profile(spec: ProfileSpec, r):
    """``(m, m', m'')`` at ``r``; raises :class:`DomainError` outside ``[0, 2a]``."""
    return spec.derivs(r)


def gaussian_curvature(spec: ProfileSpec, r):
    """Gaussian curvature ``-m''/m`` of ``h``; poles are rejected."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= 2 * spec.a):
        raise DomainError("curvature is evaluated in polar coordinates, away from the poles")
    m, _, m2 = spec.derivs(r)
    return -m2 / m


def max_wind(spec: ProfileSpec) -> float:
    """Supremum of admissible wind strengths, ``1 / max m``."""
    if spec.family is Family.ROUND:
        return 1.0 / spec.radius
    if spec.family is Family.EXAMPLE1:
        return 1.0 / math.sqrt(spec.lam + 1)
    if spec.family is Family.EXAMPLE2:
        return math.sqrt(1 - spec.lam)
    return 1.0 / spec.m_max


def symmetry_residual(spec: ProfileSpec, n: int = 1000) -> float:
    """``max |m(r) - m(2a - r)|`` over an ``n``-point grid."""
    r = np.linspace(0, 2 * spec.a, n)
    return float(np.max(np.abs(spec.m(r) - spec.m(2 * spec.a - r))))


@dataclass(frozen=True)
class NavigationData:
    """Profile plus rotational wind strength ``mu``."""

    profile: ProfileSpec
    mu: float = 0.0

    def __post_init__(self):
        if not self.mu >= 0:
            raise ConvexityError(f"wind strength must be non-negative, got {self.mu}")
        bound = max_wind(self.profile)
        if self.mu >= bound:
            raise ConvexityError(f"mu={self.mu} violates strong convexity bound mu < {bound}")

    @property
    def a(self) -> float:
        return self.profile.a

    def with_mu(self, mu: float) -> "NavigationData":
        return NavigationData(self.profile, mu)


@dataclass(frozen=True)
class MetricCoefficients:
    a11: Any
    a22: Any
    b2: Any

    @property
    def b_norm_sq(self):
        """Riemannian ``a``-norm squared of ``beta``: ``a^22 b2^2``."""
        return self.b2**2 / self.a22


def randers_coefficients(nav: NavigationData, r) -> MetricCoefficients:
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= 2 * nav.a):
        raise DomainError("Randers coefficients are defined away from the poles")
    m = nav.profile.m(r)
    lam = 1 - (nav.mu * m) ** 2
    if np.any(lam <= 0):
        raise ConvexityError("mu * m(r) >= 1")
    return MetricCoefficients(a11=1 / lam, a22=m * m / lam**2, b2=-nav.mu * m * m / lam)


def finsler_norm(nav: NavigationData, r, y, formula: str = "randers"):
    """Randers norm ``F(r, y)`` of ``y = (y_r, y_theta)``.

    ``formula="randers"`` evaluates ``alpha + beta`` from the coefficient
    matrix; ``formula="navigation"`` solves the Zermelo relation directly.
    The two must agree to rounding.
    """
    yr, yt = (np.asarray(c, dtype=float) for c in y)
    if np.any((yr == 0) & (yt == 0)):
        raise DomainError("F is not evaluated on the zero vector")
    if formula == "randers":
        c = randers_coefficients(nav, r)
        return np.sqrt(c.a11 * yr**2 + c.a22 * yt**2) + c.b2 * yt
    if formula == "navigation":
        m = nav.profile.m(r)
        lam = 1 - (nav.mu * m) ** 2
        w0 = nav.mu * m * m * yt
        hh = yr**2 + m * m * yt**2
        return (np.sqrt(lam * hh + w0 * w0) - w0) / lam
    raise ValueError(f"unknown formula {formula!r}")


def h_norm(spec: ProfileSpec, r, y):
    yr, yt = y
    return np.sqrt(np.asarray(yr) ** 2 + spec.m(r) ** 2 * np.asarray(yt) ** 2)


# -- surface spec JSON -----------------------------------------------------

def profile_from_json(obj: Mapping[str, Any]) -> ProfileSpec:
    try:
        fam = Family(obj["family"])
    except (KeyError, ValueError) as exc:
        raise DomainError(f"bad or missing family: {obj.get('family')!r}") from exc
    if fam is Family.ROUND:
        return ProfileSpec.round(float(obj.get("radius", 1.0)))
    if fam is Family.EXAMPLE1:
        return ProfileSpec.example1(float(obj["lambda"]))
    if fam is Family.EXAMPLE2:
        return ProfileSpec.example2(float(obj["lambda"]))
    if "table" not in obj:
        raise DomainError("custom family needs a 'table'")
    return ProfileSpec.custom(obj["table"], obj.get("a"))


def nav_from_json(obj: Mapping[str, Any]) -> NavigationData:
    return NavigationData(profile_from_json(obj), float(obj.get("mu", 0.0)))


def nav_to_json(nav: NavigationData) -> dict[str, Any]:
    out = nav.profile.to_json()
    out["mu"] = nav.mu
    return out


def load_surface_spec(path) -> NavigationData:
    with open(path) as fh:
        return nav_from_json(json.load(fh))
