"""Unit-speed h-geodesics and their wind-deviated Randers counterparts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvexityError, DomainError, NumericalCornerError
from .quadrature import h_arc_length, radial_integral  # noqa: F401  (re-exported)
from .surfaces import POLE_EPS, NavigationData, ProfileSpec, finsler_norm, max_wind

MERIDIAN_NU = 1e-12


class PathKind(str, Enum):
    RIEMANNIAN = "riemannian"
    FINSLER_FORWARD = "finsler_forward"
    FINSLER_BACKWARD = "finsler_backward"


@dataclass(frozen=True)
class GeodesicState:
    s: float
    r: float
    theta: float
    dr: float
    dtheta: float


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled geodesic on the universal cover (theta is never wrapped).

    Samples are stored column-wise as numpy arrays; ``turning_s`` lists the
    arclengths where ``dr/ds`` changed sign.
    """

    kind: PathKind
    nu: float
    profile: ProfileSpec
    s: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    dr: np.ndarray
    dtheta: np.ndarray
    mu: float = 0.0
    turning_s: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.s)

    def state(self, i: int) -> GeodesicState:
        return GeodesicState(float(self.s[i]), float(self.r[i]), float(self.theta[i]),
                             float(self.dr[i]), float(self.dtheta[i]))

    @property
    def states(self) -> list[GeodesicState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def end(self) -> GeodesicState:
        return self.state(-1)

    def underlying_dtheta(self) -> np.ndarray:
        """``dtheta`` of the h-geodesic this path was deviated from."""
        if self.kind is PathKind.FINSLER_FORWARD:
            return self.dtheta - self.mu
        if self.kind is PathKind.FINSLER_BACKWARD:
            return self.dtheta + self.mu
        return self.dtheta

    def clairaut_residual(self) -> np.ndarray:
        m = self.profile.m(self.r)
        return m * m * self.underlying_dtheta() - self.nu

    def unit_speed_residual(self) -> np.ndarray:
        m = self.profile.m(self.r)
        return self.dr**2 + (m * self.underlying_dtheta()) ** 2 - 1

    def to_csv(self, path) -> None:
        """Write columns s, r, theta, dr_ds, dtheta_ds, clairaut_residual."""
        data = np.column_stack([self.s, self.r, self.theta, self.dr, self.dtheta,
                                self.clairaut_residual()])
        np.savetxt(path, data, delimiter=",", fmt="%.12e", comments="",
                   header="s,r,theta,dr_ds,dtheta_ds,clairaut_residual")


def read_path_csv(path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    names = ("s", "r", "theta", "dr_ds", "dtheta_ds", "clairaut_residual")
    return {k: data[:, i] for i, k in enumerate(names)}


def _meridian(spec, r0, theta0, dr_sign, s):
    # exact solution of the geodesic equations for nu = 0, continued through
    # each pole with theta -> theta + pi
    two_a = 2 * spec.a
    unfolded = r0 + dr_sign * s
    k = np.floor(unfolded / two_a)
    local = unfolded - k * two_a
    odd = (k.astype(int) % 2) != 0
    r = np.where(odd, two_a - local, local)
    dr = np.where(odd, -dr_sign, dr_sign).astype(float)
    theta = theta0 + math.pi * np.abs(k)
    return r, theta, dr


def shoot_h_geodesic(spec: ProfileSpec, start, nu: float, dr_sign: int, s_max: float,
                     rtol: float = 1e-11, atol: float = 1e-12, s_eval=None) -> GeodesicPath:
    """Integrate a unit-speed h-geodesic with Clairaut constant ``nu``.

    The state ``(r, theta, dr/ds)`` is advanced with an adaptive Runge-Kutta
    5(4) pair; ``dtheta/ds = nu / m^2`` is evaluated from the first integral
    rather than integrated.  ``dr_sign`` picks the initial radial direction.
    Samples are taken at the solver steps, or at ``s_eval`` if given.
    """
    r0, theta0 = float(start[0]), float(start[1])
    if not 0 < r0 < 2 * spec.a:
        raise DomainError("start point must lie off the poles")
    if s_max <= 0:
        raise DomainError("s_max must be positive")
    if dr_sign not in (-1, 0, 1):
        raise DomainError("dr_sign must be -1, 0 or +1")
    m0 = spec.m(r0)
    slack = m0 - abs(nu)
    if slack < -1e-13 * max(1.0, m0):
        raise DomainError(f"|nu|={abs(nu)} exceeds m(r0)={m0}: no such geodesic")
    tangent = abs(slack) <= 1e-12 * max(1.0, m0)
    if dr_sign == 0 and not tangent:
        raise DomainError("dr_sign=0 requires |nu| = m(r0)")

    if abs(nu) < MERIDIAN_NU:
        if dr_sign == 0:
            raise DomainError("a meridian needs a radial direction")
        s = np.asarray(s_eval, dtype=float) if s_eval is not None else np.linspace(0, s_max, 1025)
        r, theta, dr = _meridian(spec, r0, theta0, dr_sign, s)
        return GeodesicPath(PathKind.RIEMANNIAN, 0.0, spec, s, r, theta, dr,
                            np.zeros_like(s), turning_s=())

    dr0 = 0.0 if tangent else dr_sign * math.sqrt(max(0.0, 1 - (nu / m0) ** 2))

    def rhs(_s, y):
        m, m1, _ = spec.derivs(min(max(y[0], 0.5 * POLE_EPS), 2 * spec.a - 0.5 * POLE_EPS))
        return (y[2], nu / (m * m), m1 * nu * nu / m**3)

    def turning(_s, y):
        return y[2]

    def near_p(_s, y):
        return y[0] - POLE_EPS

    def near_q(_s, y):
        return 2 * spec.a - POLE_EPS - y[0]

    near_p.terminal = near_q.terminal = True
    sol = solve_ivp(rhs, (0.0, s_max), (r0, theta0, dr0), method="RK45", rtol=rtol, atol=atol,
                    events=(turning, near_p, near_q), t_eval=s_eval,
                    dense_output=False)
    if sol.status == 1:
        raise NumericalCornerError(f"geodesic with nu={nu} reached a pole at s={sol.t[-1]:.6g}")
    if not sol.success:
        raise RuntimeError(sol.message)
    r = sol.y[0]
    m = spec.m(np.clip(r, 0, 2 * spec.a))
    return GeodesicPath(PathKind.RIEMANNIAN, float(nu), spec, sol.t, r, sol.y[1], sol.y[2],
                        nu / (m * m), turning_s=tuple(float(t) for t in sol.t_events[0] if t > 0))


def clairaut_constant(spec: ProfileSpec, state: GeodesicState) -> float:
    """``m(r)^2 dtheta/ds`` (equivalently ``m cos(phi)``) for an h-unit-speed state."""
    m = spec.m(state.r)
    return m * m * state.dtheta


def flow_deviate(path: GeodesicPath, mu: float, direction: str = "forward") -> GeodesicPath:
    """Push an h-geodesic along the wind flow: ``theta -> theta +/- mu s``.

    ``forward`` gives the Randers geodesic ``P(s) = (r(s), theta(s) + mu s)``.
    ``backward`` gives ``theta - mu s``, a geodesic of the reverse metric
    ``F(x, -y)`` (equivalently, the mirror image of a forward geodesic).
    """
    if path.kind is not PathKind.RIEMANNIAN:
        raise DomainError("only Riemannian paths can be deviated")
    if not 0 <= mu < max_wind(path.profile):
        raise ConvexityError(f"mu={mu} outside [0, {max_wind(path.profile)})")
    if direction == "forward":
        sgn, kind = 1.0, PathKind.FINSLER_FORWARD
    elif direction == "backward":
        sgn, kind = -1.0, PathKind.FINSLER_BACKWARD
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    return replace(path, kind=kind, mu=float(mu), theta=path.theta + sgn * mu * path.s,
                   dtheta=path.dtheta + sgn * mu)


def undeviate(path: GeodesicPath) -> GeodesicPath:
    """Inverse of :func:`flow_deviate`."""
    if path.kind is PathKind.RIEMANNIAN:
        return path
    sgn = 1.0 if path.kind is PathKind.FINSLER_FORWARD else -1.0
    return replace(path, kind=PathKind.RIEMANNIAN, mu=0.0,
                   theta=path.theta - sgn * path.mu * path.s, dtheta=path.dtheta - sgn * path.mu)


def finsler_speed(path: GeodesicPath) -> np.ndarray:
    """Randers speed along a deviated path (reverse metric for backward paths)."""
    nav = NavigationData(path.profile, path.mu)
    sgn = -1.0 if path.kind is PathKind.FINSLER_BACKWARD else 1.0
    return finsler_norm(nav, path.r, (sgn * path.dr, sgn * path.dtheta))


def finsler_clairaut_cos(nav: NavigationData, r, nu):
    """``cos psi`` between a Randers geodesic with Clairaut constant ``nu`` and the parallel."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= 2 * nav.a):
        raise DomainError("Finsler Clairaut relation is evaluated off the poles")
    m = nav.profile.m(r)
    mu = nav.mu
    return (nu + mu * m * m) / (m * np.sqrt(1 + 2 * mu * nu + (mu * m) ** 2))


def measured_cos_psi(path: GeodesicPath) -> np.ndarray:
    """``h(P', d_theta) / (|P'|_h m)`` measured directly from the sampled tangent."""
    m = path.profile.m(path.r)
    return m * path.dtheta / np.sqrt(path.dr**2 + (m * path.dtheta) ** 2)


def reverse_path(path: GeodesicPath) -> GeodesicPath:
    """Traverse a Riemannian path backwards: ``s -> L - s``, velocities negated."""
    if path.kind is not PathKind.RIEMANNIAN:
        raise DomainError("only Riemannian paths reverse to geodesics of the same metric")
    L = path.s[-1]
    return replace(path, nu=-path.nu, s=(L - path.s)[::-1], r=path.r[::-1],
                   theta=path.theta[::-1], dr=-path.dr[::-1], dtheta=-path.dtheta[::-1],
                   turning_s=tuple(sorted(L - t for t in path.turning_s)))
