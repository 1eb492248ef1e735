"""Brute-force forward Randers distances on a polar mesh and empirical cut loci.

The surface is discretised as a directed graph on an ``n_r x n_theta`` grid
of cell centres.  Every node links to the nodes at a fixed set of coprime
grid offsets; an edge costs ``F`` of its coordinate displacement evaluated
at the edge midpoint.  Dijkstra then gives an upper approximation of the
forward distance ``d_F(x, .)``.  Shooting a pencil of geodesics from ``x``
and comparing arclength with this field exposes where each geodesic stops
minimising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import nnls
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError
from .surfaces import NavigationData, ProfileSpec, finsler_norm

TWO_PI = 2 * math.pi

# stencil size -> largest grid offset used
_STENCILS = {8: 1, 16: 2, 32: 3, 48: 4, 80: 5}


def stencil_offsets(stencil_k: int) -> list[tuple[int, int]]:
    """Directed offsets ``(di, dj)`` with coprime components and ``max(|di|, |dj|) <= K``."""
    if stencil_k not in _STENCILS:
        raise DomainError(f"stencil_k must be one of {sorted(_STENCILS)}")
    K = _STENCILS[stencil_k]
    out = [(i, j) for i in range(-K, K + 1) for j in range(-K, K + 1)
           if (i, j) != (0, 0) and math.gcd(abs(i), abs(j)) == 1]
    assert len(out) == stencil_k
    return out


@dataclass(frozen=True)
class DistanceField:
    """Forward distance from ``source`` sampled on the mesh.

    ``dist`` has shape ``(n_r, n_theta)``; ``pole_dist`` holds the distances of
    the two virtual pole nodes.  ``predecessor`` is the flat Dijkstra tree
    (-9999 marks the source, indices ``>= n_r * n_theta`` are virtual nodes).
    """

    nav: NavigationData
    source: tuple[float, float]
    r: np.ndarray
    theta: np.ndarray
    dist: np.ndarray
    pole_dist: tuple[float, float]
    predecessor: np.ndarray = field(repr=False)
    stencil_k: int = 16

    @property
    def shape(self) -> tuple[int, int]:
        return self.dist.shape

    @property
    def h_grid(self) -> float:
        """Largest h-length of a unit grid step (``max(dr, m(a) dtheta)``)."""
        dr = self.r[1] - self.r[0]
        return float(max(dr, self.nav.profile.m_max * (self.theta[1] - self.theta[0])))

    def __call__(self, r, theta):
        """Bilinear interpolation, periodic in theta, with the poles as extra rows."""
        r = np.asarray(r, dtype=float)
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        two_a = 2 * self.nav.a
        if np.any(r < -1e-12) or np.any(r > two_a + 1e-12):
            raise DomainError("interpolation point off the surface")
        n_r, n_t = self.shape
        rows = np.concatenate([[0.0], self.r, [two_a]])
        grid = np.vstack([np.full(n_t, self.pole_dist[0]), self.dist,
                          np.full(n_t, self.pole_dist[1])])
        i = np.clip(np.searchsorted(rows, r, side="right") - 1, 0, len(rows) - 2)
        fr = (r - rows[i]) / (rows[i + 1] - rows[i])
        dt = self.theta[1] - self.theta[0]
        jf = theta / dt
        j = np.floor(jf).astype(int) % n_t
        ft = jf - np.floor(jf)
        j1 = (j + 1) % n_t
        lo = grid[i, j] * (1 - ft) + grid[i, j1] * ft
        hi = grid[i + 1, j] * (1 - ft) + grid[i + 1, j1] * ft
        return lo * (1 - fr) + hi * fr

    def to_csv(self, path) -> None:
        """Rows ``i_r, i_theta, r, theta, dist``."""
        n_r, n_t = self.shape
        ii, jj = np.meshgrid(np.arange(n_r), np.arange(n_t), indexing="ij")
        data = np.column_stack([ii.ravel(), jj.ravel(), self.r[ii.ravel()],
                                self.theta[jj.ravel()], self.dist.ravel()])
        np.savetxt(path, data, delimiter=",", comments="", header="i_r,i_theta,r,theta,dist",
                   fmt=["%d", "%d", "%.12e", "%.12e", "%.12e"])


def read_field_csv(path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"i_r": data[:, 0].astype(int), "i_theta": data[:, 1].astype(int),
            "r": data[:, 2], "theta": data[:, 3], "dist": data[:, 4]}


def _edge_weight(nav, r_mid, d_r, d_t):
    return finsler_norm(nav, r_mid, (np.broadcast_to(d_r, np.shape(r_mid)),
                                     np.broadcast_to(d_t, np.shape(r_mid))), formula="navigation")


def distance_graph(nav: NavigationData, source, n_r: int, n_theta: int, stencil_k: int):
    """Directed mesh graph as ``(csr_matrix, r, theta)``.

    Grid rows sit at cell centres ``r_i = (i + 1/2) 2a / n_r`` and columns at
    ``theta_j = 2 pi j / n_theta``; node ``i * n_theta + j`` is ``(r_i, theta_j)``.
    The last three nodes are the poles ``p``, ``q`` and the source.  Each pole
    is joined to the nearest row by meridian segments, and the source to the
    grid nodes around it with exact displacements.
    """
    if n_r < 64 or n_theta < 64:
        raise DomainError("n_r and n_theta must be at least 64")
    # NavigationData already rejects winds outside the convexity bound
    spec = nav.profile
    two_a = 2 * spec.a
    r0, t0 = float(source[0]), float(source[1]) % TWO_PI
    if not 0 < r0 < two_a:
        raise DomainError("the source must lie off the poles")
    dr, dt = two_a / n_r, TWO_PI / n_theta
    r = (np.arange(n_r) + 0.5) * dr
    theta = np.arange(n_theta) * dt
    n_grid = n_r * n_theta
    P, Q, S = n_grid, n_grid + 1, n_grid + 2
    idx = np.arange(n_grid).reshape(n_r, n_theta)

    # near the poles a theta step is much shorter than an r step; rows there get a
    # second copy of the stencil with theta offsets stretched to restore an even
    # spread of directions in h
    stretch = np.maximum(1, np.round(dr / (spec.m(r) * dt))).astype(int)
    src, dst, wts = [], [], []
    cols = np.arange(n_theta)
    for di, dj in stencil_offsets(stencil_k):
        lo, hi = max(0, -di), min(n_r, n_r - di)
        rows = np.arange(lo, hi)
        for rr, dd in ((rows, np.full(len(rows), dj)),
                       (rows[stretch[rows] > 1], dj * stretch[rows][stretch[rows] > 1])):
            w_row = _edge_weight(nav, r[rr] + 0.5 * di * dr, di * dr, dd * dt)
            src.append(idx[rr].ravel())
            dst.append(idx[rr + di][np.arange(len(rr))[:, None],
                                    (cols[None, :] + dd[:, None]) % n_theta].ravel())
            wts.append(np.repeat(w_row, n_theta))

    # poles: radial segments to the first and last rows
    for pole, row, sgn in ((P, 0, 1.0), (Q, n_r - 1, -1.0)):
        length = r[0]
        mid = np.full(n_theta, r[0] / 2 if row == 0 else two_a - r[0] / 2)
        w_out = _edge_weight(nav, mid, sgn * length, 0.0)
        w_in = _edge_weight(nav, mid, -sgn * length, 0.0)
        src += [np.full(n_theta, pole), idx[row]]
        dst += [idx[row], np.full(n_theta, pole)]
        wts += [w_out, w_in]

    # source: outgoing edges to every node within the stencil box around it
    K = _STENCILS[stencil_k]
    i0 = int(np.clip(np.floor(r0 / dr - 0.5), 0, n_r - 1))
    j0 = int(np.floor(t0 / dt))
    near_i = np.arange(max(0, i0 - K + 1), min(n_r, i0 + K + 1))
    near_j = np.arange(j0 - K + 1, j0 + K + 1)
    ii, jj = np.meshgrid(near_i, near_j, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    d_r = r[ii] - r0
    d_t = jj * dt - t0
    w_src = _edge_weight(nav, 0.5 * (r[ii] + r0), d_r, d_t)
    src.append(np.full(len(ii), S))
    dst.append(idx[ii, jj % n_theta])
    wts.append(w_src)

    src = np.concatenate(src)
    dst = np.concatenate(dst)
    wts = np.concatenate(wts)
    n = n_grid + 3
    return csr_matrix((wts, (src, dst)), shape=(n, n)), r, theta


def build_distance_field(nav: NavigationData, source, n_r: int = 256, n_theta: int = 512,
                         stencil_k: int = 16) -> DistanceField:
    """Single-source forward distances over the polar mesh of :func:`distance_graph`."""
    graph, r, theta = distance_graph(nav, source, n_r, n_theta, stencil_k)
    n_grid = n_r * n_theta
    P, Q, S = n_grid, n_grid + 1, n_grid + 2
    dist, pred = dijkstra(graph, directed=True, indices=S, return_predecessors=True)
    if not np.all(np.isfinite(dist[:n_grid + 2])):
        raise RuntimeError("distance field has unreachable nodes")
    return DistanceField(nav, (float(source[0]), float(source[1]) % TWO_PI), r, theta,
                         dist[:n_grid].reshape(n_r, n_theta),
                         (float(dist[P]), float(dist[Q])), pred, stencil_k)


# -- calibration -------------------------------------------------------------

@lru_cache(maxsize=16)
def round_sphere_error(n_r: int, n_theta: int, stencil_k: int) -> float:
    """Largest node error of a wind-free field on the unit sphere at this resolution.

    The source sits off-grid at ``(pi/3, 0)``; exact distances are great-circle
    lengths.
    """
    spec = ProfileSpec.round(1.0)
    fld = build_distance_field(NavigationData(spec, 0.0), (math.pi / 3, 0.0), n_r, n_theta,
                               stencil_k)
    R, T = np.meshgrid(fld.r, fld.theta, indexing="ij")
    r0 = math.pi / 3
    cosd = np.cos(r0) * np.cos(R) + np.sin(r0) * np.sin(R) * np.cos(T)
    exact = np.arccos(np.clip(cosd, -1, 1))
    return float(np.max(np.abs(fld.dist - exact)))


def tol_mesh(fld: DistanceField | tuple[int, int, int], factor: float = 3.0) -> float:
    """Cut-detection threshold: ``factor`` times the round-sphere error at the same
    ``(n_r, n_theta, stencil_k)``, scaled by the surface's size ``a / (pi/2)``."""
    if isinstance(fld, DistanceField):
        n_r, n_t = fld.shape
        key, scale = (n_r, n_t, fld.stencil_k), fld.nav.a / (math.pi / 2)
    else:
        key, scale = tuple(fld), 1.0
    return factor * scale * round_sphere_error(*key)


# -- pencils and empirical cut points ------------------------------------------

@dataclass(frozen=True)
class PencilRay:
    nu: float
    dr_sign: int


def pencil(spec: ProfileSpec, u: float, pencil_n: int) -> list[PencilRay]:
    """``pencil_n`` launch directions from radius ``u``.

    Clairaut constants fill ``(-m(u), m(u))`` at cell midpoints in each radial
    direction, so the two meridians are always included.
    """
    if pencil_n < 4:
        raise DomainError("pencil_n must be at least 4")
    half = pencil_n // 2
    mu_ = spec.m(u)
    rays = []
    for sgn in (-1, 1):
        # map equally spaced launch angles to Clairaut constants
        phi = np.linspace(-math.pi / 2, math.pi / 2, half + 1)[:-1] + math.pi / (2 * half)
        phi = np.concatenate([phi, [0.0]]) if 0.0 not in phi else phi
        for p in np.unique(np.round(phi, 15)):
            rays.append(PencilRay(float(mu_ * math.sin(p)), sgn))
    return rays


def shoot_pencil(spec: ProfileSpec, u: float, rays: list[PencilRay], s: np.ndarray,
                 rtol: float = 1e-9, atol: float = 1e-11):
    """``(r, theta)`` arrays of shape ``(len(rays), len(s))`` for h-geodesics from ``(u, 0)``.

    All rays are advanced together as one system.  A path through a pole is
    continued on the opposite meridian (``theta + pi``); rays with ``nu = 0``
    are solved in closed form.
    """
    nu = np.array([ray.nu for ray in rays])
    sg = np.array([ray.dr_sign for ray in rays], dtype=float)
    two_a = 2 * spec.a
    R = np.empty((len(rays), len(s)))
    T = np.empty_like(R)
    mer = np.abs(nu) < 1e-14
    if np.any(mer):
        unfolded = u + sg[mer, None] * s[None, :]
        k = np.floor(unfolded / two_a)
        local = unfolded - k * two_a
        R[mer] = np.where(k % 2 != 0, two_a - local, local)
        T[mer] = math.pi * np.abs(k)
    live = ~mer
    if np.any(live):
        nl, sl = nu[live], sg[live]
        m0 = spec.m(u)
        dr0 = sl * np.sqrt(np.maximum(0.0, 1 - (nl / m0) ** 2))
        n = len(nl)
        eps = 1e-12 * spec.a

        def rhs(_s, y):
            r = np.clip(y[:n], eps, two_a - eps)
            m, m1, _ = spec.derivs(r)
            return np.concatenate([y[2 * n:], nl / (m * m), m1 * nl * nl / m**3])

        sol = solve_ivp(rhs, (s[0], s[-1]), np.concatenate([np.full(n, u), np.zeros(n), dr0]),
                        method="RK45", t_eval=s, rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(sol.message)
        R[live] = sol.y[:n]
        T[live] = sol.y[n:2 * n]
    return R, T


@dataclass(frozen=True)
class EmpiricalCut:
    """Cut points found along a pencil; one row per ray that stopped minimising."""

    r: np.ndarray
    theta: np.ndarray
    nu: np.ndarray
    dr_sign: np.ndarray
    s_cut: np.ndarray
    tol: float

    def __len__(self) -> int:
        return len(self.r)

    def points(self) -> np.ndarray:
        return np.column_stack([self.r, self.theta])

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.r, self.theta % TWO_PI, self.nu, self.s_cut]),
                   delimiter=",", fmt="%.12e", comments="", header="r,theta,nu,s_cut")


def read_cut_csv(path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {k: data[:, i] for i, k in enumerate(("r", "theta", "nu", "s_cut"))}


def _onset(excess: np.ndarray, i_hit: int, look_back: int = 64, n_fit: int = 9) -> float:
    """Fractional index of the kink the excess climbs out of before the threshold.

    Before the cut point the excess is the slowly drifting graph error,
    modelled as a line; past it the excess also grows like
    ``k t + c t^2 + e t^3`` with nonnegative coefficients (``t`` the parameter
    beyond the kink).  The fit window starts ``look_back`` samples before the
    lowest excess preceding the crossing and ends ``n_fit`` samples after the
    crossing; the kink is the offset whose fit leaves the smallest residual.
    """
    lo = max(0, i_hit - 2 * look_back)
    i0 = max(0, lo + int(np.argmin(excess[lo:i_hit + 1])) - look_back)
    hi = min(len(excess), i_hit + n_fit)
    idx = np.arange(i0, hi, dtype=float)
    y = excess[i0:hi]
    one, lin = np.ones_like(idx), idx - i0
    best, best_res = float(i_hit), math.inf
    for c in np.arange(i0, i_hit + 0.25, 0.5):
        t = np.maximum(idx - c, 0.0)
        A = np.column_stack([one, -one, lin, -lin, t, t * t, t ** 3])
        _, res = nnls(A, y)
        if res < best_res - 1e-15:
            best, best_res = float(c), res
    return best


def cut_parameters(nav: NavigationData, x, rays: list[PencilRay], fld: DistanceField,
                   detect: float | None = None, s_max: float | None = None,
                   ds: float | None = None, refine: bool = True
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Empirical cut parameter along each wind-deviated ray.

    A ray is flagged at the first ``s`` with ``s - d_F(P(s)) > detect``; the
    default threshold is the calibrated mesh error (one third of
    :func:`tol_mesh`), since the graph only ever overestimates.  With
    ``refine`` the parameter is then moved back to the kink where the excess
    started to grow, since past a cut point the excess rises only like
    ``(1 - cos alpha) (s - s_cut)`` for the meeting angle ``alpha``.
    Returns ``(s_cut, r_cut, theta_cut)``; rays that never exceed the
    threshold within ``s_max`` get ``nan``.
    """
    u, theta_x = float(x[0]), float(x[1])
    if abs(fld.source[0] - u) > 1e-12 or abs((fld.source[1] - theta_x) % TWO_PI) > 1e-12:
        raise DomainError("the distance field was built from a different source")
    if fld.nav != nav:
        raise DomainError("the distance field was built for different navigation data")
    detect = tol_mesh(fld) / 3 if detect is None else detect
    s_max = s_max or 1.25 * float(np.max(fld.dist)) + 2 * detect
    ds = ds or fld.h_grid / 4
    s = np.arange(0.0, s_max + ds, ds)
    R, T = shoot_pencil(nav.profile, u, rays, s)
    T = T + theta_x + nav.mu * s[None, :]
    R = np.clip(R, 0.0, 2 * nav.a)
    excess = s[None, :] - fld(R, T)
    hit = excess > detect
    n = len(rays)
    s_cut, r_cut, t_cut = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    for k in range(n):
        if not hit[k].any():
            continue
        i = float(hit[k].argmax())
        if refine:
            i = _onset(excess[k], int(i))
        grid = np.arange(len(s))
        s_cut[k] = np.interp(i, grid, s)
        r_cut[k] = np.interp(i, grid, R[k])
        t_cut[k] = np.interp(i, grid, T[k])
    return s_cut, r_cut, t_cut


def empirical_cut_locus(nav: NavigationData, x, pencil_n: int = 256,
                        fld: DistanceField | None = None, detect: float | None = None,
                        **field_kw) -> EmpiricalCut:
    """Cut points of ``x`` read off a pencil of ``pencil_n`` forward geodesics.

    ``tol`` on the result is :func:`tol_mesh` of the field, the tolerance for
    comparing these points with predicted cut sets.
    """
    if pencil_n < 256:
        raise DomainError("pencil_n must be at least 256")
    if fld is None:
        fld = build_distance_field(nav, x, **field_kw)
    rays = pencil(nav.profile, float(x[0]), pencil_n)
    s_cut, r_cut, t_cut = cut_parameters(nav, x, rays, fld, detect)
    ok = np.isfinite(s_cut)
    nu = np.array([ray.nu for ray in rays])
    sg = np.array([ray.dr_sign for ray in rays])
    return EmpiricalCut(r_cut[ok], t_cut[ok], nu[ok], sg[ok], s_cut[ok], tol_mesh(fld))


# -- comparisons ---------------------------------------------------------------

def h_metric_distance(spec: ProfileSpec, p, q) -> np.ndarray:
    """Local h-distance ``sqrt(dr^2 + m(r_mid)^2 dtheta^2)`` with theta wrapped.

    Pairwise for point arrays ``p (n, 2)`` and ``q (k, 2)``.
    """
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    d_r = p[:, None, 0] - q[None, :, 0]
    d_t = np.angle(np.exp(1j * (p[:, None, 1] - q[None, :, 1])))
    m = spec.m(np.clip(0.5 * (p[:, None, 0] + q[None, :, 0]), 0, 2 * spec.a))
    return np.sqrt(d_r**2 + (m * d_t) ** 2)


def hausdorff(spec: ProfileSpec, p, q) -> float:
    d = h_metric_distance(spec, p, q)
    if d.size == 0:
        return math.inf
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def densify(samples, n: int = 400) -> np.ndarray:
    """Piecewise-linear resampling of an ordered polyline of ``(r, theta)`` points."""
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return pts
    seg = np.r_[0.0, np.cumsum(np.hypot(*np.diff(pts, axis=0).T))]
    t = np.linspace(0, seg[-1], n)
    return np.column_stack([np.interp(t, seg, pts[:, 0]), np.interp(t, seg, pts[:, 1])])
