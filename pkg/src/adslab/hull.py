"""Umbilical hypersurfaces, H-convexity, H-shifted convex hulls and their width."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import boundary as Bd
from . import quadric as Q
from .dag import longest_path

HALF_PI = 0.5 * math.pi


def delta_of(H: float, n: int) -> float:
    return math.atan(H / n)


@dataclass(frozen=True)
class UmbilicalHypersurface:
    """Level set q(x, e) = -sin(delta), with e the past dual point of its core plane."""

    e: np.ndarray
    delta: float

    def __post_init__(self):
        if not -HALF_PI < self.delta < HALF_PI:
            raise ValueError("delta must lie in (-pi/2, pi/2)")

    @property
    def n(self) -> int:
        return len(self.e) - 2

    @property
    def mean_curvature(self) -> float:
        return self.n * math.tan(self.delta)

    def residual(self, x) -> np.ndarray:
        return Q.form(x, self.e) + math.sin(self.delta)

    def signed_distance(self, x) -> np.ndarray:
        """Timelike signed distance from the hypersurface, positive to its future."""
        c = np.clip(-Q.form(x, self.e), -1.0, 1.0)
        return np.arccos(c) - (HALF_PI - self.delta)

    def boundary_times(self, theta) -> np.ndarray:
        """Asymptotic boundary as a graph over S^{n-1} in the standard splitting."""
        split = Q.Splitting.standard(self.n)
        y, s = split.to_coords(self.e)
        a = math.sqrt(1.0 + float(y @ y))
        return s + np.arccos(np.clip(np.asarray(theta) @ y / a, -1, 1))

    def v_function(self, x) -> np.ndarray:
        """cos(delta) u + sin(delta) sqrt(1 - u^2) with u = q(x, e)."""
        u = Q.form(x, self.e)
        return math.cos(self.delta) * u + math.sin(self.delta) * np.sqrt(np.clip(1 - u * u, 0, None))


def umbilical_at(split: Q.Splitting, delta: float) -> UmbilicalHypersurface:
    """The umbilical hypersurface tangent to the slice t = 0 at the base point."""
    e = split.from_coords(np.zeros(split.n), np.array(delta - HALF_PI))
    return UmbilicalHypersurface(e=e, delta=delta)


def tangent_umbilical(x, N, delta: float) -> UmbilicalHypersurface:
    """The umbilical hypersurface through x with future unit normal N there."""
    x = np.asarray(x, dtype=float)
    N = np.asarray(N, dtype=float)
    return UmbilicalHypersurface(e=math.sin(delta) * x - math.cos(delta) * N, delta=delta)


def horizon_umbilical(split: Q.Splitting, delta: float) -> UmbilicalHypersurface:
    """The umbilical hypersurface whose asymptotic boundary is the sphere t = 0.

    It is the hull of the totally geodesic boundary, and the surface that
    truncated CMC problems approach when the boundary data tend to zero.
    """
    e = split.from_coords(np.zeros(split.n), np.array(-HALF_PI))
    return UmbilicalHypersurface(e=e, delta=delta)


def umbilical_graph(delta: float, y) -> np.ndarray:
    """Height of the umbilical hypersurface tangent to the slice t = 0 at the centre.

    ``y`` holds hyperboloid coordinates (x_1, ..., x_n) of points of H^n.
    """
    y = np.asarray(y, dtype=float)
    a = np.sqrt(1.0 + np.sum(y * y, axis=-1))
    s = math.sin(delta)
    return np.arccos(s / a) - math.acos(s)


def umbilical_graph_derivs(delta: float, y):
    """Gradient of ``umbilical_graph`` with respect to the hyperboloid coordinates."""
    y = np.asarray(y, dtype=float)
    a2 = 1.0 + np.sum(y * y, axis=-1)
    a = np.sqrt(a2)
    s = math.sin(delta)
    g = s / (a2 * np.sqrt(a2 - s * s))
    return g[..., None] * y


def hull_time_condition(tau_past, tau_fut, delta: float, tol: float = 0.0):
    """Membership in the H-shifted hull through the two cosmological times.

    The past-time bound is tau_past <= pi/2 - delta; the future-time bound is
    obtained from it by time reversal, which sends delta to -delta, giving
    tau_fut <= pi/2 + delta.
    """
    return (np.asarray(tau_past) <= HALF_PI - delta + tol) & (
        np.asarray(tau_fut) <= HALF_PI + delta + tol)


@dataclass(frozen=True)
class HullQuery:
    boundary: Bd.AdmissibleBoundary
    H: float

    @property
    def delta_H(self) -> float:
        return delta_of(self.H, self.boundary.n)


def hull_contains(qr: HullQuery, p, ext=None, times: Bd.CosmologicalTimes | None = None,
                  tol: float = 1e-9):
    p = np.atleast_2d(p.v if isinstance(p, Q.AdSPoint) else p)
    inside = Bd.invisible_domain_contains(qr.boundary, p)
    out = np.zeros(len(p), dtype=bool)
    if inside.any():
        ct = times or Bd.CosmologicalTimes(qr.boundary)
        tp = ct.tau_past(p[inside])
        tf = ct.tau_fut(p[inside])
        out[inside] = hull_time_condition(tp, tf, qr.delta_H, tol)
    return out if len(out) > 1 else bool(out[0])


def is_H_convex(lam: np.ndarray, H: float, n: int, side: str, tol: float = 1e-9):
    """H-convexity from per-vertex principal curvatures ``lam`` (vertices x n).

    Returns (flag, margin); the margin is min(lam) - H/n on the future side and
    H/n - max(lam) on the past side.
    """
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise ValueError("degenerate vertex: non-finite principal curvature")
    h = H / n
    if side == "future":
        m = float(np.min(lam) - h)
    elif side == "past":
        m = float(h - np.max(lam))
    else:
        raise ValueError("side must be 'future' or 'past'")
    return m >= -tol, m


def klein_lattice(n: int, N: int, rmax: float) -> tuple[np.ndarray, float]:
    """Cubic lattice with N points per diameter, clipped to the ball of radius rmax."""
    h = 2 * rmax / (N - 1)
    ax = -rmax + h * np.arange(N)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    pts = pts[np.linalg.norm(pts, axis=1) <= rmax + 1e-12]
    return pts, h


@dataclass
class WidthReport:
    H: float
    delta_H: float
    omega: float
    upper_bound: float
    witness_chain: list
    chain_len: int
    grid_Nx: int
    grid_Nt: int
    tol: float = 0.02

    @property
    def upper_bound_check(self) -> float:
        """Slack of omega <= pi/2 - |delta_H| (non-negative when satisfied)."""
        return self.upper_bound - self.omega

    def row(self) -> dict:
        return {"H": self.H, "delta_H": self.delta_H, "omega": self.omega,
                "upper_bound": self.upper_bound, "chain_len": self.chain_len,
                "grid_Nx": self.grid_Nx, "grid_Nt": self.grid_Nt}


class HullSampler:
    """Space-time sampling of the invisible domain shared by every H.

    Columns sit on a lattice of the Klein ball; along each column both
    cosmological times are tabulated once.  For a given H the hull meets a
    column in an interval, located by inverse interpolation of the tables.
    """

    def __init__(self, b: Bd.AdmissibleBoundary, Nx: int = 21, Nt_table: int = 24,
                 rmax: float = 0.9, times: Bd.CosmologicalTimes | None = None):
        self.b = b
        self.n = b.n
        self.Nx = Nx
        self.split = Q.Splitting.standard(b.n)
        self.z, self.h = klein_lattice(b.n, Nx, rmax)
        self.y = Bd.klein_to_y(self.z)
        self.up, self.um = Bd.extremal_values(b, self.y)
        self.times = times or Bd.CosmologicalTimes(b)
        s = np.linspace(0.0, 1.0, Nt_table + 2)[1:-1]
        self.T = self.um[:, None] + (self.up - self.um)[:, None] * s[None, :]
        C, K = self.T.shape
        P = self.split.from_coords(np.repeat(self.y, K, axis=0), self.T.ravel())
        self.TP = self.times.tau_past(P).reshape(C, K)
        self.TF = self.times.tau_fut(P).reshape(C, K)
        tree = cKDTree(self.z)
        self.neighbors = tree.query_ball_point(self.z, r=1.5 * self.h)

    def interval(self, H: float):
        """Per-column hull interval (t_lo, t_hi); empty columns have t_lo > t_hi."""
        d = delta_of(H, self.n)
        C = len(self.z)
        lo = np.empty(C)
        hi = np.empty(C)
        for c in range(C):
            t = np.concatenate([[self.um[c]], self.T[c], [self.up[c]]])
            tp = np.maximum.accumulate(np.concatenate([[0.0], self.TP[c], [np.inf]]))
            tf = np.minimum.accumulate(np.concatenate([[np.inf], self.TF[c], [0.0]]))
            hi[c] = _inverse_increasing(tp, t, HALF_PI - d)
            lo[c] = _inverse_increasing(-tf, t, -(HALF_PI + d))
        return lo, hi

    def width(self, H: float, Nt: int = 12, tol: float = 0.02) -> WidthReport:
        d = delta_of(H, self.n)
        lo, hi = self.interval(H)
        cols = np.flatnonzero(hi >= lo)
        if len(cols) == 0:
            return WidthReport(H, d, 0.0, HALF_PI - abs(d), [], 0, self.Nx, Nt, tol)
        s = np.linspace(0.0, 1.0, Nt)
        Tn = lo[cols, None] + (hi - lo)[cols, None] * s[None, :]
        node_col = np.repeat(cols, Nt)
        node_t = Tn.ravel()
        pts = self.split.from_coords(self.y[node_col], node_t)
        index_of = -np.ones(len(self.z), dtype=int)
        index_of[cols] = np.arange(len(cols))
        src, dst, w = [], [], []
        for ci, c in enumerate(cols):
            nb = [index_of[k] for k in sorted(self.neighbors[c]) if index_of[k] >= 0]
            a = np.arange(ci * Nt, ci * Nt + Nt)
            bnodes = np.concatenate([np.arange(k * Nt, k * Nt + Nt) for k in nb])
            A, Bn = np.meshgrid(a, bnodes, indexing="ij")
            A, Bn = A.ravel(), Bn.ravel()
            later = node_t[Bn] > node_t[A]
            A, Bn = A[later], Bn[later]
            dist = Q.distance_array(pts[A], pts[Bn])
            ok = ~np.isnan(dist) & (dist > 0) & Q.future_of(pts[A], pts[Bn])
            src.append(A[ok])
            dst.append(Bn[ok])
            w.append(dist[ok])
        src = np.concatenate(src)
        dst = np.concatenate(dst)
        w = np.concatenate(w)
        order = np.lexsort((np.arange(len(node_t)), node_t))
        omega, path = longest_path(len(node_t), src, dst, w, order=order)
        chain = [pts[i] for i in path] if omega > 0 else []
        return WidthReport(H, d, omega, HALF_PI - abs(d), chain, len(chain), self.Nx, Nt, tol)


def _inverse_increasing(f, t, level):
    """Largest t with f(t) <= level for non-decreasing tabulated f."""
    if level < f[0]:
        return t[0] - 1.0
    if level >= f[-1]:
        return t[-1]
    k = int(np.searchsorted(f, level, side="right"))
    f0, f1 = f[k - 1], f[k]
    if not (np.isfinite(f0) and np.isfinite(f1)) or f1 == f0:
        return t[k - 1] if np.isfinite(f0) else t[k]
    return t[k - 1] + (t[k] - t[k - 1]) * (level - f0) / (f1 - f0)


def width(qr: HullQuery, sampler: HullSampler | None = None, Nt: int = 12, **kw) -> WidthReport:
    sampler = sampler or HullSampler(qr.boundary, **kw)
    return sampler.width(qr.H, Nt=Nt)


@dataclass
class WidthProfile:
    rows: list
    monotone_ok: bool
    max_at_zero: bool

    def table(self):
        return [(r.H, r.omega) for r in self.rows]


def width_profile(b: Bd.AdmissibleBoundary, H_grid, sampler: HullSampler | None = None,
                  Nt: int = 12, tol: float = 0.02, **kw) -> WidthProfile:
    sampler = sampler or HullSampler(b, **kw)
    rows = [sampler.width(H, Nt=Nt, tol=tol) for H in H_grid]
    Hs = np.array([r.H for r in rows])
    om = np.array([r.omega for r in rows])
    order = np.argsort(Hs)
    Hs, om = Hs[order], om[order]
    neg = om[Hs <= 0]
    pos = om[Hs >= 0]
    mono = bool(np.all(np.diff(neg) >= -tol) and np.all(np.diff(pos) <= tol))
    at0 = True
    if np.any(Hs == 0):
        at0 = bool(om[Hs == 0][0] >= om.max() - tol)
    return WidthProfile(rows=[rows[i] for i in order], monotone_ok=mono, max_at_zero=at0)


@dataclass
class SupportResult:
    P: UmbilicalHypersurface
    distance: float
    side: str
    boundary_ok: bool
    candidates: int = field(default=0)


def find_support_umbilical(b: Bd.AdmissibleBoundary, H: float, x, Nx: int = 41,
                           rmax: float = 0.95, refine: int = 30) -> SupportResult:
    """Support umbilical H-hypersurface of the hull closest to the point x.

    Dual points are searched on a Klein-ball lattice: past duals on the graph
    of u_minus give supports from the future, antipodes of points on the graph
    of u_plus give supports from the past.  The best candidate is polished by
    a compass search.
    """
    x = np.asarray(x.v if isinstance(x, Q.AdSPoint) else x, dtype=float)
    n = b.n
    d = delta_of(H, n)
    split = Q.Splitting.standard(n)
    z, h = klein_lattice(n, Nx, rmax)

    def duals(zz, side):
        y = Bd.klein_to_y(zz)
        up, um = Bd.extremal_values(b, y)
        if side == "future":
            return split.from_coords(y, um)
        return -split.from_coords(y, up)

    def score(zz, side):
        e = duals(zz, side)
        c = Q.form(e, x)
        ok = (c > -1) & (c < 1) & Q.future_of(e, x)
        dist = np.arccos(np.clip(-c, -1, 1)) - (HALF_PI - d)
        return np.where(ok, np.abs(dist), np.inf), dist

    best = None
    for side in ("future", "past"):
        sc, _ = score(z, side)
        k = int(np.argmin(sc))
        zc, val, step = z[k].copy(), sc[k], h
        dirs = np.concatenate([np.eye(n), -np.eye(n)])
        for _ in range(refine):
            cand = zc[None] + step * dirs
            cand = cand[np.linalg.norm(cand, axis=1) < 0.999]
            if len(cand) == 0:
                step *= 0.5
                continue
            s2, _ = score(cand, side)
            j = int(np.argmin(s2))
            if s2[j] < val:
                zc, val = cand[j], s2[j]
            else:
                step *= 0.5
        if best is None or val < best[0]:
            best = (val, zc, side)
    val, zc, side = best
    e = duals(zc[None], side)[0]
    P = UmbilicalHypersurface(e=e, delta=d)
    _, dist = score(zc[None], side)
    # boundary-side condition: asymptotic curve weakly above (or below) the samples
    bt = P.boundary_times(b.theta)
    gap = Bd.wrap(bt - b.values)
    ok = bool(np.all(gap >= -1e-6)) if side == "future" else bool(np.all(gap <= 1e-6))
    return SupportResult(P=P, distance=float(dist[0]), side=side, boundary_ok=ok,
                         candidates=len(z))
