"""Normal flow of spacelike hypersurfaces and the width bound it yields."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadric as Q
from .geometry import Geometry, fit_geometry
from .hull import is_H_convex

GUARD = 1e-3


class WindowError(ValueError):
    pass


def flow_points(X, N, t) -> np.ndarray:
    """x -> cos(t) x + sin(t) N(x)."""
    return math.cos(t) * np.asarray(X) + math.sin(t) * np.asarray(N)


def evolved_curvatures(lam, t) -> np.ndarray:
    """tan(arctan(lam) - t), the principal curvatures after flowing for time t."""
    return np.tan(np.arctan(np.asarray(lam, dtype=float)) - t)


def evolved_shape_operator(B, t) -> np.ndarray:
    """(-sin t + cos t B)(cos t + sin t B)^{-1}, batched over leading axes."""
    B = np.asarray(B, dtype=float)
    n = B.shape[-1]
    I = np.eye(n)
    num = -math.sin(t) * I + math.cos(t) * B
    den = math.cos(t) * I + math.sin(t) * B
    return num @ np.linalg.inv(den)


@dataclass(frozen=True)
class FlowWindow:
    A_plus: float
    A_minus: float
    T_plus: float
    T_minus: float

    @property
    def length(self) -> float:
        return self.A_plus - self.A_minus

    def contains(self, t: float, guard: float = GUARD) -> bool:
        return self.A_minus + guard < t < self.A_plus - guard


def window_from_extrema(sup_l1: float, inf_ln: float) -> FlowWindow:
    return FlowWindow(A_plus=math.atan(inf_ln) + math.pi / 2,
                      A_minus=math.atan(sup_l1) - math.pi / 2,
                      T_plus=math.atan(sup_l1), T_minus=math.atan(inf_ln))


def window(geom: Geometry) -> FlowWindow:
    lam = geom.lam[geom.valid]
    return window_from_extrema(float(np.max(lam[:, 0])), float(np.min(lam[:, -1])))


@dataclass
class FlowState:
    base: Geometry
    t: float
    X: np.ndarray
    lam_analytic: np.ndarray
    neighbours: list

    def geometry(self) -> Geometry:
        """Geometry recomputed from the flowed samples alone."""
        guess = -math.sin(self.t) * self.base.X + math.cos(self.t) * self.base.N
        return fit_geometry(self.X, self.neighbours, guess, valid=self.base.valid)


def flow(geom: Geometry, neighbours: list, t: float) -> FlowState:
    X = flow_points(geom.X, geom.N, t)
    return FlowState(base=geom, t=t, X=X, lam_analytic=evolved_curvatures(geom.lam, t),
                     neighbours=neighbours)


@dataclass
class CurvatureEvolution:
    t: float
    analytic: np.ndarray
    numeric: np.ndarray
    max_deviation: float


def curvature_evolution(geom: Geometry, neighbours: list, t: float,
                        mask: np.ndarray | None = None) -> CurvatureEvolution:
    w = window(geom)
    if not w.contains(t):
        raise WindowError(f"t = {t} outside ({w.A_minus + GUARD:.6f}, {w.A_plus - GUARD:.6f})")
    st = flow(geom, neighbours, t)
    g = st.geometry()
    num = np.linalg.eigvalsh(np.nan_to_num(g.B_raw))[:, ::-1]
    m = geom.valid & g.valid
    if mask is not None:
        m &= mask
    dev = float(np.max(np.abs(num[m] - st.lam_analytic[m])))
    return CurvatureEvolution(t=t, analytic=st.lam_analytic, numeric=num, max_deviation=dev)


@dataclass
class WidthBound:
    bound: float                 # arctan(sup lam_1) - arctan(inf lam_n)
    B0_norm: float
    traceless_bound_applies: bool      # ||B_0||^2 <= 1 + (H/n)^2
    tan_width_bound: float   # 2||B_0|| / (1 + (H/n)^2 - ||B_0||^2), inf if not applicable


def width_upper_bound(geom: Geometry, H: float, mask: np.ndarray | None = None) -> WidthBound:
    m = geom.valid if mask is None else geom.valid & mask
    lam = geom.lam[m]
    b = float(np.max(geom.B0_norm[m]))
    h2 = (H / geom.n) ** 2
    ok = b * b <= 1 + h2
    den = 1 + h2 - b * b
    tb = 2 * b / den if ok and den > 0 else math.inf
    return WidthBound(bound=math.atan(float(np.max(lam[:, 0]))) - math.atan(float(np.min(lam[:, -1]))),
                      B0_norm=b, traceless_bound_applies=ok, tan_width_bound=tb)


def convexity_time(geom: Geometry, neighbours: list, H: float, side: str,
                   tol: float = 1e-4, numeric: bool = True,
                   mask: np.ndarray | None = None) -> float:
    """Flow time at which the leaves switch H-convexity, by bisection.

    side = "past": smallest t after which the leaf is past-H-convex;
    side = "future": largest t before which it is future-H-convex.
    With numeric=False the analytic curvatures are used instead of refitting.
    """
    w = window(geom)
    lo_lim, hi_lim = w.A_minus + GUARD, w.A_plus - GUARD
    base_mask = geom.valid if mask is None else geom.valid & mask
    lam0 = geom.lam[base_mask]
    d = math.atan(H / geom.n)
    est = (math.atan(float(np.max(lam0[:, 0]))) if side == "past"
           else math.atan(float(np.min(lam0[:, -1])))) - d

    def convex(t):
        st = flow(geom, neighbours, t)
        if numeric:
            lam = np.linalg.eigvalsh(np.nan_to_num(st.geometry().B_raw))[:, ::-1]
        else:
            lam = st.lam_analytic
        return is_H_convex(lam[base_mask], H, geom.n, side)[0]

    want_low = side == "future"   # future convexity holds for small t
    # bracket outward from the analytic estimate; leaves near the window
    # edges are too degenerate for a reliable refit
    step = 0.05
    while True:
        lo = max(est - step, lo_lim)
        hi = min(est + step, hi_lim)
        if convex(lo) == want_low and convex(hi) != want_low:
            break
        if lo == lo_lim and hi == hi_lim:
            raise WindowError("no convexity switch inside the window")
        step *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if convex(mid) == want_low:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def metric_check(geom: Geometry, t: float, edges: np.ndarray,
                 mask: np.ndarray | None = None) -> float:
    """Relative deviation between flowed edge lengths and |cos t v + sin t B v|.

    The tangent vector of an edge is read in the frames at both endpoints
    and the two predictions are averaged.
    """
    Xt = flow_points(geom.X, geom.N, t)
    i, j = edges[:, 0], edges[:, 1]
    keep = geom.valid[i] & geom.valid[j]
    if mask is not None:
        keep &= mask[i] & mask[j]
    i, j = i[keep], j[keep]
    c = -Q.form(Xt[i], Xt[j])
    actual = np.arccosh(np.clip(c, 1.0, None))
    n = geom.n
    I = np.eye(n)

    def predicted(a, b):
        d = geom.X[b] - geom.X[a]
        v = Q.form(d[:, None, :], geom.E[a])
        # correct chord to geodesic length at second order
        L0 = np.arccosh(np.clip(-Q.form(geom.X[a], geom.X[b]), 1.0, None))
        nv = np.linalg.norm(v, axis=1)
        v *= (L0 / np.where(nv > 0, nv, 1.0))[:, None]
        M = math.cos(t) * I + math.sin(t) * geom.B_raw[a]
        return np.linalg.norm(np.einsum("vij,vj->vi", M, v), axis=1)

    pred = 0.5 * (predicted(i, j) + predicted(j, i))
    return float(np.max(np.abs(pred - actual) / actual))


def hk_oracle(lam1: float, lam2: float, t: float) -> float:
    """Sectional curvature -1 - lam1^t lam2^t of a surface leaf flowed for time t.

    Uses -1 - (l1 - s)(l2 - s) / ((1 + l1 s)(1 + l2 s)) with s = tan t.  When
    numerator and denominator vanish together (e.g. l = +-1 at t = pi/4) the
    value is the limit as the curvatures are scaled towards (l1, l2), found by
    Richardson extrapolation.
    """
    s = math.tan(t)

    def k(a, b):
        return -1.0 - (a - s) * (b - s) / ((1 + a * s) * (1 + b * s))

    den = (1 + lam1 * s) * (1 + lam2 * s)
    if abs(den) > 1e-12:
        return k(lam1, lam2)
    num = (lam1 - s) * (lam2 - s)
    if abs(num) > 1e-12:
        return -math.inf
    e = 1e-5
    k1 = k(lam1 * (1 - e), lam2 * (1 - e))
    k2 = k(lam1 * (1 - 2 * e), lam2 * (1 - 2 * e))
    return 2 * k1 - k2
