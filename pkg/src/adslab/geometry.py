"""Extrinsic and intrinsic geometry of sampled spacelike hypersurfaces.

The shape operator at a vertex is read off a least-squares jet of the height
function over the tangent space, computed from ambient neighbour positions.
In the chart xi_k = q(Y - x, e_k) the Christoffel symbols vanish at the
centre, so the same fitted jets give intrinsic gradients and Laplacians.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import quadric as Q

NORMAL_ITERS = 6


def monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials of total degree 1..degree, graded."""
    out = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    return out


def design(xi: np.ndarray, exps) -> np.ndarray:
    """Monomial design matrix; xi has shape (..., m, n)."""
    cols = [np.prod(xi ** np.array(e), axis=-1) for e in exps]
    return np.stack(cols, axis=-1)


def slice_frame(x: np.ndarray, N: np.ndarray) -> np.ndarray:
    """q-orthonormal frame of the orthogonal complement of {x, N}.

    Starts from the coordinate vectors of the standard splitting at x, which
    are tangent to the quadric, and removes the N component.  Batched over
    the leading axis: x, N have shape (V, n+2), result (V, n, n+2).
    """
    V, D = x.shape
    n = D - 2
    base = np.zeros((V, n, D))
    idx = np.arange(n)
    base[:, idx, idx] = 1.0
    y = x[:, :n]
    a2 = 1.0 + np.sum(y * y, axis=1)
    tail = x.copy()
    tail[:, :n] = 0.0
    base += (y / a2[:, None])[:, :, None] * tail[:, None, :]
    base += Q.form(base, x[:, None, :])[..., None] * x[:, None, :]
    base += Q.form(base, N[:, None, :])[..., None] * N[:, None, :]
    E = np.empty_like(base)
    for k in range(n):
        v = base[:, k]
        for j in range(k):
            v = v - Q.form(v, E[:, j])[:, None] * E[:, j]
        E[:, k] = v / np.sqrt(Q.form(v, v))[:, None]
    return E


@dataclass
class Geometry:
    n: int
    X: np.ndarray           # (V, n+2) embedding
    N: np.ndarray           # (V, n+2) future unit normal
    E: np.ndarray           # (V, n, n+2) tangent frame
    B_raw: np.ndarray       # (V, n, n) fitted shape operator in the frame
    B: np.ndarray           # shape operator used downstream
    lam: np.ndarray         # (V, n) principal curvatures, decreasing
    B0: np.ndarray
    B0_norm: np.ndarray     # operator norm of the traceless part per vertex
    valid: np.ndarray       # vertices with a complete fitting neighbourhood
    grad_ops: list          # n sparse operators: samples -> gradient components
    lap_op: sp.csr_matrix   # samples -> Laplace-Beltrami
    H: float | None = None

    def gradient(self, f) -> np.ndarray:
        return np.stack([G @ f for G in self.grad_ops], axis=-1)

    def laplacian(self, f) -> np.ndarray:
        return self.lap_op @ f

    def mean_curvature(self) -> np.ndarray:
        return np.trace(self.B_raw, axis1=1, axis2=2)


def fit_geometry(X: np.ndarray, neighbours: list, normal_guess: np.ndarray,
                 valid: np.ndarray | None = None, H: float | None = None,
                 degree: int = 3) -> Geometry:
    """Normals, shape operators and differential operators of a sampled hypersurface.

    ``neighbours[i]`` lists the sample indices used around vertex i.  If H is
    given, B is replaced by its fitted traceless part plus (H/n) Id so that
    the trace is exact; ``B_raw`` keeps the fit.
    """
    X = np.asarray(X, dtype=float)
    V, D = X.shape
    n = D - 2
    exps = monomials(n, degree)
    lin = [exps.index(tuple(int(i == k) for i in range(n))) for k in range(n)]
    quad = {}
    for a in range(n):
        for b in range(a, n):
            e = [0] * n
            e[a] += 1
            e[b] += 1
            quad[(a, b)] = exps.index(tuple(e))
    N = np.asarray(normal_guess, dtype=float).copy()
    N = N + Q.form(N, X)[:, None] * X
    N /= np.sqrt(-Q.form(N, N))[:, None]
    E = np.zeros((V, n, D))
    B_raw = np.full((V, n, n), np.nan)
    rows, cols = [], []
    gvals = [[] for _ in range(n)]
    lvals = []
    counts = np.array([len(nb) for nb in neighbours])
    ok = counts >= len(exps) + 1
    for m in np.unique(counts[ok]):
        ids = np.flatnonzero(counts == m)
        nb = np.array([neighbours[i] for i in ids])
        x = X[ids]
        Y = X[nb] - x[:, None, :]
        Ng = N[ids]
        for _ in range(NORMAL_ITERS):
            Eg = slice_frame(x, Ng)
            xi = Q.form(Y[:, :, None, :], Eg[:, None, :, :])
            scale = np.sqrt(np.mean(np.sum(xi * xi, axis=2), axis=1))
            P = design(xi / scale[:, None, None], exps)
            pinv = np.linalg.pinv(P)
            hgt = -Q.form(Y, Ng[:, None, :])
            c = np.einsum("gkm,gm->gk", pinv, hgt)
            slope = c[:, lin] / scale[:, None]
            sn = np.sqrt(np.sum(slope * slope, axis=1))
            slope *= np.minimum(1.0, 0.5 / np.maximum(sn, 1e-300))[:, None]
            Ng = (Ng + np.einsum("gk,gkd->gd", slope, Eg)) / np.sqrt(
                1.0 - np.sum(slope * slope, axis=1))[:, None]
            Ng /= np.sqrt(-Q.form(Ng, Ng))[:, None]
            if np.max(np.abs(slope)) < 1e-14:
                break
        Eg = slice_frame(x, Ng)
        xi = Q.form(Y[:, :, None, :], Eg[:, None, :, :])
        scale = np.sqrt(np.mean(np.sum(xi * xi, axis=2), axis=1))
        P = design(xi / scale[:, None, None], exps)
        pinv = np.linalg.pinv(P)
        hgt = -Q.form(Y, Ng[:, None, :])
        c = np.einsum("gkm,gm->gk", pinv, hgt)
        Hs = np.zeros((len(ids), n, n))
        lap_rows = np.zeros((len(ids), m))
        for (a, b), k in quad.items():
            f = (2.0 if a == b else 1.0) / scale ** 2
            Hs[:, a, b] = Hs[:, b, a] = f * c[:, k]
            if a == b:
                lap_rows += 2.0 * pinv[:, k, :] / scale[:, None] ** 2
        N[ids] = Ng
        E[ids] = Eg
        B_raw[ids] = Hs
        r = np.repeat(ids, m + 1)
        cc = np.concatenate([nb, ids[:, None]], axis=1).ravel()
        rows.append(r)
        cols.append(cc)
        for k in range(n):
            g = pinv[:, lin[k], :] / scale[:, None]
            gvals[k].append(np.concatenate([g, -g.sum(axis=1, keepdims=True)], axis=1).ravel())
        lvals.append(np.concatenate([lap_rows, -lap_rows.sum(axis=1, keepdims=True)],
                                    axis=1).ravel())
    rows = np.concatenate(rows) if rows else np.zeros(0, int)
    cols = np.concatenate(cols) if cols else np.zeros(0, int)

    def mat(vals):
        v = np.concatenate(vals) if vals else np.zeros(0)
        return sp.csr_matrix((v, (rows, cols)), shape=(V, V))

    grad_ops = [mat(gvals[k]) for k in range(n)]
    lap_op = mat(lvals)
    valid = ok if valid is None else (np.asarray(valid, dtype=bool) & ok)
    B0 = B_raw - (np.trace(B_raw, axis1=1, axis2=2) / n)[:, None, None] * np.eye(n)
    if H is not None:
        B = B0 + (H / n) * np.eye(n)
    else:
        B = B_raw.copy()
        B0 = B - (np.trace(B, axis1=1, axis2=2) / n)[:, None, None] * np.eye(n)
    lam = np.full((V, n), np.nan)
    B0n = np.full(V, np.nan)
    good = np.all(np.isfinite(B.reshape(V, -1)), axis=1)
    lam[good] = np.linalg.eigvalsh(B[good])[:, ::-1]
    B0n[good] = np.max(np.abs(np.linalg.eigvalsh(B0[good])), axis=1)
    return Geometry(n=n, X=X, N=N, E=E, B_raw=B_raw, B=B, lam=lam, B0=B0, B0_norm=B0n,
                    valid=valid & good, grad_ops=grad_ops, lap_op=lap_op, H=H)


def graph_embedding(mesh, f) -> np.ndarray:
    split = Q.Splitting.standard(2)
    return split.from_coords(mesh.hyperboloid(), np.asarray(f, dtype=float))


def embed_and_geometry(c, exact_trace: bool = True, rings: int = 2) -> Geometry:
    """Geometry cache of a CMC graph mesh.

    Raises GeometryError if a triangle of the graph fails to be spacelike.
    """
    from .solver import _Assembly
    A = _Assembly.of(c.mesh)
    s = A.slope(c.f)
    if s.max() >= 1.0:
        bad = int(c.mesh.triangles[np.argmax(s)][0])
        raise Q.GeometryError(f"non-spacelike triangle at vertex {bad}")
    X = graph_embedding(c.mesh, c.f)
    T = Q.time_field(X)
    valid = c.mesh.depth() >= rings
    return fit_geometry(X, c.mesh.k_ring(rings), T, valid=valid,
                        H=c.H_target if exact_trace else None)


def core_mask(mesh, R_core: float) -> np.ndarray:
    """Vertices within geodesic radius R_core of the centre."""
    return mesh.rho <= R_core + 1e-12


def traceless_excess(geom: Geometry, ref: Geometry) -> np.ndarray:
    """Per-vertex operator norm of B_0 - B_0^ref for two graphs on the same mesh.

    With ``ref`` the discrete umbilical of the same mean curvature, the
    consistent fitting bias of the mesh cancels and what remains estimates
    the traceless curvature of the surface itself.  NaN where either fit is
    not trusted.
    """
    if geom.B0.shape != ref.B0.shape:
        raise ValueError("geometries live on different meshes")
    D = geom.B0 - ref.B0
    out = np.full(len(D), np.nan)
    ok = geom.valid & ref.valid
    out[ok] = np.max(np.abs(np.linalg.eigvalsh(D[ok])), axis=1)
    return out


# --- intrinsic curvature --------------------------------------------------

class Jet:
    """Second-order Taylor jet in two variables: (f, fx, fy, fxx, fxy, fyy)."""

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    @classmethod
    def const(cls, v, like):
        z = np.zeros_like(like)
        return cls([v + z, z, z, z, z, z])

    def __add__(self, o):
        o = o if isinstance(o, Jet) else Jet.const(o, self.c[0])
        return Jet(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, o):
        return self + (-o if isinstance(o, Jet) else -o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.c * o)
        f, fx, fy, fxx, fxy, fyy = self.c
        g, gx, gy, gxx, gxy, gyy = o.c
        return Jet([f * g, fx * g + f * gx, fy * g + f * gy,
                    fxx * g + 2 * fx * gx + f * gxx,
                    fxy * g + fx * gy + fy * gx + f * gxy,
                    fyy * g + 2 * fy * gy + f * gyy])

    __rmul__ = __mul__


def brioschi(E: Jet, F: Jet, G: Jet) -> np.ndarray:
    """Gaussian curvature of the metric E du^2 + 2F du dv + G dv^2."""
    e, eu, ev, euu, euv, evv = E.c
    f, fu, fv, fuu, fuv, fvv = F.c
    g, gu, gv, guu, guv, gvv = G.c
    m1 = np.stack([
        np.stack([-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev], -1),
        np.stack([fv - 0.5 * gu, e, f], -1),
        np.stack([0.5 * gv, f, g], -1)], -2)
    m2 = np.stack([
        np.stack([np.zeros_like(e), 0.5 * ev, 0.5 * gu], -1),
        np.stack([0.5 * ev, e, f], -1),
        np.stack([0.5 * gu, f, g], -1)], -2)
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (e * g - f * f) ** 2


def intrinsic_curvature(mesh, f, rings: int = 3, degree: int = 4) -> np.ndarray:
    """Gaussian curvature of the induced metric g_H - a^2 du^2 of a graph.

    Works in the Poincare chart w, where g_H = lam^2 |dw|^2 and a = lam - 1.
    The height u is fitted by a local polynomial of the given degree; no
    normal or shape operator enters.  Vertices with incomplete neighbourhoods
    get NaN.
    """
    w = mesh.poincare()
    f = np.asarray(f, dtype=float)
    nbrs = mesh.k_ring(rings)
    exps = monomials(2, degree)
    idx = {e: k for k, e in enumerate(exps)}
    out = np.full(mesh.n_vertices, np.nan)
    counts = np.array([len(nb) for nb in nbrs])
    inner = mesh.depth() >= rings
    for m in np.unique(counts[inner]):
        ids = np.flatnonzero((counts == m) & inner)
        nb = np.array([nbrs[i] for i in ids])
        d = w[nb] - w[ids][:, None, :]
        s = np.sqrt(np.mean(np.sum(d * d, axis=2), axis=1))
        P = design(d / s[:, None, None], exps)
        c = np.einsum("gkm,gm->gk", np.linalg.pinv(P), f[nb] - f[ids][:, None])

        def coef(e):
            return c[:, idx[e]] / s ** sum(e)

        # jets of u_x and u_y at the centre
        ux = Jet([coef((1, 0)), 2 * coef((2, 0)), coef((1, 1)),
                  6 * coef((3, 0)), 2 * coef((2, 1)), 2 * coef((1, 2))])
        uy = Jet([coef((0, 1)), coef((1, 1)), 2 * coef((0, 2)),
                  2 * coef((2, 1)), 2 * coef((1, 2)), 6 * coef((0, 3))])
        x, y = w[ids, 0], w[ids, 1]
        lam = 2.0 / (1.0 - x * x - y * y)
        L = Jet([lam, lam ** 2 * x, lam ** 2 * y,
                 2 * lam ** 3 * x * x + lam ** 2, 2 * lam ** 3 * x * y,
                 2 * lam ** 3 * y * y + lam ** 2])
        a = L - 1.0
        a2 = a * a
        Ej = L * L - a2 * ux * ux
        Fj = -(a2 * ux * uy)
        Gj = L * L - a2 * uy * uy
        out[ids] = brioschi(Ej, Fj, Gj)
    return out


# --- sectional curvature ----------------------------------------------------

@dataclass
class SectionalReport:
    K: np.ndarray            # per-vertex maximal sectional curvature
    max_K: float
    bound: np.ndarray        # Gauss-equation upper bound per vertex
    bound_ok: bool


def sectional_curvature(geom: Geometry, H: float, tol: float = 1e-9) -> SectionalReport:
    """Maximal sectional curvature from the Gauss equation K(v, w) = -1 - <Bv,v><Bw,w>.

    For n = 2 this is -1 - det B.  For n >= 3 the maximum over coordinate
    planes of an eigenbasis is taken.
    """
    n = geom.n
    lam = geom.lam
    v = geom.valid
    if n == 2:
        K = -1.0 - lam[:, 0] * lam[:, 1]
    else:
        prods = np.stack([lam[:, i] * lam[:, j] for i in range(n) for j in range(i + 1, n)], -1)
        K = -1.0 - np.min(prods, axis=1)
    h = H / n
    b = geom.B0_norm
    bound = -1.0 - h * h + b * b + 2 * abs(h) * b
    return SectionalReport(K=K, max_K=float(np.max(K[v])) if v.any() else float("nan"),
                           bound=bound, bound_ok=bool(np.all(K[v] <= bound[v] + tol)))


# --- the function v_H ------------------------------------------------------

def f_H(v, grad2, delta: float, n: int) -> np.ndarray:
    """Right-hand side of the elliptic equation Lap v - n v = f_H.

    Obtained by tracing the Hessian identity for v over an H-hypersurface
    with mean curvature n tan(delta).
    """
    v = np.asarray(v, dtype=float)
    t = math.tan(delta)
    c = np.sqrt(np.clip(1 - v * v, 0, None))
    den = c + v * t
    return -t * (grad2 / ((1 - v * v) * den) - n * np.sqrt(1 - v * v + grad2) + n / den)


def f_H_printed(v, grad2, delta: float, n: int) -> np.ndarray:
    """Variant with |grad v|^2 / (1 - v^2)^{3/2} in the first term."""
    v = np.asarray(v, dtype=float)
    t = math.tan(delta)
    c = np.sqrt(np.clip(1 - v * v, 0, None))
    return -t * (grad2 / c ** 3 - n * np.sqrt(1 - v * v + grad2) + n / (c + v * t))


@dataclass
class VDiagnostics:
    P: object
    u: np.ndarray
    v: np.ndarray
    grad_norm: np.ndarray
    lap_v: np.ndarray
    f_H_values: np.ndarray
    pde_residual: np.ndarray
    f_H_printed: np.ndarray
    pde_residual_printed: np.ndarray
    denominator: np.ndarray
    valid: np.ndarray
    delta: float
    n: int

    def max_residual(self, mask=None) -> float:
        m = self.valid if mask is None else (self.valid & mask)
        return float(np.max(np.abs(self.pde_residual[m])))


def v_diagnostics(c, P, geom: Geometry | None = None, region=None) -> VDiagnostics:
    """The function v of the umbilical hypersurface P restricted to the mesh.

    ``region`` limits the evaluation to a vertex mask.  Its ring-2
    neighbourhood must also stay within distance pi/2 of P, since the
    Laplacian stencils reach that far.  Vertices outside carry NaN.
    """
    geom = geom or c.geometry
    n = geom.n
    delta = P.delta
    H = getattr(c, "H_target", None)
    if H is not None and abs(math.atan(H / n) - delta) > 1e-12:
        raise ValueError("umbilical hypersurface has a different mean curvature")
    u = Q.form(geom.X, P.e)
    V = len(u)
    use = np.ones(V, dtype=bool)
    if region is not None:
        use = np.asarray(region, dtype=bool).copy()
        use[(geom.lap_op[use] != 0).nonzero()[1]] = True
    if np.any(np.abs(u[use]) >= 1):
        raise Q.GeometryError("vertex outside the distance-pi/2 regime of P")
    u = np.where(use, u, np.nan)
    v = math.cos(delta) * u + math.sin(delta) * np.sqrt(1 - u * u)
    v0 = np.nan_to_num(v)
    gv = np.stack([G @ v0 for G in geom.grad_ops], axis=-1)
    g2 = np.sum(gv * gv, axis=1)
    lap = geom.laplacian(v0)
    ok = geom.valid & (use if region is None else np.asarray(region, dtype=bool))
    g2 = np.where(ok, g2, np.nan)
    lap = np.where(ok, lap, np.nan)
    fh = f_H(v, g2, delta, n)
    fp = f_H_printed(v, g2, delta, n)
    den = np.sqrt(1 - v * v) + v * math.tan(delta)
    return VDiagnostics(P=P, u=u, v=v, grad_norm=np.sqrt(g2), lap_v=lap, f_H_values=fh,
                        pde_residual=lap - n * v - fh, f_H_printed=fp,
                        pde_residual_printed=lap - n * v - fp, denominator=den,
                        valid=ok, delta=delta, n=n)


@dataclass
class GradientRatio:
    value: float | None
    count: int
    flagged: int
    skipped: bool


def gradient_ratio_report(d: VDiagnostics, floor: float = 1e-9) -> GradientRatio:
    """max |grad v| / |v| over the window |dist to P| <= pi/4 - |delta|/2.

    Vertices with denominator sqrt(1 - v^2) + v tan(delta) below 1/4 are
    excluded and counted as flagged.
    """
    dist = np.arcsin(np.clip(d.v, -1, 1))
    win = d.valid & (np.abs(dist) <= math.pi / 4 - abs(d.delta) / 2)
    if not win.any():
        raise ValueError("empty window around the umbilical hypersurface")
    bad = win & (d.denominator < 0.25)
    use = win & ~bad
    if np.max(np.abs(d.v[use]), initial=0.0) < floor:
        return GradientRatio(None, int(use.sum()), int(bad.sum()), True)
    use &= np.abs(d.v) >= floor
    r = d.grad_norm[use] / np.abs(d.v[use])
    return GradientRatio(float(np.max(r)), int(use.sum()), int(bad.sum()), False)
