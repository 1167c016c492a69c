"""Constant mean curvature graphs over a hyperbolic disc (n = 2).

A spacelike graph t = u(y) in the standard splitting has induced metric
g_H - a^2 du^2 with a = cosh(dist to the centre).  Graphs of mean curvature H
are critical points of

    J(u) = int sqrt(1 - a^2 |grad u|^2) dvol  -  H int a u dvol,

which is discretized with P1 elements in the Poincare disc coordinate w,
where g_H = lam^2 |dw|^2, lam = 2 / (1 - |w|^2) and a / lam = (1 + |w|^2) / 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import boundary as Bd
from .mesh import DiscMesh


class SolverError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 60
    margin: float = 1e-3          # slopes kept at most 1 - margin of the light cone
    ptc_iter: int = 400           # pseudo-time fallback budget


@dataclass(frozen=True)
class _Assembly:
    """Per-triangle constants of the discrete functional."""
    T: np.ndarray
    area: np.ndarray        # Euclidean area in w
    D: np.ndarray           # (T, 3, 2) gradients of the hat functions
    a: np.ndarray           # cosh(rho) at centroids
    kappa: np.ndarray       # a / lam at centroids
    mass: np.ndarray        # per-vertex sum of area * a * lam^2 / 3

    @classmethod
    def of(cls, mesh: DiscMesh) -> "_Assembly":
        w = mesh.poincare()
        T = mesh.triangles
        P = w[T]
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        area = 0.5 * det
        # gradients of barycentric coordinates
        Minv = np.empty((len(T), 2, 2))
        Minv[:, 0, 0] = e2[:, 1] / det
        Minv[:, 0, 1] = -e2[:, 0] / det
        Minv[:, 1, 0] = -e1[:, 1] / det
        Minv[:, 1, 1] = e1[:, 0] / det
        D = np.empty((len(T), 3, 2))
        D[:, 1] = Minv[:, 0]
        D[:, 2] = Minv[:, 1]
        D[:, 0] = -D[:, 1] - D[:, 2]
        c = P.mean(axis=1)
        r2 = np.sum(c * c, axis=1)
        lam = 2.0 / (1.0 - r2)
        a = (1.0 + r2) / (1.0 - r2)
        mass = np.zeros(mesh.n_vertices)
        np.add.at(mass, T.ravel(), np.repeat(area * a * lam * lam / 3.0, 3))
        return cls(T=T, area=area, D=D, a=a, kappa=a / lam, mass=mass)

    def gradient(self, u):
        return np.einsum("tk,tkd->td", u[self.T], self.D)

    def slope(self, u):
        """Causal slope a |grad u|_H per triangle; spacelike iff < 1."""
        g = self.gradient(u)
        return self.kappa * np.linalg.norm(g, axis=1)

    def flux(self, u):
        """Per-vertex sum of area a^2 <g, D_i> / W, the elliptic part of the residual."""
        g = self.gradient(u)
        W = np.sqrt(np.clip(1.0 - self.kappa ** 2 * np.sum(g * g, axis=1), 1e-300, None))
        loc = (self.area * self.a ** 2 / W)[:, None] * np.einsum("td,tkd->tk", g, self.D)
        out = np.zeros(len(self.mass))
        np.add.at(out, self.T.ravel(), loc.ravel())
        return out, g, W

    def residual(self, u, H):
        fl, g, W = self.flux(u)
        return fl + H * self.mass, g, W

    def jacobian(self, g, W):
        k2 = self.kappa ** 2
        DD = np.einsum("tid,tjd->tij", self.D, self.D)
        gD = np.einsum("td,tkd->tk", g, self.D)
        loc = (self.area * self.a ** 2)[:, None, None] * (
            DD / W[:, None, None] + (k2 / W ** 3)[:, None, None] * gD[:, :, None] * gD[:, None, :])
        rows = np.repeat(self.T, 3, axis=1).ravel()
        cols = np.tile(self.T, (1, 3)).ravel()
        n = len(self.mass)
        return sp.csr_matrix((loc.ravel(), (rows, cols)), shape=(n, n))


def mean_curvature(mesh: DiscMesh, u: np.ndarray) -> np.ndarray:
    """Discrete mean curvature (trace of the shape operator) at each vertex."""
    A = _Assembly.of(mesh)
    fl, _, _ = A.flux(np.asarray(u, dtype=float))
    return -fl / A.mass


@dataclass
class CmcMesh:
    mesh: DiscMesh
    f: np.ndarray
    H_target: float
    converged: bool = True
    iterations: int = 0
    max_H_error: float = 0.0
    method: str = "newton"
    _geom: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return 2

    @property
    def geometry(self):
        if self._geom is None:
            from .geometry import embed_and_geometry
            self._geom = embed_and_geometry(self)
        return self._geom

    def H_mean(self) -> np.ndarray:
        return mean_curvature(self.mesh, self.f)

    def to_json(self) -> dict:
        d = self.mesh.to_json()
        d.update({"f": self.f.tolist(), "H": self.H_target})
        if self._geom is not None:
            d["lambda"] = self._geom.lam.tolist()
        return d


def dirichlet_data(b: Bd.AdmissibleBoundary, mesh: DiscMesh, H: float = 0.0) -> np.ndarray:
    """Boundary-ring values for a truncated CMC problem.

    The generator (or, for raw samples, the extension midpoint) is offset by
    the finite-radius profile of the umbilical graph with the same H, so the
    data are exact whenever the boundary curve is a horizontal circle.
    """
    from .hull import delta_of, umbilical_graph
    ring = mesh.boundary_ring
    y = mesh.hyperboloid()[ring]
    if b.fourier is not None:
        base = np.asarray(b.fourier(mesh.phi[ring]), dtype=float)
    else:
        up, um = Bd.extremal_values(b, y)
        base = 0.5 * (up + um)
    d = delta_of(H, 2)
    return base + umbilical_graph(d, y) - d


def solve_cmc(b: Bd.AdmissibleBoundary | None, H: float, mesh: DiscMesh,
              opts: SolveOptions | None = None, dirichlet: np.ndarray | None = None,
              u0: np.ndarray | None = None) -> CmcMesh:
    """Damped Newton on the discrete mean-curvature equation.

    Either a boundary ``b`` or explicit ``dirichlet`` ring values must be given.
    Falls back to pseudo-transient continuation if Newton stalls.
    """
    opts = opts or SolveOptions()
    if dirichlet is None:
        if b is None:
            raise ValueError("need a boundary or explicit Dirichlet data")
        dirichlet = dirichlet_data(b, mesh, H)
    A = _Assembly.of(mesh)
    ring = mesh.boundary_ring
    free = mesh.interior
    u = np.zeros(mesh.n_vertices)
    u[ring] = dirichlet
    limit = 1.0 - opts.margin
    if u0 is not None:
        u = np.array(u0, dtype=float)
        u[ring] = dirichlet
    else:
        # start from the linearization at u = 0
        _, g0, W0 = A.residual(np.zeros_like(u), H)
        J0 = A.jacobian(g0, W0)
        rhs = -(J0[free][:, ring] @ u[ring]) - H * A.mass[free]
        u[free] = spla.spsolve(J0[free][:, free].tocsc(), rhs)
        s = A.slope(u).max()
        if s > limit:
            # shrink the interior deviation from the boundary data until spacelike
            base = np.zeros_like(u)
            base[ring] = dirichlet
            Jb = A.jacobian(A.gradient(base) * 0, np.ones(len(A.T)))
            base[free] = spla.spsolve(Jb[free][:, free].tocsc(), -(Jb[free][:, ring] @ base[ring]))
            for _ in range(60):
                u = base + 0.5 * (u - base)
                if A.slope(u).max() <= limit:
                    break
    if A.slope(u).max() > limit:
        bad = int(A.T[np.argmax(A.slope(u))][0])
        raise SolverError(f"initial guess not spacelike near vertex {bad}")

    def herr(u):
        R, g, W = A.residual(u, H)
        return float(np.max(np.abs(R[free]) / A.mass[free])), R, g, W

    err, R, g, W = herr(u)
    it = 0
    method = "newton"
    while err > opts.tol and it < opts.max_iter:
        it += 1
        Jm = A.jacobian(g, W)[free][:, free].tocsc()
        du = spla.spsolve(Jm, -R[free])
        alpha = 1.0
        accepted = False
        for _ in range(40):
            trial = u.copy()
            trial[free] += alpha * du
            if A.slope(trial).max() <= limit:
                e2, R2, g2, W2 = herr(trial)
                if e2 < err or alpha < 1e-6:
                    accepted = e2 < err
                    break
            alpha *= 0.5
        if not accepted:
            break
        u, err, R, g, W = trial, e2, R2, g2, W2

    if err > opts.tol:
        method = "pseudo-time"
        ds = 1e-2
        for _ in range(opts.ptc_iter):
            it += 1
            M = sp.diags(A.mass[free] / ds)
            Jm = (A.jacobian(g, W)[free][:, free] + M).tocsc()
            du = spla.spsolve(Jm, -R[free])
            trial = u.copy()
            trial[free] += du
            if A.slope(trial).max() > limit:
                ds *= 0.25
                if ds < 1e-12:
                    bad = int(A.T[np.argmax(A.slope(trial))][0])
                    raise SolverError(f"spacelike violation at full damping near vertex {bad}")
                continue
            e2, R2, g2, W2 = herr(trial)
            u, err, R, g, W = trial, e2, R2, g2, W2
            ds = min(ds * 2.0, 1e12)
            if err <= opts.tol:
                break
    if err > opts.tol:
        raise SolverError(f"no convergence: max |H_mean - H| = {err:.3e} after {it} iterations")
    return CmcMesh(mesh=mesh, f=u, H_target=H, converged=True, iterations=it,
                   max_H_error=err, method=method)
