"""Triangulated geodesic discs in the hyperbolic plane.

Meshes are built in the Poincare disc coordinate.  Because that model is
conformal, a mesh that is uniform there is close to isotropic in the
hyperbolic metric at every scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


@dataclass(frozen=True)
class DiscMesh:
    rho: np.ndarray          # geodesic radius of each vertex
    phi: np.ndarray          # polar angle
    triangles: np.ndarray    # (T, 3), counter-clockwise in the disc
    boundary: np.ndarray     # mask of vertices on the outer circle
    K: int                   # lattice steps from the centre to the boundary
    R_disc: float
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.rho)

    @property
    def boundary_ring(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def h(self) -> float:
        """Mesh parameter: lattice spacing in the Poincare coordinate."""
        return math.tanh(self.R_disc / 2) / self.K

    def poincare(self) -> np.ndarray:
        r = np.tanh(self.rho / 2)
        return np.stack([r * np.cos(self.phi), r * np.sin(self.phi)], axis=-1)

    def hyperboloid(self) -> np.ndarray:
        """Spatial hyperboloid coordinates y with |y| = sinh(rho)."""
        s = np.sinh(self.rho)
        return np.stack([s * np.cos(self.phi), s * np.sin(self.phi)], axis=-1)

    def boundary_directions(self) -> np.ndarray:
        b = self.boundary_ring
        return np.stack([np.cos(self.phi[b]), np.sin(self.phi[b])], axis=-1)

    def adjacency(self) -> list[np.ndarray]:
        if "adj" not in self._cache:
            nb = [set() for _ in range(self.n_vertices)]
            for a, b, c in self.triangles:
                nb[a].update((b, c))
                nb[b].update((a, c))
                nb[c].update((a, b))
            self._cache["adj"] = [np.array(sorted(s), dtype=int) for s in nb]
        return self._cache["adj"]

    def depth(self) -> np.ndarray:
        """Edge distance of each vertex from the boundary circle."""
        if "depth" not in self._cache:
            adj = self.adjacency()
            d = np.full(self.n_vertices, -1)
            front = list(self.boundary_ring)
            d[front] = 0
            while front:
                nxt = []
                for u in front:
                    for w in adj[u]:
                        if d[w] < 0:
                            d[w] = d[u] + 1
                            nxt.append(w)
                front = nxt
            self._cache["depth"] = d
        return self._cache["depth"]

    def k_ring(self, k: int = 2) -> list[np.ndarray]:
        """Vertices within k edges of each vertex, excluding the vertex itself."""
        key = ("ring", k)
        if key not in self._cache:
            adj = self.adjacency()
            out = []
            for v in range(self.n_vertices):
                seen = {v}
                front = {v}
                for _ in range(k):
                    front = {w for u in front for w in adj[u]} - seen
                    seen |= front
                seen.discard(v)
                out.append(np.array(sorted(seen), dtype=int))
            self._cache[key] = out
        return self._cache[key]

    def min_angle(self) -> float:
        """Smallest triangle angle measured in the Poincare coordinate (degrees)."""
        w = self.poincare()
        P = w[self.triangles]
        ang = []
        for i in range(3):
            u = P[:, (i + 1) % 3] - P[:, i]
            v = P[:, (i + 2) % 3] - P[:, i]
            c = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            ang.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
        return float(np.min(ang))

    def refine(self) -> "DiscMesh":
        return disc_mesh(2 * self.K, self.R_disc)

    def to_json(self) -> dict:
        return {"rho": self.rho.tolist(), "phi": self.phi.tolist(),
                "boundary": np.flatnonzero(self.boundary).tolist(),
                "triangles": self.triangles.tolist(), "K": self.K, "R_disc": self.R_disc}


def disc_mesh(K: int, R_disc: float = 3.0) -> DiscMesh:
    """Disc of geodesic radius R_disc meshed by a regular triangular lattice.

    The lattice (spacing rmax / K in the Poincare coordinate, centred on a
    vertex) is kept strictly inside the disc and closed off by equally spaced
    points on the boundary circle; the triangulation is Delaunay.  Away from
    the boundary every vertex sees the same stencil, so discretization errors
    vary smoothly from vertex to vertex.
    """
    if K < 2:
        raise ValueError("need K >= 2")
    rmax = math.tanh(R_disc / 2)
    s = rmax / K
    span = np.arange(-2 * K - 2, 2 * K + 3)
    I, J = np.meshgrid(span, span, indexing="ij")
    px = s * (I + 0.5 * J).ravel()
    py = s * (math.sqrt(3) / 2 * J).ravel()
    r = np.hypot(px, py)
    keep = r <= rmax - 0.55 * s
    M = int(round(2 * math.pi * rmax / s))
    ang = 2 * math.pi * np.arange(M) / M
    wx = np.concatenate([px[keep], rmax * np.cos(ang)])
    wy = np.concatenate([py[keep], rmax * np.sin(ang)])
    order = np.lexsort((np.arctan2(wy, wx), np.round(np.hypot(wx, wy), 12)))
    wx, wy = wx[order], wy[order]
    pts = np.stack([wx, wy], axis=-1)
    tri = Delaunay(pts)
    T = tri.simplices.astype(int)
    P = pts[T]
    cross = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (
        P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    T = T[np.abs(cross) > 1e-14 * s * s]
    flip = cross[np.abs(cross) > 1e-14 * s * s] < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    T = T[np.lexsort(T.T[::-1])]
    rr = np.hypot(wx, wy)
    boundary = np.abs(rr - rmax) < 1e-12
    return DiscMesh(rho=2 * np.arctanh(rr), phi=np.mod(np.arctan2(wy, wx), 2 * math.pi),
                    triangles=T, boundary=boundary, K=K, R_disc=R_disc)
