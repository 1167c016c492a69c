"""Admissible boundaries, their extremal extensions and cosmological times.

A boundary is stored as samples of a function f on S^{n-1}; the asymptotic
boundary point over theta sits at time f(theta) in the standard splitting.
All distances on the closed hemisphere are spherical distances, the metric in
which spacelike graphs are exactly the strictly 1-Lipschitz ones.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import quadric as Q


class BoundaryError(ValueError):
    pass


def circle_grid(N: int) -> np.ndarray:
    """N equispaced unit vectors of the plane, starting at angle 0."""
    ang = 2 * math.pi * np.arange(N) / N
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def sphere_grid(n: int, N: int) -> np.ndarray:
    """Quasi-uniform deterministic grid of N points on S^{n-1}."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        return circle_grid(N)
    if n == 3:
        # Fibonacci lattice completed with antipodes so that f(-theta) is sampled.
        half = N // 2
        k = np.arange(half) + 0.5
        z = 1 - 2 * k / N
        r = np.sqrt(1 - z * z)
        phi = math.pi * (1 + 5 ** 0.5) * k
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
        return np.concatenate([pts, -pts])
    rng = np.random.default_rng(12345)
    pts = rng.normal(size=(N // 2, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.concatenate([pts, -pts])


def wrap(x):
    """Difference of angles reduced to [-pi, pi)."""
    return np.mod(np.asarray(x) + math.pi, 2 * math.pi) - math.pi


@dataclass(frozen=True)
class Fourier:
    """Trigonometric polynomial a_0 + sum_k a_k cos(k phi) + b_k sin(k phi) on S^1."""

    a: tuple[float, ...] = (0.0,)
    b: tuple[float, ...] = (0.0,)

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        # Horner in z = exp(i phi) on c_k = a_k - i b_k
        K = max(len(self.a), len(self.b))
        c = np.zeros(K, dtype=complex)
        c[:len(self.a)] += self.a
        c[1:len(self.b)] -= 1j * np.asarray(self.b[1:], dtype=float)
        z = np.exp(1j * phi)
        acc = np.full(phi.shape, c[-1], dtype=complex)
        for ck in c[-2::-1]:
            acc = acc * z + ck
        return acc.real

    def slope_bound(self) -> float:
        return sum(k * abs(c) for k, c in enumerate(self.a)) + sum(
            k * abs(c) for k, c in enumerate(self.b))

    def antipodal_bound(self) -> float:
        """Upper bound for max |f(phi) - f(phi + pi)| (only odd modes contribute)."""
        odd = sum(abs(c) for k, c in enumerate(self.a) if k % 2) + sum(
            abs(c) for k, c in enumerate(self.b) if k % 2)
        return 2 * odd

    def scaled(self, s: float) -> "Fourier":
        return Fourier(tuple(s * c for c in self.a), tuple(s * c for c in self.b))


@dataclass(frozen=True)
class AdmissibleBoundary:
    n: int
    theta: np.ndarray
    values: np.ndarray
    margin: float = 1e-3
    fourier: Fourier | None = field(default=None, compare=False)

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        vals = np.array(self.values, dtype=float)
        if th.ndim != 2 or th.shape[1] != self.n or th.shape[0] != vals.shape[0]:
            raise BoundaryError("theta must be an (N, n) array matching values")
        if th.shape[0] == 0:
            raise BoundaryError("empty boundary grid")
        th.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, func, N: int = 256, n: int = 2, margin: float = 1e-3):
        th = sphere_grid(n, N)
        if n == 2:
            vals = func(np.arctan2(th[:, 1], th[:, 0]))
        else:
            vals = func(th)
        return cls(n=n, theta=th, values=np.asarray(vals, dtype=float), margin=margin)

    @classmethod
    def from_fourier(cls, four: Fourier, N: int = 256, margin: float = 1e-3,
                     clamp: bool = False):
        slope = four.slope_bound()
        if slope > 1 - margin + 1e-12:
            if not clamp:
                raise BoundaryError(
                    f"Fourier slope bound {slope:.4g} exceeds 1 - margin = {1 - margin:.4g}")
            four = four.scaled((1 - margin) / slope)
        th = circle_grid(N)
        vals = four(np.arctan2(th[:, 1], th[:, 0]))
        return cls(n=2, theta=th, values=vals, margin=margin, fourier=four)

    @property
    def angles(self) -> np.ndarray:
        if self.n != 2:
            raise BoundaryError("angles are only defined for n = 2")
        return np.arctan2(self.theta[:, 1], self.theta[:, 0])

    def evaluate(self, theta) -> np.ndarray:
        """Boundary function at arbitrary directions (closed form when available)."""
        theta = np.asarray(theta, dtype=float)
        if self.fourier is not None:
            return self.fourier(np.arctan2(theta[..., 1], theta[..., 0]))
        if self.n == 2:
            ang = np.arctan2(theta[..., 1], theta[..., 0])
            return self._spline()(ang)
        # Midpoint of the McShane bounds reproduces samples and stays Lipschitz.
        d = np.arccos(np.clip(theta @ self.theta.T, -1, 1))
        return 0.5 * (np.min(self.values + d, axis=-1) + np.max(self.values - d, axis=-1))

    def _spline(self):
        """Periodic cubic interpolant of the samples (n = 2)."""
        sp = self.__dict__.get("_sp")
        if sp is None:
            ang = np.mod(self.angles, 2 * math.pi)
            order = np.argsort(ang)
            a = np.append(ang[order], ang[order][0] + 2 * math.pi)
            v = np.append(self.values[order], self.values[order][0])
            sp = CubicSpline(a, v, bc_type="periodic", extrapolate="periodic")
            object.__setattr__(self, "_sp", sp)
        return sp

    def null_reps(self) -> np.ndarray:
        return Q.null_rep(self.theta, self.values)

    def to_json(self) -> dict:
        out = {"n": self.n, "margin": self.margin}
        if self.fourier is not None:
            out.update(kind="fourier", theta=[], values=[],
                       fourier={"a": list(self.fourier.a), "b": list(self.fourier.b)},
                       N=int(self.theta.shape[0]))
        else:
            th = self.angles.tolist() if self.n == 2 else self.theta.tolist()
            out.update(kind="samples", theta=th, values=self.values.tolist())
        return out

    @classmethod
    def from_json(cls, data: dict, clamp: bool = False) -> "AdmissibleBoundary":
        n = int(data.get("n", 2))
        margin = float(data.get("margin", 1e-3))
        kind = data.get("kind", "samples")
        if kind == "fourier":
            if n != 2:
                raise BoundaryError("Fourier boundaries are only defined for n = 2")
            four = Fourier(tuple(data["fourier"].get("a", [0.0])),
                           tuple(data["fourier"].get("b", [0.0])))
            return cls.from_fourier(four, N=int(data.get("N", 256)), margin=margin, clamp=clamp)
        th = np.asarray(data["theta"], dtype=float)
        if n == 2 and th.ndim == 1:
            th = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return cls(n=n, theta=th, values=np.asarray(data["values"], dtype=float), margin=margin)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


@dataclass
class Certificate:
    ok: bool
    lipschitz: float
    antipodal_margin: float
    violations: list = field(default_factory=list)


def spherical_distance(a, b) -> np.ndarray:
    return np.arccos(np.clip(np.asarray(a) @ np.asarray(b).T, -1.0, 1.0))


def _antipodal_gap(b: AdmissibleBoundary) -> float:
    th = b.theta
    dots = th @ (-th).T
    j = np.argmax(dots, axis=0)
    exact = np.all(dots[j, np.arange(len(th))] > 1 - 1e-12)
    if exact:
        return float(np.max(np.abs(wrap(b.values - b.values[j]))))
    if b.n == 2:
        opp = b.evaluate(-th)
        return float(np.max(np.abs(wrap(b.values - opp))))
    slack = np.arccos(np.clip(dots[j, np.arange(len(th))], -1, 1))
    return float(np.max(np.abs(wrap(b.values - b.values[j])) + slack))


def validate(b: AdmissibleBoundary, max_report: int = 10) -> Certificate:
    """Discrete admissibility check.

    Lipschitz ratios use angle differences reduced mod 2 pi, so a sample of a
    degree-one map such as f(theta) = theta is seen with its true slope.
    """
    if b.theta.shape[0] == 0:
        raise BoundaryError("empty boundary grid")
    d = spherical_distance(b.theta, b.theta)
    df = np.abs(wrap(b.values[:, None] - b.values[None, :]))
    off = d > 1e-12
    ratio = np.zeros_like(d)
    ratio[off] = df[off] / d[off]
    lip = float(ratio.max()) if off.any() else 0.0
    gap = _antipodal_gap(b)
    amargin = math.pi - gap
    violations = []
    bad = np.argwhere(np.triu(df > d + 1e-12, 1))
    for i, j in bad[:max_report]:
        violations.append(("lipschitz", int(i), int(j), float(df[i, j]), float(d[i, j])))
    if amargin < b.margin:
        violations.append(("antipodal", amargin, b.margin))
    return Certificate(ok=not violations, lipschitz=lip, antipodal_margin=amargin,
                       violations=violations)


def extremal_values(b: AdmissibleBoundary, y) -> tuple[np.ndarray, np.ndarray]:
    """McShane-Whitney extensions (u_plus, u_minus) at points with hyperboloid coords y."""
    y = np.asarray(y, dtype=float)
    a = np.sqrt(1.0 + np.sum(y * y, axis=-1))
    cosd = np.clip((y @ b.theta.T) / a[..., None], -1.0, 1.0)
    d = np.arccos(cosd)
    up = np.min(b.values + d, axis=-1)
    um = np.max(b.values - d, axis=-1)
    return up, um


def extremal_values_klein(b: AdmissibleBoundary, z) -> tuple[np.ndarray, np.ndarray]:
    """Same as ``extremal_values`` for points given in the closed unit ball.

    z = sin(sigma) omega is the orthogonal projection of the hemisphere, so the
    equator |z| = 1 is allowed and reproduces the boundary samples.
    """
    z = np.asarray(z, dtype=float)
    d = np.arccos(np.clip(z @ b.theta.T, -1.0, 1.0))
    return np.min(b.values + d, axis=-1), np.max(b.values - d, axis=-1)


def klein_to_y(z):
    z = np.asarray(z, dtype=float)
    return z / np.sqrt(1.0 - np.sum(z * z, axis=-1))[..., None]


def y_to_klein(y):
    y = np.asarray(y, dtype=float)
    return y / np.sqrt(1.0 + np.sum(y * y, axis=-1))[..., None]


@dataclass
class ExtremalExtensions:
    boundary: AdmissibleBoundary
    points: np.ndarray          # hyperboloid coordinates of the sampled disc
    u_plus: np.ndarray
    u_minus: np.ndarray

    def at(self, y):
        return extremal_values(self.boundary, y)


def extremal_extensions(b: AdmissibleBoundary, points) -> ExtremalExtensions:
    pts = np.asarray(points, dtype=float)
    up, um = extremal_values(b, pts)
    return ExtremalExtensions(b, pts, up, um)


def invisible_domain_contains(b: AdmissibleBoundary, p) -> np.ndarray:
    """True where q(p, null_rep(theta, f(theta))) < 0 for every sample."""
    p = np.asarray(p.v if isinstance(p, Q.AdSPoint) else p, dtype=float)
    vals = Q.form(p[..., None, :], b.null_reps())
    return np.all(vals < 0, axis=-1)


def _ball_grid(n: int, levels: int, nphi: int, sigma_max: float) -> np.ndarray:
    """Polar grid of the hemisphere written in ball coordinates."""
    sig = sigma_max * np.arange(levels + 1) / levels
    dirs = sphere_grid(n, nphi) if n >= 2 else np.array([[1.0], [-1.0]])
    pts = [np.zeros((1, n))]
    for s in sig[1:]:
        pts.append(math.sin(s) * dirs)
    return np.concatenate(pts)


class CosmologicalTimes:
    """Past and future cosmological times of the invisible domain of a boundary.

    The suprema over the past and future boundary graphs are taken over a polar
    sample of the hemisphere and then polished by a compass search on the
    graph, which removes most of the sampling bias.
    """

    def __init__(self, b: AdmissibleBoundary, levels: int = 40, nphi: int = 80,
                 sigma_max: float = math.pi / 2 - 1e-3, polish: int = 14):
        self.b = b
        self.n = b.n
        self.split = Q.Splitting.standard(b.n)
        self.z = _ball_grid(b.n, levels, nphi, sigma_max)
        up, um = extremal_values_klein(b, self.z)
        y = klein_to_y(self.z)
        self.g_minus = self.split.from_coords(y, um)
        self.g_plus = self.split.from_coords(y, up)
        self.step0 = 1.5 * math.sin(sigma_max) / levels
        self.rmax = math.sin(sigma_max)
        self.polish = polish

    def _graph_point(self, z, past: bool):
        up, um = extremal_values_klein(self.b, z)
        return self.split.from_coords(klein_to_y(z), um if past else up)

    def _score(self, P, G, past: bool):
        d = Q.distance_array(P, G)
        ok = ~np.isnan(d) & (d > 0)
        # the graph point must lie in the past (resp. future) of P
        fut = Q.future_of(P, G)
        ok &= ~fut if past else fut
        return np.where(ok, d, -np.inf)

    def _sup(self, P, past: bool, chunk: int = 256):
        G = self.g_minus if past else self.g_plus
        P = np.atleast_2d(P)
        best = np.empty(len(P))
        arg = np.empty(len(P), dtype=int)
        for s in range(0, len(P), chunk):
            sc = self._score(P[s:s + chunk, None, :], G[None, :, :], past)
            arg[s:s + chunk] = np.argmax(sc, axis=1)
            best[s:s + chunk] = sc[np.arange(sc.shape[0]), arg[s:s + chunk]]
        z = self.z[arg].copy()
        step = np.full(len(P), self.step0)
        dirs = np.concatenate([np.eye(self.n), -np.eye(self.n)])
        for _ in range(self.polish):
            cand = z[:, None, :] + step[:, None, None] * dirs[None]
            r = np.linalg.norm(cand, axis=-1, keepdims=True)
            cand = np.where(r > self.rmax, cand * (self.rmax / np.maximum(r, 1e-300)), cand)
            Gc = self._graph_point(cand, past)
            sc = self._score(P[:, None, :], Gc, past)
            k = np.argmax(sc, axis=1)
            val = sc[np.arange(len(P)), k]
            better = val > best
            z = np.where(better[:, None], cand[np.arange(len(P)), k], z)
            best = np.where(better, val, best)
            step = np.where(better, step, 0.5 * step)
        return best

    def tau_past(self, P) -> np.ndarray:
        return self._sup(P, past=True)

    def tau_fut(self, P) -> np.ndarray:
        return self._sup(P, past=False)


def cosmological_times(b: AdmissibleBoundary, p, ext: ExtremalExtensions | None = None,
                       times: CosmologicalTimes | None = None):
    """(tau_past, tau_fut) at a point of the invisible domain."""
    p = np.asarray(p.v if isinstance(p, Q.AdSPoint) else p, dtype=float)
    if not np.all(invisible_domain_contains(b, p)):
        raise BoundaryError("point is outside the invisible domain")
    ct = times or CosmologicalTimes(b)
    tp = ct.tau_past(np.atleast_2d(p))
    tf = ct.tau_fut(np.atleast_2d(p))
    if p.ndim == 1:
        return float(tp[0]), float(tf[0])
    return tp, tf


# --- isometric normalization (n = 2) ---------------------------------------

def boost(n: int, i: int, beta: float) -> np.ndarray:
    """Hyperbolic rotation of the (x_i, x_{n+1}) plane, an element of O(n, 2)."""
    A = np.eye(n + 2)
    c, s = math.cosh(beta), math.sinh(beta)
    A[i, i] = A[n, n] = c
    A[i, n] = A[n, i] = s
    return A


def _image_angles(b: AdmissibleBoundary, A: np.ndarray, s):
    """Angle and time of A applied to the boundary points over angles s."""
    s = np.asarray(s, dtype=float)
    th = np.stack([np.cos(s), np.sin(s)], axis=-1)
    w = Q.null_rep(th, b.evaluate(th)) @ A.T
    return np.arctan2(w[..., 1], w[..., 0]), np.arctan2(w[..., 2], w[..., 3])


def transform(b: AdmissibleBoundary, A: np.ndarray, N: int | None = None,
              iters: int = 60) -> AdmissibleBoundary:
    """The boundary curve A(Lambda), resampled on a uniform angular grid.

    Each target angle is pulled back by bisection on the (monotone) angle
    map of the transformed curve.  When the result is band limited below
    N / 2 it is stored with its Fourier generator.
    """
    if b.n != 2:
        raise BoundaryError("transform is implemented for n = 2")
    N = N or b.theta.shape[0]
    target = 2 * math.pi * np.arange(N) / N
    # lift of the angle map, 0 at s = 0
    a0 = _image_angles(b, A, 0.0)[0]
    lo = np.full(N, -2 * math.pi)
    hi = np.full(N, 4 * math.pi)

    def lifted(s):
        ang = _image_angles(b, A, s)[0]
        # the image angle increases by 2 pi over one turn; reduce relative to s
        return s + wrap(ang - a0 - s)

    goal = target - a0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = lifted(mid) < goal
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    s = 0.5 * (lo + hi)
    t = _image_angles(b, A, s)[1]
    t0 = float(np.mean(b.values))
    t = t0 + wrap(t - t0)
    c = np.fft.rfft(t) / N
    K = N // 2 - 1
    a = [float(c[0].real)] + [float(2 * c[k].real) for k in range(1, K)]
    bb = [0.0] + [float(-2 * c[k].imag) for k in range(1, K)]
    four = Fourier(_trim(a), _trim(bb))
    if float(np.max(np.abs(c[K:]))) < 1e-9 and four.slope_bound() <= 1 - b.margin:
        return AdmissibleBoundary.from_fourier(four, N=N, margin=b.margin)
    th = np.stack([np.cos(target), np.sin(target)], axis=-1)
    return AdmissibleBoundary(n=2, theta=th, values=t, margin=b.margin)


def _trim(c, floor: float = 1e-14) -> tuple:
    c = [x if abs(x) > floor else 0.0 for x in c]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Centered:
    boundary: AdmissibleBoundary
    isometry: np.ndarray
    residual: float       # first-harmonic amplitude left after centering


def first_harmonic(b: AdmissibleBoundary) -> tuple[float, float]:
    ang = b.angles
    v = b.values
    N = len(v)
    return (float(2 * np.sum(v * np.cos(ang)) / N), float(2 * np.sum(v * np.sin(ang)) / N))


def center(b: AdmissibleBoundary, tol: float = 1e-12, max_iter: int = 30) -> Centered:
    """Apply boosts until the first Fourier harmonic of the boundary vanishes.

    A boundary whose first harmonic is zero is balanced around the vertical
    axis of the splitting, which is where truncated problems on a centred
    disc lose the least.  Newton on the two boost parameters, with a
    finite-difference Jacobian.
    """
    if b.n != 2:
        raise BoundaryError("centering is implemented for n = 2")

    def apply(beta):
        A = boost(2, 0, beta[0]) @ boost(2, 1, beta[1])
        return A, transform(b, A)

    beta = np.zeros(2)
    A, cur = apply(beta)
    r = np.array(first_harmonic(cur))
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        Jm = np.empty((2, 2))
        eps = 1e-6
        for k in range(2):
            e = np.zeros(2)
            e[k] = eps
            Jm[:, k] = (np.array(first_harmonic(apply(beta + e)[1])) - r) / eps
        step = np.linalg.solve(Jm, -r)
        beta = beta + step
        A, cur = apply(beta)
        r = np.array(first_harmonic(cur))
    return Centered(boundary=cur, isometry=A, residual=float(np.max(np.abs(r))))
