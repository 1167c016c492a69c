"""Anti-de Sitter 3-space as PSL(2,R): circle maps, cross-ratios, landslides.

Points of R^{2,2} are written as 2x2 matrices with q(x, x) = -det M(x), so
the quadric q = -1 becomes SL(2,R) and the base point e_4 the identity.
Null vectors are rank one matrices u v^T; the lines [u] and [v] in RP^1 are
the two lightlike rulings through the point at infinity.  RP^1 is charted by
the angle of a representative, taken modulo pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import boundary as Bd
from . import flow as F
from . import quadric as Q

RANK1_TOL = 1e-9
J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TeichError(ValueError):
    pass


class MatrixModel:
    """M(x) = [[x4 + x1, x2 + x3], [x2 - x3, x4 - x1]]."""

    @staticmethod
    def matrix(x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x1, x2, x3, x4 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        return np.stack([np.stack([x4 + x1, x2 + x3], -1),
                         np.stack([x2 - x3, x4 - x1], -1)], -2)

    @staticmethod
    def vector(M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
        return np.stack([(a - d) / 2, (b + c) / 2, (b - c) / 2, (a + d) / 2], -1)

    @staticmethod
    def rank_one(M):
        """Dominant singular pair u, v (unit) with M ~ s u v^T; raises if not null."""
        M = np.asarray(M, dtype=float)
        U, S, Vt = np.linalg.svd(M)
        det = np.abs(np.linalg.det(M)) / np.maximum(S[..., 0] ** 2, 1e-300)
        if np.any(det > RANK1_TOL):
            raise TeichError("matrix is not rank one: representative is not null")
        return U[..., :, 0], Vt[..., 0, :]


def line_angle(u) -> np.ndarray:
    """Angle of the line spanned by u, in [0, pi)."""
    u = np.asarray(u)
    return np.mod(np.arctan2(u[..., 1], u[..., 0]), math.pi)


def boundary_projections(theta, t):
    """Ruling angles (pi_l, pi_r) of boundary points in the standard splitting."""
    M = MatrixModel.matrix(Q.null_rep(theta, t))
    u, v = MatrixModel.rank_one(M)
    return line_angle(u), line_angle(v)


@dataclass
class CircleMap:
    """Orientation-preserving homeomorphism of RP^1, sampled in the angle chart.

    ``s`` is increasing in [0, pi); ``phi`` is an increasing lift with
    phi(s + pi) = phi(s) + pi.  An optional exact evaluator overrides the
    spline interpolation of the samples.
    """

    s: np.ndarray
    phi: np.ndarray
    exact: object = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        p = np.asarray(self.phi, dtype=float)
        if np.any(np.diff(s) <= 0) or np.any(np.diff(p) <= 0):
            raise TeichError("circle map samples are not strictly increasing")
        if p[-1] - p[0] >= math.pi or s[-1] - s[0] >= math.pi:
            raise TeichError("circle map is not of degree one")
        self.s, self.phi = s, p
        ss = np.concatenate([s, [s[0] + math.pi]])
        dd = np.concatenate([p - s, [p[0] - s[0]]])
        self._spline = CubicSpline(ss, dd, bc_type="periodic")

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if self.exact is not None:
            return self.exact(a)
        k = np.floor((a - self.s[0]) / math.pi)
        r = a - k * math.pi
        return r + self._spline(r) + k * math.pi

    def inverse(self) -> "CircleMap":
        o = np.argsort(np.mod(self.phi, math.pi))
        p = np.mod(self.phi, math.pi)[o]
        s = self.s[o]
        s = s + math.pi * (np.cumsum(np.concatenate([[0], np.diff(s) < 0])))
        return CircleMap(p, s)

    @classmethod
    def from_function(cls, func, N: int = 512) -> "CircleMap":
        s = math.pi * np.arange(N) / N
        return cls(s, np.asarray(func(s), dtype=float), exact=func)


def _monotone_lift(x):
    return x[0] + np.concatenate([[0.0], np.cumsum(np.mod(np.diff(x) + math.pi / 2, math.pi)
                                                   - math.pi / 2)])


def boundary_to_circle_map(b: Bd.AdmissibleBoundary, exact: bool = True) -> CircleMap:
    """phi = pi_r o pi_l^{-1} for a boundary curve in H^{2,1}.

    With ``exact`` and a Fourier generator available, evaluation between
    samples inverts the left projection by root finding on the generator.
    """
    if b.n != 2:
        raise ValueError("circle maps need n = 2")
    cert = Bd.validate(b)
    if not cert.ok:
        raise TeichError("boundary is not admissible")
    al, ar = boundary_projections(b.theta, b.values)
    o = np.argsort(b.angles)
    al, ar = al[o], ar[o]
    al = _monotone_lift(al)
    ar = _monotone_lift(ar)
    if np.any(np.diff(al) <= 0) or np.any(np.diff(ar) <= 0):
        raise TeichError("projections not monotone: boundary is not acausal")
    k = int(np.argmin(np.mod(al, math.pi)))
    s = np.roll(np.mod(al, math.pi), -k)
    p = np.roll(ar, -k)
    p[len(p) - k:] += math.pi
    p -= math.pi * math.floor(p[0] / math.pi)
    func = None
    if exact and b.fourier is not None:
        func = _exact_map(b.fourier)
        shift = p[0] - float(func(np.array([s[0]]))[0])
        func0 = func
        func = (lambda a, f=func0, c=shift: f(a) + c)
    return CircleMap(s, p, exact=func)


def _exact_map(f, iters: int = 64):
    """phi(s) = (theta + f(theta)) / 2 where (theta - f(theta)) / 2 = s.

    theta - f(theta) is strictly increasing, so the inversion is a vectorized
    bisection on a bracket wide enough for any bounded f.
    """
    probe = np.asarray(f(np.linspace(0, 2 * math.pi, 1024, endpoint=False)))
    lo_f, hi_f = float(probe.min()) - 1.0, float(probe.max()) + 1.0

    def phi(a):
        a = np.asarray(a, dtype=float)
        lo = 2 * a + lo_f
        hi = 2 * a + hi_f
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            g = mid - f(mid) - 2 * a
            lo = np.where(g < 0, mid, lo)
            hi = np.where(g < 0, hi, mid)
        th = 0.5 * (lo + hi)
        return (th + f(th)) / 2

    return phi


def cross_ratio(a1, a2, a3, a4) -> np.ndarray:
    """Cross-ratio of four points of RP^1 given by angles, computed projectively."""
    d = lambda i, j: np.sin(np.asarray(i) - np.asarray(j))
    num = d(a4, a1) * d(a3, a2)
    den = d(a2, a1) * d(a3, a4)
    if np.any(np.abs(den) < 1e-300):
        raise ValueError("coincident points")
    return num / den


def affine_to_angle(x) -> np.ndarray:
    """RP^1 angle of the affine point x (inf allowed)."""
    x = np.asarray(x, dtype=float)
    return np.where(np.isinf(x), math.pi / 2, np.arctan(x))


def harmonic_quadruples(n_base: int = 256, n_chord: int = 64,
                        shifts=(0.0, 0.25, -0.25, 0.5, -0.5)) -> np.ndarray:
    """Quadruples of angles with cross-ratio -1 (orthogonal geodesic pairs).

    For each centre c and half-width r the chord (c - r, c + r) is paired
    with orthogonal chords meeting it at parameter k in (-1, 1).
    """
    c = math.pi * np.arange(n_base) / n_base
    r = (math.pi / 2) * (np.arange(n_chord) + 0.5) / n_chord
    k = np.asarray(shifts)
    C, R, Kk = np.meshgrid(c, r, k, indexing="ij")
    C, R, Kk = C.ravel(), R.ravel(), Kk.ravel()
    tr = np.tan(R)
    a1 = C - R
    a3 = C + R
    a2 = C + np.arctan(Kk * tr)
    with np.errstate(divide="ignore"):
        a4 = C + np.where(Kk == 0, math.pi / 2, np.arctan(tr / np.where(Kk == 0, 1, Kk)))
    return np.stack([a1, a2, a3, a4], -1)


def cross_ratio_norm(m: CircleMap, quads: np.ndarray | None = None) -> float:
    """sup |ln|cr(phi z)|| over a deterministic family of harmonic quadruples.

    A lower bound of the true norm that increases with the sampler density.
    """
    quads = harmonic_quadruples() if quads is None else quads
    img = m(quads.ravel()).reshape(quads.shape)
    cr = cross_ratio(img[:, 0], img[:, 1], img[:, 2], img[:, 3])
    return float(np.max(np.abs(np.log(np.abs(cr)))))


def theta_of_H(H: float) -> float:
    r = H + math.sqrt(4 + H * H)
    return 2 * math.acos(r / math.sqrt(r * r + 4))


@dataclass
class HKDuality:
    H: float
    d_plus: float
    d_minus: float
    K_plus_printed: float
    K_minus_printed: float
    K_plus_alt: float          # same expression with sqrt(4 + H^2)
    K_minus_alt: float
    K_plus_oracle: float
    K_minus_oracle: float
    oracle_spread: float       # variation of the oracle over test curvatures

    @property
    def mismatch_plus(self) -> float:
        return self.K_plus_printed - self.K_plus_oracle


def hk_duality(H: float, test_a=(0.0, 0.3, 0.6, 0.9, 1.0)) -> HKDuality:
    """Printed equidistance formulas against the normal-flow oracle.

    The oracle flows pointwise shape operators diag(H/2 + a, H/2 - a) by
    d_pm and evaluates the Gauss equation; a varies over ``test_a``.
    """
    h = H / 2
    dp = math.atan(h + math.sqrt(1 + h * h))
    dm = math.atan(h - math.sqrt(1 + h * h))

    def kform(root, sign):
        return -1 - 4 / (H + sign * root) ** 2

    kp = [F.hk_oracle(h + a, h - a, dp) for a in test_a]
    km = [F.hk_oracle(h + a, h - a, dm) for a in test_a]
    spread = max(max(kp) - min(kp), max(km) - min(km))
    return HKDuality(H=H, d_plus=dp, d_minus=dm,
                     K_plus_printed=kform(math.sqrt(1 + H * H), 1),
                     K_minus_printed=kform(math.sqrt(1 + H * H), -1),
                     K_plus_alt=kform(math.sqrt(4 + H * H), 1),
                     K_minus_alt=kform(math.sqrt(4 + H * H), -1),
                     K_plus_oracle=float(np.mean(kp)), K_minus_oracle=float(np.mean(km)),
                     oracle_spread=spread)


@dataclass
class KHDuality:
    K: float
    d: float
    H_printed: float
    H_oracle: float
    oracle_spread: float


def kh_duality(K: float, test_l1=(0.5, 1.0, 2.0)) -> KHDuality:
    """Mean curvature of the leaf at distance d(K) from a future-convex K-surface.

    Shape operators diag(l1, k / l1) with k = -1 - K are flowed by
    d(K) = arctan(1 / sqrt(k)); the printed H(K) is reported alongside.
    """
    if K >= -1:
        raise ValueError("need K < -1")
    k = -1 - K
    d = math.atan(1 / math.sqrt(k))
    hs = [float(np.sum(F.evolved_curvatures([l1, k / l1], d))) for l1 in test_l1]
    return KHDuality(K=K, d=d, H_printed=(2 - K) / math.sqrt(k),
                     H_oracle=float(np.mean(hs)), oracle_spread=max(hs) - min(hs))


@dataclass
class LandslideReport:
    H: float
    theta: float
    mu_norm: float
    K_maxdil: float
    K_dil1: float
    cr_norm: float = float("nan")
    omega_0: float = float("nan")
    omega_H: float = float("nan")
    B0_norm: float = float("nan")

    @property
    def lnK_over_cr(self) -> float:
        if not self.cr_norm > 0:
            return float("nan")
        return math.log(self.K_maxdil) / self.cr_norm


def complex_dilatation(a, H: float):
    """Per-vertex Beltrami coefficient -a (H/2 + i) / (1 + (H/2)^2) and its report."""
    a = np.asarray(a, dtype=float)
    h = H / 2
    mu = -a * (h + 1j) / (1 + h * h)
    m = float(np.max(np.abs(mu))) if mu.size else 0.0
    if m >= 1:
        raise TeichError(f"|mu| = {m:.4f} >= 1: traceless curvature too large for a CMC surface")
    rep = LandslideReport(H=H, theta=theta_of_H(H), mu_norm=m,
                          K_maxdil=(1 + m) / (1 - m), K_dil1=(1 + m * m) / (1 - m * m))
    return mu, rep


def mesh_dilatation(geom, H: float, mask=None):
    """Complex dilatation on a solved surface, a = lambda_1 - H/2."""
    m = geom.valid if mask is None else geom.valid & mask
    a = np.clip(geom.lam[m, 0] - H / 2, 0, None)
    mu, rep = complex_dilatation(a, H)
    rep.B0_norm = float(np.max(geom.B0_norm[m]))
    return mu, rep


@dataclass
class BandTrend:
    band: tuple
    ratios: list
    Q_empirical: float
    bounded: bool


def dilatation_band_check(reports, bands=((math.pi / 4, 3 * math.pi / 4),
                                    (math.pi / 8, 7 * math.pi / 8)),
                    ceiling: float = 1e3) -> list[BandTrend]:
    out = []
    for lo, hi in bands:
        rows = [r for r in reports if lo <= r.theta <= hi and r.cr_norm > 0]
        if not rows:
            raise ValueError(f"empty band [{lo:.4f}, {hi:.4f}]")
        rows.sort(key=lambda r: r.cr_norm)
        ratios = [r.lnK_over_cr for r in rows]
        q = max(ratios)
        out.append(BandTrend(band=(lo, hi), ratios=ratios, Q_empirical=q,
                             bounded=bool(np.isfinite(q) and q < ceiling)))
    return out


def half_plane_fixed_point(xi) -> np.ndarray:
    """Fixed point in the upper half-plane of the elliptic element xi of sl(2)."""
    a, b, c = xi[..., 0, 0], xi[..., 0, 1], xi[..., 1, 0]
    if np.any(np.abs(c) < 1e-14):
        raise TeichError("degenerate normal geodesic")
    return (a + 1j * np.sign(c)) / c


def mobius(A, z) -> np.ndarray:
    return (A[..., 0, 0] * z + A[..., 0, 1]) / (A[..., 1, 0] * z + A[..., 1, 1])


def gauss_map(X, N):
    """Pair of points of H^2 (upper half-plane) attached to each normal geodesic.

    The geodesic t -> X exp(t xi), xi = X^{-1} M(N), fixes q = Fix(xi) on the
    right; it is recorded as (X q, J q), so the totally geodesic plane dual
    to e_3 maps to the diagonal.
    """
    Xm = MatrixModel.matrix(X)
    Ym = MatrixModel.matrix(N)
    xi = np.linalg.solve(Xm, Ym)
    q = half_plane_fixed_point(xi)
    return mobius(Xm, q), mobius(J, q)


def half_plane_distance(z, w) -> np.ndarray:
    return np.arccosh(1 + np.abs(z - w) ** 2 / (2 * z.imag * w.imag))


def injectivity_check(z, cell: float) -> int:
    """Number of points sharing a hashed grid cell of the Poincare disc image."""
    w = (z - 1j) / (z + 1j)
    keys = np.round(np.stack([w.real, w.imag], -1) / cell).astype(np.int64)
    _, counts = np.unique(keys, axis=0, return_counts=True)
    return int(np.sum(counts[counts > 1] - 1))
