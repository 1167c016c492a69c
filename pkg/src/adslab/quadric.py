"""Quadric model of Anti-de Sitter space.

Points of H^{n,1} are vectors x in R^{n+2} with q(x, x) = -1, where

    q(x, y) = x_1 y_1 + ... + x_n y_n - x_{n+1} y_{n+1} - x_{n+2} y_{n+2}.

All functions accept stacked arrays whose last axis holds the n+2 ambient
coordinates.  The global time orientation is the one for which the future
direction at e_{n+2} is +e_{n+1}; it extends to every point through the
nowhere-vanishing timelike field ``time_field``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

EPS_QUADRIC = 1e-12
# Pairs whose form value sits within this band of -1 count as light-related.
LIGHT_TOL = 1e-10


class Causal(str, enum.Enum):
    TIME = "time-related"
    LIGHT = "light-related"
    SPACE = "space-related"
    EQUAL = "equal"


class GeometryError(ValueError):
    """Raised when an input violates a geometric precondition."""


def signature(dim: int) -> np.ndarray:
    """Diagonal of the Gram matrix for an ambient space of size ``dim``."""
    if dim < 3:
        raise GeometryError("ambient dimension must be at least 3 (n >= 1)")
    s = np.ones(dim)
    s[-2:] = -1.0
    return s


def form(x, y) -> np.ndarray:
    """Bilinear form q(x, y) evaluated along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise GeometryError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    s = signature(x.shape[-1])
    return np.sum(x * s * y, axis=-1)


def bilinear_form(x, y) -> float:
    return float(form(x, y))


def basis(n: int, i: int) -> np.ndarray:
    """The i-th standard basis vector of R^{n,2}, counting from 1."""
    e = np.zeros(n + 2)
    e[i - 1] = 1.0
    return e


def base_point(n: int) -> np.ndarray:
    """The point e_{n+2}, centre of the standard splitting."""
    return basis(n, n + 2)


def renormalize(x) -> np.ndarray:
    """Project a negative vector back onto the quadric q = -1."""
    x = np.asarray(x, dtype=float)
    qq = form(x, x)
    if np.any(qq >= 0):
        raise GeometryError("cannot renormalize a non-negative vector")
    return x / np.sqrt(-qq)[..., None]


def quadric_residual(x) -> np.ndarray:
    return np.abs(form(x, x) + 1.0)


def project_tangent(x, v) -> np.ndarray:
    """Component of v that is q-orthogonal to the point x."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return v + form(v, x)[..., None] * x


def time_field(x) -> np.ndarray:
    """Future-directed timelike vector field x_{n+2} e_{n+1} - x_{n+1} e_{n+2}."""
    x = np.asarray(x, dtype=float)
    t = np.zeros_like(x)
    t[..., -2] = x[..., -1]
    t[..., -1] = -x[..., -2]
    return t


def is_future(x, v) -> np.ndarray:
    """True where the causal tangent vector v at x points to the future."""
    return form(v, time_field(x)) < 0


def classify_vector(v, tol: float = EPS_QUADRIC) -> str:
    qq = bilinear_form(v, v)
    if qq < -tol:
        return "timelike"
    if qq > tol:
        return "spacelike"
    return "lightlike"


@dataclass(frozen=True)
class AdSPoint:
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 1:
            raise GeometryError("AdSPoint holds a single vector")
        if abs(bilinear_form(v, v) + 1.0) > 1e-8:
            raise GeometryError("vector is not on the quadric q(x, x) = -1")
        v = renormalize(v)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[0] - 2


@dataclass(frozen=True)
class AdSTangent:
    base: AdSPoint
    dir: np.ndarray
    causal_class: str = field(init=False)

    def __post_init__(self):
        d = np.array(self.dir, dtype=float)
        if d.shape != self.base.v.shape:
            raise GeometryError("tangent and base point have different dimensions")
        scale = max(1.0, float(np.max(np.abs(d))))
        if abs(bilinear_form(self.base.v, d)) > 1e-9 * scale:
            raise GeometryError("direction is not tangent at the base point")
        d.setflags(write=False)
        object.__setattr__(self, "dir", d)
        object.__setattr__(self, "causal_class", classify_vector(d, 1e-9 * scale * scale))


def exp_map(x, v, t) -> np.ndarray:
    """Geodesic through x with unit or null initial velocity v, evaluated at time t.

    Works on stacked inputs; the branch (trigonometric, affine, hyperbolic) is
    chosen per row from the sign of q(v, v).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    qv = form(v, v)
    if np.any(np.abs(form(x, v)) > 1e-9 * np.maximum(1.0, np.max(np.abs(v), axis=-1))):
        raise GeometryError("velocity is not tangent at the base point")
    timelike = np.abs(qv + 1.0) <= 1e-9
    null = np.abs(qv) <= 1e-9
    spacelike = np.abs(qv - 1.0) <= 1e-9
    if not np.all(timelike | null | spacelike):
        raise GeometryError("velocity must satisfy q(v, v) in {-1, 0, 1}")
    tt = t[..., None] if t.ndim else t
    c = np.where(timelike[..., None], np.cos(tt), np.where(spacelike[..., None], np.cosh(tt), 1.0))
    s = np.where(timelike[..., None], np.sin(tt), np.where(spacelike[..., None], np.sinh(tt), tt))
    return c * x + s * v


def distance_array(p, q) -> np.ndarray:
    """Vectorised Lorentzian distance; NaN marks pairs where it is undefined."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = form(p, q)
    out = np.full(np.broadcast(c).shape, np.nan)
    same = np.max(np.abs(p - q), axis=-1) <= 1e-13
    time = (c > -1.0 + LIGHT_TOL) & (c < 1.0 - LIGHT_TOL)
    antipodal = np.max(np.abs(p + q), axis=-1) <= 1e-13
    out = np.where(time, np.arccos(np.clip(-c, -1.0, 1.0)), out)
    out = np.where(antipodal, math.pi, out)
    out = np.where(same, 0.0, out)
    return out


def lorentz_distance(p, q) -> float | None:
    """Lorentzian distance between two points, or None when undefined.

    Time-related pairs strictly between the antipodes of p get arccos(-q(p, q));
    p itself gets 0 and its antipode -p gets pi.  Light- and space-related pairs,
    and points beyond the antipode, are undefined.
    """
    d = float(distance_array(_vec(p), _vec(q)))
    return None if math.isnan(d) else d


def causal_relation(p, q) -> Causal:
    p, q = _vec(p), _vec(q)
    if np.max(np.abs(p - q)) <= 1e-13:
        return Causal.EQUAL
    c = bilinear_form(p, q)
    if abs(c + 1.0) <= LIGHT_TOL:
        return Causal.LIGHT
    if -1.0 < c <= 1.0:
        return Causal.TIME
    return Causal.SPACE


def future_of(p, q) -> np.ndarray:
    """For time-related pairs, True where q lies to the future of p.

    The timelike geodesic from p to q with length d in (0, pi) has initial
    velocity (q - cos(d) p) / sin(d); the answer is its time orientation.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = form(p, q)
    v = q + c[..., None] * p
    return is_future(p, v)


@dataclass(frozen=True)
class DualData:
    p_plus: np.ndarray
    p_minus: np.ndarray
    p: np.ndarray

    def plane(self, x) -> np.ndarray:
        """Linear functional x -> q(x, p); its zero set is the dual plane pair."""
        return form(x, self.p)


def dual_data(p) -> DualData:
    p = _vec(p)
    return DualData(p_plus=-p, p_minus=-p, p=p)


def _vec(p) -> np.ndarray:
    return p.v if isinstance(p, AdSPoint) else np.asarray(p, dtype=float)


class Splitting:
    """Product chart H^n x R attached to a point p and a future unit normal N.

    A pair (y, t), with y in R^n the hyperboloid coordinates of a point of the
    totally geodesic plane through p orthogonal to N, maps to the point
    obtained by rotating y by angle t in the plane spanned by p and N.
    """

    def __init__(self, p, N, t0: float = 0.0):
        p = _vec(p)
        N = N.dir if isinstance(N, AdSTangent) else np.asarray(N, dtype=float)
        if abs(bilinear_form(p, p) + 1.0) > 1e-9:
            raise GeometryError("splitting base point is not on the quadric")
        if abs(bilinear_form(p, N)) > 1e-9 or abs(bilinear_form(N, N) + 1.0) > 1e-9:
            raise GeometryError("splitting normal must be unit timelike and tangent")
        if not is_future(p, N):
            raise GeometryError("splitting normal must be future-directed")
        self.p = p
        self.N = N
        self.n = p.shape[0] - 2
        self.t0 = float(t0)
        self.frame = self._complement_frame()

    @classmethod
    def standard(cls, n: int) -> "Splitting":
        return cls(basis(n, n + 2), basis(n, n + 1))

    def _complement_frame(self) -> np.ndarray:
        vecs = []
        for i in range(self.n + 2):
            w = np.zeros(self.n + 2)
            w[i] = 1.0
            w = w + bilinear_form(w, self.p) * self.p + bilinear_form(w, self.N) * self.N
            for f in vecs:
                w = w - bilinear_form(w, f) * f
            nrm = bilinear_form(w, w)
            if nrm > 1e-8:
                vecs.append(w / math.sqrt(nrm))
            if len(vecs) == self.n:
                break
        return np.array(vecs)

    def from_coords(self, y, t) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        a = np.sqrt(1.0 + np.sum(y * y, axis=-1))
        rot = np.cos(t)[..., None] * self.p + np.sin(t)[..., None] * self.N
        return a[..., None] * rot + y @ self.frame

    def to_coords(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        ap = -form(x, self.p)
        an = -form(x, self.N)
        t = np.arctan2(an, ap)
        t = self.t0 + np.mod(t - self.t0 + math.pi, 2 * math.pi) - math.pi
        if np.any(np.abs(np.abs(t - self.t0) - math.pi) < 1e-12):
            raise GeometryError("point lies on the cut hypersurface of the chart")
        s = signature(self.n + 2)
        y = (x * s) @ self.frame.T
        return y, t


def hemisphere_point(y) -> np.ndarray:
    """Image of H^n (hyperboloid coordinates y) in the open upper hemisphere of S^n."""
    y = np.asarray(y, dtype=float)
    a = np.sqrt(1.0 + np.sum(y * y, axis=-1))
    return np.concatenate([y, np.ones(y.shape[:-1] + (1,))], axis=-1) / a[..., None]


def null_rep(theta, t) -> np.ndarray:
    """Null vector representing the boundary point (theta, t) in the standard splitting.

    ``theta`` is a unit vector of R^n.  The last two coordinates carry
    (sin t, cos t), so that t = 0 lies on the boundary of the plane through e_{n+2}.
    """
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.concatenate([theta, np.sin(t)[..., None], np.cos(t)[..., None]], axis=-1)


def random_isometry(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element of O(n, 2), built as the exponential of a Lie algebra element.

    The result is Gram-corrected so that A^T J A = J to machine precision.
    """
    from scipy.linalg import expm

    d = n + 2
    J = np.diag(signature(d))
    X = rng.normal(scale=scale, size=(d, d))
    # Elements of so(n,2) satisfy A^T J + J A = 0, i.e. J A is skew.
    A = expm(J @ (X - X.T))
    # One first-order correction step removes the round-off drift of A^T J A.
    delta = A.T @ J @ A - J
    return A @ (np.eye(d) - 0.5 * J @ delta)
