"""Width and curvature inequalities evaluated on a solved surface.

Hard checks gate the exit code of ``adslab verify``; trend ratios are only
recorded, since the constants they estimate are not known in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .geometry import sectional_curvature
from .hull import WidthReport


class CheckError(ValueError):
    pass


@dataclass
class InequalityReport:
    H: float
    omega_H: float
    omega_K: float
    sup_l1: float
    inf_ln: float
    B0_norm: float
    maxK: float
    # slacks: right-hand side minus left-hand side, plus tolerance
    check_i: float
    check_ii: float          # nan when ||B_0||^2 > 1 + (H/n)^2
    check_iii: float         # ||B_0|| / sin(omega_K), trend
    check_iv: float          # (max K + 1 + (H/n)^2) / sin(omega_H), trend
    check_v: float           # nan when sup K >= 0
    tol: float

    @property
    def hard_ok(self) -> bool:
        return all(not (s < 0) for s in (self.check_i, self.check_ii, self.check_v))

    def row(self) -> dict:
        return asdict(self)


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        return 0.0 if num <= 0 else math.inf
    return num / den


def inequality_checks(c, wr: WidthReport, wr_K: WidthReport | None = None,
                   mask: np.ndarray | None = None, tol: float = 0.02,
                   b0_trend: float | None = None) -> InequalityReport:
    """Evaluate the five width/curvature inequalities for one (boundary, H) case.

    ``wr`` is the hull width at the solved mean curvature; ``wr_K`` the width
    at the comparison curvature used for the trend ratio (defaults to ``wr``).
    Curvature extrema are taken over ``mask`` intersected with the vertices
    whose geometry is trusted.  ``b0_trend`` replaces ||B_0|| in the trend
    ratio, e.g. by a bias-corrected estimate from ``traceless_excess``.
    """
    if abs(wr.H - c.H_target) > 1e-12:
        raise CheckError(f"width report for H = {wr.H} paired with a surface of H = {c.H_target}")
    wr_K = wr_K or wr
    g = c.geometry
    n = g.n
    m = g.valid if mask is None else g.valid & mask
    lam = g.lam[m]
    sup1 = float(np.max(lam[:, 0]))
    infn = float(np.min(lam[:, -1]))
    b = float(np.max(g.B0_norm[m]))
    sec = sectional_curvature(g, c.H_target)
    maxK = float(np.max(sec.K[m]))
    h2 = (c.H_target / n) ** 2
    om = wr.omega

    c1 = math.atan(sup1) - math.atan(infn) + tol - om
    den = 1 + h2 - b * b
    c2 = (2 * b / den + tol - math.tan(om)) if den > 0 else math.nan
    c3 = _ratio(b if b0_trend is None else b0_trend, math.sin(wr_K.omega))
    # for n = 2, max K + 1 + (H/2)^2 = ||B_0||^2 exactly
    num4 = b0_trend ** 2 if (b0_trend is not None and n == 2) else maxK + 1 + h2
    c4 = _ratio(num4, math.sin(om))
    c5 = (-2 * b / maxK + tol - math.tan(om)) if (n == 2 and maxK < 0) else math.nan
    return InequalityReport(H=c.H_target, omega_H=om, omega_K=wr_K.omega, sup_l1=sup1,
                            inf_ln=infn, B0_norm=b, maxK=maxK, check_i=c1, check_ii=c2,
                            check_iii=c3, check_iv=c4, check_v=c5, tol=tol)
