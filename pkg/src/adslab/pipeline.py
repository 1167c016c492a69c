"""Per-boundary experiment pipeline: hull widths, solved surfaces and their checks."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import boundary as Bd
from . import checks
from . import geometry as G
from . import hull
from . import quadric as Q
from . import report
from . import solver
from . import teich as T
from .mesh import disc_mesh

STAGES = ("hull", "checks", "landslide")


class ConfigError(ValueError):
    pass


def default_boundaries() -> list[dict]:
    return [
        {"case": "eps005", "fourier": {"a": [0.0], "b": [0.0, 0.05]}},
        {"case": "eps010", "fourier": {"a": [0.0], "b": [0.0, 0.1]}},
        {"case": "eps020", "fourier": {"a": [0.0], "b": [0.0, 0.2]}},
        {"case": "mixed", "fourier": {"a": [0.0, 0.0, 0.3], "b": [0.0, 0.2]}},
    ]


@dataclass
class ExperimentConfig:
    boundaries: list = field(default_factory=default_boundaries)
    H: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    K: float = 0.0                 # comparison curvature of the trend ratio
    mesh_depth: int = 16           # lattice steps from centre to rim
    R_disc: float = 3.0
    N_theta: int = 128
    Nx: int = 17
    Nt: int = 12
    Nt_table: int = 20
    tol: float = 0.02
    seed: int = 0
    stages: tuple = STAGES

    def __post_init__(self):
        self.H = [float(h) for h in self.H]
        self.stages = tuple(self.stages)
        if not (self.tol > 0):
            raise ConfigError(f"tolerance must be positive, got {self.tol}")
        if not all(math.isfinite(h) for h in self.H) or not self.H:
            raise ConfigError("H list must be a non-empty list of finite values")
        if self.K < 0:
            raise ConfigError("comparison curvature K must be >= 0")
        if self.mesh_depth < 4:
            raise ConfigError("mesh depth must be at least 4")
        bad = set(self.stages) - set(STAGES)
        if bad:
            raise ConfigError(f"unknown stage(s) {sorted(bad)}; choose from {STAGES}")
        names = [b.get("case") for b in self.boundaries]
        if len(set(names)) != len(names) or None in names:
            raise ConfigError("every boundary needs a distinct 'case' name")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stages"] = list(self.stages)
        return d

    def hash(self) -> str:
        return report.config_hash(self.to_dict())


def load_boundary(spec: dict, N: int) -> Bd.AdmissibleBoundary:
    if "fourier" in spec:
        f = spec["fourier"]
        four = Bd.Fourier(tuple(f.get("a", [0.0])), tuple(f.get("b", [0.0])))
        return Bd.AdmissibleBoundary.from_fourier(four, N=N, margin=float(spec.get("margin", 1e-3)))
    if "file" in spec:
        import json
        return Bd.AdmissibleBoundary.from_json(json.loads(Path(spec["file"]).read_text()))
    if "data" in spec:
        return Bd.AdmissibleBoundary.from_json(spec["data"])
    raise ConfigError(f"boundary {spec.get('case')!r} has no 'fourier', 'file' or 'data' entry")


# --- reference umbilicals --------------------------------------------------

_REF: dict = {}


def reference_geometry(mesh, H: float):
    """Geometry of the discrete umbilical with mean curvature H on ``mesh``."""
    key = (mesh.K, mesh.R_disc, float(H))
    if key not in _REF:
        zero = Bd.AdmissibleBoundary.from_fourier(Bd.Fourier(), N=8)
        c = solver.solve_cmc(None, H, mesh, dirichlet=solver.dirichlet_data(zero, mesh, H))
        _REF[key] = c.geometry
    return _REF[key]


# --- one case --------------------------------------------------------------

@dataclass
class CaseResult:
    case_id: str
    widths: list
    checks: list
    landslide: list
    hard: list            # (name, slack) pairs; negative slack fails
    failed: str | None = None


def _sampler(b, cfg: ExperimentConfig) -> hull.HullSampler:
    times = Bd.CosmologicalTimes(b, levels=30, nphi=60, polish=10)
    return hull.HullSampler(b, Nx=cfg.Nx, Nt_table=cfg.Nt_table, times=times)


def width_hard_checks(rows: dict, tol: float, n: int = 2) -> list:
    """Slacks of the width bound, the profile shape and the comparison sandwich."""
    out = []
    for H, r in sorted(rows.items()):
        out.append((f"width_bound H={H:g}", r.upper_bound - r.omega + tol))
    Hs = sorted(rows)
    if 0.0 in rows:
        w0 = rows[0.0].omega
        out.append(("width_max_at_zero", w0 + tol - max(r.omega for r in rows.values())))
    for H in Hs:
        for Kc in Hs:
            if H * Kc >= 0 and abs(H) > abs(Kc):
                wh, wk = rows[H].omega, rows[Kc].omega
                dh, dk = hull.delta_of(H, n), hull.delta_of(Kc, n)
                out.append((f"sandwich_upper H={H:g} K={Kc:g}", wk + tol - wh))
                out.append((f"sandwich_lower H={H:g} K={Kc:g}", wh + tol - (wk - abs(dh - dk))))
    return out


def run_case(spec: dict, cfg: ExperimentConfig) -> CaseResult:
    cid = spec["case"]
    b = Bd.center(load_boundary(spec, cfg.N_theta)).boundary
    S = _sampler(b, cfg)
    need = sorted(set(cfg.H) | {0.0, cfg.K, -cfg.K})
    wr = {H: S.width(H, Nt=cfg.Nt, tol=cfg.tol) for H in need}
    widths = [dict(case_id=cid, **wr[H].row()) for H in sorted(cfg.H)]
    hard = width_hard_checks(wr, cfg.tol, b.n)
    res = CaseResult(cid, widths, [], [], hard)
    if cfg.stages == ("hull",) or not ({"checks", "landslide"} & set(cfg.stages)):
        return res

    mesh = disc_mesh(cfg.mesh_depth, cfg.R_disc)
    small = disc_mesh(cfg.mesh_depth, cfg.R_disc - 0.5)
    cr = None
    if "landslide" in cfg.stages:
        cr = T.cross_ratio_norm(T.boundary_to_circle_map(b))
        tw = math.tan(wr[0.0].omega)
        hard.append(("cross_ratio_width", math.sinh(cr / 2) + cfg.tol - tw))
    for H in sorted(cfg.H):
        try:
            c = solver.solve_cmc(b, H, mesh)
            g = c.geometry
        except (solver.SolverError, Q.GeometryError) as e:
            res.failed = f"H={H:g}: {e}"
            hard.append((f"solver H={H:g}", -1.0))
            continue
        ex = G.traceless_excess(g, reference_geometry(mesh, H))
        b0x = float(np.nanmax(ex))
        Kc = math.copysign(cfg.K, H) if H else 0.0
        wk = wr[Kc] if abs(H) >= cfg.K else None
        rep = checks.inequality_checks(c, wr[H], wk, tol=cfg.tol, b0_trend=b0x)
        if wk is None:
            rep.check_iii = math.nan
        if "checks" in cfg.stages:
            try:
                gs = solver.solve_cmc(b, H, small).geometry
                lam = gs.lam[gs.valid]
                alt = math.atan(lam[:, 0].max()) - math.atan(lam[:, -1].min())
                sens = abs(alt - (math.atan(rep.sup_l1) - math.atan(rep.inf_ln)))
            except (solver.SolverError, Q.GeometryError):
                sens = math.nan
            row = dict(case_id=cid, K=Kc, h=mesh.h, R_disc=cfg.R_disc, B0_excess=b0x,
                       R_disc_sensitivity=sens, **rep.row())
            res.checks.append(row)
            for name in ("check_i", "check_ii", "check_v"):
                v = getattr(rep, name)
                if not math.isnan(v):
                    hard.append((f"{name} H={H:g}", v))
            hard.append((f"curvature_nonpositive H={H:g}", 1e-6 - rep.maxK))
        if "landslide" in cfg.stages:
            a = ex[np.isfinite(ex)]
            try:
                _, lr = T.complex_dilatation(a, H)
            except T.TeichError as e:
                res.failed = f"H={H:g}: {e}"
                hard.append((f"dilatation H={H:g}", -1.0))
                continue
            lr.cr_norm, lr.omega_0, lr.omega_H, lr.B0_norm = cr, wr[0.0].omega, wr[H].omega, b0x
            res.landslide.append(dict(case_id=cid, H=H, theta=lr.theta, cr_norm=cr,
                                      omega_0=lr.omega_0, omega_H=lr.omega_H, B0_norm=b0x,
                                      mu_norm=lr.mu_norm, K_maxdil=lr.K_maxdil,
                                      K_dil1=lr.K_dil1, lnK_over_cr=lr.lnK_over_cr))
    return res


def _run_case_args(args):
    return run_case(*args)


def pool_size() -> int:
    try:
        return max(1, int(os.environ.get("ADSLAB_THREADS", "1")))
    except ValueError:
        return 1


# --- whole experiment ------------------------------------------------------

@dataclass
class VerifyOutcome:
    ok: bool
    hard: list
    failures: list
    files: list
    constants: dict


def self_check(seed: int, count: int = 200) -> dict:
    """Randomized quadric round trips; part of every verify run."""
    rng = np.random.default_rng(seed)
    worst_res = worst_inv = 0.0
    for _ in range(count):
        A = Q.random_isometry(2, rng, scale=0.3)
        p = A @ Q.base_point(2)
        # unit timelike velocity tilted by a short spacelike vector
        u = Q.project_tangent(p, Q.time_field(p))
        u = u / math.sqrt(-float(Q.form(u, u)))
        w = Q.project_tangent(p, rng.normal(size=4))
        w = w + float(Q.form(w, u)) * u
        w = w * rng.uniform(0.0, 0.9) / math.sqrt(max(float(Q.form(w, w)), 1e-300))
        v = (u + w) / math.sqrt(-float(Q.form(u + w, u + w)))
        t = rng.uniform(0.05, 3.0)
        y = Q.exp_map(p, v, t)
        worst_res = max(worst_res, abs(float(Q.quadric_residual(y))))
        worst_inv = max(worst_inv, abs(float(Q.distance_array(p, y)) - t))
    return {"seed": seed, "count": count, "max_quadric_residual": worst_res,
            "max_distance_inversion": worst_inv}


def trend_constants(checks_rows: list, land_rows: list, cfg: ExperimentConfig) -> dict:
    ratios = [r["check_iii"] for r in checks_rows if math.isfinite(r["check_iii"])]
    out = {"config_hash": cfg.hash(), "label": "empirical",
           "C_L": {"value": max(ratios) if ratios else math.nan,
                   "family": "max ||B_0|| / sin(omega_K) over the configured cases",
                   "K": cfg.K, "L": max(abs(h) for h in cfg.H)}}
    reps = []
    for r in land_rows:
        lr = T.LandslideReport(H=r["H"], theta=r["theta"], mu_norm=r["mu_norm"],
                               K_maxdil=r["K_maxdil"], K_dil1=r["K_dil1"], cr_norm=r["cr_norm"])
        reps.append(lr)
    bands = []
    for band in ((math.pi / 4, 3 * math.pi / 4), (math.pi / 8, 7 * math.pi / 8)):
        try:
            t = T.dilatation_band_check(reps, bands=(band,))[0]
            bands.append({"alpha": band[0], "Q_alpha": t.Q_empirical, "bounded": t.bounded,
                          "count": len(t.ratios)})
        except ValueError:
            bands.append({"alpha": band[0], "Q_alpha": math.nan, "bounded": False, "count": 0})
    out["Q_alpha"] = bands
    return out


def trend_monotone(checks_rows: list) -> bool:
    """Trend ratio does not grow as omega_K shrinks, per H (within 25 percent)."""
    ok = True
    for H in sorted({r["H"] for r in checks_rows}):
        rows = sorted((r for r in checks_rows if r["H"] == H and math.isfinite(r["check_iii"])),
                      key=lambda r: r["omega_K"])
        vals = [r["check_iii"] for r in rows]
        if len(vals) > 1 and vals[0] > 1.25 * max(vals[1:]):
            ok = False
    return ok


def verify(cfg: ExperimentConfig, out: str | Path) -> VerifyOutcome:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, cfg) for spec in cfg.boundaries]
    workers = min(pool_size(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_case_args, jobs))
    else:
        results = [run_case(*j) for j in jobs]
    widths = [r for res in results for r in res.widths]
    chk = [r for res in results for r in res.checks]
    land = [r for res in results for r in res.landslide]
    hard = [(res.case_id, name, slack) for res in results for name, slack in res.hard]
    failures = [(c, n, s) for c, n, s in hard if not (s >= 0)]
    failures += [(res.case_id, "failed", res.failed) for res in results if res.failed]
    files = [report.write_csv(out / "widths.csv", report.WIDTH_COLUMNS, widths)]
    p = report.Plot("hull width against mean curvature", "H", "omega_H")
    for res in results:
        p.add([(r["H"], r["omega"]) for r in res.widths], res.case_id, kind="line")
    p.add([(h, math.pi / 2 - abs(hull.delta_of(h, 2))) for h in sorted(cfg.H)],
          "pi/2 - |delta_H|", kind="line")
    files.append(p.write(out / "omega_vs_H.svg"))
    constants = {}
    if "checks" in cfg.stages:
        files.append(report.write_csv(out / "checks.csv", report.CHECK_COLUMNS, chk))
        constants = trend_constants(chk, land, cfg)
        CL = constants["C_L"]["value"]
        p = report.Plot("traceless curvature against width", "sin omega_K", "||B_0|| (bias corrected)")
        pts = [(math.sin(r["omega_K"]), r["B0_excess"]) for r in chk]
        p.add(pts, "cases")
        if math.isfinite(CL) and pts:
            xm = max(x for x, _ in pts)
            p.add([(0.0, 0.0), (xm, CL * xm)], f"C_L = {CL:.4g}", kind="line")
        files.append(p.write(out / "B0_vs_sin_omega.svg"))
    if "landslide" in cfg.stages:
        files.append(report.write_csv(out / "landslide.csv", report.LANDSLIDE_COLUMNS, land))
        if not constants:
            constants = trend_constants([], land, cfg)
        p = report.Plot("landslide dilatation against cross-ratio norm", "cr_norm", "ln K")
        for H in sorted({r["H"] for r in land}):
            p.add([(r["cr_norm"], math.log(r["K_maxdil"])) for r in land if r["H"] == H],
                  f"H = {H:g}")
        files.append(p.write(out / "lnK_vs_cr.svg"))
    if constants:
        constants["trend_monotone"] = trend_monotone(chk)
        files.append(report.write_json(out / "constants.json", constants))
    summary = {"config": cfg.to_dict(), "config_hash": cfg.hash(),
               "self_check": self_check(cfg.seed),
               "hard_checks": [{"case": c, "check": n, "slack": s} for c, n, s in hard],
               "failures": [{"case": c, "check": n, "detail": s} for c, n, s in failures],
               "ok": not failures}
    files.append(report.write_json(out / "summary.json", summary))
    return VerifyOutcome(ok=not failures, hard=hard, failures=failures, files=files,
                         constants=constants)
