"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the pytest terminal summary under
"acceptance criteria".
"""
import csv
import filecmp
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from adslab import boundary as Bd
from adslab import cli
from adslab import flow as F
from adslab import geometry as G
from adslab import pipeline as P
from adslab import quadric as Q
from adslab import teich as T
from adslab.hull import delta_of, tangent_umbilical, umbilical_graph

from conftest import FIXTURES, mesh, record, solved, umbilical

TOL = 0.02
FAMILY = {"eps005": ((0.0,), (0.0, 0.05)), "eps010": ((0.0,), (0.0, 0.1)),
          "eps020": ((0.0,), (0.0, 0.2)), "mixed": ((0.0, 0.0, 0.3), (0.0, 0.2))}
REFINE = (16, 32, 64)


def order(errs):
    e = np.asarray(errs, dtype=float)
    return np.log2(e[:-1] / e[1:])


@pytest.fixture(scope="module")
def verify_runs(tmp_path_factory):
    """Two verify runs of the default configuration, the second on a worker pool."""
    import os
    cfg = P.ExperimentConfig()
    a = tmp_path_factory.mktemp("run_a")
    b = tmp_path_factory.mktemp("run_b")
    t0 = time.perf_counter()
    ra = P.verify(cfg, a)
    old = os.environ.get("ADSLAB_THREADS")
    os.environ["ADSLAB_THREADS"] = "2"
    try:
        rb = P.verify(cfg, b)
    finally:
        if old is None:
            del os.environ["ADSLAB_THREADS"]
        else:
            os.environ["ADSLAB_THREADS"] = old
    return cfg, (a, ra), (b, rb), time.perf_counter() - t0


def read_csv(path):
    with open(path) as fh:
        return [{k: (v if k == "case_id" else float(v)) for k, v in r.items()}
                for r in csv.DictReader(fh)]


# 1 ---------------------------------------------------------------------------

def test_criterion_01_quadric_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10_000
    split = Q.Splitting.standard(2)
    p = split.from_coords(rng.normal(size=(n, 2)), rng.uniform(-math.pi, math.pi, n))

    def unit_timelike(x, tilt):
        u = Q.project_tangent(x, Q.time_field(x))
        u /= np.sqrt(-Q.form(u, u))[:, None]
        w = Q.project_tangent(x, rng.normal(size=x.shape))
        w = w + Q.form(w, u)[:, None] * u
        w *= (tilt * rng.uniform(0, 1, len(x)) / np.sqrt(Q.form(w, w)))[:, None]
        v = u + w
        return v / np.sqrt(-Q.form(v, v))[:, None]

    v = unit_timelike(p, 0.9)
    t = rng.uniform(0.05, math.pi - 0.05, n)
    y = Q.exp_map(p, v, t)
    res = float(np.max(np.abs(Q.quadric_residual(y))))
    inv = float(np.max(np.abs(Q.distance_array(p, y) - t)))
    # duality: the quarter-turn point lies on the dual plane of p
    dual = float(np.max(np.abs(Q.form(Q.exp_map(p, v, np.full(n, math.pi / 2)), p))))
    # reverse triangle inequality along broken future-directed chains
    t1 = rng.uniform(0.05, 1.2, n)
    t2 = rng.uniform(0.05, 1.2, n)
    r = Q.exp_map(p, unit_timelike(p, 0.5), t1)
    q = Q.exp_map(r, unit_timelike(r, 0.5), t2)
    d = Q.distance_array(p, q)
    ok = ~np.isnan(d) & Q.future_of(p, q)
    slack = float(np.min(d[ok] - t1[ok] - t2[ok]))
    dt = time.perf_counter() - t0
    good = res <= 1e-10 and inv <= 1e-10 and dual <= 1e-10 and slack >= -1e-9 and dt < 10
    record(1, good, f"residual {res:.1e}, inversion {inv:.1e}, dual {dual:.1e}, "
                    f"triangle slack {slack:.2e} over {int(ok.sum())} chains, {dt:.1f} s")
    assert good


# 2 ---------------------------------------------------------------------------

def test_criterion_02_umbilical_oracle():
    t0 = time.perf_counter()
    notes, good = [], True
    for H in (0.0, 1.0, 3.0):
        fe, be, hs = [], [], []
        tn = math.tan(delta_of(H, 2))
        for K in REFINE:
            c = umbilical(H, K)
            exact = umbilical_graph(delta_of(H, 2), c.mesh.hyperboloid())
            fe.append(np.max(np.abs(c.f - exact)))
            g = c.geometry
            m = G.core_mask(c.mesh, 1.5) & g.valid
            be.append(np.max(np.abs(g.B_raw[m] - tn * np.eye(2))))
            hs.append(c.mesh.h)
        if max(fe) == 0.0:
            # the totally geodesic slice is reproduced exactly
            f_ok, b_ok = True, max(be) < 1e-10
            notes.append(f"H={H:g}: exact")
        else:
            fo, bo = order(fe), order(be)
            f_ok = bool(np.all(fo >= 1.8))
            b_ok = bool(np.all(bo >= 1.0)) and be[-1] <= hs[-1]
            notes.append(f"H={H:g}: f order {fo.min():.2f}, B order {bo.min():.2f}")
        good &= f_ok and b_ok
    dt = time.perf_counter() - t0
    good &= dt < 120
    record(2, good, "; ".join(notes) + f"; {dt:.0f} s")
    assert good


# 3 ---------------------------------------------------------------------------

def test_criterion_03_pde_identity():
    t0 = time.perf_counter()
    worst = math.inf
    failures = []
    for name, (a, b) in FAMILY.items():
        for H in (-1.0, 0.0, 1.0):
            res = []
            for K in REFINE:
                c = solved(a, b, H, K)
                g = c.geometry
                i0 = int(np.argmin(c.mesh.rho))
                P_ = tangent_umbilical(g.X[i0], g.N[i0], delta_of(H, 2))
                d = G.v_diagnostics(c, P_, region=G.core_mask(c.mesh, 1.0))
                res.append(d.max_residual())
            o = order(res)
            worst = min(worst, float(o.min()))
            if not np.all(o >= 1.0):
                failures.append(f"{name} H={H:g} orders {np.round(o, 2).tolist()}")
    dt = time.perf_counter() - t0
    good = not failures and dt < 180
    record(3, good, f"12 cases, worst observed order {worst:.2f}, {dt:.0f} s"
           + (f"; {failures}" if failures else ""))
    assert good


# 4 ---------------------------------------------------------------------------

def test_criterion_04_width_bounds():
    t0 = time.perf_counter()
    cfg = P.ExperimentConfig()
    Hs = (-2.0, -1.0, 0.0, 1.0, 2.0)
    bad = []
    for spec in cfg.boundaries:
        b = Bd.center(P.load_boundary(spec, cfg.N_theta)).boundary
        S = P._sampler(b, cfg)
        rows = {H: S.width(H, Nt=cfg.Nt, tol=TOL) for H in Hs}
        for name, s in P.width_hard_checks(rows, TOL):
            if s < 0:
                bad.append(f"{spec['case']}: {name} ({s:.3g})")
        om = [rows[H].omega for H in Hs]
        if not (np.all(np.diff(om[:3]) >= -TOL) and np.all(np.diff(om[2:]) <= TOL)):
            bad.append(f"{spec['case']}: profile not monotone in |H|")
    dt = time.perf_counter() - t0
    good = not bad and dt < 300
    record(4, good, f"4 boundaries x 5 H, {dt:.0f} s" + (f"; {bad}" if bad else ""))
    assert good


# 5, 6, 8 (curvature part) ------------------------------------------------------

def test_criterion_05_width_curvature_bound(verify_runs):
    cfg, (a, ra), _, _ = verify_runs
    rows = read_csv(a / "checks.csv")
    widths = {(r["case_id"], r["H"]): r["omega"] for r in read_csv(a / "widths.csv")}
    worst = min(r["check_i"] for r in rows)
    # the same bound recomputed by the normal-flow module
    agree, mismatch = [], 0.0
    for r in rows:
        ab = FAMILY[r["case_id"]]
        c = solved(ab[0], ab[1], r["H"], cfg.mesh_depth)
        wb = F.width_upper_bound(c.geometry, r["H"])
        mismatch = max(mismatch, abs(wb.bound - (math.atan(r["sup_l1"]) - math.atan(r["inf_ln"]))))
        agree.append(wb.bound + TOL - widths[(r["case_id"], r["H"])])
    good = worst >= 0 and min(agree) >= 0 and mismatch <= 1e-9 and len(rows) == 12
    record(5, good, f"{len(rows)} cases; min slack {worst - TOL:.4f} (tol {TOL}); "
                    f"hull width vs flow bound slack {min(agree) - TOL:.4f}, "
                    f"bound recomputation mismatch {mismatch:.1e}")
    assert good


def test_criterion_06_width_curvature_corollaries(verify_runs):
    _, (a, _), _, _ = verify_runs
    rows = read_csv(a / "checks.csv")
    hyp = all(r["B0_norm"] ** 2 <= 1 + (r["H"] / 2) ** 2 for r in rows)
    ii = [r["check_ii"] for r in rows]
    v = [r["check_v"] for r in rows]
    good = hyp and all(x >= 0 for x in ii) and all(x >= 0 for x in v if not math.isnan(x))
    applied_v = sum(not math.isnan(x) for x in v)
    record(6, good, f"hypothesis ||B0||^2 <= 1+(H/2)^2 on all {len(rows)} cases: {hyp}; "
                    f"min slack (ii) {min(ii) - TOL:.4f}, (v) {min(v) - TOL:.4f} on {applied_v} cases")
    assert good


# 7 ---------------------------------------------------------------------------

def test_criterion_07_normal_flow():
    a, b = FAMILY["mixed"]
    devs = {}
    for K in (16, 32):
        c = solved(a, b, 1.0, K)
        core = G.core_mask(c.mesh, 1.5)
        devs[K] = [F.curvature_evolution(c.geometry, c.mesh.k_ring(2), t, mask=core).max_deviation
                   for t in (-0.5, -0.2, 0.2, 0.5)]
    ratio = np.array(devs[16]) / np.array(devs[32])
    c = solved(a, b, 1.0, 16)
    g = c.geometry
    core = G.core_mask(c.mesh, 1.5)
    lam = g.lam[g.valid & core]
    d = delta_of(1.0, 2)
    errs = []
    for side, T_ in (("past", math.atan(lam[:, 0].max())), ("future", math.atan(lam[:, -1].min()))):
        errs.append(abs(F.convexity_time(g, c.mesh.k_ring(2), 1.0, side, mask=core) - (T_ - d)))
    good = bool(np.all(ratio >= 2.0)) and max(devs[16]) <= c.mesh.h and max(errs) <= 1e-3 + c.mesh.h
    record(7, good, f"max deviation {max(devs[16]):.4f} (h={c.mesh.h:.4f}), refinement ratio "
                    f">= {ratio.min():.2f}; convexity times off by {max(errs):.4f}")
    assert good


# 8 ---------------------------------------------------------------------------

def test_criterion_08_curvature(verify_runs):
    _, (a, _), _, _ = verify_runs
    rows = read_csv(a / "checks.csv")
    maxK = max(r["maxK"] for r in rows)
    more = max(G.sectional_curvature(solved(ab[0], ab[1], H, K).geometry, H).max_K
               for ab in FAMILY.values() for H in (-1.0, 0.0, 1.0) for K in REFINE)
    gerr = []
    ab = FAMILY["mixed"]
    for K in (16, 32):
        c = solved(ab[0], ab[1], 1.0, K)
        m = G.core_mask(c.mesh, 1.5) & c.geometry.valid
        k = G.intrinsic_curvature(c.mesh, c.f)
        gerr.append(float(np.nanmax(np.abs(k[m] + 1 + np.linalg.det(c.geometry.B[m])))))
    good = maxK <= 1e-6 and more <= 1e-6 and order(gerr)[0] >= 1.0 and gerr[0] <= mesh(16).h
    record(8, good, f"max K {max(maxK, more):.4f} over 36 refinement meshes and 12 verify cases; Gauss identity error "
                    f"{gerr[0]:.4f} -> {gerr[1]:.4f}")
    assert good


# 9 ---------------------------------------------------------------------------

def test_criterion_09_teichmuller_layer():
    cfg = P.ExperimentConfig()
    ident = T.cross_ratio_norm(T.boundary_to_circle_map(Bd.AdmissibleBoundary.from_fourier(
        Bd.Fourier((0.0,), (0.0,)), N=128)))
    A = np.array([[1.3, 0.4], [0.2, 1.0]])
    A /= math.sqrt(np.linalg.det(A))

    def mob(s):
        v = np.stack([np.cos(s), np.sin(s)], -1) @ A.T
        ang = np.arctan2(v[..., 1], v[..., 0])
        return np.unwrap(ang) if np.ndim(s) else ang
    moeb = T.cross_ratio_norm(T.CircleMap.from_function(mob))
    lem = []
    for name in ("eps005", "eps010", "eps020"):
        spec = next(s for s in cfg.boundaries if s["case"] == name)
        b = Bd.center(P.load_boundary(spec, cfg.N_theta)).boundary
        cr = T.cross_ratio_norm(T.boundary_to_circle_map(b))
        om0 = P._sampler(b, cfg).width(0.0, Nt=cfg.Nt).omega
        lem.append(math.sinh(cr / 2) + TOL - math.tan(om0))
    mu_err = 0.0
    for H in (-1.0, 0.0, 1.0):
        g = solved(*FAMILY["mixed"], H, 16).geometry
        a = np.clip(g.lam[g.valid, 0] - H / 2, 0, None)
        mu, _ = T.complex_dilatation(a, H)
        mu_err = max(mu_err, float(np.max(np.abs(np.abs(mu) ** 2 - a ** 2 / (1 + (H / 2) ** 2)))))
    th = abs(T.theta_of_H(0.0) - math.pi / 2)
    good = ident <= 1e-8 and moeb <= 1e-8 and min(lem) >= 0 and mu_err <= 1e-12 and th <= 1e-12
    record(9, good, f"identity {ident:.1e}, Mobius {moeb:.1e}; sinh(cr/2) - tan(omega_0) "
                    f">= {min(lem) - TOL:.1e} before tolerance; |mu|^2 error {mu_err:.1e}; theta(0) error {th:.1e}")
    assert good


# 10 --------------------------------------------------------------------------

def test_criterion_10_trends(verify_runs):
    cfg, (a, _), _, _ = verify_runs
    const = json.loads((a / "constants.json").read_text())
    CL = const["C_L"]["value"]
    bounded = all(b["bounded"] for b in const["Q_alpha"])
    archived = json.loads((FIXTURES / "trend_constants.json").read_text())
    same = archived["config_hash"] == const["config_hash"] == cfg.hash()
    matches = same and archived["C_L"]["value"] == pytest.approx(CL, rel=1e-9)
    ok = math.isfinite(CL) and const["trend_monotone"] and bounded and matches
    q = ", ".join(f"Q({b['alpha']:.3f}) = {b['Q_alpha']:.3f}" for b in const["Q_alpha"])
    record(10, ok, f"non-gating: C_L = {CL:.3f}, no increase as omega shrinks: "
                   f"{const['trend_monotone']}; {q}; archived for config {const['config_hash']}")
    # trend values are reported, not gated; only the archive must be consistent
    assert same


# 11 --------------------------------------------------------------------------

def test_criterion_11_hk_report(tmp_path):
    assert cli.main(["teich", "--H", "0", "--out", str(tmp_path)]) == 0
    row = next(csv.DictReader((tmp_path / "hk_duality.csv").open()))
    printed, oracle = float(row["K_plus_printed"]), float(row["K_plus_oracle"])
    d = float(row["d_plus"])
    good = printed == pytest.approx(-5.0) and oracle == pytest.approx(-2.0, abs=1e-8) \
        and d == pytest.approx(math.pi / 4)
    record(11, good, f"H=0, d = {d:.6f}: printed K = {printed:g}, flow oracle K = {oracle:.8f}")
    assert good


# 12 --------------------------------------------------------------------------

def test_criterion_12_determinism(verify_runs):
    _, (a, ra), (b, rb), dt = verify_runs
    names = sorted(p.name for p in a.glob("*.csv"))
    same = names == sorted(p.name for p in b.glob("*.csv")) and all(
        filecmp.cmp(a / n, b / n, shallow=False) for n in names)
    good = same and ra.ok and rb.ok and len(names) == 3
    record(12, good, f"{len(names)} CSV files byte-identical (serial vs 2 workers): {same}; "
                     f"both runs ok; {dt:.0f} s for two runs")
    assert good
