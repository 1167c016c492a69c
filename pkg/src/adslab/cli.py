"""Command-line front end.

    adslab boundary gen --fourier a1=0.2 --out b.json
    adslab boundary validate b.json
    adslab hull --boundary b.json --H -1,0,1
    adslab solve --boundary b.json --H 1 --mesh-depth 16
    adslab flow --boundary b.json --H 1 --t -0.2,0.2
    adslab teich --H 0,1,2.5
    adslab verify --config cfg.json --out results/
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

from . import boundary as Bd
from . import flow as F
from . import geometry as G
from . import hull
from . import pipeline as P
from . import report
from . import solver
from . import teich as T
from .mesh import disc_mesh

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_list(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"bad number list {text!r}") from e


def parse_fourier(items: list[str]) -> Bd.Fourier:
    """Terms like a0=0.1, a2=0.3, b1=0.2 (comma separated or repeated)."""
    a: dict[int, float] = {}
    b: dict[int, float] = {}
    for item in items:
        for term in filter(None, (t.strip() for t in item.split(","))):
            m = re.fullmatch(r"([ab])(\d+)=(.+)", term)
            if not m:
                raise UsageError(f"bad Fourier term {term!r}; use e.g. a1=0.2 or b2=-0.1")
            kind, k, val = m.group(1), int(m.group(2)), float(m.group(3))
            if kind == "b" and k == 0:
                raise UsageError("b0 is not a Fourier mode")
            (a if kind == "a" else b)[k] = val
    A = [a.get(k, 0.0) for k in range(max(a, default=0) + 1)]
    B = [b.get(k, 0.0) for k in range(max(b, default=0) + 1)]
    return Bd.Fourier(tuple(A), tuple(B))


def _boundary_from_args(args) -> Bd.AdmissibleBoundary:
    if getattr(args, "boundary", None):
        return Bd.AdmissibleBoundary.from_json(json.loads(Path(args.boundary).read_text()))
    if getattr(args, "fourier", None):
        return Bd.AdmissibleBoundary.from_fourier(parse_fourier(args.fourier), N=args.samples)
    raise UsageError("give --boundary FILE or --fourier TERMS")


def _grid(text: str | None, default=(17, 12)) -> tuple[int, int]:
    if not text:
        return default
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 2 or min(parts) < 2:
        raise UsageError("--grid takes NX,NT with both >= 2")
    return parts[0], parts[1]


def _out(args, default: str) -> Path:
    p = Path(args.out or default)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- subcommands -------------------------------------------------------------

def cmd_boundary(args) -> int:
    if args.action == "gen":
        if args.n != 2:
            raise UsageError("Fourier boundaries are defined for n = 2")
        four = parse_fourier(args.fourier or [])
        slope = four.slope_bound()
        if slope >= 1:
            print(f"rejected: derivative bound {slope:.6g} >= 1 (boundary would not be spacelike)",
                  file=sys.stderr)
            return EXIT_USAGE
        margin = 1.0 - slope
        b = Bd.AdmissibleBoundary.from_fourier(four, N=args.samples, margin=margin)
        cert = Bd.validate(b)
        text = b.dumps()
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        print(f"margin {margin:.6g}  lipschitz {cert.lipschitz:.6g}  ok {cert.ok}", file=sys.stderr)
        return EXIT_OK if cert.ok else EXIT_CHECK
    if not args.file:
        raise UsageError("boundary validate needs a FILE")
    b = Bd.AdmissibleBoundary.from_json(json.loads(Path(args.file).read_text()))
    cert = Bd.validate(b)
    print(json.dumps({"ok": cert.ok, "lipschitz": cert.lipschitz,
                      "antipodal_margin": cert.antipodal_margin,
                      "violations": [list(v) for v in cert.violations]}, indent=2))
    return EXIT_OK if cert.ok else EXIT_CHECK


def cmd_hull(args) -> int:
    b = _boundary_from_args(args)
    Hs = parse_list(args.H) or [0.0]
    nx, nt = _grid(args.grid)
    cfg = P.ExperimentConfig(boundaries=[], H=Hs, Nx=nx, Nt=nt, tol=args.tol)
    S = P._sampler(b, cfg)
    rows = {H: S.width(H, Nt=nt, tol=args.tol) for H in sorted(set(Hs))}
    out = _out(args, "adslab-out")
    report.write_csv(out / "widths.csv", report.WIDTH_COLUMNS,
                     [dict(case_id="cli", **r.row()) for r in rows.values()])
    ok = True
    for H, r in rows.items():
        good = r.omega <= r.upper_bound + args.tol
        ok &= good
        print(f"H={H:g} omega={r.omega:.6f} bound={r.upper_bound:.6f} {'ok' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def _solve(args, b, H):
    mesh = disc_mesh(args.mesh_depth, args.R_disc)
    return solver.solve_cmc(Bd.center(b).boundary, H, mesh)


def cmd_solve(args) -> int:
    b = _boundary_from_args(args)
    Hs = parse_list(args.H) or [0.0]
    out = _out(args, "adslab-out")
    for H in Hs:
        c = _solve(args, b, H)
        c.geometry
        path = out / f"solution_H{H:g}.json"
        path.write_text(json.dumps(c.to_json()) + "\n")
        print(f"H={H:g} iterations={c.iterations} method={c.method} "
              f"max|H_mean-H|={c.max_H_error:.3e} -> {path}")
    return EXIT_OK


def cmd_flow(args) -> int:
    b = _boundary_from_args(args)
    H = (parse_list(args.H) or [0.0])[0]
    ts = parse_list(args.t) or [-0.5, -0.2, 0.2, 0.5]
    c = _solve(args, b, H)
    g = c.geometry
    nb = c.mesh.k_ring(2)
    w = F.window(g)
    bad = [t for t in ts if not w.contains(t)]
    if bad:
        print(f"refused: t = {bad} outside the flow window "
              f"({w.A_minus + F.GUARD:.6f}, {w.A_plus - F.GUARD:.6f})", file=sys.stderr)
        return EXIT_USAGE
    core = G.core_mask(c.mesh, args.R_disc - 1.5)
    rows = []
    for t in sorted(ts):
        ev = F.curvature_evolution(g, nb, t, mask=core)
        lam = ev.analytic[g.valid]
        rows.append({"t": t, "min_lambda": float(lam.min()), "max_lambda": float(lam.max()),
                     "deviation": ev.max_deviation,
                     "past_H_convex": hull.is_H_convex(lam, H, g.n, "past")[0],
                     "future_H_convex": hull.is_H_convex(lam, H, g.n, "future")[0]})
    out = _out(args, "adslab-out")
    report.write_csv(out / "flow.csv", report.FLOW_COLUMNS, rows)
    d = math.atan(H / g.n)
    for side, ref in (("past", w.T_plus - d), ("future", w.T_minus - d)):
        tb = F.convexity_time(g, nb, H, side, numeric=False)
        print(f"{side}-convexity switch at t={tb:.6f} (T - delta_H = {ref:.6f})")
    return EXIT_OK


def cmd_teich(args) -> int:
    Hs = parse_list(args.H) or [0.0, 1.0, 2.5]
    rows = []
    for H in Hs:
        r = T.hk_duality(H)
        rows.append({k: getattr(r, k) for k in report.HK_COLUMNS})
        print(f"H={H:g}: printed K+={r.K_plus_printed:.6f} K-={r.K_minus_printed:.6f} | "
              f"oracle K+={r.K_plus_oracle:.6f} K-={r.K_minus_oracle:.6f}")
    out = _out(args, "adslab-out")
    report.write_csv(out / "hk_duality.csv", report.HK_COLUMNS, rows)
    if getattr(args, "boundary", None) or getattr(args, "fourier", None):
        b = _boundary_from_args(args)
        cr = T.cross_ratio_norm(T.boundary_to_circle_map(b))
        print(f"cross-ratio norm {cr:.6g}")
    return EXIT_OK


def load_config(args) -> P.ExperimentConfig:
    d = {}
    if args.config:
        d = json.loads(Path(args.config).read_text())
    if args.H is not None:
        d["H"] = parse_list(args.H)
    if args.K is not None:
        d["K"] = args.K
    if args.mesh_depth is not None:
        d["mesh_depth"] = args.mesh_depth
    if args.grid is not None:
        d["Nx"], d["Nt"] = _grid(args.grid)
    if args.tol is not None:
        d["tol"] = args.tol
    if args.seed is not None:
        d["seed"] = args.seed
    if args.only is not None:
        d["stages"] = [args.only]
    return P.ExperimentConfig.from_dict(d)


def cmd_verify(args) -> int:
    cfg = load_config(args)
    out = Path(args.out or "adslab-out")
    res = P.verify(cfg, out)
    for c, n, s in res.failures:
        print(f"FAIL {c}: {n} ({s})")
    print(f"{len(res.hard) - len(res.failures)}/{len(res.hard)} hard checks passed; "
          f"config {cfg.hash()}; output in {out}")
    return EXIT_OK if res.ok else EXIT_CHECK


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--H", help="comma separated mean curvatures")
    common.add_argument("--K", type=float, help="comparison curvature for the trend ratio")
    common.add_argument("--mesh-depth", type=int, default=None, dest="mesh_depth",
                        help="lattice steps from the disc centre to its rim")
    common.add_argument("--grid", help="hull grid NX,NT")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", help="output directory (file for boundary gen)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--only", choices=P.STAGES, help="run a single stage")

    src = argparse.ArgumentParser(add_help=False)
    src.add_argument("--boundary", help="boundary JSON file")
    src.add_argument("--fourier", action="append", help="Fourier terms, e.g. a1=0.2,b2=0.1")
    src.add_argument("--samples", type=int, default=256, help="boundary samples")
    src.add_argument("--R-disc", type=float, default=3.0, dest="R_disc")

    p = argparse.ArgumentParser(prog="adslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pb = sub.add_parser("boundary", parents=[common], help="generate or validate a boundary")
    pb.add_argument("action", choices=("gen", "validate"))
    pb.add_argument("file", nargs="?")
    pb.add_argument("--fourier", action="append")
    pb.add_argument("--n", type=int, default=2)
    pb.add_argument("--samples", type=int, default=256)
    pb.set_defaults(func=cmd_boundary)

    for name, func, hlp in (("hull", cmd_hull, "hull widths"),
                            ("solve", cmd_solve, "solve CMC surfaces"),
                            ("flow", cmd_flow, "normal flow report"),
                            ("teich", cmd_teich, "equidistance duality and cross ratios")):
        sp_ = sub.add_parser(name, parents=[common, src], help=hlp)
        if name == "flow":
            sp_.add_argument("--t", help="comma separated flow times")
        sp_.set_defaults(func=func)

    pv = sub.add_parser("verify", parents=[common], help="full verification suite")
    pv.set_defaults(func=cmd_verify)
    return p


_NUMERIC = re.compile(r"-[\d.]")


def _glue_negative(argv: list[str]) -> list[str]:
    """Let list options take values with a leading minus, e.g. --H -1,0,1."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--H", "--t", "--K") and i + 1 < len(argv) and _NUMERIC.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative(list(sys.argv[1:] if argv is None else argv)))
    if getattr(args, "tol", None) is None and args.command in ("hull",):
        args.tol = 0.02
    if getattr(args, "mesh_depth", None) is None and args.command in ("solve", "flow"):
        args.mesh_depth = 16
    try:
        return args.func(args)
    except (UsageError, P.ConfigError, Bd.BoundaryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
