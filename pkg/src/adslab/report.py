"""Deterministic CSV tables and self-contained SVG plots."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

WIDTH_COLUMNS = ("case_id", "H", "delta_H", "omega", "upper_bound", "chain_len", "grid_Nx", "grid_Nt")
CHECK_COLUMNS = ("case_id", "H", "K", "omega_H", "omega_K", "sup_l1", "inf_ln", "B0_norm",
                 "B0_excess", "maxK", "check_i", "check_ii", "check_iii", "check_iv", "check_v",
                 "h", "R_disc", "R_disc_sensitivity")
LANDSLIDE_COLUMNS = ("case_id", "H", "theta", "cr_norm", "omega_0", "omega_H", "B0_norm",
                     "mu_norm", "K_maxdil", "K_dil1", "lnK_over_cr")
FLOW_COLUMNS = ("t", "min_lambda", "max_lambda", "deviation", "past_H_convex", "future_H_convex")
HK_COLUMNS = ("H", "d_plus", "d_minus", "K_plus_printed", "K_minus_printed", "K_plus_alt",
              "K_minus_alt", "K_plus_oracle", "K_minus_oracle", "oracle_spread")


def fmt(x) -> str:
    """Stable text form of a table cell."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return "0"
        return format(x, ".10g")
    return str(x)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows))
    return path


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n")
    return path


def _finite(o):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return fmt(o)
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


# --- SVG ------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


@dataclass
class Series:
    points: list
    label: str
    kind: str = "scatter"      # "scatter" or "line"


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    width: int = 640
    height: int = 420

    def add(self, points, label: str, kind: str = "scatter") -> "Plot":
        pts = [(float(x), float(y)) for x, y in points
               if math.isfinite(float(x)) and math.isfinite(float(y))]
        self.series.append(Series(pts, label, kind))
        return self

    def _bounds(self):
        xs = [p[0] for s in self.series for p in s.points]
        ys = [p[1] for s in self.series for p in s.points]
        if not xs:
            return 0.0, 1.0, 0.0, 1.0
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        px, py = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
        return x0 - px, x1 + px, y0 - py, y1 + py

    def render(self) -> str:
        W, Hh = self.width, self.height
        L, R, T, B = 70, 150, 40, 50
        x0, x1, y0, y1 = self._bounds()

        def sx(x):
            return L + (x - x0) / (x1 - x0) * (W - L - R)

        def sy(y):
            return Hh - B - (y - y0) / (y1 - y0) * (Hh - T - B)

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{Hh}" '
               f'viewBox="0 0 {W} {Hh}" font-family="sans-serif" font-size="12">',
               f'<rect width="{W}" height="{Hh}" fill="white"/>',
               f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{_esc(self.title)}</text>',
               f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{Hh - T - B}" '
               f'fill="none" stroke="black"/>']
        for t in nice_ticks(x0, x1):
            X = sx(t)
            out.append(f'<line x1="{X:.2f}" y1="{Hh - B}" x2="{X:.2f}" y2="{Hh - B + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{Hh - B + 18}" text-anchor="middle">{_tick(t)}</text>')
        for t in nice_ticks(y0, y1):
            Y = sy(t)
            out.append(f'<line x1="{L - 5}" y1="{Y:.2f}" x2="{L}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{L - 8}" y="{Y + 4:.2f}" text-anchor="end">{_tick(t)}</text>')
        out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{Hh - 12}" text-anchor="middle">{_esc(self.xlabel)}</text>')
        out.append(f'<text transform="translate(16,{(T + Hh - B) / 2:.1f}) rotate(-90)" '
                   f'text-anchor="middle">{_esc(self.ylabel)}</text>')
        for i, s in enumerate(self.series):
            col = PALETTE[i % len(PALETTE)]
            if s.kind == "line" and len(s.points) > 1:
                d = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s.points)
                out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.5"/>')
            if s.kind in ("scatter", "line"):
                for x, y in s.points:
                    out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{col}"/>')
            ly = T + 14 + 18 * i
            out.append(f'<rect x="{W - R + 10}" y="{ly - 9}" width="10" height="10" fill="{col}"/>')
            out.append(f'<text x="{W - R + 26}" y="{ly}">{_esc(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path


def _tick(v: float) -> str:
    return format(v, ".4g")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
