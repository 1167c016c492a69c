import json
import math

import pytest

from adslab import pipeline as P
from adslab.hull import WidthReport

SMALL = dict(boundaries=[{"case": "mix", "fourier": {"a": [0, 0, 0.2], "b": [0, 0.1]}}],
             H=[0.0, 1.0], mesh_depth=8, Nx=9, Nt=6, Nt_table=8, N_theta=64)


class TestConfig:
    def test_defaults_valid_and_hash_stable(self):
        c = P.ExperimentConfig()
        assert c.hash() == P.ExperimentConfig.from_dict(c.to_dict()).hash()
        assert c.hash() != P.ExperimentConfig(tol=0.03).hash()
        assert [b["case"] for b in c.boundaries] == ["eps005", "eps010", "eps020", "mixed"]

    @pytest.mark.parametrize("bad", [dict(tol=0.0), dict(tol=-1.0), dict(H=[math.nan]),
                                     dict(K=-1.0), dict(mesh_depth=2), dict(stages=["nope"]),
                                     dict(boundaries=[{"case": "a", "fourier": {"a": [0]}}] * 2)])
    def test_rejects(self, bad):
        with pytest.raises(P.ConfigError):
            P.ExperimentConfig.from_dict(bad)

    def test_unknown_key(self):
        with pytest.raises(P.ConfigError):
            P.ExperimentConfig.from_dict({"bogus": 1})


def test_load_boundary_variants(tmp_path):
    b = P.load_boundary({"case": "x", "fourier": {"a": [0, 0.1], "b": [0, 0.2]}}, 64)
    p = tmp_path / "b.json"
    p.write_text(b.dumps())
    b2 = P.load_boundary({"case": "y", "file": str(p)}, 64)
    b3 = P.load_boundary({"case": "z", "data": json.loads(b.dumps())}, 64)
    assert (b2.values == b.values).all() and (b3.values == b.values).all()
    with pytest.raises(P.ConfigError):
        P.load_boundary({"case": "w"}, 64)


def wr(H, omega):
    return WidthReport(H, math.atan(H / 2), omega, math.pi / 2 - abs(math.atan(H / 2)), [], 0, 9, 6)


def test_width_hard_checks():
    good = {0.0: wr(0.0, 0.3), 1.0: wr(1.0, 0.25), -1.0: wr(-1.0, 0.26)}
    assert all(s >= 0 for _, s in P.width_hard_checks(good, 0.02))
    bad = {0.0: wr(0.0, 0.2), 1.0: wr(1.0, 0.3)}
    names = [n for n, s in P.width_hard_checks(bad, 0.02) if s < 0]
    assert "width_max_at_zero" in names and any(n.startswith("sandwich_upper") for n in names)
    too_wide = {0.0: wr(0.0, 1.7)}
    assert P.width_hard_checks(too_wide, 0.02)[0][1] < 0


def test_self_check():
    r = P.self_check(3, count=100)
    assert r["max_quadric_residual"] < 1e-10 and r["max_distance_inversion"] < 1e-10


def test_pool_size(monkeypatch):
    monkeypatch.setenv("ADSLAB_THREADS", "3")
    assert P.pool_size() == 3
    monkeypatch.setenv("ADSLAB_THREADS", "0")
    assert P.pool_size() == 1


def test_hull_only_skips_solver(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("solver invoked")
    monkeypatch.setattr(P.solver, "solve_cmc", boom)
    cfg = P.ExperimentConfig.from_dict({**SMALL, "stages": ["hull"]})
    res = P.verify(cfg, tmp_path)
    assert res.ok
    assert sorted(f.name for f in res.files) == ["omega_vs_H.svg", "summary.json", "widths.csv"]


def test_small_run(tmp_path):
    cfg = P.ExperimentConfig.from_dict(SMALL)
    res = P.verify(cfg, tmp_path)
    assert res.ok, res.failures
    names = {f.name for f in res.files}
    assert {"widths.csv", "checks.csv", "landslide.csv", "constants.json", "summary.json"} <= names
    head = (tmp_path / "checks.csv").read_text().splitlines()[0].split(",")
    assert head[:3] == ["case_id", "H", "K"]
    const = json.loads((tmp_path / "constants.json").read_text())
    assert const["config_hash"] == cfg.hash() and const["label"] == "empirical"
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert summ["ok"] and summ["config_hash"] == cfg.hash()
