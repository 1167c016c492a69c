import json
import math

import pytest

from adslab import report as R


def test_fmt():
    assert R.fmt(True) == "1" and R.fmt(3) == "3" and R.fmt(0.0) == "0"
    assert R.fmt(float("nan")) == "nan" and R.fmt(-math.inf) == "-inf"
    assert R.fmt(1 / 3) == "0.3333333333"


def test_csv_stable_and_ordered(tmp_path):
    rows = [{"b": 2.0, "a": 1}, {"a": 0.5}]
    text = R.csv_text(("a", "b"), rows)
    assert text == "a,b\n1,2\n0.5,\n"
    p = R.write_csv(tmp_path / "x" / "t.csv", ("a", "b"), rows)
    assert p.read_text() == text


def test_config_hash_independent_of_key_order():
    assert R.config_hash({"a": 1, "b": [1, 2]}) == R.config_hash({"b": [1, 2], "a": 1})
    assert R.config_hash({"a": 1}) != R.config_hash({"a": 2})
    assert len(R.config_hash({})) == 16


def test_json_is_strict(tmp_path):
    p = R.write_json(tmp_path / "c.json", {"x": math.nan, "y": [math.inf, 1.0]})
    d = json.loads(p.read_text())
    assert d == {"x": "nan", "y": ["inf", 1.0]}


def test_nice_ticks():
    assert R.nice_ticks(0, 1) == pytest.approx([0, 0.2, 0.4, 0.6, 0.8, 1.0])
    t = R.nice_ticks(-0.37, 2.1)
    assert t[0] >= -0.37 and t[-1] <= 2.1 and len(t) >= 3
    assert R.nice_ticks(1.0, 1.0)


def test_svg(tmp_path):
    p = R.Plot("t <1>", "x", "y").add([(0, 0), (1, 2), (2, float("nan"))], "a", kind="line")
    p.add([(0.5, 1)], "b")
    svg = p.render()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "t &lt;1&gt;" in svg and svg.count("<circle") == 3 and "<polyline" in svg
    assert p.render() == svg
    assert p.write(tmp_path / "p.svg").read_text() == svg
    assert "<svg" in R.Plot("e", "x", "y").render()
