import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adslab import boundary as Bd
from adslab import quadric as Q

from conftest import fourier_boundary

SPLIT = Q.Splitting.standard(2)


class TestFourier:
    @given(st.lists(st.floats(-0.2, 0.2), min_size=1, max_size=5),
           st.lists(st.floats(-0.2, 0.2), min_size=1, max_size=5))
    def test_matches_direct_sum(self, a, b):
        f = Bd.Fourier(tuple(a), tuple(b))
        phi = np.linspace(-4, 4, 17)
        direct = sum(c * np.cos(k * phi) for k, c in enumerate(a))
        direct = direct + sum(c * np.sin(k * phi) for k, c in enumerate(b) if k)
        assert np.allclose(f(phi), direct, atol=1e-13)

    def test_slope_and_antipodal_bounds(self):
        f = Bd.Fourier((0.1, 0.2, 0.05), (0.0, 0.0, 0.1))
        assert f.slope_bound() == pytest.approx(0.2 + 0.1 + 0.2)
        assert f.antipodal_bound() == pytest.approx(0.4)


class TestValidate:
    def test_zero(self):
        c = Bd.validate(fourier_boundary())
        assert c.ok and c.lipschitz == 0 and c.antipodal_margin == pytest.approx(math.pi)

    def test_identity_rotation_rejected(self):
        b = Bd.AdmissibleBoundary.from_function(lambda s: s, N=64)
        c = Bd.validate(b)
        assert not c.ok
        assert c.lipschitz == pytest.approx(1.0, abs=1e-7)
        assert c.antipodal_margin == pytest.approx(0.0, abs=1e-7)

    def test_small_sine(self):
        c = Bd.validate(fourier_boundary(b=(0, 0.3), N=256))
        assert c.ok
        assert c.antipodal_margin == pytest.approx(math.pi - 0.6, abs=1e-9)
        assert c.lipschitz <= 0.3 + 1e-9

    def test_steep_samples_report_pairs(self):
        b = Bd.AdmissibleBoundary.from_function(lambda s: 1.5 * np.sin(s), N=32)
        c = Bd.validate(b)
        assert not c.ok and c.violations[0][0] == "lipschitz"

    def test_loader_rejects_or_clamps(self):
        data = {"n": 2, "kind": "fourier", "fourier": {"a": [0, 1.5], "b": [0]}, "margin": 0.1}
        with pytest.raises(Bd.BoundaryError):
            Bd.AdmissibleBoundary.from_json(data)
        b = Bd.AdmissibleBoundary.from_json(data, clamp=True)
        assert b.fourier.slope_bound() == pytest.approx(0.9)

    def test_json_round_trip(self):
        b = fourier_boundary(a=(0.1, 0, 0.2), b=(0, 0.1))
        b2 = Bd.AdmissibleBoundary.from_json(json.loads(b.dumps()))
        assert np.allclose(b2.values, b.values)
        s = Bd.AdmissibleBoundary.from_function(lambda x: 0.2 * np.cos(3 * x), N=40)
        s2 = Bd.AdmissibleBoundary.from_json(json.loads(s.dumps()))
        assert np.allclose(s2.values, s.values) and np.allclose(s2.theta, s.theta)

    def test_shape_errors(self):
        with pytest.raises(Bd.BoundaryError):
            Bd.AdmissibleBoundary(n=2, theta=np.zeros((3, 2)), values=np.zeros(4))
        with pytest.raises(Bd.BoundaryError):
            Bd.AdmissibleBoundary(n=2, theta=np.zeros((0, 2)), values=np.zeros(0))


class TestExtensions:
    def test_centre_of_zero(self):
        up, um = Bd.extremal_values(fourier_boundary(), np.zeros((1, 2)))
        assert up[0] == pytest.approx(math.pi / 2) and um[0] == pytest.approx(-math.pi / 2)

    def test_constant_shift(self):
        up, um = Bd.extremal_values(fourier_boundary(a=(0.4,)), np.zeros((1, 2)))
        assert up[0] == pytest.approx(0.4 + math.pi / 2) and um[0] == pytest.approx(0.4 - math.pi / 2)

    def test_restrict_to_samples(self):
        b = fourier_boundary(a=(0, 0.2), b=(0, 0, 0.1))
        up, um = Bd.extremal_values_klein(b, b.theta)
        # arccos near 1 limits this to about sqrt(machine eps)
        assert np.allclose(up, b.values, atol=1e-7) and np.allclose(um, b.values, atol=1e-7)

    @settings(max_examples=30)
    @given(st.integers(0, 1000))
    def test_order_and_lipschitz(self, seed):
        rng = np.random.default_rng(seed)
        b = fourier_boundary(a=(0, 0.3 * rng.uniform()), b=(0, 0, 0.2 * rng.uniform()))
        z = rng.uniform(-0.7, 0.7, size=(40, 2))
        ext = Bd.extremal_extensions(b, Bd.klein_to_y(z))
        assert np.all(ext.u_minus <= ext.u_plus)
        h = Q.hemisphere_point(ext.points)
        d = np.arccos(np.clip(h @ h.T, -1, 1))
        assert np.all(np.abs(ext.u_plus[:, None] - ext.u_plus[None]) <= d + 1e-9)
        assert np.all(np.abs(ext.u_minus[:, None] - ext.u_minus[None]) <= d + 1e-9)

    def test_klein_round_trip(self):
        y = np.array([[0.3, -4.0], [0.0, 0.0]])
        assert np.allclose(Bd.klein_to_y(Bd.y_to_klein(y)), y)


class TestInvisibleDomain:
    def test_base_point_inside(self):
        assert Bd.invisible_domain_contains(fourier_boundary(), Q.base_point(2))

    def test_antipode_and_light_cone_outside(self):
        b = fourier_boundary()
        assert not Bd.invisible_domain_contains(b, -Q.base_point(2))
        # the dual plane of the base point touches the boundary curve
        p = np.array([0.0, 0.0, 1.0, 0.0])
        assert not Bd.invisible_domain_contains(b, p)

    def test_time_coordinate_between_extensions(self, rng):
        b = fourier_boundary(a=(0, 0.2), b=(0, 0.1, 0.1))
        y = rng.normal(size=(300, 2))
        t = rng.uniform(-2, 2, size=300)
        inside = Bd.invisible_domain_contains(b, SPLIT.from_coords(y, t))
        up, um = Bd.extremal_values(b, y)
        assert np.all((t[inside] > um[inside] - 1e-9) & (t[inside] < up[inside] + 1e-9))


class TestCosmologicalTimes:
    def test_circle_oracle(self, oracles):
        ct = Bd.CosmologicalTimes(fourier_boundary(N=64), levels=20, nphi=40)
        for r in oracles["circle_times"]:
            P = SPLIT.from_coords(np.array([r["y"]]), r["t"])
            assert ct.tau_past(P)[0] == pytest.approx(r["tau_past"], abs=1e-9)
            assert ct.tau_fut(P)[0] == pytest.approx(r["tau_fut"], abs=1e-9)

    def test_centre_of_plane(self):
        tp, tf = Bd.cosmological_times(fourier_boundary(N=64), Q.base_point(2))
        assert tp == pytest.approx(math.pi / 2, abs=1e-6) and tf == pytest.approx(math.pi / 2, abs=1e-6)

    def test_outside_rejected(self):
        with pytest.raises(Bd.BoundaryError):
            Bd.cosmological_times(fourier_boundary(), SPLIT.from_coords(np.zeros(2), 2.0))

    def test_monotone_along_time(self):
        b = fourier_boundary(a=(0, 0, 0.3), b=(0, 0.2))
        ct = Bd.CosmologicalTimes(b, levels=24, nphi=48)
        y = np.array([[0.3, -0.2]])
        ts = np.linspace(-0.5, 0.5, 6)
        P = SPLIT.from_coords(np.repeat(y, 6, 0), ts)
        assert np.all(np.diff(ct.tau_past(P)) > 0) and np.all(np.diff(ct.tau_fut(P)) < 0)

    def test_near_graph_of_lower_extension(self):
        b = fourier_boundary(b=(0, 0.2))
        ct = Bd.CosmologicalTimes(b, levels=30, nphi=60)
        y = np.array([[0.1, 0.2]])
        _, um = Bd.extremal_values(b, y)
        P = SPLIT.from_coords(y, um + 1e-3)
        assert ct.tau_past(P)[0] < 0.05

    def test_sample_refinement_converges(self):
        P = SPLIT.from_coords(np.array([[0.2, 0.1]]), 0.05)
        vals = []
        for N in (32, 64, 128):
            b = fourier_boundary(a=(0, 0.1), b=(0, 0.3), N=N)
            vals.append(Bd.CosmologicalTimes(b, levels=24, nphi=48).tau_past(P)[0])
        assert abs(vals[2] - vals[1]) <= abs(vals[1] - vals[0]) + 1e-12
        assert abs(vals[2] - vals[1]) < 1e-4

    def test_isometry_equivariance(self):
        b = fourier_boundary(a=(0, 0, 0.3), b=(0, 0.2))
        A = Bd.boost(2, 0, 0.25)
        bA = Bd.transform(b, A)
        P = SPLIT.from_coords(np.array([[0.2, -0.3], [0.0, 0.5]]), np.array([0.1, -0.2]))
        t1 = Bd.CosmologicalTimes(b, levels=30, nphi=60)
        t2 = Bd.CosmologicalTimes(bA, levels=30, nphi=60)
        assert np.allclose(t1.tau_past(P), t2.tau_past(P @ A.T), atol=2e-3)
        assert np.allclose(t1.tau_fut(P), t2.tau_fut(P @ A.T), atol=2e-3)


class TestCentering:
    def test_tilted_circle_becomes_horizontal(self):
        b = Bd.AdmissibleBoundary.from_function(lambda s: np.arcsin(0.3 * np.cos(s)), N=128)
        c = Bd.center(b)
        assert c.residual < 1e-12
        assert np.max(np.abs(c.boundary.values)) < 1e-7

    def test_boost_is_isometry(self):
        A = Bd.boost(2, 1, 0.7)
        J = np.diag(Q.signature(4))
        assert np.allclose(A.T @ J @ A, J)

    def test_transform_round_trip(self):
        b = fourier_boundary(a=(0, 0, 0.3), b=(0, 0.2))
        A = Bd.boost(2, 0, 0.3) @ Bd.boost(2, 1, -0.2)
        back = Bd.transform(Bd.transform(b, A), np.linalg.inv(A))
        assert np.max(np.abs(back.values - b.values)) < 1e-6

    def test_identity_transform_exact(self):
        b = fourier_boundary(a=(0, 0, 0.3), b=(0, 0.2))
        t = Bd.transform(b, np.eye(4))
        assert np.max(np.abs(t.values - b.values)) < 1e-14 and t.fourier is not None

    def test_centered_is_admissible_and_balanced(self):
        c = Bd.center(fourier_boundary(a=(0, 0, 0.3), b=(0, 0.2)))
        assert Bd.validate(c.boundary).ok
        assert max(abs(x) for x in Bd.first_harmonic(c.boundary)) < 1e-12
        # image points are null vectors of the mapped curve
        P = c.boundary.null_reps() @ np.linalg.inv(c.isometry).T
        assert np.allclose(Q.form(P, P), 0, atol=1e-12)
