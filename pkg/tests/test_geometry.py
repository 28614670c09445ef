import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wedgewalk.geometry import Point, Region, Side, WedgeGeometry


def grid_distance_oracle(geom, p, n=200_001):
    """Brute-force distance to the complement via a dense boundary grid.

    Two-stage grid search per wall (global then local refinement) so the
    oracle resolves steep walls to well below the 1e-6 comparison tolerance.
    """
    def wall_min(a, beta, sign):
        z = np.linspace(0.0, 2.0 * p.x1 + 10.0, n)
        for _ in range(3):
            h = a * z ** beta if beta else np.full_like(z, a)
            d = np.hypot(z - p.x1, sign * h - p.x2)
            k = int(np.argmin(d))
            lo = z[max(k - 2, 0)]
            hi = z[min(k + 2, len(z) - 1)]
            best = d[k]
            z = np.linspace(lo, hi, 20_001)
        return best

    return min(p.x1,
               wall_min(geom.a_plus, geom.beta_plus, 1.0),
               wall_min(geom.a_minus, geom.beta_minus, -1.0))


@pytest.fixture
def sqrt_wedge():
    return WedgeGeometry(1.0, 1.0, 0.5, 0.5, 1.0)


@pytest.fixture
def strip():
    return WedgeGeometry(1.0, 1.0, 0.0, 0.0, 0.5)


class TestPoint:
    def test_polar_roundtrip(self, rng):
        for _ in range(100):
            x1, x2 = rng.normal(size=2) * 100
            p = Point(x1, x2)
            assert p.r ** 2 == pytest.approx(x1 ** 2 + x2 ** 2, rel=1e-12)
            assert p.r * math.cos(p.theta) == pytest.approx(x1, abs=1e-12 * (1 + p.r))
            assert p.r * math.sin(p.theta) == pytest.approx(x2, abs=1e-12 * (1 + p.r))

    def test_theta_range(self):
        assert Point(-1.0, 0.0).theta == pytest.approx(math.pi)
        assert Point(0.0, -1.0).theta == pytest.approx(-math.pi / 2)


class TestBoundaryHeight:
    def test_hand_value(self, sqrt_wedge):
        assert sqrt_wedge.boundary_height(4.0, Side.UPPER) == pytest.approx(2.0)

    def test_flat_wall_is_constant(self):
        geom = WedgeGeometry(3.0, 1.0, 0.0, 0.0, 0.5)
        assert geom.boundary_height(17.0, Side.UPPER) == 3.0
        assert geom.boundary_height(0.0, Side.UPPER) == 3.0

    def test_zero_at_apex(self, sqrt_wedge):
        assert sqrt_wedge.boundary_height(0.0, Side.UPPER) == 0.0

    def test_negative_z_rejected(self, sqrt_wedge):
        with pytest.raises(ValueError):
            sqrt_wedge.boundary_height(-1.0, Side.UPPER)


class TestContains:
    def test_on_curve(self, sqrt_wedge):
        assert sqrt_wedge.contains(Point(4.0, 2.0))
        assert not sqrt_wedge.contains(Point(4.0, 2.01))

    def test_apex(self, sqrt_wedge):
        assert sqrt_wedge.contains(Point(0.0, 0.0))

    def test_negative_x1(self, sqrt_wedge):
        assert not sqrt_wedge.contains(Point(-1.0, 0.0))


class TestDistance:
    def test_strip_center(self):
        geom = WedgeGeometry(1.0, 1.0, 0.0, 0.0, 0.5)
        assert geom.distance_to_complement(Point(10.0, 0.0)) == pytest.approx(1.0)

    def test_apex_segment_closest(self):
        geom = WedgeGeometry(1.0, 1.0, 0.0, 0.0, 0.5)
        assert geom.distance_to_complement(Point(0.25, 0.0)) == pytest.approx(0.25)

    def test_outside_rejected(self, sqrt_wedge):
        with pytest.raises(ValueError):
            sqrt_wedge.distance_to_complement(Point(4.0, 3.0))

    def test_against_grid_oracle(self, sqrt_wedge):
        p = Point(4.0, 0.0)
        assert sqrt_wedge.distance_to_complement(p) == pytest.approx(
            grid_distance_oracle(sqrt_wedge, p), abs=1e-6)

    def test_random_states_match_oracle(self, rng):
        geoms = [
            WedgeGeometry(1.0, 1.0, 0.5, 0.5, 1.0),
            WedgeGeometry(2.0, 0.5, 0.3, 0.8, 1.0),
            WedgeGeometry(1.0, 1.0, 2.0, 2.0, 1.0),
            WedgeGeometry(0.7, 1.3, 1.0, 0.0, 1.0),
        ]
        checked = 0
        for geom in geoms:
            for _ in range(40):
                x1 = rng.uniform(0.1, 60.0)
                lo = -geom.boundary_height(x1, Side.LOWER)
                hi = geom.boundary_height(x1, Side.UPPER)
                p = Point(x1, rng.uniform(lo, hi))
                d = geom.distance_to_complement(p)
                assert d == pytest.approx(grid_distance_oracle(geom, p), abs=1e-5)
                checked += 1
        assert checked == 160


class TestClassify:
    def test_band_membership(self):
        geom = WedgeGeometry(2.0, 2.0, 0.0, 0.0, 1.0)
        assert geom.classify(Point(10.0, 1.5)) is Region.BOUNDARY_UPPER
        assert geom.classify(Point(10.0, 0.0)) is Region.INTERIOR
        assert geom.classify(Point(-1.0, 0.0)) is Region.OUTSIDE

    def test_side_by_sign_of_x2(self):
        geom = WedgeGeometry(2.0, 2.0, 0.0, 0.0, 1.0)
        assert geom.classify(Point(10.0, -1.5)) is Region.BOUNDARY_LOWER
        # x2 = 0 inside the band (possible near the apex) goes to the upper side
        assert geom.classify(Point(0.5, 0.0)) is Region.BOUNDARY_UPPER

    def test_consistency_with_distance(self, rng):
        geoms = [
            WedgeGeometry(1.0, 1.0, 0.5, 0.5, 1.0),
            WedgeGeometry(1.0, 1.0, 2.0, 2.0, 1.5),
            WedgeGeometry(8.0, 8.0, 0.1, 0.1, 3.5),
        ]
        for geom in geoms:
            for _ in range(300):
                x1 = rng.uniform(0.0, 200.0)
                lo = -geom.boundary_height(x1, Side.LOWER)
                hi = geom.boundary_height(x1, Side.UPPER)
                p = Point(x1, rng.uniform(lo, hi))
                region = geom.classify(p)
                d = geom.distance_to_complement(p)
                if region is Region.INTERIOR:
                    assert d > geom.band_width
                else:
                    assert d <= geom.band_width + 1e-9


class TestNormals:
    def test_flat_wall(self):
        geom = WedgeGeometry(2.0, 2.0, 0.0, 0.0, 1.0)
        np.testing.assert_allclose(geom.inward_normal(5.0, Side.UPPER), [0.0, -1.0])
        np.testing.assert_allclose(geom.inward_normal(5.0, Side.LOWER), [0.0, 1.0])

    def test_sqrt_wall_hand_value(self, sqrt_wedge):
        # slope a*beta*x1^(beta-1) equals 1 at x1 = 1/4
        np.testing.assert_allclose(
            sqrt_wedge.inward_normal(0.25, Side.UPPER),
            np.array([1.0, -1.0]) / math.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(
            sqrt_wedge.inward_normal(0.25, Side.LOWER),
            np.array([1.0, 1.0]) / math.sqrt(2), atol=1e-12)

    def test_apex_rejected(self, sqrt_wedge):
        with pytest.raises(ValueError):
            sqrt_wedge.inward_normal(0.0, Side.UPPER)


class TestReflectionVector:
    def test_zero_angle_is_normal(self, sqrt_wedge, rng):
        for _ in range(20):
            x1 = rng.uniform(0.01, 100.0)
            side = Side.UPPER if rng.random() < 0.5 else Side.LOWER
            np.testing.assert_allclose(
                sqrt_wedge.reflection_vector(x1, side, 0.0),
                sqrt_wedge.inward_normal(x1, side), atol=1e-14)

    def test_flat_wall_upper(self):
        geom = WedgeGeometry(2.0, 2.0, 0.0, 0.0, 1.0)
        np.testing.assert_allclose(
            geom.reflection_vector(5.0, Side.UPPER, math.pi / 4),
            [math.sqrt(2) / 2, -math.sqrt(2) / 2], atol=1e-12)

    def test_flat_wall_lower_opposed(self):
        # opposed convention: the lower-side angle is the negative of alpha,
        # so at alpha = pi/4 the lower vector tilts towards the apex
        geom = WedgeGeometry(2.0, 2.0, 0.0, 0.0, 1.0)
        np.testing.assert_allclose(
            geom.reflection_vector(5.0, Side.LOWER, math.pi / 4),
            [-math.sqrt(2) / 2, math.sqrt(2) / 2], atol=1e-12)

    def test_angle_out_of_range(self, sqrt_wedge):
        with pytest.raises(ValueError):
            sqrt_wedge.reflection_vector(1.0, Side.UPPER, math.pi / 2)

    @settings(max_examples=200, deadline=None)
    @given(x1=st.floats(1e-3, 1e6), alpha=st.floats(-1.5, 1.5),
           beta=st.floats(0.0, 3.0), a=st.floats(0.1, 5.0),
           upper=st.booleans())
    def test_unit_norm_and_angle_to_normal(self, x1, alpha, beta, a, upper):
        geom = WedgeGeometry(a, a, beta, beta, 1.0)
        side = Side.UPPER if upper else Side.LOWER
        v = geom.reflection_vector(x1, side, alpha)
        n = geom.inward_normal(x1, side)
        assert np.hypot(*v) == pytest.approx(1.0, abs=1e-12)
        assert np.hypot(*n) == pytest.approx(1.0, abs=1e-12)
        assert float(v @ n) == pytest.approx(math.cos(alpha), abs=1e-12)


class TestValidation:
    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            WedgeGeometry(0.0, 1.0, 0.5, 0.5, 1.0)
        with pytest.raises(ValueError):
            WedgeGeometry(1.0, 1.0, -0.1, 0.5, 1.0)
        with pytest.raises(ValueError):
            WedgeGeometry(1.0, 1.0, 0.5, 0.5, 0.0)
