import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adlsense.errors import ValidationError
from adlsense.geo import EARTH_RADIUS_M, GeoPoint, distance_traveled, haversine

# Closed forms: one degree along the equator is R*pi/180, antipodal is R*pi.
ONE_DEGREE_EQUATOR_M = EARTH_RADIUS_M * math.pi / 180.0
ANTIPODAL_M = EARTH_RADIUS_M * math.pi

lat_st = st.floats(min_value=-90.0, max_value=90.0, allow_nan=False)
lon_st = st.floats(min_value=-180.0, max_value=180.0, allow_nan=False)
point_st = st.builds(GeoPoint, lat=lat_st, lon=lon_st)


def test_identity_is_zero():
    p = GeoPoint(12.5, -70.25)
    assert haversine(p, p) == 0.0


def test_one_degree_equator():
    d = haversine(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0))
    assert d == pytest.approx(111_194.9, abs=0.1)
    assert d == pytest.approx(ONE_DEGREE_EQUATOR_M, abs=1e-6)


def test_antipodal():
    d = haversine(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
    assert d == pytest.approx(20_015_086.8, abs=1.0)
    assert d == pytest.approx(ANTIPODAL_M, abs=1e-6)


def test_coordinate_range_validation():
    with pytest.raises(ValidationError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(ValidationError):
        GeoPoint(0.0, 180.5)


@given(point_st, point_st)
def test_symmetry_exact(a, b):
    assert haversine(a, b) == haversine(b, a)


def test_triangle_inequality_on_random_triples():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        pts = [
            GeoPoint(float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
            for _ in range(3)
        ]
        a, b, c = pts
        assert haversine(a, c) <= haversine(a, b) + haversine(b, c) + 1e-6


def test_distance_traveled_degenerate_tracks():
    assert distance_traveled([]) == 0.0
    assert distance_traveled([GeoPoint(10.0, 10.0)]) == 0.0


def test_out_and_back():
    a = GeoPoint(40.0, -8.5)
    b = GeoPoint(40.01, -8.49)
    assert distance_traveled([a, b, a]) == pytest.approx(2.0 * haversine(a, b), rel=1e-12)


def test_straight_equator_track():
    # 5 points spaced 0.001 degrees along the equator
    track = [GeoPoint(0.0, i * 0.001) for i in range(5)]
    per_step = ONE_DEGREE_EQUATOR_M / 1000.0
    assert per_step == pytest.approx(111.1949, abs=1e-4)
    assert distance_traveled(track) == pytest.approx(4.0 * per_step, abs=0.01)


@given(st.lists(point_st, min_size=2, max_size=8))
def test_reversal_invariance(track):
    forward = distance_traveled(track)
    backward = distance_traveled(list(reversed(track)))
    assert forward == pytest.approx(backward, rel=1e-12, abs=1e-9)
