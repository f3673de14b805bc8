from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsits.geo import (EARTH_RADIUS_KM, DomainError, GeoPoint, ground_distance_for_slant,
                         great_circle_distance, interpolate_along, interpolate_many,
                         normalize_lon, slant_range)
from hapsits.route import RoutePolyline

lats = st.floats(-90, 90, allow_nan=False)
lons = st.floats(-180, 180, allow_nan=False, exclude_max=True)
points = st.builds(GeoPoint, lats, lons)


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    # independent formula for cross-checking the library's atan2 form
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dp, dl = p2 - p1, math.radians(b.lon - a.lon)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def test_identity_is_zero():
    p = GeoPoint(36.75, 3.06)
    assert great_circle_distance(p, p) == 0.0


def test_one_degree_on_equator():
    d = great_circle_distance(GeoPoint(0, 0), GeoPoint(0, 1))
    assert d == pytest.approx(2 * math.pi * 6371.0 / 360, rel=1e-12)
    assert d == pytest.approx(111.1949, abs=1e-4)


def test_antipodes():
    d = great_circle_distance(GeoPoint(0, 0), GeoPoint(0, -180))
    assert d == pytest.approx(math.pi * 6371.0, rel=1e-12)
    assert d == pytest.approx(20015.087, abs=1e-3)
    d = great_circle_distance(GeoPoint(90, 0), GeoPoint(-90, 0))
    assert d == pytest.approx(math.pi * 6371.0, rel=1e-12)


def test_longitude_normalization():
    assert normalize_lon(180.0) == -180.0
    assert normalize_lon(540.0) == -180.0
    assert normalize_lon(-190.0) == 170.0
    assert GeoPoint(10, 370).lon == pytest.approx(10.0)
    assert great_circle_distance(GeoPoint(5, 179.5), GeoPoint(5, -180.5)) == pytest.approx(0.0, abs=1e-9)
    # any longitude at a pole is the same point
    assert GeoPoint(90, 45) == GeoPoint(90, -120)


def test_bad_latitude_rejected():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(float("nan"), 0)


@given(points, points)
def test_matches_haversine_and_is_symmetric(a, b):
    d = great_circle_distance(a, b)
    assert d == great_circle_distance(b, a)
    assert 0.0 <= d <= math.pi * EARTH_RADIUS_KM
    assert d == pytest.approx(haversine(a, b), abs=1e-6)


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    ab = great_circle_distance(a, b)
    bc = great_circle_distance(b, c)
    ac = great_circle_distance(a, c)
    assert ac <= ab + bc + 1e-9


def test_slant_examples():
    g = slant_range(0, 20)
    assert g.slant_range == 20 and g.elevation_angle == math.pi / 2
    assert slant_range(40, 20).slant_range == pytest.approx(math.sqrt(40 ** 2 + 20 ** 2), abs=1e-12)
    assert slant_range(40, 20).slant_range == pytest.approx(44.7214, abs=1e-4)
    assert slant_range(119.336, 20).slant_range == pytest.approx(121.0, abs=1e-3)
    assert ground_distance_for_slant(121.0, 20.0) == pytest.approx(math.sqrt(121 ** 2 - 20 ** 2))


def test_slant_fields_consistent():
    g = slant_range(30, 20)
    assert g.ground_distance == 30 and g.altitude_difference == 20
    assert math.tan(g.elevation_angle) == pytest.approx(20 / 30)
    h = slant_range(80, 0)
    assert h.slant_range == 80 and h.elevation_angle == 0.0


def test_slant_rejects_negative():
    with pytest.raises(DomainError):
        slant_range(-1, 20)
    with pytest.raises(DomainError):
        ground_distance_for_slant(10, 20)


pos = st.floats(0.01, 1e4, allow_nan=False)


@given(pos, pos, st.floats(1e-3, 100))
def test_slant_strictly_increasing(ground, alt, bump):
    base = slant_range(ground, alt).slant_range
    assert slant_range(ground + bump, alt).slant_range > base
    assert slant_range(ground, alt + bump).slant_range > base


def equator_route(span_deg=2.0):
    return RoutePolyline.from_points([(0.0, 0.0), (0.0, span_deg)])


def test_interpolate_endpoints():
    r = RoutePolyline.from_points([(10, 10), (12, 11), (13, 15)])
    assert interpolate_along(r, 0) == GeoPoint(10, 10)
    assert interpolate_along(r, r.length) == GeoPoint(13, 15)
    # interior vertices come back exactly too
    assert interpolate_along(r, r.cumulative_s[1]) == GeoPoint(12, 11)


def test_interpolate_equator_midpoint():
    r = equator_route(2.0)
    assert r.length == pytest.approx(222.39, abs=0.01)
    p = interpolate_along(r, r.length / 2)
    assert p.lat == pytest.approx(0.0, abs=1e-12)
    assert p.lon == pytest.approx(1.0, abs=1e-12)
    q = interpolate_along(r, 111.195)
    assert q.lon == pytest.approx(1.0, abs=1e-4)


def test_interpolate_out_of_range_names_interval():
    r = equator_route()
    with pytest.raises(DomainError, match=r"\[0, 222\.3"):
        interpolate_along(r, -0.5)
    with pytest.raises(DomainError):
        interpolate_along(r, r.length + 1)


def test_interpolate_many_matches_scalar():
    r = RoutePolyline.from_points([(0, 0), (5, 5), (6, 20), (-3, 25)])
    s = np.linspace(0, r.length, 37)
    lat, lon = interpolate_many(r, s)
    for k in range(s.size):
        p = interpolate_along(r, float(s[k]))
        assert (lat[k], lon[k]) == pytest.approx((p.lat, p.lon), abs=1e-12)


def test_interpolated_point_lies_at_arc_length():
    r = RoutePolyline.from_points([(0, 0), (30, 40)])
    for s in (0.0, 100.0, 1234.5, r.length):
        assert great_circle_distance(GeoPoint(0, 0), interpolate_along(r, s)) == pytest.approx(s, abs=1e-6)


routes = st.lists(st.tuples(st.floats(-60, 60), st.floats(-170, 170)), min_size=2, max_size=6)


@given(routes, st.floats(0, 1), st.floats(0, 1))
def test_chord_not_longer_than_arc(pts, f1, f2):
    try:
        r = RoutePolyline.from_points(pts)
    except ValueError:
        return
    s1, s2 = f1 * r.length, f2 * r.length
    d = great_circle_distance(interpolate_along(r, s1), interpolate_along(r, s2))
    assert d <= abs(s1 - s2) + 1e-6
