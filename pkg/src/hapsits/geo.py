"""Spherical-Earth geodesy: great-circle distance, slant geometry and
arc-length interpolation along a polyline."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Single place the Earth model lives.  Spherical, mean radius.
EARTH_RADIUS_KM = 6371.0


class DomainError(ValueError):
    """An argument lies outside the interval an operation is defined on."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        lat = float(self.lat)
        lon = float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError(f"non-finite coordinate ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        lon = normalize_lon(lon)
        if abs(lat) == 90.0:
            # every longitude names the same pole
            lon = 0.0
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


def normalize_lon(lon: float) -> float:
    """Map a longitude into [-180, 180)."""
    if -180.0 <= lon < 180.0:
        return lon
    out = math.fmod(lon + 180.0, 360.0)
    if out < 0:
        out += 360.0
    return out - 180.0


@dataclass(frozen=True)
class SlantGeometry:
    """Straight-line geometry between two points separated horizontally by
    ``ground_distance`` and vertically by ``altitude_difference`` (km)."""

    ground_distance: float
    altitude_difference: float
    slant_range: float
    elevation_angle: float


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km.

    Uses the atan2 (Vincenty special case) form, which stays accurate for
    coincident and antipodal points alike.
    """
    if (b.lat, b.lon) < (a.lat, a.lon):
        a, b = b, a  # fixed argument order makes the result exactly symmetric
    return EARTH_RADIUS_KM * central_angle(
        math.radians(a.lat), math.radians(a.lon),
        math.radians(b.lat), math.radians(b.lon))


def central_angle(lat0: float, lon0: float, lat1: float, lon1: float) -> float:
    dlon = lon1 - lon0
    c0, s0 = math.cos(lat0), math.sin(lat0)
    c1, s1 = math.cos(lat1), math.sin(lat1)
    cd = math.cos(dlon)
    y = math.hypot(c1 * math.sin(dlon), c0 * s1 - s0 * c1 * cd)
    x = s0 * s1 + c0 * c1 * cd
    return math.atan2(y, x)


def slant_range(ground_distance: float, altitude: float) -> SlantGeometry:
    """Flat-Earth slant geometry.  ``altitude`` is the height difference
    between the two ends; the nadir case (0, h) has elevation pi/2."""
    if ground_distance < 0 or altitude < 0:
        raise DomainError(
            f"ground distance and altitude must be >= 0, got ({ground_distance}, {altitude})")
    if math.isinf(altitude) and math.isfinite(ground_distance):
        return SlantGeometry(float(ground_distance), altitude, math.inf, math.pi / 2)
    slant = math.hypot(ground_distance, altitude)
    if ground_distance == 0:
        elevation = math.pi / 2
    else:
        elevation = math.atan2(altitude, ground_distance)
    return SlantGeometry(float(ground_distance), float(altitude), slant, elevation)


def ground_distance_for_slant(slant: float, altitude: float) -> float:
    """Inverse of :func:`slant_range` for the horizontal leg."""
    if slant < altitude:
        raise DomainError(f"slant range {slant} km shorter than altitude {altitude} km")
    return math.sqrt(slant * slant - altitude * altitude)


# ------------------------------------------------------------- unit vectors

def to_unit_vectors(lat_deg, lon_deg) -> np.ndarray:
    lat = np.radians(np.asarray(lat_deg, dtype=float))
    lon = np.radians(np.asarray(lon_deg, dtype=float))
    cl = np.cos(lat)
    return np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1)


def from_unit_vectors(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    lat = np.degrees(np.arctan2(z, np.hypot(x, y)))
    lon = np.degrees(np.arctan2(y, x))
    return lat, lon


def _slerp(v0: np.ndarray, v1: np.ndarray, frac: np.ndarray, omega: np.ndarray) -> np.ndarray:
    frac = np.asarray(frac, dtype=float)[..., None]
    omega = np.asarray(omega, dtype=float)[..., None]
    so = np.sin(omega)
    small = so < 1e-12
    safe = np.where(small, 1.0, so)
    w0 = np.where(small, 1.0 - frac, np.sin((1.0 - frac) * omega) / safe)
    w1 = np.where(small, frac, np.sin(frac * omega) / safe)
    v = w0 * v0 + w1 * v1
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _locate(route, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cum = route.cumulative_s
    seg = np.searchsorted(cum, s, side="right") - 1
    seg = np.clip(seg, 0, cum.size - 2)
    seglen = cum[seg + 1] - cum[seg]
    frac = np.clip((s - cum[seg]) / seglen, 0.0, 1.0)
    return seg, frac


def interpolate_many(route, s) -> tuple[np.ndarray, np.ndarray]:
    """Latitudes and longitudes (degrees) at arc-lengths ``s`` along ``route``.

    No range checking; values are clamped to the route ends.
    """
    s = np.clip(np.asarray(s, dtype=float), 0.0, route.length)
    seg, frac = _locate(route, s)
    xyz = route.unit_vectors
    omega = (route.cumulative_s[seg + 1] - route.cumulative_s[seg]) / EARTH_RADIUS_KM
    v = _slerp(xyz[seg], xyz[seg + 1], frac, omega)
    lat, lon = from_unit_vectors(v)
    # exact vertices where the parameter lands on one
    at_start = frac == 0.0
    at_end = frac == 1.0
    lat = np.where(at_start, route.lat[seg], np.where(at_end, route.lat[seg + 1], lat))
    lon = np.where(at_start, route.lon[seg], np.where(at_end, route.lon[seg + 1], lon))
    return lat, lon


def interpolate_xyz(route, s) -> np.ndarray:
    """Unit vectors at arc-lengths ``s``; the vectorized form used for sampling."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, route.length)
    seg, frac = _locate(route, s)
    xyz = route.unit_vectors
    omega = (route.cumulative_s[seg + 1] - route.cumulative_s[seg]) / EARTH_RADIUS_KM
    return _slerp(xyz[seg], xyz[seg + 1], frac, omega)


def point_xyz(route, s: float) -> tuple[float, float, float]:
    """Scalar fast path of :func:`interpolate_xyz` for bisection loops."""
    cum = route.cumulative_s
    n = cum.size
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), n - 2)
    a, b = float(cum[i]), float(cum[i + 1])
    v0 = route.unit_vectors[i]
    v1 = route.unit_vectors[i + 1]
    if s <= a:
        return float(v0[0]), float(v0[1]), float(v0[2])
    if s >= b:
        return float(v1[0]), float(v1[1]), float(v1[2])
    omega = (b - a) / EARTH_RADIUS_KM
    f = (s - a) / (b - a)
    so = math.sin(omega)
    w0 = math.sin((1.0 - f) * omega) / so
    w1 = math.sin(f * omega) / so
    x = w0 * v0[0] + w1 * v1[0]
    y = w0 * v0[1] + w1 * v1[1]
    z = w0 * v0[2] + w1 * v1[2]
    norm = math.sqrt(x * x + y * y + z * z)
    return x / norm, y / norm, z / norm


def chord_to_km(chord: float) -> float:
    """Great-circle distance for a unit-sphere chord length."""
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, chord / 2.0))


def km_to_chord(distance: float) -> float:
    return 2.0 * math.sin(min(math.pi, distance / EARTH_RADIUS_KM) / 2.0)


def interpolate_along(route, s: float) -> GeoPoint:
    """Point at arc-length ``s`` km, by spherical linear interpolation on
    the segment containing it."""
    length = route.length
    if not (0.0 <= s <= length):
        raise DomainError(f"arc-length {s} km outside [0, {length}] km")
    lat, lon = interpolate_many(route, np.array([s]))
    return GeoPoint(float(lat[0]), float(lon[0]))
