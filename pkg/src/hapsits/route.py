"""Route centerlines, arc-length coverage masks and gateway sites."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geo import EARTH_RADIUS_KM, DomainError, GeoPoint, to_unit_vectors
from . import _kernels


class RouteError(ValueError):
    """Base class for route ingestion failures."""


class RouteParseError(RouteError):
    pass


class DegenerateRouteError(RouteError):
    pass


class DuplicateVertexError(RouteError):
    def __init__(self, index: int):
        super().__init__(f"vertex {index} duplicates vertex {index - 1}")
        self.index = index


@dataclass(frozen=True, eq=False)
class RoutePolyline:
    """Geodesic polyline with its cumulative arc-length (km) per vertex."""

    lat: np.ndarray
    lon: np.ndarray
    cumulative_s: np.ndarray
    name: str = ""
    unit_vectors: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_points(cls, points: Sequence[GeoPoint] | Iterable[tuple[float, float]],
                    name: str = "") -> RoutePolyline:
        pts = [p if isinstance(p, GeoPoint) else GeoPoint(*p) for p in points]
        if len(pts) < 2:
            raise DegenerateRouteError(f"route needs at least 2 vertices, got {len(pts)}")
        lat = np.array([p.lat for p in pts])
        lon = np.array([p.lon for p in pts])
        lat_r, lon_r = np.radians(lat), np.radians(lon)
        seg = _kernels.central_angle_np(lat_r[:-1], lon_r[:-1], lat_r[1:], lon_r[1:])
        for i, a in enumerate(seg):
            if a == 0.0:
                raise DuplicateVertexError(i + 1)
            if a >= np.pi - 1e-12:
                raise RouteError(f"segment {i}-{i + 1} joins antipodal points; its geodesic is undefined")
        cum = np.concatenate([[0.0], np.cumsum(seg * EARTH_RADIUS_KM)])
        if not cum[-1] > 0:
            raise DegenerateRouteError("route has zero length")
        for arr in (lat, lon, cum):
            arr.setflags(write=False)
        xyz = to_unit_vectors(lat, lon)
        xyz.setflags(write=False)
        return cls(lat, lon, cum, name, xyz)

    @property
    def length(self) -> float:
        return float(self.cumulative_s[-1])

    @property
    def vertices(self) -> list[GeoPoint]:
        return [GeoPoint(float(a), float(b)) for a, b in zip(self.lat, self.lon)]

    def __len__(self) -> int:
        return self.lat.size


def straight_route(length_km: float, lon0: float = 0.0, name: str = "straight") -> RoutePolyline:
    """Equatorial great-circle route of the given length, vertices at most
    45 degrees apart."""
    if length_km <= 0:
        raise DegenerateRouteError("route length must be positive")
    span = np.degrees(length_km / EARTH_RADIUS_KM)
    n = int(np.ceil(span / 45.0))
    steps = np.linspace(0.0, span, n + 1)
    return RoutePolyline.from_points([GeoPoint(0.0, lon0 + d) for d in steps], name)


# ------------------------------------------------------------------ files

def load_route(path: str | Path) -> RoutePolyline:
    """Read a GeoJSON LineString (``.geojson``/``.json``) or a ``lat,lon``
    CSV with one header line (``.csv``)."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        text = path.read_text()
    except OSError as exc:
        raise RouteParseError(f"{path}: {exc}") from exc
    if suffix == ".csv":
        pts, name = _parse_csv(text, path), path.stem
    elif suffix in (".geojson", ".json"):
        pts, name = _parse_geojson(text, path)
    else:
        raise RouteParseError(f"{path}: unsupported route file extension {suffix!r}")
    return RoutePolyline.from_points(pts, name or path.stem)


def _parse_csv(text: str, path: Path) -> list[GeoPoint]:
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise RouteParseError(f"{path}: empty file")
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise RouteParseError(f"{path}:{lineno}: expected 'lat,lon'")
        try:
            pts.append(GeoPoint(float(row[0]), float(row[1])))
        except ValueError as exc:
            raise RouteParseError(f"{path}:{lineno}: {exc}") from exc
    return pts


def _parse_geojson(text: str, path: Path) -> tuple[list[GeoPoint], str]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RouteParseError(f"{path}: {exc}") from exc
    lines = []

    def visit(obj, props):
        if not isinstance(obj, dict):
            return
        kind = obj.get("type")
        if kind == "FeatureCollection":
            for feat in obj.get("features", []):
                visit(feat, None)
        elif kind == "Feature":
            visit(obj.get("geometry"), obj.get("properties") or {})
        elif kind == "LineString":
            lines.append((obj.get("coordinates"), props or {}))

    visit(doc, None)
    if len(lines) != 1:
        raise RouteParseError(f"{path}: expected exactly one LineString, found {len(lines)}")
    coords, props = lines[0]
    pts = []
    try:
        for c in coords:
            # GeoJSON order is [lon, lat]
            pts.append(GeoPoint(float(c[1]), float(c[0])))
    except (TypeError, ValueError, IndexError) as exc:
        raise RouteParseError(f"{path}: bad coordinate: {exc}") from exc
    return pts, str(props.get("name", ""))


def save_route(route: RoutePolyline, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        lines = ["lat,lon"] + [f"{a!r},{b!r}" for a, b in zip(route.lat.tolist(), route.lon.tolist())]
        path.write_text("\n".join(lines) + "\n")
        return
    doc = {
        "type": "Feature",
        "properties": {"name": route.name},
        "geometry": {
            "type": "LineString",
            "coordinates": [[b, a] for a, b in zip(route.lat.tolist(), route.lon.tolist())],
        },
    }
    path.write_text(json.dumps(doc, indent=1) + "\n")


# ------------------------------------------------------------------ masks

# Mask ends may overshoot a route length by float noise (a mask written for a
# 4504 km route against a computed 4503.999999999999 km).
MASK_TOL_KM = 1e-6


@dataclass(frozen=True, order=True)
class ArcInterval:
    start_km: float
    end_km: float

    def __post_init__(self):
        if not (0.0 <= self.start_km < self.end_km):
            raise DomainError(f"invalid interval [{self.start_km}, {self.end_km}]")

    @property
    def length(self) -> float:
        return self.end_km - self.start_km

    def contains(self, s: float) -> bool:
        return self.start_km <= s <= self.end_km


@dataclass(frozen=True)
class CoverageMask:
    """Sorted, disjoint, merged arc-length intervals."""

    intervals: tuple[ArcInterval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    @classmethod
    def of(cls, *pairs: tuple[float, float]) -> CoverageMask:
        return cls(tuple(ArcInterval(float(a), float(b)) for a, b in pairs))

    @property
    def total_length(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    def is_empty(self) -> bool:
        return not self.intervals

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(iv.start_km, iv.end_km) for iv in self.intervals]

    def contains(self, s: float) -> bool:
        return any(iv.contains(s) for iv in self.intervals)

    def union(self, other: CoverageMask) -> CoverageMask:
        return CoverageMask(self.intervals + other.intervals)

    def intersection(self, other: CoverageMask) -> CoverageMask:
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i].start_km, b[j].start_km)
            hi = min(a[i].end_km, b[j].end_km)
            if lo < hi:
                out.append(ArcInterval(lo, hi))
            if a[i].end_km < b[j].end_km:
                i += 1
            else:
                j += 1
        return CoverageMask(tuple(out))

    def check_within(self, length: float) -> None:
        for iv in self.intervals:
            if iv.end_km > length + MASK_TOL_KM:
                raise DomainError(
                    f"interval [{iv.start_km}, {iv.end_km}] exceeds route length {length} km")


def _normalize(intervals: Iterable[ArcInterval]) -> tuple[ArcInterval, ...]:
    out: list[ArcInterval] = []
    for iv in sorted(intervals):
        if out and iv.start_km <= out[-1].end_km:
            if iv.end_km > out[-1].end_km:
                out[-1] = ArcInterval(out[-1].start_km, iv.end_km)
        else:
            out.append(iv)
    return tuple(out)


def clip_mask(mask: CoverageMask, length: float) -> CoverageMask:
    """Drop the part of ``mask`` beyond ``length`` once it is within tolerance."""
    mask.check_within(length)
    out = [ArcInterval(iv.start_km, min(iv.end_km, length)) for iv in mask.intervals
           if iv.start_km < length]
    return CoverageMask(tuple(out))


def complement(mask: CoverageMask, length: float) -> CoverageMask:
    """Stretches of [0, length] not in ``mask``."""
    if length <= 0:
        raise DomainError(f"length must be positive, got {length}")
    mask = clip_mask(mask, length)
    out = []
    cursor = 0.0
    for iv in mask.intervals:
        if iv.start_km > cursor:
            out.append(ArcInterval(cursor, iv.start_km))
        cursor = iv.end_km
    if cursor < length:
        out.append(ArcInterval(cursor, length))
    return CoverageMask(tuple(out))


def full_mask(length: float) -> CoverageMask:
    return CoverageMask((ArcInterval(0.0, float(length)),))


def load_mask(path: str | Path, length: float | None = None) -> CoverageMask:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        mask = CoverageMask(tuple(ArcInterval(float(d["start_km"]), float(d["end_km"])) for d in doc))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise RouteParseError(f"{path}: {exc}") from exc
    if length is not None:
        mask = clip_mask(mask, length)
    return mask


def mask_to_json(mask: CoverageMask) -> list[dict]:
    return [{"start_km": iv.start_km, "end_km": iv.end_km} for iv in mask.intervals]


# --------------------------------------------------------------- gateways

@dataclass(frozen=True)
class GatewaySite:
    id: str
    location: GeoPoint
    terminal: str = "h2g"


def load_gateways(path: str | Path) -> list[GatewaySite]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        sites = [GatewaySite(str(d["id"]), GeoPoint(float(d["lat"]), float(d["lon"])),
                             str(d.get("terminal", "h2g"))) for d in doc]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise RouteParseError(f"{path}: {exc}") from exc
    seen = set()
    for g in sites:
        if g.id in seen:
            raise RouteParseError(f"{path}: duplicate gateway id {g.id!r}")
        seen.add(g.id)
    return sites
