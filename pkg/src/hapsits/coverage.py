"""Footprint placement along a route.

Nadirs sit on the route.  A footprint is credited only with the contiguous
stretch of route around its nadir that stays inside the disk; verification
samples the target against every node, so re-entrant stretches still count
there.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geo import (DomainError, GeoPoint, chord_to_km, interpolate_along,
                  interpolate_xyz, km_to_chord, point_xyz, to_unit_vectors)
from .route import ArcInterval, CoverageMask, RoutePolyline

DEFAULT_RADIUS_KM = 40.0
DEFAULT_ALTITUDE_KM = 20.0

# Bisection resolution for footprint edges and nadir search (km).
BISECT_TOL_KM = 1e-7
# Slack on the disk radius absorbing floating-point error in distances (km).
RADIUS_EPS_KM = 1e-7
# Uncovered remainders shorter than this are treated as covered (km).
COVER_TOL_KM = 1e-6


@dataclass(frozen=True)
class HapsNode:
    id: str
    nadir: GeoPoint
    nadir_s: float
    altitude: float = DEFAULT_ALTITUDE_KM
    footprint_radius: float = DEFAULT_RADIUS_KM

    def __post_init__(self):
        if self.altitude <= 0 or self.footprint_radius <= 0:
            raise DomainError("altitude and footprint radius must be positive")


@dataclass(frozen=True, eq=False)
class DeploymentPlan:
    nodes: tuple[HapsNode, ...]
    covered: CoverageMask
    target: CoverageMask
    route: RoutePolyline | None = field(repr=False, default=None)
    radius: float = DEFAULT_RADIUS_KM
    altitude: float = DEFAULT_ALTITUDE_KM

    @property
    def count(self) -> int:
        return len(self.nodes)

    def to_json(self) -> dict:
        return {
            "radius_km": self.radius,
            "altitude_km": self.altitude,
            "nodes": [{"id": n.id, "lat": n.nadir.lat, "lon": n.nadir.lon,
                       "nadir_s_km": n.nadir_s} for n in self.nodes],
            "count": self.count,
        }


@dataclass(frozen=True)
class CoverageReport:
    samples: int
    violations: int
    first_violation_s: float | None
    first_violation_km: float | None  # distance to the nearest nadir there

    @property
    def ok(self) -> bool:
        return self.violations == 0


# ---------------------------------------------------------------- footprint

def _inside(p, c, lim2: float) -> bool:
    dx, dy, dz = p[0] - c[0], p[1] - c[1], p[2] - c[2]
    return dx * dx + dy * dy + dz * dz <= lim2


def _edge(route: RoutePolyline, s: float, center, max_chord: float, direction: int) -> float:
    """Arc-length where the route, walked from ``s`` in ``direction``,
    first leaves the disk (or the route end if it never does)."""
    cum = route.cumulative_s
    nv = cum.size
    lim2 = max_chord * max_chord
    if direction > 0:
        first = int(np.searchsorted(cum, s, side="right"))
        j = _kernels.first_outside(route.unit_vectors, center, max_chord, first, nv, 1)
        if j < 0:
            return route.length
        lo, hi = max(s, float(cum[j - 1])), float(cum[j])
    else:
        first = int(np.searchsorted(cum, s, side="left")) - 1
        j = _kernels.first_outside(route.unit_vectors, center, max_chord, first, -1, -1)
        if j < 0:
            return 0.0
        lo, hi = min(s, float(cum[j + 1])), float(cum[j])
    # lo inside, hi outside; the in-disk part of one great-circle segment is
    # a single interval, so there is exactly one crossing to bracket
    while abs(hi - lo) > BISECT_TOL_KM:
        mid = 0.5 * (lo + hi)
        if _inside(point_xyz(route, mid), center, lim2):
            lo = mid
        else:
            hi = mid
    return lo


def footprint_interval(route: RoutePolyline, nadir_s: float, radius: float) -> ArcInterval:
    """Maximal contiguous stretch around ``nadir_s`` lying within ``radius``
    km (great-circle) of the nadir point."""
    if not 0.0 <= nadir_s <= route.length:
        raise DomainError(f"nadir_s {nadir_s} outside [0, {route.length}]")
    if radius <= 0:
        raise DomainError("radius must be positive")
    center = point_xyz(route, nadir_s)
    max_chord = km_to_chord(radius + RADIUS_EPS_KM)
    lo = _edge(route, nadir_s, center, max_chord, -1)
    hi = _edge(route, nadir_s, center, max_chord, +1)
    if hi <= lo:
        # zero-width only at a route end with nothing else in reach
        hi = min(route.length, lo + BISECT_TOL_KM)
        lo = max(0.0, hi - BISECT_TOL_KM)
    return ArcInterval(lo, hi)


def _reaches_back(route: RoutePolyline, p_xyz, p: float, n: float, max_chord: float) -> bool:
    """Whether the footprint centered at arc-length ``n`` contains the whole
    stretch [p, n].  Checking p, n and the vertices between suffices because
    each segment meets the disk in one interval."""
    center = point_xyz(route, n)
    if not _inside(p_xyz, center, max_chord * max_chord):
        return False
    cum = route.cumulative_s
    i0 = int(np.searchsorted(cum, p, side="right"))
    i1 = int(np.searchsorted(cum, n, side="left"))
    if i0 >= i1:
        return True
    return _kernels.first_outside(route.unit_vectors, center, max_chord, i0, i1, 1) < 0


def _farthest_nadir(route: RoutePolyline, p: float, radius: float) -> float:
    length = route.length
    max_chord = km_to_chord(radius + RADIUS_EPS_KM)
    p_xyz = point_xyz(route, p)
    # arc <= radius implies chord <= radius, so p + radius always qualifies
    lo = min(p + radius, length)
    if lo >= length:
        return length
    step = radius
    hi = min(lo + step, length)
    while _reaches_back(route, p_xyz, p, hi, max_chord):
        lo = hi
        if lo >= length:
            return length
        step *= 2.0
        hi = min(lo + step, length)
    while hi - lo > BISECT_TOL_KM:
        mid = 0.5 * (lo + hi)
        if _reaches_back(route, p_xyz, p, mid, max_chord):
            lo = mid
        else:
            hi = mid
    return lo


def _covered_mask(pieces: list[tuple[float, float]]) -> CoverageMask:
    # bridge bisection-sized seams between neighbouring footprints
    merged: list[list[float]] = []
    for a, b in sorted(pieces):
        if merged and a <= merged[-1][1] + COVER_TOL_KM:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return CoverageMask(tuple(ArcInterval(a, b) for a, b in merged))


def plan_cover(route: RoutePolyline, target: CoverageMask, radius: float = DEFAULT_RADIUS_KM,
               altitude: float = DEFAULT_ALTITUDE_KM) -> DeploymentPlan:
    """Greedy sweep placing the fewest on-route footprints over ``target``.

    For the leftmost uncovered point p, the node goes to the farthest nadir
    whose footprint still reaches back to p.  On a straight route this is
    the classic optimal interval cover.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    target.check_within(route.length + COVER_TOL_KM)
    nadirs: list[float] = []
    pieces: list[tuple[float, float]] = []
    reach = -math.inf
    for iv in target.intervals:
        p = max(iv.start_km, reach)
        while p < iv.end_km - COVER_TOL_KM:
            n = _farthest_nadir(route, p, radius)
            fp = footprint_interval(route, n, radius)
            if fp.end_km <= p:  # pragma: no cover - guarded by construction
                raise RuntimeError(f"no progress placing a footprint at s={p}")
            nadirs.append(n)
            # p is inside by construction; the bisected edge may sit a hair past it
            pieces.append((min(fp.start_km, p), fp.end_km))
            reach = fp.end_km
            p = reach
    nodes = []
    for k, s in enumerate(nadirs):
        nodes.append(HapsNode(f"H{k + 1:03d}", interpolate_along(route, s), s, altitude, radius))
    return DeploymentPlan(tuple(nodes), _covered_mask(pieces), target, route, radius, altitude)


# ---------------------------------------------------------------- checking

def sample_mask(mask: CoverageMask, step: float) -> np.ndarray:
    """Arc-lengths every ``step`` km across each interval, ends included."""
    if step <= 0:
        raise DomainError("sample step must be positive")
    out = []
    for iv in mask.intervals:
        n = int(math.floor(iv.length / step))
        s = iv.start_km + step * np.arange(n + 1)
        if s[-1] < iv.end_km:
            s = np.append(s, iv.end_km)
        out.append(s)
    return np.concatenate(out) if out else np.empty(0)


def verify_cover(plan: DeploymentPlan, sample_step: float = 0.1,
                 route: RoutePolyline | None = None, *, jit=None) -> CoverageReport:
    """Check every target sample lies within the footprint radius of some
    nadir.  Independent of how the plan was built: only nadir positions and
    the radius are used."""
    route = route if route is not None else plan.route
    if route is None:
        raise ValueError("plan carries no route; pass one explicitly")
    s = sample_mask(plan.target, sample_step)
    if s.size == 0:
        return CoverageReport(0, 0, None, None)
    samples = interpolate_xyz(route, s)
    if plan.nodes:
        nodes = to_unit_vectors([n.nadir.lat for n in plan.nodes], [n.nadir.lon for n in plan.nodes])
    else:
        nodes = np.empty((0, 3))
    chord = _kernels.min_chord_to_nodes(samples, nodes, jit=jit)
    bad = np.nonzero(chord > km_to_chord(plan.radius + RADIUS_EPS_KM))[0]
    if bad.size == 0:
        return CoverageReport(int(s.size), 0, None, None)
    i = int(bad[0])
    nearest = chord_to_km(float(chord[i])) if math.isfinite(chord[i]) else math.inf
    return CoverageReport(int(s.size), int(bad.size), float(s[i]), nearest)


def without_node(plan: DeploymentPlan, index: int) -> DeploymentPlan:
    nodes = plan.nodes[:index] + plan.nodes[index + 1:]
    return DeploymentPlan(nodes, plan.covered, plan.target, plan.route, plan.radius, plan.altitude)


# ---------------------------------------------------------------- files

def save_plan(plan: DeploymentPlan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan.to_json(), fh, indent=2)
        fh.write("\n")


def load_plan(path) -> DeploymentPlan:
    """Read a plan file.  The result carries nodes only; no route, target or
    covered mask is stored in the file."""
    with open(path) as fh:
        doc = json.load(fh)
    radius = float(doc.get("radius_km", DEFAULT_RADIUS_KM))
    altitude = float(doc.get("altitude_km", DEFAULT_ALTITUDE_KM))
    nodes = tuple(sorted(
        (HapsNode(str(d["id"]), GeoPoint(float(d["lat"]), float(d["lon"])),
                  float(d["nadir_s_km"]), altitude, radius) for d in doc["nodes"]),
        key=lambda n: n.nadir_s))
    return DeploymentPlan(nodes, CoverageMask(), CoverageMask(), None, radius, altitude)
