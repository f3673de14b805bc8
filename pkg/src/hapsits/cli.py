"""``hapsits`` command line: plan, linkbudget, backhaul, dimension, calibrate.

Exit codes: 0 success, 1 domain or connectivity failure, 2 usage or parse
failure.  Every command computes all of its results before writing any file.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path

from . import backhaul, coverage, dimensioning, fso, route
from .geo import DomainError

EXIT_DOMAIN = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


@dataclass
class StudyConfig:
    route: Path | None = None
    mask: Path | None = None
    gateways: Path | None = None
    fso_config: Path | None = None
    payload_catalog: Path | None = None
    out: Path = Path("out")
    radius_km: float = coverage.DEFAULT_RADIUS_KM
    altitude_km: float = coverage.DEFAULT_ALTITUDE_KM
    h2g_max_slant_km: float = 121.0
    h2h_max_range_km: float = 100.0

    @classmethod
    def load(cls, path: str | Path) -> StudyConfig:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config {path}: {exc}") from exc
        base = path.parent
        cfg = cls()
        for key in ("route", "mask", "gateways", "fso_config", "payload_catalog", "out"):
            if doc.get(key) is not None:
                setattr(cfg, key, base / doc[key])
        for key in ("radius_km", "altitude_km", "h2g_max_slant_km", "h2h_max_range_km"):
            if key in doc:
                setattr(cfg, key, float(doc[key]))
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"config {path}: unknown keys {sorted(unknown)}")
        cfg.check()
        return cfg

    def check(self) -> None:
        if not (self.radius_km > 0 and self.altitude_km > 0):
            raise UsageError("radius_km and altitude_km must be positive")
        for key in ("route", "mask", "gateways", "fso_config", "payload_catalog"):
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise UsageError(f"{key}: no such file {p}")


# ------------------------------------------------------------------ output

def _num(v):
    if isinstance(v, Decimal):
        return float(v)
    return v


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, default=_num) + "\n"


def _finish(doc: dict, args) -> dict:
    if args.stamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return doc


def _write_all(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)


def _fmt_rate(bps: float) -> str:
    return f"{bps / 1e9:.3f} Gbps" if bps >= 1e9 else f"{bps / 1e6:.3f} Mbps"


# ---------------------------------------------------------------- commands

def cmd_plan(cfg: StudyConfig, args) -> int:
    if cfg.route is None:
        raise UsageError("plan needs a route (--route or config 'route')")
    r = route.load_route(cfg.route)
    if cfg.mask is not None:
        cellular = route.load_mask(cfg.mask, r.length)
        target = route.complement(cellular, r.length)
    else:
        target = route.full_mask(r.length)
    plan = coverage.plan_cover(r, target, cfg.radius_km, cfg.altitude_km)
    check = coverage.verify_cover(plan, args.verify_step)
    doc = plan.to_json()
    doc["route_length_km"] = r.length
    doc["target_length_km"] = target.total_length
    doc["verify"] = {"sample_step_km": args.verify_step, "samples": check.samples,
                     "violations": check.violations}
    _write_all(cfg.out, {"plan.json": _dump(_finish(doc, args))})
    print(f"route {r.name!r}: {r.length:.3f} km, target (uncovered) {target.total_length:.3f} km")
    print(f"nodes: {plan.count}  (radius {cfg.radius_km:g} km, altitude {cfg.altitude_km:g} km)")
    print(f"coverage check at {args.verify_step:g} km: {check.violations} violations")
    return 0


def _load_fso(cfg: StudyConfig) -> fso.FsoConfig:
    try:
        return fso.load_fso_config(cfg.fso_config)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"FSO config: {exc}") from exc


def cmd_linkbudget(cfg: StudyConfig, args) -> int:
    d_max = args.d_min if args.d_max is None else args.d_max
    if not (0 < args.d_min <= d_max) or not args.step > 0:
        raise UsageError(f"invalid range: need 0 < d_min <= d_max and step > 0 "
                         f"(got {args.d_min}, {d_max}, {args.step})")
    fc = _load_fso(cfg)
    profile = args.profile or args.kind
    params = fc.profile(profile)
    family = fc.family(args.kind)
    files = {}
    for p in args.power:
        rows = fso.rate_sweep(params.with_power(p), fc.atmosphere, family, args.d_min, d_max, args.step)
        files[f"linkbudget_{args.kind}_{p:g}dBm.csv"] = fso.sweep_csv(rows)
        print(f"{args.kind} @ {p:g} dBm: {len(rows)} rows, "
              f"{_fmt_rate(rows[0][1])} at {rows[0][0]:g} km .. {_fmt_rate(rows[-1][1])} at {rows[-1][0]:g} km")
    _write_all(cfg.out, files)
    return 0


def cmd_backhaul(cfg: StudyConfig, args) -> int:
    if args.plan is None:
        raise UsageError("backhaul needs --plan")
    if cfg.gateways is None:
        raise UsageError("backhaul needs gateways (--gateways or config 'gateways')")
    try:
        plan = coverage.load_plan(args.plan)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"plan {args.plan}: {exc}") from exc
    gws = route.load_gateways(cfg.gateways)
    fc = _load_fso(cfg)
    for g in gws:
        fc.profile(g.terminal)
    if args.power is not None:
        fc = fso.FsoConfig({k: v.with_power(args.power) for k, v in fc.profiles.items()},
                           fc.atmosphere, fc.altitude_km, fc.distance_mode, fc.calibrated,
                           fc.provenance, fc.extra)
    topo = backhaul.build_topology(plan, gws, cfg.h2g_max_slant_km, cfg.h2h_max_range_km, fc,
                                   mesh=args.mesh)
    reports = backhaul.bottleneck_rate(topo)
    rows = backhaul.chain_sweep(args.hops, args.spacing, args.h2g_slant, fc)
    doc = {"trees": [rep.to_json(topo) for rep in reports]}
    _write_all(cfg.out, {
        "backhaul_report.json": _dump(_finish(doc, args)),
        "backhaul_hops.csv": backhaul.hops_csv(rows),
    })
    for rep in reports:
        print(f"{rep.gateway_id}: {len(rep.nodes)} cells, per-cell {_fmt_rate(rep.per_cell_rate_bps)}, "
              f"bottleneck {rep.bottleneck_link}")
    return 0


def _load_fleet(path) -> list[dimensioning.FleetEntry]:
    if path is None:
        return []
    try:
        doc = json.loads(Path(path).read_text())
        fleet = [dimensioning.FleetEntry(int(d["level"]), int(d["count"]), float(d.get("dwell_h", 1.0)))
                 for d in doc]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"fleet {path}: {exc}") from exc
    for e in fleet:
        if e.level not in dimensioning.DEFAULT_PROFILES:
            raise UsageError(f"fleet {path}: unknown CAV level {e.level}")
        if e.count < 0 or not e.dwell_h > 0:
            raise UsageError(f"fleet {path}: bad entry {e}")
    return fleet


def dimension_report(fleet, catalog, *, ingest_fraction: float, cell_capacity: float,
                     altitude: float, radius: float, sensor_range_m: float,
                     speed_kmh: float, default_catalog: bool) -> dict:
    dm = dimensioning
    demand = []
    for level, prof in sorted(dm.DEFAULT_PROFILES.items()):
        demand.append({
            "level": level,
            "hourly_volume_bytes": prof.hourly_volume_bytes,
            "uplink_fraction": prof.uplink_fraction,
            "uplink_bps": dm.uplink_demand(prof),
            "downlink_bps": prof.downlink_demand_bps,
            "storage_generation_bytes_per_h": prof.storage_generation_bytes_per_h,
        })
    per_vehicle = []
    for dl in dm.DOWNLINK_RANGE_BPS:
        f = dm.cell_feasibility(0, dl, 0.0, cell_capacity)
        per_vehicle.append({"downlink_bps": dl, "uplink_bps": 0.0, "max_vehicles": f.max_vehicles})
    fleet_rows = []
    total_bps = 0.0
    n_total = 0
    for e in fleet:
        prof = dm.profile_for(e.level)
        ul = dm.uplink_demand(prof)
        f = dm.cell_feasibility(e.count, prof.downlink_demand_bps, ul, cell_capacity)
        fleet_rows.append({"level": e.level, "count": e.count, "per_vehicle_bps": prof.downlink_demand_bps + ul,
                           "max_vehicles": f.max_vehicles, "feasible": f.feasible})
        total_bps += e.count * (prof.downlink_demand_bps + ul)
        n_total += e.count
    nadir = dm.relay_latency(altitude, altitude)
    edge_slant = (radius ** 2 + altitude ** 2) ** 0.5
    edge = dm.relay_latency(edge_slant, edge_slant)
    storage = dm.storage_requirement(fleet, ingest_fraction)
    budgets = [dm.payload_totals(catalog, t) for t in dm.TIERS]
    return {
        "demand": demand,
        "feasibility": {
            "cell_capacity_bps": cell_capacity,
            "per_vehicle": per_vehicle,
            "fleet": fleet_rows,
            "fleet_vehicles": n_total,
            "fleet_demand_bps": total_bps,
            "fleet_feasible": total_bps <= cell_capacity,
        },
        "latency": {
            "band_ms": list(dm.RELAY_DELAY_BAND_MS),
            "response_bound_ms": dm.RESPONSE_TIME_BOUND_MS,
            "nadir": {"slant_km": [altitude, altitude], "delay_ms": nadir.delay_ms,
                      "margin_ratio": nadir.margin_ratio, "in_band": nadir.in_band},
            "footprint_edge": {"slant_km": [edge_slant, edge_slant], "delay_ms": edge.delay_ms,
                               "margin_ratio": edge.margin_ratio, "in_band": edge.in_band},
        },
        "contact_window": {"range_m": sensor_range_m, "speed_kmh": speed_kmh,
                           "window_s": dm.sensor_contact_window(sensor_range_m, speed_kmh)},
        "storage": {"ingest_fraction": ingest_fraction, "required_bytes": storage.required_bytes,
                    "band_bytes": list(dm.STORAGE_BAND_BYTES), "within_band": storage.within_band},
        "payload": {b.tier: {"total_power_w": b.total_power_w, "total_mass_kg": b.total_mass_kg,
                             "total_tops": b.total_tops, "components": [c.name for c in b.components]}
                    for b in budgets},
        "discrepancies": dm.discrepancies(budgets) if default_catalog else [],
    }


def cmd_dimension(cfg: StudyConfig, args) -> int:
    fleet = _load_fleet(args.fleet)
    try:
        catalog = dimensioning.load_catalog(cfg.payload_catalog)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, ArithmeticError) as exc:
        raise UsageError(f"payload catalog: {exc}") from exc
    doc = dimension_report(fleet, catalog, ingest_fraction=args.ingest_fraction,
                           cell_capacity=args.cell_capacity, altitude=cfg.altitude_km,
                           radius=cfg.radius_km, sensor_range_m=args.sensor_range,
                           speed_kmh=args.speed, default_catalog=cfg.payload_catalog is None)
    _write_all(cfg.out, {"dimension_report.json": _dump(_finish(doc, args))})
    for tier, b in doc["payload"].items():
        print(f"payload tier {tier}: {float(b['total_power_w']):.1f} W, {float(b['total_mass_kg']):.1f} kg")
    for d in doc["discrepancies"]:
        print(f"note: tier {d['tier']} {d['quantity']} recomputes to {d['recomputed']:g}, "
              f"table states {d['stated']:g}")
    f = doc["feasibility"]
    print(f"fleet: {f['fleet_vehicles']} vehicles, {_fmt_rate(f['fleet_demand_bps'])}, "
          f"{'fits' if f['fleet_feasible'] else 'exceeds'} a {_fmt_rate(f['cell_capacity_bps'])} cell")
    return 0


def cmd_calibrate(cfg: StudyConfig, args) -> int:
    fc = _load_fso(cfg)
    fitted = fso.calibrate(fc)
    text = json.dumps(fso.config_to_dict(fitted), indent=2) + "\n"
    if args.in_place:
        if cfg.fso_config is None:
            raise UsageError("--in-place needs an FSO config path")
        Path(cfg.fso_config).write_text(text)
    else:
        _write_all(cfg.out, {"fso_calibrated.json": text})
    for name, p in fitted.profiles.items():
        print(f"{name}: sensitivity_photons_per_bit = {p.sensitivity_photons_per_bit!r}")
    return 0


# ------------------------------------------------------------------ parser

UNITS = ("units: distances and ranges in km, transmit power in dBm, link and "
         "cell rates in bits/s, storage in bytes, payload power in W and mass in kg")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="study config JSON")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--stamp", action="store_true", default=argparse.SUPPRESS,
                        help="add a UTC timestamp to JSON reports (breaks byte reproducibility)")

    parser = argparse.ArgumentParser(
        prog="hapsits", parents=[common],
        description="HAPS-ITS planning along a highway.", epilog=UNITS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], epilog=UNITS, help="place footprints along a route",
                       description="Place HAPS footprints (radius in km) so the route, or the "
                                   "stretches outside a cellular mask, is covered. Writes plan.json.")
    p.add_argument("--route", help="route file: .geojson LineString or lat,lon .csv")
    p.add_argument("--mask", help="cellular coverage mask JSON [{start_km, end_km}]")
    p.add_argument("--radius", type=float, help="footprint radius, km (default 40)")
    p.add_argument("--altitude", type=float, help="platform altitude, km (default 20)")
    p.add_argument("--verify-step", type=float, default=0.1, help="coverage check spacing, km")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("linkbudget", parents=[common], epilog=UNITS, help="FSO rate versus distance",
                       description="Sweep the achievable FSO rate (bits/s) over link distance (km) "
                                   "for one or more transmit powers (dBm). One CSV per power.")
    p.add_argument("--kind", choices=("h2g", "h2h"), default="h2g", help="link type")
    p.add_argument("--profile", help="terminal profile name (default: same as --kind)")
    p.add_argument("--power", type=float, action="append", help="transmit power, dBm (repeatable; default 20)")
    p.add_argument("--d-min", type=float, required=True, help="first distance, km (slant for h2g)")
    p.add_argument("--d-max", type=float, help="last distance, km (default: d-min, a single point)")
    p.add_argument("--step", type=float, default=1.0, help="distance step, km")
    p.add_argument("--fso-config", help="FSO parameter JSON (default: shipped calibrated config)")
    p.set_defaults(func=cmd_linkbudget)

    p = sub.add_parser("backhaul", parents=[common], epilog=UNITS, help="bottleneck rates of the backhaul forest",
                       description="Route each planned node to a gateway over H2G/H2H FSO links and "
                                   "report per-cell bottleneck rates (bits/s); also a hop-count sweep.")
    p.add_argument("--plan", help="plan JSON written by 'plan'")
    p.add_argument("--gateways", help="gateway JSON [{id, lat, lon, terminal}]")
    p.add_argument("--fso-config", help="FSO parameter JSON")
    p.add_argument("--h2g-max-slant", type=float, help="longest usable H2G slant range, km")
    p.add_argument("--h2h-max-range", type=float, help="longest usable H2H range, km")
    p.add_argument("--power", type=float, help="override every terminal's transmit power, dBm")
    p.add_argument("--mesh", action="store_true", help="allow H2H links between any nodes in range")
    p.add_argument("--hops", type=int, default=10, help="chain sweep: hop counts 1..HOPS")
    p.add_argument("--spacing", type=float, default=80.0, help="chain sweep: H2H spacing, km")
    p.add_argument("--h2g-slant", type=float, default=44.0, help="chain sweep: H2G slant range, km")
    p.set_defaults(func=cmd_backhaul)

    p = sub.add_parser("dimension", parents=[common], epilog=UNITS, help="traffic, latency, storage, payload",
                       description="Dimension demand (bits/s), relay latency (ms), storage (bytes) "
                                   "and payload power (W) / mass (kg).")
    p.add_argument("--fleet", help="fleet JSON [{level, count, dwell_h}] (dwell in hours)")
    p.add_argument("--catalog", help="payload catalog JSON (default: shipped table)")
    p.add_argument("--ingest-fraction", type=float, default=1.0, help="share of generated data stored")
    p.add_argument("--cell-capacity", type=float, default=dimensioning.CELL_CAPACITY_BPS,
                   help="access cell capacity, bits/s")
    p.add_argument("--sensor-range", type=float, default=100.0, help="sensor radio range, m")
    p.add_argument("--speed", type=float, default=100.0, help="vehicle speed, km/h")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("calibrate", parents=[common], epilog=UNITS, help="fit receiver sensitivities to the rate anchors",
                       description="Fit photons-per-bit of the h2g and h2h profiles so the 121 km H2G "
                                   "link gives 3.5e9 bits/s and the 80 km H2H link 7.44e9 bits/s at 20 dBm.")
    p.add_argument("--fso-config", help="FSO parameter JSON to calibrate")
    p.add_argument("--in-place", action="store_true", help="write back into --fso-config")
    p.set_defaults(func=cmd_calibrate)
    return parser


def _study_config(args) -> StudyConfig:
    cfg = StudyConfig.load(args.config) if getattr(args, "config", None) else StudyConfig()
    overrides = {
        "route": "route", "mask": "mask", "gateways": "gateways", "fso_config": "fso_config",
        "catalog": "payload_catalog", "out": "out",
    }
    for arg, key in overrides.items():
        v = getattr(args, arg, None)
        if v is not None:
            setattr(cfg, key, Path(v))
    for arg, key in (("radius", "radius_km"), ("altitude", "altitude_km"),
                     ("h2g_max_slant", "h2g_max_slant_km"), ("h2h_max_range", "h2h_max_range_km")):
        v = getattr(args, arg, None)
        if v is not None:
            setattr(cfg, key, float(v))
    cfg.check()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.stamp = getattr(args, "stamp", False)
    if args.command == "linkbudget" and not args.power:
        args.power = [20.0]
    try:
        cfg = _study_config(args)
        return args.func(cfg, args)
    except (UsageError, route.RouteError, dimensioning.UnknownLevelError, KeyError) as exc:
        print(f"hapsits {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, backhaul.ConnectivityError, fso.CalibrationError) as exc:
        print(f"hapsits {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
