"""Traffic, latency, storage and payload sizing for a HAPS-ITS node.

Byte quantities use binary prefixes (1 MiB = 2**20 B, 1 GiB = 2**30 B,
1 TiB = 2**40 B).  Only binary units turn 100 MB/h and 500 GB/h at a 10 %
upload share into the 24 kbps and 120 Mbps endpoints; decimal units would
give 22.2 kbps and 111 Mbps.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

MIB = 2 ** 20
GIB = 2 ** 30
TIB = 2 ** 40

SPEED_OF_LIGHT_KM_S = 299_792.458
RESPONSE_TIME_BOUND_MS = 200.0
RELAY_DELAY_BAND_MS = (0.13, 0.33)
STORAGE_BAND_BYTES = (10 * TIB, 100 * TIB)
CELL_CAPACITY_BPS = 500e6
DOWNLINK_RANGE_BPS = (5e6, 50e6)

TIERS = ("1-2", "3-5")


class UnknownLevelError(ValueError):
    pass


@dataclass(frozen=True)
class CavLevelProfile:
    level: int
    hourly_volume_bytes: float
    uplink_fraction: float = 0.10
    downlink_demand_bps: float = DOWNLINK_RANGE_BPS[1]
    storage_generation_bytes_per_h: float = 0.0

    def __post_init__(self):
        if self.level not in range(1, 6):
            raise UnknownLevelError(f"CAV level must be 1..5, got {self.level}")
        if not 0.0 <= self.uplink_fraction <= 1.0:
            raise ValueError("uplink_fraction must lie in [0, 1]")
        if self.hourly_volume_bytes < 0 or self.downlink_demand_bps < 0 \
                or self.storage_generation_bytes_per_h < 0:
            raise ValueError("volumes and demands must be >= 0")

    @property
    def tier(self) -> str:
        return "1-2" if self.level <= 2 else "3-5"


# Level 1-2 generate under 100 MiB/h; level 3-5 between 100 and 500 GiB/h
# (3 and 5 take the ends, 4 the middle).  Storage: radar-only 400 MiB/h is
# known for level 1 and 300 GiB/h for level 5; level 2 takes the level-1
# figure and levels 3-4 the level-5 ceiling.
DEFAULT_PROFILES = {
    1: CavLevelProfile(1, 100 * MIB, storage_generation_bytes_per_h=400 * MIB),
    2: CavLevelProfile(2, 100 * MIB, storage_generation_bytes_per_h=400 * MIB),
    3: CavLevelProfile(3, 100 * GIB, storage_generation_bytes_per_h=300 * GIB),
    4: CavLevelProfile(4, 300 * GIB, storage_generation_bytes_per_h=300 * GIB),
    5: CavLevelProfile(5, 500 * GIB, storage_generation_bytes_per_h=300 * GIB),
}


def profile_for(level: int) -> CavLevelProfile:
    try:
        return DEFAULT_PROFILES[int(level)]
    except (KeyError, ValueError, TypeError):
        raise UnknownLevelError(f"unknown CAV level {level!r}; expected 1..5") from None


def uplink_demand(profile: CavLevelProfile) -> float:
    """Sustained uplink (bit/s) to ship the relevant share of an hour's data."""
    return profile.uplink_fraction * profile.hourly_volume_bytes * 8.0 / 3600.0


@dataclass(frozen=True)
class CellFeasibility:
    feasible: bool
    max_vehicles: int | None  # None when per-vehicle demand is zero
    unbounded: bool


def cell_feasibility(n_vehicles: int, per_vehicle_dl: float, per_vehicle_ul: float,
                     cell_capacity: float = CELL_CAPACITY_BPS) -> CellFeasibility:
    if per_vehicle_dl < 0 or per_vehicle_ul < 0:
        raise ValueError("demands must be >= 0")
    if not cell_capacity > 0:
        raise ValueError("cell capacity must be positive")
    demand = per_vehicle_dl + per_vehicle_ul
    if demand == 0:
        return CellFeasibility(True, None, True)
    cap = math.floor(cell_capacity / demand)
    return CellFeasibility(n_vehicles <= cap, cap, False)


@dataclass(frozen=True)
class RelayLatency:
    delay_ms: float
    margin_ratio: float  # response-time bound over the delay
    in_band: bool


def relay_latency(slant_km_a: float, slant_km_b: float) -> RelayLatency:
    """One-way vehicle-HAPS-vehicle propagation delay."""
    if not (slant_km_a > 0 and slant_km_b > 0):
        raise ValueError("slant ranges must be positive")
    delay = (slant_km_a + slant_km_b) / SPEED_OF_LIGHT_KM_S * 1e3
    lo, hi = RELAY_DELAY_BAND_MS
    return RelayLatency(delay, RESPONSE_TIME_BOUND_MS / delay, lo <= delay <= hi)


def sensor_contact_window(comm_range_m: float, vehicle_speed_kmh: float) -> float:
    """Seconds a vehicle passing straight through a sensor's range stays in it."""
    if not vehicle_speed_kmh > 0:
        raise ValueError(f"vehicle speed must be positive, got {vehicle_speed_kmh}")
    if not comm_range_m > 0:
        raise ValueError("communication range must be positive")
    return 2.0 * comm_range_m / (vehicle_speed_kmh / 3.6)


@dataclass(frozen=True)
class FleetEntry:
    level: int
    count: int
    dwell_h: float


@dataclass(frozen=True)
class StorageVerdict:
    required_bytes: float
    within_band: bool
    below_band: bool
    above_band: bool


def storage_requirement(fleet: Iterable[FleetEntry], ingest_fraction: float = 1.0,
                        profiles=None) -> StorageVerdict:
    profiles = DEFAULT_PROFILES if profiles is None else profiles
    total = 0.0
    for e in fleet:
        if e.count < 0 or not e.dwell_h > 0:
            raise ValueError(f"bad fleet entry {e}")
        if e.level not in profiles:
            raise UnknownLevelError(f"unknown CAV level {e.level!r}")
        total += e.count * profiles[e.level].storage_generation_bytes_per_h * e.dwell_h * ingest_fraction
    lo, hi = STORAGE_BAND_BYTES
    return StorageVerdict(total, lo <= total <= hi, total < lo, total > hi)


# ------------------------------------------------------------------ payload

@dataclass(frozen=True)
class PayloadComponent:
    name: str
    category: str
    tier: str
    power_w: Decimal
    mass_kg: Decimal
    tops: Decimal | None = None
    storage_tb: Decimal | None = None

    def __post_init__(self):
        if self.tier not in (*TIERS, "both"):
            raise ValueError(f"tier must be 1-2, 3-5 or both, got {self.tier!r}")
        if self.category not in ("communication", "storage", "computing", "imaging"):
            raise ValueError(f"unknown category {self.category!r}")
        if self.power_w < 0 or self.mass_kg < 0:
            raise ValueError("power and mass must be >= 0")


@dataclass(frozen=True)
class PayloadBudget:
    tier: str
    components: tuple[PayloadComponent, ...]
    total_power_w: Decimal
    total_mass_kg: Decimal
    total_tops: Decimal
    power_limit_w: Decimal | None = None
    mass_limit_kg: Decimal | None = None

    @property
    def within_limits(self) -> bool:
        ok = True
        if self.power_limit_w is not None:
            ok &= self.total_power_w <= self.power_limit_w
        if self.mass_limit_kg is not None:
            ok &= self.total_mass_kg <= self.mass_limit_kg
        return ok


def payload_totals(catalog: Sequence[PayloadComponent], tier: str,
                   power_limit_w=None, mass_limit_kg=None) -> PayloadBudget:
    """Exact (decimal) sums over components of ``tier`` plus shared ones."""
    if tier not in TIERS:
        raise ValueError(f"tier must be one of {TIERS}, got {tier!r}")
    chosen = tuple(c for c in catalog if c.tier in (tier, "both"))
    power = sum((c.power_w for c in chosen), Decimal(0))
    mass = sum((c.mass_kg for c in chosen), Decimal(0))
    tops = sum((c.tops for c in chosen if c.tops is not None), Decimal(0))
    return PayloadBudget(tier, chosen, power, mass, tops,
                         None if power_limit_w is None else Decimal(str(power_limit_w)),
                         None if mass_limit_kg is None else Decimal(str(mass_limit_kg)))


def _dec(v) -> Decimal | None:
    return None if v is None else Decimal(str(v))


def load_catalog(path: str | Path | None = None) -> list[PayloadComponent]:
    """Payload catalog file; ``None`` loads the shipped reference payload catalog.

    Numbers are parsed straight to Decimal so sums match the table digits.
    """
    if path is None:
        text = resources.files("hapsits").joinpath("data/payload_reference.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text, parse_float=Decimal, parse_int=Decimal)
    return [PayloadComponent(str(d["name"]), str(d["category"]), str(d["tier"]),
                             _dec(d["power_w"]), _dec(d["mass_kg"]),
                             _dec(d.get("tops")), _dec(d.get("storage_tb")))
            for d in doc]


# Totals printed under the published payload table.  Used only to flag
# disagreement with the recomputed sums.
REFERENCE_STATED_TOTALS = {
    "1-2": {"power_w": Decimal("2594.4"), "mass_kg": Decimal("87.2")},
    "3-5": {"power_w": Decimal("3491.4"), "mass_kg": Decimal("89.7")},
}


def discrepancies(budgets: Iterable[PayloadBudget], stated=REFERENCE_STATED_TOTALS) -> list[dict]:
    out = []
    for b in budgets:
        ref = stated.get(b.tier)
        if not ref:
            continue
        for key, unit, got in (("power_w", "W", b.total_power_w), ("mass_kg", "kg", b.total_mass_kg)):
            want = ref.get(key)
            if want is not None and got != want:
                out.append({"tier": b.tier, "quantity": key, "unit": unit, "stated": float(want),
                            "recomputed": float(got), "difference": float(got - want)})
    return out
