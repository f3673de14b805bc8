"""Clear-sky free-space optical link budget.

Beam-spreading capture loss, an exponential atmosphere integrated along the
straight path, and a photon-budget rate law.  The receiver sensitivity
(photons per bit) is the one scalar fitted per terminal class so the model
reproduces the published rate anchors; every other constant is a config
entry.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from .geo import DomainError, SlantGeometry, ground_distance_for_slant, slant_range

PLANCK = 6.62607015e-34  # J s
LIGHT_SPEED = 2.99792458e8  # m/s


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FsoTerminalParams:
    transmit_power_dbm: float
    divergence_half_angle_rad: float
    tx_aperture_m: float
    rx_aperture_m: float
    tx_efficiency: float
    rx_efficiency: float
    wavelength_nm: float
    sensitivity_photons_per_bit: float
    label: str = "custom"

    def __post_init__(self):
        if not math.isfinite(self.transmit_power_dbm):
            raise ValueError("transmit power must be finite")
        for name in ("divergence_half_angle_rad", "rx_aperture_m", "wavelength_nm",
                     "sensitivity_photons_per_bit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.tx_aperture_m < 0:
            raise ValueError("tx_aperture_m must be >= 0")
        for name in ("tx_efficiency", "rx_efficiency"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")

    def with_power(self, dbm: float) -> FsoTerminalParams:
        return replace(self, transmit_power_dbm=float(dbm))


@dataclass(frozen=True)
class AtmosphereModel:
    sea_level_attenuation_db_per_km: float
    scale_height_km: float
    condition: str = "clear-sky"

    def __post_init__(self):
        if self.sea_level_attenuation_db_per_km < 0:
            raise ValueError("sea-level attenuation must be >= 0")
        if not self.scale_height_km > 0:
            raise ValueError("scale height must be positive")


@dataclass(frozen=True)
class LinkBudgetResult:
    geometric_loss_db: float
    atmospheric_loss_db: float
    received_power_dbm: float
    achievable_rate_bps: float
    geometry: SlantGeometry
    params: FsoTerminalParams


# ------------------------------------------------------------------ budget

def geometric_loss(params: FsoTerminalParams, slant_range_km: float) -> float:
    """Beam-spreading loss (dB): fraction of a cone of half-angle theta,
    launched from the transmit aperture, captured by the receive aperture."""
    if not slant_range_km > 0:
        raise DomainError(f"slant range must be positive, got {slant_range_km}")
    spot = params.tx_aperture_m + 2.0 * params.divergence_half_angle_rad * slant_range_km * 1e3
    capture = min(1.0, (params.rx_aperture_m / spot) ** 2)
    return -10.0 * math.log10(capture)


def atmospheric_loss(atm: AtmosphereModel, geometry: SlantGeometry,
                     path_base_altitude: float = 0.0) -> float:
    """Attenuation (dB) of an exponential atmosphere along a straight path
    rising ``geometry.altitude_difference`` km from ``path_base_altitude``."""
    if path_base_altitude < 0:
        raise DomainError("path base altitude must be >= 0")
    a0 = atm.sea_level_attenuation_db_per_km
    if a0 == 0:
        return 0.0
    H = atm.scale_height_km
    dh = geometry.altitude_difference
    base = math.exp(-path_base_altitude / H)
    if dh == 0:
        return a0 * base * geometry.slant_range
    # exp(-h0/H) - exp(-(h0+dh)/H) without cancellation for small dh
    column = a0 * H * base * -math.expm1(-dh / H)
    return column / math.sin(geometry.elevation_angle)


def received_power(params: FsoTerminalParams, geometry: SlantGeometry,
                   atm: AtmosphereModel, path_base_altitude: float = 0.0) -> float:
    """Received power in dBm."""
    return (params.transmit_power_dbm
            + 10.0 * math.log10(params.tx_efficiency)
            + 10.0 * math.log10(params.rx_efficiency)
            - geometric_loss(params, geometry.slant_range)
            - atmospheric_loss(atm, geometry, path_base_altitude))


def achievable_rate(received_power_dbm: float, wavelength_nm: float,
                    sensitivity_photons_per_bit: float) -> float:
    """Bits per second a receiver needing ``sensitivity`` photons per bit
    sustains at the given optical power."""
    if not sensitivity_photons_per_bit > 0:
        raise DomainError("sensitivity must be positive")
    watts = 10.0 ** (received_power_dbm / 10.0) * 1e-3
    photon_energy = PLANCK * LIGHT_SPEED / (wavelength_nm * 1e-9)
    return watts / (photon_energy * sensitivity_photons_per_bit)


def link_budget(params: FsoTerminalParams, geometry: SlantGeometry, atm: AtmosphereModel,
                path_base_altitude: float = 0.0) -> LinkBudgetResult:
    geo_db = geometric_loss(params, geometry.slant_range)
    atm_db = atmospheric_loss(atm, geometry, path_base_altitude)
    prx = received_power(params, geometry, atm, path_base_altitude)
    rate = achievable_rate(prx, params.wavelength_nm, params.sensitivity_photons_per_bit)
    return LinkBudgetResult(geo_db, atm_db, prx, rate, geometry, params)


# ------------------------------------------------------------------ links

@dataclass(frozen=True)
class LinkFamily:
    """How a swept distance maps onto link geometry.

    ``h2g``: gateway on the ground, platform ``altitude_km`` up; distance is
    the slant range unless ``distance_mode == "ground"``.
    ``h2h``: both platforms at ``altitude_km``; distance is horizontal.
    """

    kind: str = "h2g"
    altitude_km: float = 20.0
    distance_mode: str = "slant"

    def __post_init__(self):
        if self.kind not in ("h2g", "h2h"):
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.distance_mode not in ("slant", "ground"):
            raise ValueError(f"unknown distance mode {self.distance_mode!r}")

    def geometry(self, distance_km: float) -> tuple[SlantGeometry, float]:
        """Geometry and path base altitude for one distance."""
        if self.kind == "h2h":
            return slant_range(distance_km, 0.0), self.altitude_km
        if self.distance_mode == "slant":
            ground = ground_distance_for_slant(distance_km, self.altitude_km)
        else:
            ground = distance_km
        return slant_range(ground, self.altitude_km), 0.0


def link_rate(params: FsoTerminalParams, atm: AtmosphereModel, family: LinkFamily,
              distance_km: float) -> float:
    geometry, base = family.geometry(distance_km)
    prx = received_power(params, geometry, atm, base)
    return achievable_rate(prx, params.wavelength_nm, params.sensitivity_photons_per_bit)


def sweep_distances(d_min: float, d_max: float, step: float) -> list[float]:
    if not (0 < d_min <= d_max):
        raise DomainError(f"need 0 < d_min <= d_max, got ({d_min}, {d_max})")
    if not step > 0:
        raise DomainError("step must be positive")
    n = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    return [d_min + i * step for i in range(n)]


def rate_sweep(params: FsoTerminalParams, atm: AtmosphereModel, family: LinkFamily,
               d_min: float, d_max: float, step: float) -> list[tuple[float, float]]:
    """(distance_km, rate_bps) rows from ``d_min`` in ``step`` increments."""
    return [(d, link_rate(params, atm, family, d)) for d in sweep_distances(d_min, d_max, step)]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distance_km", "rate_bps"])
    for d, r in rows:
        w.writerow([repr(float(d)), repr(float(r))])
    return buf.getvalue()


# ------------------------------------------------------------------ config

@dataclass(frozen=True)
class FsoConfig:
    profiles: dict[str, FsoTerminalParams]
    atmosphere: AtmosphereModel
    altitude_km: float = 20.0
    distance_mode: str = "slant"
    calibrated: bool = False
    provenance: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def profile(self, name: str) -> FsoTerminalParams:
        try:
            return self.profiles[name]
        except KeyError:
            raise KeyError(f"no FSO terminal profile named {name!r}; have {sorted(self.profiles)}") from None

    def family(self, kind: str) -> LinkFamily:
        return LinkFamily(kind, self.altitude_km, self.distance_mode)

    def rate(self, profile: str, kind: str, distance_km: float,
             power_dbm: float | None = None) -> float:
        params = self.profile(profile)
        if power_dbm is not None:
            params = params.with_power(power_dbm)
        return link_rate(params, self.atmosphere, self.family(kind), distance_km)


_PARAM_FIELDS = ("transmit_power_dbm", "divergence_half_angle_rad", "tx_aperture_m",
                 "rx_aperture_m", "tx_efficiency", "rx_efficiency", "wavelength_nm",
                 "sensitivity_photons_per_bit")


def config_from_dict(doc: dict) -> FsoConfig:
    profiles = {}
    provenance = {}
    for name, p in doc["profiles"].items():
        profiles[name] = FsoTerminalParams(**{k: float(p[k]) for k in _PARAM_FIELDS},
                                           label=str(p.get("label", name)))
        if "provenance" in p:
            provenance[name] = str(p["provenance"])
    a = doc["atmosphere"]
    atm = AtmosphereModel(float(a["sea_level_attenuation_db_per_km"]), float(a["scale_height_km"]),
                          str(a.get("condition", "clear-sky")))
    known = {"profiles", "atmosphere", "altitude_km", "distance_mode", "calibrated"}
    extra = {k: v for k, v in doc.items() if k not in known}
    return FsoConfig(profiles, atm, float(doc.get("altitude_km", 20.0)),
                     str(doc.get("distance_mode", "slant")), bool(doc.get("calibrated", False)),
                     provenance, extra)


def config_to_dict(cfg: FsoConfig) -> dict:
    profiles = {}
    for name, p in cfg.profiles.items():
        d = asdict(p)
        if name in cfg.provenance:
            d["provenance"] = cfg.provenance[name]
        profiles[name] = d
    doc = dict(cfg.extra)
    doc.update({
        "calibrated": cfg.calibrated,
        "altitude_km": cfg.altitude_km,
        "distance_mode": cfg.distance_mode,
        "atmosphere": asdict(cfg.atmosphere),
        "profiles": profiles,
    })
    return doc


def load_fso_config(path: str | Path | None = None) -> FsoConfig:
    """Load a config file; ``None`` loads the shipped calibrated defaults."""
    if path is None:
        text = resources.files("hapsits").joinpath("data/fso_default.json").read_text()
    else:
        text = Path(path).read_text()
    return config_from_dict(json.loads(text))


def save_fso_config(cfg: FsoConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


# ------------------------------------------------------------- calibration

@dataclass(frozen=True)
class RateAnchor:
    profile: str
    kind: str
    distance_km: float
    power_dbm: float
    rate_bps: float


# H2G: 121 km link at 3.5 Gbps; H2H: the 80 km hop that bottlenecks the
# 7.44 Gbps two-hop chain.  Both at 20 dBm.
DEFAULT_ANCHORS = (
    RateAnchor("h2g", "h2g", 121.0, 20.0, 3.5e9),
    RateAnchor("h2h", "h2h", 80.0, 20.0, 7.44e9),
)


def calibrate(cfg: FsoConfig, anchors=DEFAULT_ANCHORS, bracket=(1e-6, 1e12),
              rtol: float = 1e-6) -> FsoConfig:
    """Fit each anchored profile's photons-per-bit so its modeled rate hits
    the anchor, by bisection on log(N_b).

    A profile already within ``rtol`` of its anchor is left untouched, so
    calibrating a calibrated config is a no-op.
    """
    profiles = dict(cfg.profiles)
    provenance = dict(cfg.provenance)
    for anchor in anchors:
        params = profiles[anchor.profile] if anchor.profile in profiles else cfg.profile(anchor.profile)
        family = cfg.family(anchor.kind)

        def rate_at(nb: float) -> float:
            p = replace(params, sensitivity_photons_per_bit=nb, transmit_power_dbm=anchor.power_dbm)
            return link_rate(p, cfg.atmosphere, family, anchor.distance_km)

        current = params.sensitivity_photons_per_bit
        if abs(rate_at(current) / anchor.rate_bps - 1.0) <= rtol:
            fitted = current
        else:
            fitted = _bisect_sensitivity(rate_at, anchor, bracket, rtol)
        profiles[anchor.profile] = replace(params, sensitivity_photons_per_bit=fitted)
        provenance[anchor.profile] = (
            f"sensitivity_photons_per_bit fitted so the {anchor.kind} link at "
            f"{anchor.distance_km:g} km and {anchor.power_dbm:g} dBm carries "
            f"{anchor.rate_bps:g} bit/s")
    return FsoConfig(profiles, cfg.atmosphere, cfg.altitude_km, cfg.distance_mode, True,
                     provenance, copy.deepcopy(cfg.extra))


def _bisect_sensitivity(rate_at, anchor: RateAnchor, bracket, rtol: float) -> float:
    lo, hi = bracket
    r_lo, r_hi = rate_at(lo), rate_at(hi)
    # rate falls as sensitivity (photons per bit) grows
    if not (r_lo >= anchor.rate_bps >= r_hi) or not r_lo > r_hi:
        raise CalibrationError(
            f"{anchor.profile}.sensitivity_photons_per_bit: anchor {anchor.rate_bps:g} bit/s "
            f"not bracketed by [{lo:g}, {hi:g}] (rates {r_lo:g} .. {r_hi:g})")
    log_lo, log_hi = math.log(lo), math.log(hi)
    while log_hi - log_lo > rtol * 0.5:
        mid = 0.5 * (log_lo + log_hi)
        if rate_at(math.exp(mid)) > anchor.rate_bps:
            log_lo = mid
        else:
            log_hi = mid
    return math.exp(0.5 * (log_lo + log_hi))
