"""Planning and capacity analysis for HAPS-based ITS along long highways."""

from .geo import (EARTH_RADIUS_KM, DomainError, GeoPoint, SlantGeometry,
                  great_circle_distance, interpolate_along, slant_range)
from .route import (ArcInterval, CoverageMask, GatewaySite, RoutePolyline, complement,
                    load_route, straight_route)
from .coverage import DeploymentPlan, HapsNode, footprint_interval, plan_cover, verify_cover
from .fso import (AtmosphereModel, FsoConfig, FsoTerminalParams, LinkFamily, achievable_rate,
                  atmospheric_loss, calibrate, geometric_loss, load_fso_config, rate_sweep,
                  received_power)
from .backhaul import BackhaulTopology, BottleneckReport, bottleneck_rate, build_topology, chain_sweep

__version__ = "0.1.0"
