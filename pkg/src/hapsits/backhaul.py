"""Gateway-rooted backhaul forests and their bottleneck per-cell rates."""
from __future__ import annotations

import csv
import heapq
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .coverage import DeploymentPlan, HapsNode
from .fso import FsoConfig
from .geo import GeoPoint, SlantGeometry, great_circle_distance, slant_range
from .route import GatewaySite


class ConnectivityError(RuntimeError):
    def __init__(self, stranded: Sequence[str]):
        self.stranded = list(stranded)
        super().__init__("no backhaul path for node(s): " + ", ".join(self.stranded))


@dataclass(frozen=True)
class BackhaulLink:
    id: str
    kind: str  # "H2G" or "H2H"
    upstream: str  # gateway id for H2G, parent node id for H2H
    downstream: str  # node id
    geometry: SlantGeometry
    capacity_bps: float

    @property
    def distance_km(self) -> float:
        return self.geometry.slant_range


@dataclass
class BackhaulTopology:
    nodes: list[HapsNode]
    gateways: list[GatewaySite]
    links: dict[str, BackhaulLink]
    uplink: dict[str, str]  # node id -> id of its upstream link
    load: dict[str, float]  # link id -> cells (or summed weight) carried
    root: dict[str, str] = field(default_factory=dict)  # node id -> gateway id

    def trees(self) -> dict[str, list[str]]:
        """Gateway id -> node ids it serves, in plan order."""
        out: dict[str, list[str]] = {}
        for n in self.nodes:
            out.setdefault(self.root[n.id], []).append(n.id)
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class BottleneckReport:
    gateway_id: str
    nodes: tuple[str, ...]
    ratios: dict[str, float]
    bottleneck_link: str
    per_cell_rate_bps: float
    chain: str

    def to_json(self, topo: BackhaulTopology) -> dict:
        links = []
        for lid in self.ratios:
            link = topo.links[lid]
            links.append({
                "id": lid,
                "kind": link.kind,
                "distance_km": link.distance_km,
                "capacity_bps": link.capacity_bps,
                "load": topo.load[lid],
                "ratio_bps": self.ratios[lid],
            })
        return {
            "gateway_id": self.gateway_id,
            "nodes": list(self.nodes),
            "links": links,
            "bottleneck_link": self.bottleneck_link,
            "per_cell_rate_bps": self.per_cell_rate_bps,
        }


# ------------------------------------------------------------ construction

def build_topology(plan: DeploymentPlan, gateways: Sequence[GatewaySite],
                   h2g_max_slant: float, h2h_max_range: float, fso: FsoConfig,
                   *, h2h_profile: str = "h2h", weights: Mapping[str, float] | None = None,
                   mesh: bool = False) -> BackhaulTopology:
    """Route every node to a gateway over the fewest hops, then the shortest
    total path length, then the lexicographically smallest gateway id.

    H2H edges join consecutive nodes along the route (any pair in range when
    ``mesh`` is set); H2G edges join a node to any gateway within
    ``h2g_max_slant``.
    """
    nodes = sorted(plan.nodes, key=lambda n: n.nadir_s)
    if not nodes:
        raise ValueError("plan has no nodes")
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate node ids in plan")
    altitude = plan.altitude

    h2h_adj: dict[int, list[tuple[int, SlantGeometry]]] = {i: [] for i in range(len(nodes))}
    pairs = ([(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]
             if mesh else [(i, i + 1) for i in range(len(nodes) - 1)])
    for i, j in pairs:
        d = great_circle_distance(nodes[i].nadir, nodes[j].nadir)
        if d <= h2h_max_range:
            g = slant_range(d, 0.0)
            h2h_adj[i].append((j, g))
            h2h_adj[j].append((i, g))

    # multi-source Dijkstra on (hops, length, gateway id)
    best: dict[int, tuple[int, float, str]] = {}
    via: dict[int, tuple[str, object, SlantGeometry]] = {}
    heap: list = []
    for gw in sorted(gateways, key=lambda g: g.id):
        for i, n in enumerate(nodes):
            geom = slant_range(great_circle_distance(n.nadir, gw.location), altitude)
            if geom.slant_range <= h2g_max_slant:
                cost = (1, geom.slant_range, gw.id)
                if i not in best or cost < best[i]:
                    best[i] = cost
                    via[i] = ("H2G", gw, geom)
                    heapq.heappush(heap, (cost, i))
    done = set()
    while heap:
        cost, i = heapq.heappop(heap)
        if i in done or cost != best[i]:
            continue
        done.add(i)
        hops, length, gid = cost
        for j, geom in h2h_adj[i]:
            cand = (hops + 1, length + geom.slant_range, gid)
            if j not in done and (j not in best or cand < best[j]):
                best[j] = cand
                via[j] = ("H2H", i, geom)
                heapq.heappush(heap, (cand, j))

    stranded = [nodes[i].id for i in range(len(nodes)) if i not in best]
    if stranded:
        raise ConnectivityError(stranded)

    links: dict[str, BackhaulLink] = {}
    uplink: dict[str, str] = {}
    root: dict[str, str] = {}
    parent: dict[str, str | None] = {}
    for i, n in enumerate(nodes):
        kind, up, geom = via[i]
        if kind == "H2G":
            cap = fso.rate(up.terminal, "h2g", _family_distance(fso, geom))
            lid = f"H2G:{up.id}-{n.id}"
            links[lid] = BackhaulLink(lid, "H2G", up.id, n.id, geom, cap)
            parent[n.id] = None
        else:
            pid = nodes[up].id
            cap = fso.rate(h2h_profile, "h2h", geom.slant_range)
            lid = f"H2H:{pid}-{n.id}"
            links[lid] = BackhaulLink(lid, "H2H", pid, n.id, geom, cap)
            parent[n.id] = pid
        uplink[n.id] = lid
        root[n.id] = best[i][2]

    load = subtree_loads(parent, uplink, weights)
    return BackhaulTopology(nodes, list(gateways), links, uplink, load, root)


def _family_distance(fso: FsoConfig, geom: SlantGeometry) -> float:
    # FsoConfig.rate takes the distance in the config's own convention
    return geom.slant_range if fso.distance_mode == "slant" else geom.ground_distance


# ------------------------------------------------------------- evaluation

def bottleneck_rate(topo: BackhaulTopology) -> list[BottleneckReport]:
    """Per gateway tree: the link minimizing capacity / load and that ratio,
    the fair per-cell rate every cell in the tree can get."""
    reports = []
    for gid, members in topo.trees().items():
        ratios = {}
        for nid in members:
            lid = topo.uplink[nid]
            ratios[lid] = topo.links[lid].capacity_bps / topo.load[lid]
        arg = min(ratios, key=lambda k: (ratios[k], k))
        chain = " <- ".join([gid] + members)
        reports.append(BottleneckReport(gid, tuple(members), ratios, arg, ratios[arg], chain))
    return reports


def subtree_loads(parent: Mapping[str, str | None], uplink: Mapping[str, str],
                  weights: Mapping[str, float] | None = None) -> dict[str, float]:
    """Load of each node's upstream link: the (weighted) count of nodes whose
    path to the gateway crosses it, the node itself included."""
    load = {uplink[n]: 0.0 for n in parent}
    for n in parent:
        w = 1.0 if weights is None else float(weights.get(n, 1.0))
        cur: str | None = n
        seen = 0
        while cur is not None:
            load[uplink[cur]] += w
            cur = parent[cur]
            seen += 1
            if seen > len(parent):
                raise ValueError("parent relation has a cycle")
    return load


def forest_topology(parent: Mapping[str, str], capacity: Mapping[str, float],
                    gateway_ids: Sequence[str]) -> BackhaulTopology:
    """Topology from an explicit parent map, without any geometry.

    ``parent[n]`` is a gateway id (an H2G uplink) or another node id (H2H);
    ``capacity[n]`` is the capacity of n's uplink.  Node order follows
    ``parent``'s iteration order.
    """
    gw_set = set(gateway_ids)
    nodes = [HapsNode(n, GeoPoint(0.0, 0.0), float(k)) for k, n in enumerate(parent)]
    links: dict[str, BackhaulLink] = {}
    uplink: dict[str, str] = {}
    node_parent: dict[str, str | None] = {}
    flat = slant_range(0.0, 0.0)
    for n, up in parent.items():
        kind = "H2G" if up in gw_set else "H2H"
        if kind == "H2H" and up not in parent:
            raise ValueError(f"parent {up!r} of {n!r} is neither a gateway nor a node")
        lid = f"{kind}:{up}-{n}"
        links[lid] = BackhaulLink(lid, kind, up, n, flat, float(capacity[n]))
        uplink[n] = lid
        node_parent[n] = None if kind == "H2G" else up
    load = subtree_loads(node_parent, uplink)
    root = {}
    for n in parent:
        cur = n
        while node_parent[cur] is not None:
            cur = node_parent[cur]
        root[n] = parent[cur]
    gateways = [GatewaySite(g, GeoPoint(0.0, 0.0)) for g in gateway_ids]
    return BackhaulTopology(nodes, gateways, links, uplink, load, root)


def chain_topology(n_nodes: int, h2g_capacity: float, h2h_capacity: float | Sequence[float]) -> BackhaulTopology:
    """Single-gateway chain G <- N1 <- N2 <- ... <- Nn."""
    if n_nodes < 1:
        raise ValueError("chain needs at least one node")
    if isinstance(h2h_capacity, (int, float)):
        h2h_caps = [float(h2h_capacity)] * (n_nodes - 1)
    else:
        h2h_caps = [float(c) for c in h2h_capacity]
    parent = {"N1": "G"}
    capacity = {"N1": float(h2g_capacity)}
    for k in range(2, n_nodes + 1):
        parent[f"N{k}"] = f"N{k - 1}"
        capacity[f"N{k}"] = h2h_caps[k - 2]
    return forest_topology(parent, capacity, ["G"])


def chain_sweep(max_hops: int, spacing: float, h2g_slant: float, fso: FsoConfig,
                *, power_dbm: float | None = None, h2g_profile: str = "h2g",
                h2h_profile: str = "h2h") -> list[tuple[int, float]]:
    """Per-cell rate of a chain whose n-th entry has one H2G link of
    ``h2g_slant`` and n-1 H2H links of ``spacing`` km, for n = 1..max_hops."""
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    c_g = fso.rate(h2g_profile, "h2g", h2g_slant, power_dbm)
    c_h = fso.rate(h2h_profile, "h2h", spacing, power_dbm)
    rows = []
    for n in range(1, max_hops + 1):
        rep = bottleneck_rate(chain_topology(n, c_g, c_h))[0]
        rows.append((n, rep.per_cell_rate_bps))
    return rows


def hops_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hops", "per_cell_rate_bps"])
    for n, r in rows:
        w.writerow([int(n), repr(float(r))])
    return buf.getvalue()
