"""Network topologies, generators, and static shortest-path routing."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..simtime import US, parse_bandwidth

DEFAULT_BANDWIDTH = 10 * 10**9
DEFAULT_LATENCY = 1 * US


class RoutingError(ConfigError):
    pass


@dataclass(frozen=True)
class SwitchSpec:
    id: str
    ports: int
    role: str = ""      # core | agg | tor, used by partition strategies
    group: int = -1     # aggregation block / pod index; -1 for core switches


@dataclass(frozen=True)
class HostSpec:
    id: str
    switch: str
    port: int


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    bandwidth: int = DEFAULT_BANDWIDTH
    latency: int = DEFAULT_LATENCY
    id: str = ""


@dataclass
class Topology:
    switches: list = field(default_factory=list)
    hosts: list = field(default_factory=list)
    links: list = field(default_factory=list)

    def __post_init__(self):
        self._index()

    def _index(self):
        self.switch_by_id = {s.id: s for s in self.switches}
        self.host_by_id = {h.id: h for h in self.hosts}
        self.switch_index = {s.id: i for i, s in enumerate(self.switches)}
        self.host_index = {h.id: i for i, h in enumerate(self.hosts)}

    def is_switch(self, node: str) -> bool:
        return node in self.switch_by_id

    def is_host(self, node: str) -> bool:
        return node in self.host_by_id

    def host_link(self, host: str) -> tuple[int, LinkSpec]:
        for i, lk in enumerate(self.links):
            if host in (lk.a, lk.b):
                return i, lk
        raise ConfigError(f"host {host} has no link")

    def validate(self) -> "Topology":
        problems = []
        ids = [s.id for s in self.switches] + [h.id for h in self.hosts]
        seen = set()
        for i in ids:
            if i in seen:
                problems.append(f"duplicate node id {i!r}")
            seen.add(i)
        degree = {i: 0 for i in ids}
        host_links = {h.id: [] for h in self.hosts}
        for lk in self.links:
            for end in (lk.a, lk.b):
                if end not in degree:
                    problems.append(f"link {lk.id or (lk.a, lk.b)} references unknown node {end!r}")
            if lk.a in host_links and lk.b in host_links:
                problems.append(f"link {lk.id} joins two hosts")
            if lk.latency <= 0 or lk.bandwidth <= 0:
                problems.append(f"link {lk.id} needs positive latency and bandwidth")
            for end in (lk.a, lk.b):
                if end in degree:
                    degree[end] += 1
                if end in host_links:
                    host_links[end].append(lk)
        for h in self.hosts:
            lks = host_links[h.id]
            if len(lks) != 1:
                problems.append(f"host {h.id} must attach to exactly one switch port, has {len(lks)} links")
            elif h.switch not in (lks[0].a, lks[0].b):
                problems.append(f"host {h.id} attaches to {h.switch} but its link goes elsewhere")
        for s in self.switches:
            if degree.get(s.id, 0) > s.ports:
                problems.append(f"switch {s.id} uses {degree[s.id]} ports but has {s.ports}")
        if not problems and ids:
            adj = adjacency(self)
            reached = {ids[0]}
            todo = deque([ids[0]])
            while todo:
                for nb in adj[todo.popleft()]:
                    if nb not in reached:
                        reached.add(nb)
                        todo.append(nb)
            missing = sorted(set(ids) - reached)
            if missing:
                problems.append(f"topology is not connected; unreachable: {', '.join(missing[:10])}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


def adjacency(topo: Topology) -> dict[str, list[str]]:
    adj = {s.id: [] for s in topo.switches}
    adj.update({h.id: [] for h in topo.hosts})
    for lk in topo.links:
        adj[lk.a].append(lk.b)
        adj[lk.b].append(lk.a)
    return adj


def _attach(hosts, links, port_use, host_id, switch_id, bw, lat):
    hosts.append(HostSpec(host_id, switch_id, port_use[switch_id]))
    port_use[switch_id] += 1
    links.append(LinkSpec(host_id, switch_id, bw, lat, f"l.{host_id}"))


def gen_fat_tree(k: int, hosts_per_edge: int, *, bandwidth=DEFAULT_BANDWIDTH,
                 latency: int = DEFAULT_LATENCY) -> Topology:
    """Three-level k-ary fat-tree: (k/2)^2 cores, k pods of k/2 aggregation and k/2 edge switches."""
    if not isinstance(k, int) or k < 2 or k % 2:
        raise ConfigError(f"fat-tree k must be an even integer >= 2, got {k!r}")
    if hosts_per_edge < 1:
        raise ConfigError("hosts_per_edge must be >= 1")
    bw = parse_bandwidth(bandwidth)
    half = k // 2
    switches, hosts, links = [], [], []
    port_use = {}
    for c in range(half * half):
        switches.append(SwitchSpec(f"core{c}", k, "core", -1))
    for p in range(k):
        for j in range(half):
            switches.append(SwitchSpec(f"agg{p}_{j}", k, "agg", p))
        for j in range(half):
            switches.append(SwitchSpec(f"edge{p}_{j}", half + max(half, hosts_per_edge), "tor", p))
    port_use = {s.id: 0 for s in switches}

    def wire(a, b):
        links.append(LinkSpec(a, b, bw, latency, f"l.{a}.{b}"))
        port_use[a] += 1
        port_use[b] += 1

    for p in range(k):
        for j in range(half):
            for m in range(half):
                wire(f"edge{p}_{j}", f"agg{p}_{m}")
        for j in range(half):
            for m in range(half):
                wire(f"agg{p}_{j}", f"core{j * half + m}")
    for p in range(k):
        for j in range(half):
            for x in range(hosts_per_edge):
                _attach(hosts, links, port_use, f"h{p}_{j}_{x}", f"edge{p}_{j}", bw, latency)
    return Topology(switches, hosts, links).validate()


def gen_car_topology(aggs: int, racks_per_agg: int, hosts_per_rack: int, core_bw=100 * 10**9, *,
                     bandwidth=DEFAULT_BANDWIDTH, latency: int = DEFAULT_LATENCY) -> Topology:
    """One core switch, ``aggs`` aggregation switches, ``racks_per_agg`` ToRs each, hosts under each ToR."""
    for name, v in (("aggs", aggs), ("racks_per_agg", racks_per_agg), ("hosts_per_rack", hosts_per_rack)):
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"{name} must be >= 1, got {v!r}")
    cbw = parse_bandwidth(core_bw)
    bw = parse_bandwidth(bandwidth)
    switches = [SwitchSpec("core", aggs, "core", -1)]
    for a in range(aggs):
        switches.append(SwitchSpec(f"agg{a}", racks_per_agg + 1, "agg", a))
    for a in range(aggs):
        for r in range(racks_per_agg):
            switches.append(SwitchSpec(f"tor{a}_{r}", hosts_per_rack + 1, "tor", a))
    port_use = {s.id: 0 for s in switches}
    hosts, links = [], []
    for a in range(aggs):
        links.append(LinkSpec(f"agg{a}", "core", cbw, latency, f"l.agg{a}.core"))
        port_use["core"] += 1
        port_use[f"agg{a}"] += 1
    for a in range(aggs):
        for r in range(racks_per_agg):
            links.append(LinkSpec(f"tor{a}_{r}", f"agg{a}", bw, latency, f"l.tor{a}_{r}.agg{a}"))
            port_use[f"tor{a}_{r}"] += 1
            port_use[f"agg{a}"] += 1
    for a in range(aggs):
        for r in range(racks_per_agg):
            for x in range(hosts_per_rack):
                _attach(hosts, links, port_use, f"h{a}_{r}_{x}", f"tor{a}_{r}", bw, latency)
    return Topology(switches, hosts, links).validate()


def compute_routes(topo: Topology) -> dict[str, dict[str, str]]:
    """Shortest-path forwarding tables: ``routes[switch][dst host] -> next node``.

    Among equal-cost next hops the switch listed first in the topology wins,
    so tables do not depend on how the network is partitioned.
    """
    adj = adjacency(topo)
    sw_adj = {s: sorted({n for n in adj[s] if topo.is_switch(n)}, key=topo.switch_index.__getitem__)
              for s in topo.switch_by_id}
    hosts_on = {}
    for h in topo.hosts:
        hosts_on.setdefault(h.switch, []).append(h.id)
    routes = {s: {} for s in topo.switch_by_id}
    unreachable = []
    for dst_sw, dst_hosts in hosts_on.items():
        dist = {dst_sw: 0}
        todo = deque([dst_sw])
        while todo:
            u = todo.popleft()
            for v in sw_adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    todo.append(v)
        for s in topo.switch_by_id:
            if s == dst_sw:
                for h in dst_hosts:
                    routes[s][h] = h
                continue
            if s not in dist:
                unreachable.extend((s, h) for h in dst_hosts)
                continue
            nxt = next(v for v in sw_adj[s] if dist.get(v) == dist[s] - 1)
            for h in dst_hosts:
                routes[s][h] = nxt
    if unreachable:
        shown = ", ".join(f"{s}->{h}" for s, h in unreachable[:10])
        raise RoutingError(f"{len(unreachable)} unreachable (switch, host) pairs: {shown}")
    return routes
