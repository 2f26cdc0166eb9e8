"""Packet-level network partition simulator.

Switches are output-queued, drop-tail, store-and-forward. Hosts simulated at
the protocol level run an :class:`AppSpec` directly inside the partition
that owns their switch. Links whose far end lives elsewhere (another
partition, or a detailed host's NIC) are bound to a channel endpoint with
:meth:`NetworkSimulator.attach_remote`.

Every link arrival is keyed by ``(link direction, packet id)`` whether it was
scheduled locally or came off a channel, so simultaneous arrivals are handled
in the same order no matter how the network is partitioned.
"""

from __future__ import annotations

from ..adapters.codec import decode_eth
from ..adapters.protocols import EthAdapter, LogicalEndpoint
from ..core.eventloop import Simulator
from ..errors import ConfigError
from ..simtime import serialization_time
from .apps import AppSpec, Workload
from .packet import BULK, REQ, RESP, Packet, from_frame, make_pid, to_frame
from .stats import FlowStats
from .topology import Topology, compute_routes

DEFAULT_QUEUE_CAPACITY = 512 * 1024


class Port:
    __slots__ = ("node", "far", "link", "dir_key", "bandwidth", "latency", "capacity", "busy_until",
                 "occupancy", "drops", "local_key", "remote", "queued")

    def __init__(self, node, far, link, dir_key, bandwidth, latency, capacity, local_key):
        self.node = node
        self.far = far
        self.link = link
        self.dir_key = dir_key
        self.bandwidth = bandwidth
        self.latency = latency
        self.capacity = capacity
        self.busy_until = 0
        self.occupancy = 0
        self.drops = 0
        self.local_key = local_key
        self.remote = None
        self.queued = 0


class _App:
    __slots__ = ("host", "index", "spec", "workload", "counter", "busy_until")

    def __init__(self, host, index, spec, seed):
        self.host = host
        self.index = index
        self.spec = spec
        self.workload = Workload(spec, seed, host) if spec.role in ("client", "bulk") else None
        self.counter = 0
        self.busy_until = 0


class NetworkSimulator(Simulator):
    def __init__(self, name: str, topo: Topology, *, routes=None, partition=None, index: int = 0,
                 apps: dict | None = None, detailed=(), seed: int = 0,
                 queue_capacity: int = DEFAULT_QUEUE_CAPACITY, **kw):
        super().__init__(name, **kw)
        self.topo = topo
        self.routes = routes if routes is not None else compute_routes(topo)
        self.index = index
        self.seed = seed
        apps = dict(apps or {})
        detailed = set(detailed)
        if partition is None:
            local_sw = set(topo.switch_by_id)
        else:
            local_sw = {s for s, p in partition.assignment.items() if p == index}
        self.local_switches = local_sw
        self.local_hosts = {h.id for h in topo.hosts if h.switch in local_sw and h.id not in detailed}
        nsw = len(topo.switches)
        self._node_key = {s.id: i for i, s in enumerate(topo.switches)}
        self._node_key.update({h.id: nsw + i for i, h in enumerate(topo.hosts)})
        self.ports: dict[tuple[str, str], Port] = {}
        self._host_uplink = {}  # host -> (switch, dir key, latency)
        self._unbound = {}      # link index -> (local node, far node)
        for i, lk in enumerate(topo.links):
            for d, (u, v) in enumerate(((lk.a, lk.b), (lk.b, lk.a))):
                if u in local_sw:
                    self.ports[(u, v)] = Port(u, v, i, 2 * i + d, lk.bandwidth, lk.latency, queue_capacity,
                                              self._node_key[u])
                    if v not in local_sw and v not in self.local_hosts:
                        self._unbound[i] = (u, v)
                elif u in self.local_hosts:
                    self._host_uplink[u] = (v, 2 * i + d, lk.latency)
        self.apps = {}
        for h in sorted(self.local_hosts, key=topo.host_index.__getitem__):
            spec = apps.get(h)
            if spec is None:
                raise ConfigError(f"{name}: protocol-level host {h} has no app")
            if not isinstance(spec, AppSpec):
                spec = AppSpec.from_dict(spec)
            if spec.target is not None and spec.target not in topo.host_by_id:
                raise ConfigError(f"{name}: app on {h} targets unknown host {spec.target}")
            self.apps[h] = _App(h, topo.host_index[h], spec, seed)
        self.flows: dict[str, FlowStats] = {}
        self.drops = 0
        self.unroutable = 0

    # -- wiring -----------------------------------------------------------
    def attach_remote(self, link_index: int, endpoint) -> None:
        """Bind the far side of cut link ``link_index`` to a trunk sub-channel or Ethernet adapter."""
        if link_index not in self._unbound:
            raise ConfigError(f"{self.name}: link {link_index} is not a cut link of this partition")
        u, v = self._unbound.pop(link_index)
        port = self.ports[(u, v)]
        lk = self.topo.links[link_index]
        in_key = port.dir_key ^ 1
        if isinstance(endpoint, LogicalEndpoint):
            chan_lat = endpoint.trunk.config.latency
            port.remote = lambda now, frame, ep=endpoint: ep.send(now, _eth_bytes(frame))
            decode = decode_eth
        elif isinstance(endpoint, EthAdapter):
            chan_lat = endpoint.config.latency
            port.remote = endpoint.eth_send
            decode = None
        else:
            raise TypeError(f"cannot bind link to {type(endpoint).__name__}")
        if chan_lat > lk.latency:
            raise ConfigError(f"{self.name}: channel latency {chan_lat} exceeds link {lk.id} latency {lk.latency}")
        extra = lk.latency - chan_lat

        def hook(deliver_time, obj, seq, u=u, in_key=in_key, extra=extra, decode=decode):
            pkt = from_frame(decode(obj) if decode else obj)
            self.schedule_keyed(deliver_time + extra, in_key, pkt.pid, self._arrive_switch, u, pkt)

        endpoint.receive_hook = hook

    def unbound_links(self) -> dict:
        return dict(self._unbound)

    # -- run hooks --------------------------------------------------------
    def on_start(self) -> None:
        if self._unbound:
            raise ConfigError(f"{self.name}: cut links without a channel: {sorted(self._unbound)}")
        for app in self.apps.values():
            if app.workload is not None:
                t, key, w = app.workload.next_request()
                self.schedule(t, self._issue, app, key, w, key=self._node_key[app.host])

    # -- stats ------------------------------------------------------------
    def flow(self, index: int) -> FlowStats:
        host = self.topo.hosts[index].id
        fs = self.flows.get(host)
        if fs is None:
            fs = self.flows[host] = FlowStats()
        return fs

    def stats(self) -> dict:
        return {
            "sim": self.name,
            "kind": "net",
            "end_time": self.now,
            "events": self.events_processed,
            "drops": self.drops,
            "unroutable": self.unroutable,
            "flows": {h: fs.as_dict() for h, fs in sorted(self.flows.items())},
            "trace": {"records": self.trace.count, "multiset": self.trace.multiset_hex,
                      "sequence": self.trace.sequence},
        }

    def in_flight(self) -> int:
        """Packets currently held by pending events (queued, serializing, or on a local wire)."""
        fns = (self._tx_done, self._arrive_switch, self._arrive_host)
        return sum(1 for ev in self.queue._heap if ev[5] in fns)

    # -- packet path ------------------------------------------------------
    def _inject(self, app: _App, pkt: Packet) -> None:
        sw, key, lat = self._host_uplink[app.host]
        self.flow(pkt.flow).injected += 1
        self.schedule_keyed(self.now + lat, key, pkt.pid, self._arrive_switch, sw, pkt)

    def _arrive_switch(self, sw: str, pkt: Packet) -> None:
        now = self.now
        self.trace.record("a", pkt.pid, sw, now)
        dst = self.topo.hosts[pkt.dst].id
        nxt = self.routes[sw].get(dst)
        if nxt is None:
            self.unroutable += 1
            self.flow(pkt.flow).dropped += 1
            self.trace.record("u", pkt.pid, sw, now)
            return
        port = self.ports[(sw, nxt)]
        if port.occupancy + pkt.length > port.capacity:
            port.drops += 1
            self.drops += 1
            self.flow(pkt.flow).dropped += 1
            self.trace.record("d", pkt.pid, sw, now)
            return
        port.occupancy += pkt.length
        port.queued += 1
        start = port.busy_until if port.busy_until > now else now
        port.busy_until = start + serialization_time(pkt.length, port.bandwidth)
        self.schedule(port.busy_until, self._tx_done, port, pkt, key=port.local_key)

    def _tx_done(self, port: Port, pkt: Packet) -> None:
        port.occupancy -= pkt.length
        port.queued -= 1
        if port.remote is not None:
            port.remote(self.now, to_frame(pkt))
        elif port.far in self.local_hosts:
            self.schedule_keyed(self.now + port.latency, port.dir_key, pkt.pid, self._arrive_host, port.far, pkt)
        else:
            self.schedule_keyed(self.now + port.latency, port.dir_key, pkt.pid, self._arrive_switch, port.far, pkt)

    def _arrive_host(self, host: str, pkt: Packet) -> None:
        now = self.now
        self.trace.record("h", pkt.pid, host, now)
        fs = self.flow(pkt.flow)
        fs.delivered += 1
        app = self.apps[host]
        role = app.spec.role
        if pkt.kind == REQ and role == "server":
            if app.spec.service_time == 0:
                self._respond(app, pkt)
            else:
                start = app.busy_until if app.busy_until > now else now
                app.busy_until = start + app.spec.service_time
                self.schedule(app.busy_until, self._respond, app, pkt, key=self._node_key[host])
        elif pkt.kind == RESP and role == "client":
            fs.received += 1
            fs.bytes += pkt.length
            fs.samples.append((pkt.req_id, pkt.issue, now))
        elif pkt.kind == BULK:
            fs.received += 1
            fs.bytes += pkt.length

    # -- apps -------------------------------------------------------------
    def _issue(self, app: _App, key: int, is_write: bool) -> None:
        spec = app.spec
        app.counter += 1
        kind = REQ if spec.role == "client" else BULK
        pkt = Packet(make_pid(app.index, app.counter), kind, app.index, app.index,
                     self.topo.host_index[spec.target], spec.request_size, app.counter, self.now, key, is_write)
        self.flow(app.index).sent += 1
        self._inject(app, pkt)
        t, key, w = app.workload.next_request()
        self.schedule(t, self._issue, app, key, w, key=self._node_key[app.host])

    def _respond(self, app: _App, req: Packet) -> None:
        app.counter += 1
        pkt = Packet(make_pid(app.index, app.counter), RESP, req.flow, app.index, req.src,
                     app.spec.response_size, req.req_id, req.issue, req.key, req.is_write)
        self._inject(app, pkt)


def _eth_bytes(frame) -> bytes:
    from ..adapters.codec import encode_eth
    return encode_eth(frame)
