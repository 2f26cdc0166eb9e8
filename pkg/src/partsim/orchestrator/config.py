"""System configuration and instantiation files.

Both are YAML documents. The system file lists components::

    seed: 1
    end_time: 100ms
    hosts:
      - {id: h0, app: {role: client, target: h1, rate: 1000}, fidelity: detailed}
      - {id: h1, app: {role: server}}
    nics:
      - {id: nic.h0, host: h0, dma_latency: 1us}
    switches:
      - {id: s0, ports: 4}
    links:
      - {id: l0, endpoints: [h0, s0], latency: 1us, bandwidth: 10Gbps}
      - {id: l1, endpoints: [h1, s0]}

The instantiation file picks fidelity, partitioning, and run options::

    partition: rs            # s | ac | crN | rs | {custom: {switch: index}}
    trunk: true
    fidelity: {h0: detailed} # overrides the per-host hint
    sync_interval: latency   # or a fraction of the latency, or a time
    profiling: {enabled: false, interval: 1.0}
    mode: processes          # processes | threads | inline
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from ..errors import ConfigError, ValidationError
from ..hostsim.host import DEFAULTS as HOST_DEFAULTS
from ..netsim.apps import AppSpec
from ..netsim.partition import parse_strategy
from ..netsim.topology import DEFAULT_BANDWIDTH, DEFAULT_LATENCY, HostSpec, LinkSpec, SwitchSpec, Topology
from ..simtime import MS, US, format_bandwidth, format_time, parse_bandwidth, parse_time

FIDELITIES = ("abstract", "detailed")
MODES = ("processes", "threads", "inline")
BUSY_MODES = ("spin", "sleep")
DEFAULT_DMA_LATENCY = 1 * US


@dataclass
class HostConfig:
    id: str
    app: AppSpec | None = None
    cores: int = 1
    memory: str = "1GiB"
    address: str | None = None
    fidelity: str = "abstract"
    model: dict = field(default_factory=dict)  # stack_delay, cost_cycles, cost_dist, freq, tx_ring, run_queue


@dataclass
class NicConfig:
    id: str
    host: str
    dma_latency: int = DEFAULT_DMA_LATENCY
    mmio_latency: int = 0


@dataclass
class SwitchConfig:
    id: str
    ports: int
    role: str = ""
    group: int = -1


@dataclass
class LinkConfig:
    id: str
    endpoints: tuple
    latency: int = DEFAULT_LATENCY
    bandwidth: int = DEFAULT_BANDWIDTH


@dataclass
class SystemConfig:
    hosts: list = field(default_factory=list)
    nics: list = field(default_factory=list)
    switches: list = field(default_factory=list)
    links: list = field(default_factory=list)
    seed: int = 0
    end_time: int = 100 * MS

    @property
    def components(self) -> list:
        return [*self.hosts, *self.nics, *self.switches, *self.links]

    def host(self, host_id: str) -> HostConfig:
        for h in self.hosts:
            if h.id == host_id:
                return h
        raise KeyError(host_id)

    def nic_for(self, host_id: str) -> NicConfig:
        for n in self.nics:
            if n.host == host_id:
                return n
        return NicConfig(f"nic.{host_id}", host_id)

    def topology(self) -> Topology:
        sw = {s.id for s in self.switches}
        port_use = {s: 0 for s in sw}
        hosts = {}
        links = []
        for lk in self.links:
            a, b = lk.endpoints
            links.append(LinkSpec(a, b, lk.bandwidth, lk.latency, lk.id))
            for end, other in ((a, b), (b, a)):
                if end not in sw and other in sw and end not in hosts:
                    hosts[end] = HostSpec(end, other, port_use[other])
            for end in (a, b):
                if end in sw:
                    port_use[end] += 1
        ordered = [hosts[h.id] for h in self.hosts if h.id in hosts]
        switches = [SwitchSpec(s.id, s.ports, s.role, s.group) for s in self.switches]
        return Topology(switches, ordered, links)

    def to_dict(self) -> dict:
        def host(h):
            d = {"id": h.id}
            if h.app is not None:
                d["app"] = _app_dict(h.app)
            if h.cores != 1:
                d["cores"] = h.cores
            if h.memory != "1GiB":
                d["memory"] = h.memory
            if h.address is not None:
                d["address"] = h.address
            if h.fidelity != "abstract":
                d["fidelity"] = h.fidelity
            if h.model:
                d["model"] = {k: (format_time(v) if k == "stack_delay" else v) for k, v in h.model.items()}
            return d

        def switch(s):
            d = {"id": s.id, "ports": s.ports}
            if s.role:
                d["role"] = s.role
            if s.group != -1:
                d["group"] = s.group
            return d

        out = {"seed": self.seed, "end_time": format_time(self.end_time), "hosts": [host(h) for h in self.hosts]}
        if self.nics:
            out["nics"] = [{"id": n.id, "host": n.host, "dma_latency": format_time(n.dma_latency),
                            "mmio_latency": format_time(n.mmio_latency)} for n in self.nics]
        out["switches"] = [switch(s) for s in self.switches]
        out["links"] = [{"id": lk.id, "endpoints": list(lk.endpoints), "latency": format_time(lk.latency),
                         "bandwidth": format_bandwidth(lk.bandwidth)} for lk in self.links]
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=120)


def _app_dict(app: AppSpec) -> dict:
    d = app.to_dict()
    for k in ("service_time", "start"):
        if k in d:
            d[k] = format_time(d[k])
    return d


@dataclass
class Instantiation:
    partition: object = "s"
    trunk: bool = True
    fidelity: dict = field(default_factory=dict)
    sync_interval: object = "latency"
    profiling: bool = False
    profile_interval: float = 1.0
    mode: str = "processes"
    queue_capacity: int = 512 * 1024
    watchdog: float = 60.0
    busy_ns: dict = field(default_factory=dict)     # simulator name -> wall ns burned per event
    busy_mode: str = "spin"                         # spin | sleep (sleep leaves the core to peers)
    crash: dict | None = None                       # {"process": name, "at": simtime} fault injection
    end_time: int | None = None
    seed: int | None = None

    def strategy(self):
        p = self.partition
        if isinstance(p, dict):
            if set(p) != {"custom"}:
                raise ConfigError(f"partition mapping must be {{custom: ...}}, got keys {sorted(p)}")
            return ("custom", p["custom"])
        return p

    def sync_interval_for(self, latency: int) -> int:
        pol = self.sync_interval
        if pol in (None, "latency"):
            return latency
        if isinstance(pol, float):
            if not 0 < pol <= 1:
                raise ConfigError(f"sync_interval fraction must be in (0, 1], got {pol}")
            return max(1, int(latency * pol))
        iv = parse_time(pol)
        if iv <= 0:
            raise ConfigError("sync_interval must be positive")
        return min(iv, latency)

    def to_dict(self) -> dict:
        d = {
            "partition": self.partition, "trunk": self.trunk, "fidelity": dict(self.fidelity),
            "sync_interval": self.sync_interval, "profiling": {"enabled": self.profiling,
                                                                "interval": self.profile_interval},
            "mode": self.mode, "queue_capacity": self.queue_capacity, "watchdog": self.watchdog,
        }
        if self.busy_ns:
            d["busy_ns"] = dict(self.busy_ns)
            d["busy_mode"] = self.busy_mode
        if self.crash:
            d["crash"] = {"process": self.crash["process"], "at": format_time(self.crash["at"])}
        if self.end_time is not None:
            d["end_time"] = format_time(self.end_time)
        if self.seed is not None:
            d["seed"] = self.seed
        return d


# -- YAML with locations ----------------------------------------------------

def _load(text: str, source: str):
    """Parse YAML into Python objects plus a map ``path tuple -> line number``."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{source}:{mark.line + 1}" if mark else source
        raise ValidationError([(loc, f"YAML syntax error: {getattr(exc, 'problem', exc)}")]) from None
    lines = {}
    constructor = yaml.SafeLoader("")

    def walk(n, path):
        lines[path] = n.start_mark.line + 1
        if isinstance(n, yaml.MappingNode):
            out = {}
            for k, v in n.value:
                key = constructor.construct_object(k, deep=True)
                out[key] = walk(v, path + (key,))
            return out
        if isinstance(n, yaml.SequenceNode):
            return [walk(v, path + (i,)) for i, v in enumerate(n.value)]
        return constructor.construct_object(n, deep=True)

    data = walk(node, ()) if node is not None else {}
    return data, lines


class _Problems:
    def __init__(self, source, lines):
        self.source = source
        self.lines = lines
        self.items = []

    def add(self, path, msg):
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        line = self.lines.get(path)
        self.items.append((f"{self.source}:{line}" if line else self.source, msg))

    def raise_if_any(self):
        if self.items:
            raise ValidationError(self.items)


def _get_time(d, key, default, probs, path):
    if key not in d:
        return default
    try:
        return parse_time(d[key])
    except ValueError as exc:
        probs.add(path + (key,), f"{key}: {exc}")
        return default


_HOST_KEYS = {"id", "app", "cores", "memory", "address", "fidelity", "model"}
_MODEL_KEYS = set(HOST_DEFAULTS)
_NIC_KEYS = {"id", "host", "dma_latency", "mmio_latency"}
_SWITCH_KEYS = {"id", "ports", "role", "group"}
_LINK_KEYS = {"id", "endpoints", "latency", "bandwidth"}


def _unknown_fields(entry, allowed, path, kind, probs):
    if isinstance(entry, dict):
        for k in sorted(set(entry) - allowed, key=str):
            probs.add(path + (k,), f"unknown {kind} field {k!r}")


def parse_system(text: str, source: str = "<system>") -> SystemConfig:
    data, lines = _load(text, source)
    probs = _Problems(source, lines)
    if not isinstance(data, dict):
        probs.add((), "system configuration must be a mapping")
        probs.raise_if_any()
    unknown = set(data) - {"seed", "end_time", "hosts", "nics", "switches", "links"}
    for k in sorted(unknown, key=str):
        probs.add((k,), f"unknown top-level key {k!r}")
    cfg = SystemConfig()
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        probs.add(("seed",), f"seed must be a non-negative integer, got {seed!r}")
    else:
        cfg.seed = seed
    cfg.end_time = _get_time(data, "end_time", cfg.end_time, probs, ())
    seen = {}

    def claim(cid, path, kind):
        if not isinstance(cid, str) or not cid:
            probs.add(path, f"{kind} needs a non-empty string id")
            return False
        if cid in seen:
            probs.add(path, f"duplicate id {cid!r} (first defined at line {lines.get(seen[cid])})")
            return False
        seen[cid] = path
        return True

    for i, h in enumerate(_seq(data, "hosts", probs)):
        path = ("hosts", i)
        if not isinstance(h, dict):
            probs.add(path, "host entry must be a mapping")
            continue
        _unknown_fields(h, _HOST_KEYS, path, "host", probs)
        if not claim(h.get("id"), path + ("id",), "host"):
            continue
        hc = HostConfig(h["id"])
        app = h.get("app")
        if app is None:
            probs.add(path, f"host {hc.id} has no app")
        else:
            try:
                hc.app = AppSpec.from_dict(app) if isinstance(app, dict) else AppSpec(app)
            except (ConfigError, TypeError, ValueError) as exc:
                probs.add(path + ("app",), f"host {hc.id}: {exc}")
        hc.cores = h.get("cores", 1)
        hc.memory = str(h.get("memory", "1GiB"))
        hc.address = h.get("address")
        hc.fidelity = h.get("fidelity", "abstract")
        if hc.fidelity not in FIDELITIES:
            probs.add(path + ("fidelity",), f"fidelity must be one of {FIDELITIES}, got {hc.fidelity!r}")
        if not isinstance(hc.cores, int) or hc.cores != 1:
            probs.add(path + ("cores",), f"host {hc.id}: only single-core hosts are modeled, got {hc.cores!r}")
        model = h.get("model") or {}
        for k in sorted(set(model) - _MODEL_KEYS, key=str):
            probs.add(path + ("model", k), f"unknown host model parameter {k!r}")
        hc.model = {k: v for k, v in model.items() if k in _MODEL_KEYS}
        if "stack_delay" in hc.model:
            hc.model["stack_delay"] = _get_time(model, "stack_delay", HOST_DEFAULTS["stack_delay"], probs,
                                                path + ("model",))
        cfg.hosts.append(hc)

    for i, n in enumerate(_seq(data, "nics", probs)):
        path = ("nics", i)
        _unknown_fields(n, _NIC_KEYS, path, "nic", probs)
        if not isinstance(n, dict) or not claim(n.get("id"), path + ("id",), "nic"):
            continue
        nc = NicConfig(n["id"], n.get("host"))
        nc.dma_latency = _get_time(n, "dma_latency", DEFAULT_DMA_LATENCY, probs, path)
        nc.mmio_latency = _get_time(n, "mmio_latency", 0, probs, path)
        if nc.dma_latency <= 0:
            probs.add(path + ("dma_latency",), "DMA latency must be positive")
        cfg.nics.append(nc)

    for i, s in enumerate(_seq(data, "switches", probs)):
        path = ("switches", i)
        _unknown_fields(s, _SWITCH_KEYS, path, "switch", probs)
        if not isinstance(s, dict) or not claim(s.get("id"), path + ("id",), "switch"):
            continue
        ports = s.get("ports")
        if not isinstance(ports, int) or ports < 1:
            probs.add(path + ("ports",), f"switch {s['id']} needs a positive port count")
            ports = 1
        cfg.switches.append(SwitchConfig(s["id"], ports, s.get("role", ""), s.get("group", -1)))

    for i, lk in enumerate(_seq(data, "links", probs)):
        path = ("links", i)
        _unknown_fields(lk, _LINK_KEYS, path, "link", probs)
        if not isinstance(lk, dict) or not claim(lk.get("id"), path + ("id",), "link"):
            continue
        ends = lk.get("endpoints")
        if not isinstance(ends, list) or len(ends) != 2:
            probs.add(path + ("endpoints",), f"link {lk['id']} needs exactly two endpoints")
            continue
        lat = _get_time(lk, "latency", DEFAULT_LATENCY, probs, path)
        if lat <= 0:
            probs.add(path + ("latency",), f"link {lk['id']} latency must be positive")
        bw = DEFAULT_BANDWIDTH
        if "bandwidth" in lk:
            try:
                bw = parse_bandwidth(lk["bandwidth"])
            except ValueError as exc:
                probs.add(path + ("bandwidth",), f"bandwidth: {exc}")
        cfg.links.append(LinkConfig(lk["id"], tuple(ends), lat, bw))

    _check_references(cfg, probs)
    probs.raise_if_any()
    return cfg


def _seq(data, key, probs):
    v = data.get(key, [])
    if v is None:
        return []
    if not isinstance(v, list):
        probs.add((key,), f"{key} must be a list")
        return []
    return v


def _check_references(cfg: SystemConfig, probs: _Problems) -> None:
    hosts = {h.id for h in cfg.hosts}
    switches = {s.id: s for s in cfg.switches}
    host_links = {h: 0 for h in hosts}
    ports = {s: 0 for s in switches}
    for i, lk in enumerate(cfg.links):
        for j, end in enumerate(lk.endpoints):
            if end not in hosts and end not in switches:
                probs.add(("links", i, "endpoints", j), f"link {lk.id} references unknown endpoint {end!r}")
            elif end in hosts:
                host_links[end] += 1
            else:
                ports[end] += 1
        if all(e in hosts for e in lk.endpoints):
            probs.add(("links", i), f"link {lk.id} joins two hosts; hosts attach to switches")
    for i, h in enumerate(cfg.hosts):
        if host_links[h.id] != 1:
            probs.add(("hosts", i), f"host {h.id} must attach to exactly one switch, has {host_links[h.id]} links")
        if h.app is not None and h.app.target is not None and h.app.target not in hosts:
            probs.add(("hosts", i, "app", "target"), f"host {h.id} app targets unknown host {h.app.target!r}")
    for i, s in enumerate(cfg.switches):
        if ports[s.id] > s.ports:
            probs.add(("switches", i), f"switch {s.id} has {ports[s.id]} links but {s.ports} ports")
    nic_hosts = set()
    for i, n in enumerate(cfg.nics):
        if n.host not in hosts:
            probs.add(("nics", i, "host"), f"nic {n.id} references unknown host {n.host!r}")
        elif n.host in nic_hosts:
            probs.add(("nics", i, "host"), f"host {n.host} has more than one nic")
        nic_hosts.add(n.host)
    if not probs.items and cfg.hosts:
        try:
            cfg.topology().validate()
        except ConfigError as exc:
            probs.add((), str(exc))


_INST_KEYS = {"partition", "trunk", "fidelity", "sync_interval", "profiling", "mode", "queue_capacity",
              "watchdog", "busy_ns", "busy_mode", "crash", "end_time", "seed"}


def parse_instantiation(text: str, source: str = "<instantiation>") -> Instantiation:
    data, lines = _load(text, source)
    probs = _Problems(source, lines)
    data = data or {}
    if not isinstance(data, dict):
        probs.add((), "instantiation must be a mapping")
        probs.raise_if_any()
    for k in sorted(set(data) - _INST_KEYS, key=str):
        probs.add((k,), f"unknown instantiation key {k!r}")
    inst = Instantiation()
    inst.partition = data.get("partition", "s")
    try:
        parse_strategy(inst.strategy())
    except ConfigError as exc:
        probs.add(("partition",), str(exc))
    inst.trunk = bool(data.get("trunk", True))
    fid = data.get("fidelity") or {}
    if not isinstance(fid, dict):
        probs.add(("fidelity",), "fidelity must map host ids to abstract/detailed")
        fid = {}
    for h, f in fid.items():
        if f not in FIDELITIES:
            probs.add(("fidelity", h), f"fidelity for {h} must be one of {FIDELITIES}, got {f!r}")
    inst.fidelity = dict(fid)
    inst.sync_interval = data.get("sync_interval", "latency")
    try:
        inst.sync_interval_for(10**9)
    except (ConfigError, ValueError) as exc:
        probs.add(("sync_interval",), f"sync_interval: {exc}")
    prof = data.get("profiling", False)
    if isinstance(prof, dict):
        inst.profiling = bool(prof.get("enabled", True))
        inst.profile_interval = float(prof.get("interval", 1.0))
    else:
        inst.profiling = bool(prof)
    if inst.profile_interval <= 0:
        probs.add(("profiling",), "profiling interval must be positive")
    inst.mode = data.get("mode", "processes")
    if inst.mode not in MODES:
        probs.add(("mode",), f"mode must be one of {MODES}, got {inst.mode!r}")
    inst.queue_capacity = data.get("queue_capacity", inst.queue_capacity)
    inst.watchdog = float(data.get("watchdog", inst.watchdog))
    inst.busy_ns = dict(data.get("busy_ns") or {})
    inst.busy_mode = data.get("busy_mode", "spin")
    if inst.busy_mode not in BUSY_MODES:
        probs.add(("busy_mode",), f"busy_mode must be one of {BUSY_MODES}, got {inst.busy_mode!r}")
    crash = data.get("crash")
    if crash is not None:
        if not isinstance(crash, dict) or "process" not in crash:
            probs.add(("crash",), "crash needs {process: name, at: time}")
        else:
            inst.crash = {"process": crash["process"], "at": _get_time(crash, "at", 0, probs, ("crash",))}
    if "end_time" in data:
        inst.end_time = _get_time(data, "end_time", None, probs, ())
    if "seed" in data:
        inst.seed = data["seed"]
    probs.raise_if_any()
    return inst


def load_system(path) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read(), str(path))


def load_instantiation(path) -> Instantiation:
    with open(path, encoding="utf-8") as fh:
        return parse_instantiation(fh.read(), str(path))


def system_from_topology(topo: Topology, apps: dict, *, seed: int = 0, end_time: int = 100 * MS,
                         detailed=()) -> SystemConfig:
    """Build a system configuration from a generated topology and a host -> AppSpec map."""
    cfg = SystemConfig(seed=seed, end_time=end_time)
    detailed = set(detailed)
    for h in topo.hosts:
        app = apps.get(h.id, AppSpec("sink"))
        cfg.hosts.append(HostConfig(h.id, app, fidelity="detailed" if h.id in detailed else "abstract"))
    cfg.switches = [SwitchConfig(s.id, s.ports, s.role, s.group) for s in topo.switches]
    cfg.links = [LinkConfig(lk.id, (lk.a, lk.b), lk.latency, lk.bandwidth) for lk in topo.links]
    return cfg
