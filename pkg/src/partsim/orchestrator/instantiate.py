"""Turn a system configuration plus an instantiation into a run plan.

The plan is a pure function of its inputs: the same configuration always
serializes to the same bytes. Channel and process names derive from system
ids only, so they are stable across partition strategies.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError
from ..netsim.partition import partition_topology
from ..simtime import parse_time
from .config import Instantiation, SystemConfig, _app_dict

PATH_TEMPLATE = "{run}/"


@dataclass
class ChannelPlan:
    id: str
    protocol: str          # eth | dev | trunk
    latency: int
    sync_interval: int
    endpoints: list        # [side-0 process, side-1 process]; side 0 listens
    links: list = field(default_factory=list)  # link indices carried (trunk: sub-channel id = link index)
    path: str = ""


@dataclass
class ProcessPlan:
    name: str
    kind: str              # net | nic | host
    config: dict
    channels: list         # [channel id, side]


@dataclass
class RunPlan:
    seed: int
    end_time: int
    mode: str
    profiling: bool
    profile_interval: float
    watchdog: float
    topology: dict
    processes: list
    channels: list
    start_order: list
    crash: dict | None = None

    def process(self, name: str) -> ProcessPlan:
        for p in self.processes:
            if p.name == name:
                return p
        raise KeyError(name)

    def channel(self, cid: str) -> ChannelPlan:
        for c in self.channels:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def wiring(self) -> dict:
        return {c.id: tuple(c.endpoints) for c in self.channels}

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunPlan":
        d = json.loads(text)
        d["processes"] = [ProcessPlan(**p) for p in d["processes"]]
        d["channels"] = [ChannelPlan(**c) for c in d["channels"]]
        return cls(**d)


def topology_dict(topo) -> dict:
    return {
        "switches": [[s.id, s.ports, s.role, s.group] for s in topo.switches],
        "hosts": [[h.id, h.switch, h.port] for h in topo.hosts],
        "links": [[lk.a, lk.b, lk.bandwidth, lk.latency, lk.id] for lk in topo.links],
    }


def topology_from_dict(d: dict):
    from ..netsim.topology import HostSpec, LinkSpec, SwitchSpec, Topology
    return Topology([SwitchSpec(*s) for s in d["switches"]], [HostSpec(*h) for h in d["hosts"]],
                    [LinkSpec(*lk) for lk in d["links"]])


def net_name(index: int) -> str:
    return f"net.np{index}"


def instantiate(system: SystemConfig, inst: Instantiation) -> RunPlan:
    topo = system.topology().validate()
    part = partition_topology(topo, inst.strategy())
    seed = inst.seed if inst.seed is not None else system.seed
    end_time = inst.end_time if inst.end_time is not None else system.end_time
    unknown = sorted(set(inst.fidelity) - set(topo.host_by_id))
    if unknown:
        raise ConfigError(f"fidelity given for unknown hosts: {unknown}")
    fidelity = {h.id: inst.fidelity.get(h.id, h.fidelity) for h in system.hosts}
    detailed = [h.id for h in topo.hosts if fidelity[h.id] == "detailed"]
    link_idx = {lk.id: i for i, lk in enumerate(topo.links)}

    channels: list[ChannelPlan] = []
    net_channels = {p: [] for p in range(part.count)}
    processes = []

    # detailed hosts: host <-dev-> nic <-eth-> network partition
    host_procs, nic_procs = [], []
    for h in detailed:
        hc = system.host(h)
        nic = system.nic_for(h)
        i, lk = topo.host_link(h)
        p = part.part_of(topo, h)
        dev = ChannelPlan(f"dev.{h}", "dev", nic.dma_latency, inst.sync_interval_for(nic.dma_latency),
                          [f"nic.{h}", f"host.{h}"])
        eth = ChannelPlan(f"eth.{h}", "eth", lk.latency, inst.sync_interval_for(lk.latency),
                          [net_name(p), f"nic.{h}"], [i])
        channels += [dev, eth]
        net_channels[p].append([eth.id, 0])
        nic_procs.append(ProcessPlan(f"nic.{h}", "nic", {
            "host": h, "host_index": topo.host_index[h], "mmio_latency": nic.mmio_latency,
        }, [[dev.id, 0], [eth.id, 1]]))
        host_procs.append(ProcessPlan(f"host.{h}", "host", {
            "host": h, "app": _app_dict(hc.app), "model": dict(hc.model),
        }, [[dev.id, 1]]))

    # cut links: one trunk per partition pair, or one channel per link
    for (p, q), links in part.groups(topo).items():
        idx = sorted(link_idx[lk.id] for lk in links)
        if inst.trunk:
            lat = min(lk.latency for lk in links)
            ch = ChannelPlan(f"trunk.np{p}-np{q}", "trunk", lat, inst.sync_interval_for(lat),
                             [net_name(p), net_name(q)], idx)
            channels.append(ch)
            net_channels[p].append([ch.id, 0])
            net_channels[q].append([ch.id, 1])
        else:
            for i in idx:
                lk = topo.links[i]
                ch = ChannelPlan(f"link.{lk.id}", "eth", lk.latency, inst.sync_interval_for(lk.latency),
                                 [net_name(p), net_name(q)], [i])
                channels.append(ch)
                net_channels[p].append([ch.id, 0])
                net_channels[q].append([ch.id, 1])

    for p in range(part.count):
        local_abstract = {h.id: _app_dict(system.host(h.id).app) for h in topo.hosts
                          if part.part_of(topo, h.id) == p and fidelity[h.id] == "abstract"}
        name = net_name(p)
        processes.append(ProcessPlan(name, "net", {
            "index": p, "assignment": dict(sorted(part.assignment.items())), "strategy": part.strategy,
            "apps": dict(sorted(local_abstract.items())), "detailed": detailed,
            "queue_capacity": inst.queue_capacity,
        }, sorted(net_channels[p])))
    processes += nic_procs + host_procs
    for proc in processes:
        proc.config["busy_ns"] = int(inst.busy_ns.get(proc.name, 0))
        if proc.config["busy_ns"] and inst.busy_mode != "spin":
            proc.config["busy_mode"] = inst.busy_mode
    names = {proc.name for proc in processes}
    if inst.crash and inst.crash["process"] not in names:
        raise ConfigError(f"crash target {inst.crash['process']!r} is not a process of this plan")
    for bad in sorted(set(inst.busy_ns) - names):
        raise ConfigError(f"busy_ns names unknown process {bad!r}")
    for ch in channels:
        ch.path = PATH_TEMPLATE + ch.id
    channels.sort(key=lambda c: c.id)
    return RunPlan(
        seed=seed, end_time=end_time, mode=inst.mode, profiling=inst.profiling,
        profile_interval=inst.profile_interval, watchdog=inst.watchdog, topology=topology_dict(topo),
        processes=processes, channels=channels, start_order=[p.name for p in processes],
        crash={"process": inst.crash["process"], "at": parse_time(inst.crash["at"])} if inst.crash else None,
    )
