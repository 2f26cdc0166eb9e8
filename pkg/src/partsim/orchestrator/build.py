"""Construct simulators, adapters, and channel endpoints from a run plan."""

from __future__ import annotations

import os
import signal
import threading
from pathlib import Path

from ..adapters import DeviceAdapter, EthAdapter, TrunkAdapter
from ..core.channel import ChannelConfig, InEndpoint, OutEndpoint, create_duplex
from ..core.transport import ShmSegment
from ..errors import StartupError
from ..hostsim import HostSimulator, NicSimulator
from ..netsim import NetworkSimulator, Partition, write_samples
from ..netsim.stats import write_json
from ..profiler.counters import AdapterCounters
from ..profiler.log import SampleLogger
from .instantiate import RunPlan, topology_from_dict

SHM_DIR = "/dev/shm"
SHM_PREFIX = "psim."


def channel_config(ch) -> ChannelConfig:
    return ChannelConfig(ch.latency, ch.sync_interval, ch.id, ch.protocol)


def segment_path(run_id: str, template: str, shm_dir: str = SHM_DIR) -> str:
    """Map ``{run}/<channel>`` onto one flat file name under the shared-memory directory."""
    return os.path.join(shm_dir, SHM_PREFIX + template.format(run=run_id).replace("/", "."))


def run_prefix(run_id: str, shm_dir: str = SHM_DIR) -> str:
    return os.path.join(shm_dir, f"{SHM_PREFIX}{run_id}.")


# -- endpoints --------------------------------------------------------------

def memory_endpoints(plan: RunPlan, doorbells: dict | None = None) -> dict:
    """In-process endpoints for every channel: ``{(channel id, side): (out, in)}``."""
    eps = {}
    for ch in plan.channels:
        bells = (None, None)
        if doorbells is not None:
            bells = (doorbells[ch.endpoints[0]], doorbells[ch.endpoints[1]])
        a, b = create_duplex(channel_config(ch), bells)
        eps[(ch.id, 0)] = a
        eps[(ch.id, 1)] = b
    return eps


def create_segments(plan: RunPlan, run_id: str, shm_dir: str = SHM_DIR) -> list[str]:
    """Create every channel segment of the plan; returns their paths. Removes partial work on failure."""
    made = []
    try:
        for ch in plan.channels:
            path = segment_path(run_id, ch.path, shm_dir)
            ShmSegment.create(path, ch.latency, ch.sync_interval).close()
            made.append(path)
    except BaseException:
        for p in made:
            _unlink(p)
        raise
    return made


def shm_endpoints(plan: RunPlan, proc, run_id: str, shm_dir: str = SHM_DIR) -> dict:
    eps = {}
    for cid, side in proc.channels:
        ch = plan.channel(cid)
        path = segment_path(run_id, ch.path, shm_dir)
        try:
            seg = ShmSegment.attach(path)
        except FileNotFoundError:
            raise StartupError(f"{proc.name}: channel segment {path} does not exist") from None
        if (seg.latency, seg.sync_interval) != (ch.latency, ch.sync_interval):
            raise StartupError(f"{proc.name}: segment {path} has latency/interval "
                               f"{seg.latency}/{seg.sync_interval}, plan says {ch.latency}/{ch.sync_interval}")
        out_ring, in_ring = seg.side(side)
        cfg = channel_config(ch)
        counters = AdapterCounters()
        eps[(cid, side)] = (OutEndpoint(cfg, out_ring, counters), InEndpoint(cfg, in_ring, counters))
    return eps


def _unlink(path: str) -> None:
    try:
        os.unlink(path)
    except FileNotFoundError:
        pass


# -- simulators -------------------------------------------------------------

_TOPO_CACHE = {}


def _topology(plan: RunPlan):
    key = id(plan)
    if key not in _TOPO_CACHE:
        _TOPO_CACHE.clear()
        _TOPO_CACHE[key] = (plan, topology_from_dict(plan.topology))
    return _TOPO_CACHE[key][1]


def build_simulator(plan: RunPlan, name: str, endpoints: dict, *, profile_sink=None, crash_action=None,
                    trace: bool = True):
    """Build process ``name`` of ``plan`` over ``endpoints`` and return the simulator.

    ``crash_action`` is called at the plan's fault-injection time when this
    process is the crash target.
    """
    proc = plan.process(name)
    cfg = proc.config
    topo = _topology(plan)
    prof = plan.profiling
    common = {"watchdog": plan.watchdog, "trace": trace}
    if proc.kind == "net":
        assignment = cfg["assignment"]
        part = Partition(assignment, max(assignment.values()) + 1, [], cfg.get("strategy", "custom"))
        sim = NetworkSimulator(name, topo, partition=part, index=cfg["index"], apps=cfg["apps"],
                               detailed=cfg["detailed"], seed=plan.seed, queue_capacity=cfg["queue_capacity"],
                               **common)
        for cid, side in proc.channels:
            ch = plan.channel(cid)
            out_ep, in_ep = endpoints[(cid, side)]
            peer = ch.endpoints[1 - side]
            if ch.protocol == "trunk":
                trunk = TrunkAdapter(sim, out_ep, in_ep, name=cid, peer=peer, profiling=prof)
                for i in ch.links:
                    sim.attach_remote(i, trunk.register(i))
            else:
                sim.attach_remote(ch.links[0], EthAdapter(sim, out_ep, in_ep, name=cid, peer=peer, profiling=prof))
    elif proc.kind == "nic":
        sim = NicSimulator(name, cfg["host_index"], mmio_latency=cfg["mmio_latency"], **common)
        adapters = {}
        for cid, side in proc.channels:
            ch = plan.channel(cid)
            out_ep, in_ep = endpoints[(cid, side)]
            cls = DeviceAdapter if ch.protocol == "dev" else EthAdapter
            adapters[ch.protocol] = cls(sim, out_ep, in_ep, name=cid, peer=ch.endpoints[1 - side], profiling=prof)
        sim.bind(adapters["dev"], adapters["eth"])
    elif proc.kind == "host":
        names = [h.id for h in topo.hosts]
        sim = HostSimulator(name, cfg["host"], names, cfg["app"], seed=plan.seed, **cfg["model"], **common)
        (cid, side), = proc.channels
        ch = plan.channel(cid)
        out_ep, in_ep = endpoints[(cid, side)]
        sim.bind(DeviceAdapter(sim, out_ep, in_ep, name=cid, peer=ch.endpoints[1 - side], profiling=prof))
    else:
        raise StartupError(f"unknown process kind {proc.kind!r}")
    sim.busy_ns = int(cfg.get("busy_ns", 0))
    sim.busy_sleep = cfg.get("busy_mode", "spin") == "sleep"
    if prof and profile_sink is not None:
        sim.logger = SampleLogger(sim, plan.profile_interval, profile_sink)
    if plan.crash and plan.crash["process"] == name and crash_action is not None:
        _arm_crash(sim, plan.crash["at"], crash_action)
    return sim


def _arm_crash(sim, at: int, action) -> None:
    orig = sim.on_start

    def on_start():
        orig()
        sim.schedule(at, action)

    sim.on_start = on_start


def kill_self() -> None:
    os.kill(os.getpid(), signal.SIGKILL)


def handshake_all(sims, timeout: float = 30.0) -> None:
    for s in sims:
        for a in s.adapters:
            a.send_handshake()
    for s in sims:
        for a in s.adapters:
            a.await_handshake(timeout)


# -- outputs ----------------------------------------------------------------

def write_outputs(sim, out_dir) -> dict:
    """Write ``stats/<sim>.json`` and ``latency/<host>.bin``; returns the stats dict."""
    out = Path(out_dir)
    st = sim.stats()
    if hasattr(sim, "flows"):
        lat_dir = out / "latency"
        for host, fs in sorted(sim.flows.items()):
            if fs.samples:
                lat_dir.mkdir(parents=True, exist_ok=True)
                write_samples(lat_dir / f"{host}.bin", fs.samples)
    st["channels"] = {a.name: {"syncs_sent": a.out_ep.syncs_sent, "data_sent": a.out_ep.data_sent}
                      for a in sim.adapters}
    (out / "stats").mkdir(parents=True, exist_ok=True)
    write_json(out / "stats" / f"{sim.name}.json", st)
    return st


def save_plan(plan: RunPlan, out_dir) -> Path:
    path = Path(out_dir) / "plan.json"
    path.write_text(plan.to_json())
    return path


def load_plan(path) -> RunPlan:
    return RunPlan.from_json(Path(path).read_text())


def doorbells_for(plan: RunPlan) -> dict:
    return {p.name: threading.Event() for p in plan.processes}

