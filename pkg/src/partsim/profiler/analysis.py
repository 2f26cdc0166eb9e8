"""Post-processing of profile logs: simulation speed, efficiency, and the wait-time profile graph."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

from ..simtime import SEC
from .log import ProfileLog

DEFAULT_WARMUP = 1
DEFAULT_COOLDOWN = 1
GREEN = (0, 200, 0)
RED = (220, 0, 0)


class SimSpeedMismatch(UserWarning):
    """Simulators of one run report simulation speeds more than 1% apart."""


def _window(entry: ProfileLog, warmup: int, cooldown: int):
    need = warmup + cooldown + 2
    if len(entry.samples) < need:
        raise ValueError(f"log of {entry.sim_id} has {len(entry.samples)} samples; "
                         f"need at least {need} (warmup={warmup}, cooldown={cooldown})")
    return entry.samples[warmup], entry.samples[len(entry.samples) - 1 - cooldown]


def sim_speed_of(entry: ProfileLog, warmup: int = DEFAULT_WARMUP, cooldown: int = DEFAULT_COOLDOWN) -> float:
    early, late = _window(entry, warmup, cooldown)
    dwall = late.wall_cycles - early.wall_cycles
    if dwall <= 0:
        raise ValueError(f"log of {entry.sim_id}: no wall-clock progress in window")
    return ((late.sim_time - early.sim_time) / SEC) / (dwall / entry.cycles_per_second)


def compute_sim_speed(logs: dict[str, ProfileLog], warmup: int = DEFAULT_WARMUP,
                      cooldown: int = DEFAULT_COOLDOWN, tolerance: float = 0.01) -> float:
    """Simulated seconds per wall second, averaged over simulators.

    Warns with :class:`SimSpeedMismatch` when per-simulator values spread by
    more than ``tolerance`` (relative).
    """
    if not logs:
        raise ValueError("no profile logs")
    speeds = {sim: sim_speed_of(entry, warmup, cooldown) for sim, entry in sorted(logs.items())}
    lo, hi = min(speeds.values()), max(speeds.values())
    if hi > 0 and (hi - lo) / hi > tolerance:
        warnings.warn(f"simulation speeds disagree by {100 * (hi - lo) / hi:.1f}%: {speeds}", SimSpeedMismatch,
                      stacklevel=2)
    return sum(speeds.values()) / len(speeds)


def _deltas(entry: ProfileLog, warmup: int, cooldown: int):
    early, late = _window(entry, warmup, cooldown)
    dwall = late.wall_cycles - early.wall_cycles
    per_adapter = {}
    for name, c in late.counters.items():
        e = early.counters.get(name)
        ew, et, er = e.snapshot() if e is not None else (0, 0, 0)
        per_adapter[name] = (c.cycles_wait_sync - ew, c.cycles_tx - et, c.cycles_rx - er)
    return dwall, per_adapter


def compute_efficiency(entry: ProfileLog, warmup: int = DEFAULT_WARMUP, cooldown: int = DEFAULT_COOLDOWN) -> float:
    """Fraction of wall cycles not spent in adapter receive, transmit, or sync waits."""
    dwall, per_adapter = _deltas(entry, warmup, cooldown)
    if dwall == 0:
        raise ValueError(f"log of {entry.sim_id}: zero wall cycles in window")
    spent = sum(w + tx + rx for w, tx, rx in per_adapter.values())
    return min(1.0, max(0.0, 1.0 - spent / dwall))


@dataclass
class WtpNode:
    name: str
    total: float
    color: str


@dataclass
class WtpEdge:
    src: str
    dst: str
    channel: str
    weight: float


@dataclass
class WtpGraph:
    nodes: dict = field(default_factory=dict)  # name -> WtpNode
    edges: list = field(default_factory=list)

    def edge(self, src: str, dst: str) -> float:
        """Summed weight of all edges from ``src`` to ``dst``."""
        return sum(e.weight for e in self.edges if e.src == src and e.dst == dst)

    def to_dict(self) -> dict:
        return {
            "nodes": {n: {"total": v.total, "color": v.color} for n, v in sorted(self.nodes.items())},
            "edges": [{"src": e.src, "dst": e.dst, "channel": e.channel, "weight": e.weight}
                      for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.channel))],
        }


def _lerp_color(x: float) -> str:
    # x = 0 -> red (least waiting), x = 1 -> green (most waiting)
    r, g, b = (round(RED[i] + (GREEN[i] - RED[i]) * x) for i in range(3))
    return f"#{r:02x}{g:02x}{b:02x}"


def build_wtpg(logs: dict[str, ProfileLog], wiring: dict, warmup: int = DEFAULT_WARMUP,
               cooldown: int = DEFAULT_COOLDOWN) -> WtpGraph:
    """Build the wait-time profile graph.

    ``wiring`` maps each adapter (channel) id to the pair of simulators it
    connects. The edge from ``s`` to its peer across channel ``c`` weighs the
    fraction of ``s``'s wall cycles spent waiting for syncs on ``c``.
    """
    g = WtpGraph()
    names = set(logs)
    for a, b in wiring.values():
        names.update((a, b))
    weights = {}
    for sim, entry in sorted(logs.items()):
        dwall, per_adapter = _deltas(entry, warmup, cooldown)
        for chan, (w, _tx, _rx) in sorted(per_adapter.items()):
            if chan not in wiring:
                raise KeyError(f"adapter {chan!r} of {sim} is not in the channel wiring")
            a, b = wiring[chan]
            if sim not in (a, b):
                raise KeyError(f"adapter {chan!r} logged by {sim} but wired between {a} and {b}")
            dst = b if sim == a else a
            weights[(sim, dst, chan)] = w / dwall if dwall > 0 else 0.0
    for chan, (a, b) in sorted(wiring.items()):
        for src, dst in ((a, b), (b, a)):
            g.edges.append(WtpEdge(src, dst, chan, weights.get((src, dst, chan), 0.0)))
    totals = {n: 0.0 for n in names}
    for e in g.edges:
        totals[e.src] += e.weight
    lo = min(totals.values(), default=0.0)
    hi = max(totals.values(), default=0.0)
    for n in sorted(names):
        x = (totals[n] - lo) / (hi - lo) if hi > lo else 0.5
        g.nodes[n] = WtpNode(n, totals[n], _lerp_color(x))
    return g


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(graph: WtpGraph) -> str:
    lines = ["digraph wtpg {", "  node [shape=box, style=filled];"]
    for name in sorted(graph.nodes):
        n = graph.nodes[name]
        lines.append(f"  {_q(name)} [label={_q(f'{name} {100 * n.total:.1f}%')}, fillcolor={_q(n.color)}];")
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.channel)):
        lines.append(f"  {_q(e.src)} -> {_q(e.dst)} [label={_q(f'{100 * e.weight:.1f}%')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass
class ProfileReport:
    sim_speed: float
    efficiency: dict
    graph: WtpGraph

    def to_json(self) -> str:
        return json.dumps({
            "sim_speed": self.sim_speed,
            "efficiency": dict(sorted(self.efficiency.items())),
            "wtpg": self.graph.to_dict(),
        }, indent=2, sort_keys=True) + "\n"


def profile_report(logs: dict[str, ProfileLog], wiring: dict, warmup: int = DEFAULT_WARMUP,
                   cooldown: int = DEFAULT_COOLDOWN) -> ProfileReport:
    return ProfileReport(
        sim_speed=compute_sim_speed(logs, warmup, cooldown),
        efficiency={s: compute_efficiency(e, warmup, cooldown) for s, e in logs.items()},
        graph=build_wtpg(logs, wiring, warmup, cooldown),
    )
