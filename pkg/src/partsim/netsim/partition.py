"""Assigning switches to simulator processes."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ConfigError
from .topology import LinkSpec, Topology


@dataclass
class Partition:
    """``assignment`` maps every switch to a partition index in ``range(count)``.

    Hosts live in their switch's partition. ``cross_links`` are the links
    whose two ends land in different partitions.
    """

    assignment: dict
    count: int
    cross_links: list = field(default_factory=list)
    strategy: str = "custom"

    def part_of(self, topo: Topology, node: str) -> int:
        if node in self.assignment:
            return self.assignment[node]
        return self.assignment[topo.host_by_id[node].switch]

    def groups(self, topo: Topology) -> dict[tuple[int, int], list[LinkSpec]]:
        """Cross links grouped by unordered partition pair ``(low, high)``; one trunk per group."""
        out = {}
        for lk in self.cross_links:
            p, q = self.part_of(topo, lk.a), self.part_of(topo, lk.b)
            out.setdefault((min(p, q), max(p, q)), []).append(lk)
        return dict(sorted(out.items()))


def parse_strategy(spec) -> tuple[str, object]:
    """Accept ``"s"``, ``"ac"``, ``"rs"``, ``"cr3"``/``("crN", 3)``, or ``("custom", assignment)``."""
    if isinstance(spec, tuple):
        name, arg = spec
    else:
        name, arg = spec, None
    if isinstance(name, str):
        m = re.fullmatch(r"cr(\d+)", name)
        if m:
            return "crN", int(m.group(1))
    if name == "crN":
        if not isinstance(arg, int) or arg < 1:
            raise ConfigError(f"crN needs a positive rack count, got {arg!r}")
        return name, arg
    if name in ("s", "ac", "rs"):
        return name, None
    if name == "custom":
        if not isinstance(arg, dict):
            raise ConfigError("custom strategy needs an assignment mapping")
        return name, arg
    raise ConfigError(f"unknown partition strategy {spec!r}")


def _by_role(topo: Topology, strategy: str):
    roles = {}
    for s in topo.switches:
        if s.role not in ("core", "agg", "tor") or (s.role != "core" and s.group < 0):
            raise ConfigError(f"strategy {strategy} needs a core/agg/rack topology; switch {s.id} has "
                              f"role {s.role!r} group {s.group}")
        roles.setdefault(s.role, []).append(s)
    if not roles.get("core") or not roles.get("agg"):
        raise ConfigError(f"strategy {strategy} needs core and aggregation switches")
    return roles


def partition_topology(topo: Topology, strategy) -> Partition:
    name, arg = parse_strategy(strategy)
    assignment = {}
    if name == "s":
        assignment = {s.id: 0 for s in topo.switches}
    elif name == "custom":
        missing = [s.id for s in topo.switches if s.id not in arg]
        unknown = [k for k in arg if k not in topo.switch_by_id]
        if missing or unknown:
            raise ConfigError(f"custom assignment incomplete: missing {missing[:5]}, unknown {unknown[:5]}")
        used = sorted(set(arg.values()))
        if any(not isinstance(v, int) or v < 0 for v in used):
            raise ConfigError("custom assignment values must be non-negative integers")
        # compact to 0..n-1, preserving order
        remap = {v: i for i, v in enumerate(used)}
        assignment = {s.id: remap[arg[s.id]] for s in topo.switches}
    else:
        roles = _by_role(topo, name)
        groups = sorted({s.group for s in roles["agg"]})
        for s in roles["core"]:
            assignment[s.id] = 0
        nxt = 1
        if name == "ac":
            gidx = {g: 1 + i for i, g in enumerate(groups)}
            for s in roles["agg"] + roles.get("tor", []):
                assignment[s.id] = gidx[s.group]
            nxt = 1 + len(groups)
        elif name == "crN":
            for s in roles["agg"]:
                assignment[s.id] = 0
            for g in groups:
                racks = [s for s in roles.get("tor", []) if s.group == g]
                for i in range(0, len(racks), arg):
                    for s in racks[i:i + arg]:
                        assignment[s.id] = nxt
                    nxt += 1
        elif name == "rs":
            for s in roles["agg"]:
                assignment[s.id] = nxt
                nxt += 1
            for s in roles.get("tor", []):
                assignment[s.id] = nxt
                nxt += 1
    count = max(assignment.values()) + 1 if assignment else 0
    part = Partition(assignment, count, [], name if name != "crN" else f"cr{arg}")
    part.cross_links = [lk for lk in topo.links if part.part_of(topo, lk.a) != part.part_of(topo, lk.b)]
    return part
