"""Periodic counter logging and log parsing.

Format, one ASCII line per record::

    PROFHDR <cycles_per_second>
    PROF <simulator-id> <wall_cycles> <sim_time_ps> [<adapter-id>:<wait>:<tx>:<rx>]...
"""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field

from ..errors import ConfigError
from .counters import CYCLES_PER_SECOND, AdapterCounters, read_cycles

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProfileSample:
    wall_cycles: int
    sim_time: int
    counters: dict = field(default_factory=dict)  # adapter id -> AdapterCounters


@dataclass
class ProfileLog:
    sim_id: str
    cycles_per_second: int
    samples: list


class SampleLogger:
    """Appends one sample line per ``interval`` wall seconds for ``sim``.

    The simulator calls :meth:`tick` from its loop; ``sink`` is a path or a
    text stream. Write failures are logged once and otherwise ignored.
    """

    def __init__(self, sim, interval: float, sink, *, clock=read_cycles,
                 cycles_per_second: int = CYCLES_PER_SECOND):
        if not interval or interval <= 0:
            raise ConfigError(f"profile interval must be positive, got {interval!r}")
        self.sim = sim
        self.clock = clock
        self.cycles_per_second = cycles_per_second
        self.interval = int(interval * cycles_per_second)
        self._sink = sink
        self._fh = None
        self._broken = False
        self._next = None
        self.samples_written = 0

    def start(self) -> None:
        if isinstance(self._sink, (str, os.PathLike)):
            try:
                self._fh = open(self._sink, "w")
            except OSError as exc:
                self._fail(exc)
        else:
            self._fh = self._sink
        self._write(f"PROFHDR {self.cycles_per_second}\n")
        self._next = self.clock() + self.interval

    def tick(self) -> None:
        now = self.clock()
        if now >= self._next:
            self.sample(now=now)
            while self._next <= now:
                self._next += self.interval

    def sample(self, final: bool = False, now: int | None = None) -> None:
        wall = self.clock() if now is None else now
        parts = [f"PROF {self.sim.name} {wall} {self.sim.now}"]
        for a in self.sim.adapters:
            c = a.counters
            parts.append(f"{a.name}:{c.cycles_wait_sync}:{c.cycles_tx}:{c.cycles_rx}")
        self._write(" ".join(parts) + "\n")
        self.samples_written += 1
        if final and self._fh is not None and self._fh is not self._sink:
            self._fh.close()

    def _write(self, line: str) -> None:
        if self._broken or self._fh is None:
            return
        try:
            self._fh.write(line)
            self._fh.flush()
        except (OSError, ValueError) as exc:
            self._fail(exc)

    def _fail(self, exc) -> None:
        if not self._broken:
            log.warning("profile sink for %s failed (%s); continuing without profiling output", self.sim.name, exc)
        self._broken = True


def parse_logs(source) -> dict[str, ProfileLog]:
    """Parse one log (path, text, or stream) into ``{sim id: ProfileLog}``."""
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    logs: dict[str, ProfileLog] = {}
    cps = None
    for lineno, line in enumerate(io.StringIO(text), 1):
        fields = line.split()
        if not fields:
            continue
        if fields[0] == "PROFHDR":
            cps = int(fields[1])
        elif fields[0] == "PROF":
            if cps is None:
                raise ValueError(f"line {lineno}: PROF record before PROFHDR header")
            if len(fields) < 4:
                raise ValueError(f"line {lineno}: truncated PROF record")
            sim, wall, simt = fields[1], int(fields[2]), int(fields[3])
            counters = {}
            for item in fields[4:]:
                name, w, tx, rx = item.rsplit(":", 3)
                counters[name] = AdapterCounters(int(w), int(tx), int(rx))
            entry = logs.setdefault(sim, ProfileLog(sim, cps, []))
            entry.samples.append(ProfileSample(wall, simt, counters))
        else:
            raise ValueError(f"line {lineno}: unknown record {fields[0]!r}")
    return logs


def load_logs(paths) -> dict[str, ProfileLog]:
    logs = {}
    for p in paths:
        for sim, entry in parse_logs(p).items():
            if sim in logs:
                raise ValueError(f"simulator {sim} appears in more than one log")
            logs[sim] = entry
    return logs
