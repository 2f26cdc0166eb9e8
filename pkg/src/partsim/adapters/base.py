"""Base adapter: handshake, counters, and the send/receive plumbing shared by protocols."""

from __future__ import annotations

import json
import time

from ..core.channel import HANDSHAKE, InEndpoint, OutEndpoint, Protocol
from ..errors import ProtocolError, StartupError
from ..profiler.counters import INSTRUMENTATION, read_cycles

DEFAULT_HANDSHAKE_TIMEOUT = 30.0


class BaseAdapter:
    """One simulator's view of a bidirectional channel.

    ``receive_hook(deliver_time, obj, seq)``, when set, is invoked directly on
    the receive path and owns scheduling. Otherwise each decoded message
    becomes an event at its delivery time that calls ``callback(obj)``.
    """

    protocol = Protocol.ETHERNET

    def __init__(self, sim, out_ep: OutEndpoint, in_ep: InEndpoint, *, name: str | None = None,
                 peer: str | None = None, profiling: bool = True):
        if out_ep.config != in_ep.config:
            raise ValueError("endpoint pair must share one channel config")
        if out_ep.config.protocol != self.protocol:
            raise ValueError(f"{type(self).__name__} needs a {self.protocol.value} channel, "
                             f"got {out_ep.config.protocol.value}")
        self.sim = sim
        self.out_ep = out_ep
        self.in_ep = in_ep
        self.config = out_ep.config
        self.name = name or self.config.channel_id
        self.key = self.config.key
        self.peer = peer
        self.counters = in_ep.counters
        out_ep.counters = self.counters
        self.profiling = profiling and INSTRUMENTATION
        self.handshaken = False
        self.negotiated = None
        self.callback = None
        self.receive_hook = None
        in_ep.handler = self._on_data
        if sim is not None:
            sim.attach(self)

    # -- handshake --------------------------------------------------------
    def handshake_info(self) -> dict:
        return {
            "latency": self.config.latency,
            "sync_interval": self.config.sync_interval,
            "protocol": self.config.protocol.value,
        }

    def send_handshake(self) -> None:
        info = dict(self.handshake_info(), sim=getattr(self.sim, "name", None))
        self.out_ep.send_control(HANDSHAKE, json.dumps(info, sort_keys=True).encode())

    def await_handshake(self, timeout: float = DEFAULT_HANDSHAKE_TIMEOUT) -> dict:
        deadline = time.monotonic() + timeout
        attempt = 0
        while not self.in_ep.handshakes:
            self.in_ep.poll()
            if self.in_ep.handshakes:
                break
            if time.monotonic() > deadline:
                raise StartupError(f"{self.name}: no handshake from peer within {timeout:g}s")
            self.in_ep.transport.wait(attempt)
            attempt += 1
        theirs = json.loads(self.in_ep.handshakes.popleft())
        mine = self.handshake_info()
        diffs = [f"{k}: local={mine[k]!r} peer={theirs.get(k)!r}" for k in sorted(mine) if theirs.get(k) != mine[k]]
        if diffs:
            raise StartupError(f"{self.name}: handshake mismatch with {theirs.get('sim')}: " + "; ".join(diffs))
        if self.peer is not None and theirs.get("sim") != self.peer:
            raise StartupError(f"{self.name}: expected peer {self.peer!r}, got {theirs.get('sim')!r}")
        self.peer = theirs.get("sim")
        self.handshaken = True
        self.negotiated = mine
        return mine

    def handshake(self, role: str = "connect", timeout: float = DEFAULT_HANDSHAKE_TIMEOUT) -> dict:
        """Exchange and verify channel parameters with the peer.

        Both roles send first and then wait, so the order in which the two
        sides start does not matter; ``role`` is kept for logging.
        """
        if role not in ("connect", "listen"):
            raise ValueError(f"unknown handshake role {role!r}")
        self.send_handshake()
        return self.await_handshake(timeout)

    # -- data path --------------------------------------------------------
    def send(self, now: int, payload: bytes) -> None:
        if not self.handshaken:
            raise ProtocolError(f"{self.name}: data sent before handshake")
        if self.profiling:
            t0 = read_cycles()
            self.out_ep.send_data(now, payload)
            self.counters.cycles_tx += read_cycles() - t0
        else:
            self.out_ep.send_data(now, payload)

    def decode(self, payload: bytes):
        return payload

    def _on_data(self, deliver_time: int, payload: bytes, seq: int) -> None:
        if self.profiling:
            t0 = read_cycles()
            self.receive(deliver_time, payload, seq)
            self.counters.cycles_rx += read_cycles() - t0
        else:
            self.receive(deliver_time, payload, seq)

    def receive(self, deliver_time: int, payload: bytes, seq: int) -> None:
        obj = self.decode(payload)
        self.dispatch(deliver_time, obj, seq)

    def dispatch(self, deliver_time: int, obj, seq: int) -> None:
        if self.receive_hook is not None:
            self.receive_hook(deliver_time, obj, seq)
        else:
            self.sim.schedule_keyed(deliver_time, self.key, seq, self._deliver, obj)

    def _deliver(self, obj) -> None:
        if self.callback is None:
            raise ProtocolError(f"{self.name}: no receive callback installed")
        self.callback(obj)

    def input_horizon(self) -> int:
        return self.in_ep.horizon
