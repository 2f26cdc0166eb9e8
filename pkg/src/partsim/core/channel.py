"""Timestamped, latency-carrying channels with conservative synchronization.

Protocol: every message a simulator sends at simulated time ``s`` (data or
sync) promises that no later message on that direction carries a send time
below ``s``, and becomes deliverable to the peer at ``s + latency``. The
receiver's *input horizon* is therefore ``max(send_time) + latency`` over all
messages seen, and it may safely process every local event strictly below it.
"""

from __future__ import annotations

import enum
import zlib
from collections import deque
from dataclasses import dataclass

from ..errors import ConfigError, ProtocolError
from ..profiler.counters import AdapterCounters
from .transport import InMemoryTransport


class Protocol(str, enum.Enum):
    ETHERNET = "eth"
    DEVICE = "dev"
    TRUNK = "trunk"


class MsgKind(enum.IntEnum):
    SYNC = 1
    DATA = 2
    # transport-level control, never seen by simulators
    HANDSHAKE = 3
    CLOSE = 4


SYNC = int(MsgKind.SYNC)
DATA = int(MsgKind.DATA)
HANDSHAKE = int(MsgKind.HANDSHAKE)
CLOSE = int(MsgKind.CLOSE)


@dataclass(frozen=True)
class ChannelConfig:
    latency: int
    sync_interval: int | None = None
    channel_id: str = "chan"
    protocol: Protocol = Protocol.ETHERNET

    def __post_init__(self):
        if self.sync_interval is None:
            object.__setattr__(self, "sync_interval", self.latency)
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if not isinstance(self.latency, int) or self.latency <= 0:
            raise ConfigError(f"channel {self.channel_id}: latency must be a positive integer, got {self.latency!r}")
        if self.sync_interval <= 0:
            raise ConfigError(f"channel {self.channel_id}: sync_interval must be positive")
        if self.sync_interval > self.latency:
            raise ConfigError(
                f"channel {self.channel_id}: sync_interval {self.sync_interval} exceeds latency {self.latency}")

    @property
    def key(self) -> int:
        """Stable integer derived from ``channel_id``; used for event tiebreaks."""
        return zlib.crc32(self.channel_id.encode())


@dataclass(frozen=True)
class ChannelMessage:
    kind: MsgKind
    send_time: int
    payload: bytes = b""
    seq: int = 0


class OutEndpoint:
    """Sending side of one channel direction."""

    direction = "out"

    def __init__(self, config: ChannelConfig, transport, counters: AdapterCounters | None = None):
        self.config = config
        self.transport = transport
        self.counters = counters if counters is not None else AdapterCounters()
        self.last_send_time = 0
        # the peer's horizon starts at one latency, as if we had synced at 0
        self.last_sync_sent = 0
        self.seq = 0
        self.syncs_sent = 0
        self.data_sent = 0
        self._interval = config.sync_interval

    def send_data(self, now: int, payload: bytes) -> None:
        if now < self.last_send_time:
            raise ProtocolError(
                f"channel {self.config.channel_id}: send at {now} after a send at {self.last_send_time}")
        self.transport.push(DATA, now, payload)
        self.last_send_time = now
        self.last_sync_sent = now
        self.seq += 1
        self.data_sent += 1

    def maybe_send_sync(self, now: int) -> bool:
        """Emit syncs so no gap between outgoing messages exceeds ``sync_interval``.

        Syncs go out on the grid ``last + k * sync_interval`` up to ``now``, so
        the count depends only on simulated time, never on how far the clock
        happened to jump in one step.
        """
        interval = self._interval
        if now - self.last_sync_sent < interval:
            return False
        t = self.last_sync_sent + interval
        push = self.transport.push
        while t <= now:
            push(SYNC, t)
            self.seq += 1
            self.syncs_sent += 1
            t += interval
        self.last_send_time = self.last_sync_sent = t - interval
        return True

    def send_control(self, kind: int, payload: bytes = b"") -> None:
        self.transport.push(kind, self.last_send_time, payload)

    def close(self) -> None:
        self.send_control(CLOSE)


class InEndpoint:
    """Receiving side of one channel direction.

    Data messages go to ``handler(deliver_time, payload, seq)`` when one is set
    (adapters install theirs), otherwise they queue in ``inbox``.
    """

    direction = "in"

    def __init__(self, config: ChannelConfig, transport, counters: AdapterCounters | None = None):
        self.config = config
        self.transport = transport
        self.counters = counters if counters is not None else AdapterCounters()
        self.horizon = config.latency
        self.last_recv_time = 0
        self.seq = 0
        self.inbox: deque[ChannelMessage] = deque()
        self.handler = None
        self.handshakes: deque[bytes] = deque()
        self.closed = False
        self._latency = config.latency

    def poll(self) -> int:
        """Drain the transport; returns the number of data messages seen."""
        pop = self.transport.pop
        n = 0
        while True:
            m = pop()
            if m is None:
                return n
            kind, t, payload = m
            if kind == DATA or kind == SYNC:
                if t < self.last_recv_time:
                    raise ProtocolError(
                        f"channel {self.config.channel_id}: timestamp regression {t} < {self.last_recv_time}")
                self.last_recv_time = t
                h = t + self._latency
                if h > self.horizon:
                    self.horizon = h
                if kind == DATA:
                    self.seq += 1
                    n += 1
                    if self.handler is not None:
                        self.handler(h, bytes(payload), self.seq)
                    else:
                        self.inbox.append(ChannelMessage(MsgKind.DATA, t, bytes(payload), self.seq))
            elif kind == HANDSHAKE:
                if self.seq:
                    raise ProtocolError(f"channel {self.config.channel_id}: data message before handshake")
                self.handshakes.append(bytes(payload))
            elif kind == CLOSE:
                self.closed = True
            else:
                raise ProtocolError(f"channel {self.config.channel_id}: unknown message kind {kind}")

    def input_horizon(self) -> int:
        self.poll()
        return self.horizon

    def next_deliverable(self, now: int) -> ChannelMessage | None:
        """Pop the oldest queued data message if it is deliverable by ``now``."""
        self.poll()
        if self.inbox and self.inbox[0].send_time + self._latency <= now:
            return self.inbox.popleft()
        return None

    def peer_alive(self) -> bool:
        return self.transport.peer_alive()


def create_channel(config: ChannelConfig, transport=None,
                   counters: AdapterCounters | None = None) -> tuple[OutEndpoint, InEndpoint]:
    """Create both ends of one channel direction over ``transport`` (in-memory by default)."""
    if not isinstance(config, ChannelConfig):
        raise ConfigError("create_channel expects a ChannelConfig")
    if transport is None:
        transport = InMemoryTransport()
    return OutEndpoint(config, transport, counters), InEndpoint(config, transport, counters)


def create_duplex(config: ChannelConfig, doorbells=(None, None)):
    """In-memory bidirectional channel: returns ``((out_a, in_a), (out_b, in_b))``.

    ``doorbells[i]`` wakes side ``i`` when the other side sends.
    """
    a_to_b = InMemoryTransport(doorbells[1])
    b_to_a = InMemoryTransport(doorbells[0])
    ca, cb = AdapterCounters(), AdapterCounters()
    side_a = (OutEndpoint(config, a_to_b, ca), InEndpoint(config, b_to_a, ca))
    side_b = (OutEndpoint(config, b_to_a, cb), InEndpoint(config, a_to_b, cb))
    return side_a, side_b
