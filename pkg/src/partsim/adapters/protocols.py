"""Ethernet, Device, and Trunk protocol adapters."""

from __future__ import annotations

import zlib

from ..core.channel import Protocol
from ..errors import ConfigError, ProtocolError
from .base import BaseAdapter
from .codec import (REQUESTS, RESPONSES, DeviceMessage, EthFrame, TrunkFrame, decode_dev, decode_eth,
                    decode_trunk, encode_dev, encode_eth, encode_trunk)


class EthAdapter(BaseAdapter):
    protocol = Protocol.ETHERNET

    def eth_send(self, now: int, frame: EthFrame) -> None:
        self.send(now, encode_eth(frame))

    def decode(self, payload):
        return decode_eth(payload)


class DeviceAdapter(BaseAdapter):
    """PCI-like request/response channel between a host and its NIC.

    Tracks read requests in both directions so every MMIORead/DMARead gets
    exactly one matching response.
    """

    protocol = Protocol.DEVICE

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.pending_out = {}
        self.pending_in = {}

    def dev_send(self, now: int, msg: DeviceMessage) -> None:
        if msg.kind in REQUESTS:
            if msg.req_id in self.pending_out:
                raise ProtocolError(f"{self.name}: request id {msg.req_id} already outstanding")
            self.pending_out[msg.req_id] = msg.kind
        elif msg.kind in RESPONSES:
            if self.pending_in.get(msg.req_id) != RESPONSES[msg.kind]:
                raise ProtocolError(f"{self.name}: {msg.kind.name} for unknown request {msg.req_id}")
            del self.pending_in[msg.req_id]
        self.send(now, encode_dev(msg))

    def decode(self, payload):
        msg = decode_dev(payload)
        if msg.kind in REQUESTS:
            if msg.req_id in self.pending_in:
                raise ProtocolError(f"{self.name}: duplicate inbound request id {msg.req_id}")
            self.pending_in[msg.req_id] = msg.kind
        elif msg.kind in RESPONSES:
            if self.pending_out.get(msg.req_id) != RESPONSES[msg.kind]:
                raise ProtocolError(f"{self.name}: unsolicited {msg.kind.name} id {msg.req_id}")
            del self.pending_out[msg.req_id]
        return msg


class LogicalEndpoint:
    """One sub-channel of a trunk; sends and receives through the trunk."""

    def __init__(self, trunk: "TrunkAdapter", sub_channel_id: int, key: int):
        self.trunk = trunk
        self.sub_channel_id = sub_channel_id
        self.key = key
        self.callback = None
        self.receive_hook = None
        self.seq = 0

    def send(self, now: int, payload: bytes) -> None:
        self.trunk.trunk_send(self.sub_channel_id, now, payload)

    def input_horizon(self) -> int:
        return self.trunk.in_ep.horizon

    def _deliver(self, payload) -> None:
        if self.callback is None:
            raise ProtocolError(f"{self.trunk.name}#{self.sub_channel_id}: no receive callback installed")
        self.callback(payload)


class TrunkAdapter(BaseAdapter):
    """Multiplexes many logical channels over one synchronized channel.

    Sync messages flow once for the whole trunk; logical endpoints report the
    trunk's input horizon.
    """

    protocol = Protocol.TRUNK

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.subs: dict[int, LogicalEndpoint] = {}

    def trunk_register(self, sub_channel_id: int, key: int | None = None) -> LogicalEndpoint:
        if not 0 <= sub_channel_id < 2**16:
            raise ConfigError(f"{self.name}: sub-channel id {sub_channel_id} out of range")
        if sub_channel_id in self.subs:
            raise ConfigError(f"{self.name}: sub-channel {sub_channel_id} registered twice")
        if key is None:
            key = zlib.crc32(f"{self.config.channel_id}#{sub_channel_id}".encode())
        ep = LogicalEndpoint(self, sub_channel_id, key)
        self.subs[sub_channel_id] = ep
        return ep

    register = trunk_register

    def handshake_info(self) -> dict:
        info = super().handshake_info()
        info["sub_channels"] = sorted(self.subs)
        return info

    def trunk_send(self, sub_channel_id: int, now: int, payload: bytes) -> None:
        if sub_channel_id not in self.subs:
            raise ConfigError(f"{self.name}: send on unregistered sub-channel {sub_channel_id}")
        self.send(now, encode_trunk(TrunkFrame(sub_channel_id, payload)))

    def receive(self, deliver_time: int, payload: bytes, seq: int) -> None:
        frame = decode_trunk(payload)
        ep = self.subs.get(frame.sub_channel_id)
        if ep is None:
            raise ProtocolError(f"{self.name}: frame for unregistered sub-channel {frame.sub_channel_id}")
        ep.seq += 1
        if ep.receive_hook is not None:
            ep.receive_hook(deliver_time, frame.inner, ep.seq)
        else:
            self.sim.schedule_keyed(deliver_time, ep.key, ep.seq, ep._deliver, frame.inner)
