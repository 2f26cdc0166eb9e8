"""Wire encodings for channel payloads. All integers little-endian.

EthFrame     dst 6B | src 6B | len u16 | payload
DeviceMessage kind u8 | reqid u32 | addr u64 | len u32 | data
TrunkFrame   sub_channel_id u16 | inner length u32 | inner bytes
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from ..errors import ProtocolError

ETH_MIN = 64
ETH_MAX = 1518
ETH_HEADER = 14

_ETH = struct.Struct("<6s6sH")
_DEV = struct.Struct("<BIQI")
_TRUNK = struct.Struct("<HI")


def _malformed(what: str, data: bytes, why: str) -> ProtocolError:
    return ProtocolError(f"malformed {what} ({why}): {bytes(data).hex(' ')}")


def mac(n: int) -> bytes:
    """6-byte station id for integer ``n``."""
    return n.to_bytes(6, "little")


@dataclass(frozen=True)
class EthFrame:
    """An Ethernet frame.

    ``length`` is the size on the wire used for serialization delay; the
    ``payload`` carried on the channel may be shorter than that.
    """

    dst: bytes
    src: bytes
    length: int
    payload: bytes = b""

    def __post_init__(self):
        if len(self.dst) != 6 or len(self.src) != 6:
            raise ValueError("MAC addresses are 6 bytes")
        if not ETH_MIN <= self.length <= ETH_MAX:
            raise ValueError(f"frame length {self.length} outside [{ETH_MIN}, {ETH_MAX}]")
        if len(self.payload) > self.length - ETH_HEADER:
            raise ValueError(f"payload of {len(self.payload)} bytes does not fit a {self.length}-byte frame")


def encode_eth(frame: EthFrame) -> bytes:
    return _ETH.pack(frame.dst, frame.src, frame.length) + frame.payload


def decode_eth(data: bytes) -> EthFrame:
    if len(data) < _ETH.size:
        raise _malformed("EthFrame", data, "short header")
    dst, src, length = _ETH.unpack_from(data)
    try:
        return EthFrame(dst, src, length, bytes(data[_ETH.size:]))
    except ValueError as exc:
        raise _malformed("EthFrame", data, str(exc)) from None


class DevKind(enum.IntEnum):
    MMIO_WRITE = 1
    MMIO_READ = 2
    MMIO_READ_RESP = 3
    DMA_READ = 4
    DMA_WRITE = 5
    DMA_COMPLETE = 6
    INTERRUPT = 7


REQUESTS = {DevKind.MMIO_READ: DevKind.MMIO_READ_RESP, DevKind.DMA_READ: DevKind.DMA_COMPLETE}
RESPONSES = {v: k for k, v in REQUESTS.items()}


@dataclass(frozen=True)
class DeviceMessage:
    kind: DevKind
    address: int = 0
    data: bytes = b""
    req_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", DevKind(self.kind))
        if not 0 <= self.address < 2**64:
            raise ValueError(f"address {self.address} out of range")
        if not 0 <= self.req_id < 2**32:
            raise ValueError(f"request id {self.req_id} out of range")


def encode_dev(msg: DeviceMessage) -> bytes:
    return _DEV.pack(msg.kind, msg.req_id, msg.address, len(msg.data)) + msg.data


def decode_dev(data: bytes) -> DeviceMessage:
    if len(data) < _DEV.size:
        raise _malformed("DeviceMessage", data, "short header")
    kind, req_id, addr, n = _DEV.unpack_from(data)
    if len(data) != _DEV.size + n:
        raise _malformed("DeviceMessage", data, f"length field {n} vs {len(data) - _DEV.size} bytes")
    try:
        kind = DevKind(kind)
    except ValueError:
        raise _malformed("DeviceMessage", data, f"unknown kind {kind}") from None
    return DeviceMessage(kind, addr, bytes(data[_DEV.size:]), req_id)


@dataclass(frozen=True)
class TrunkFrame:
    sub_channel_id: int
    inner: bytes

    def __post_init__(self):
        if not 0 <= self.sub_channel_id < 2**16:
            raise ValueError(f"sub-channel id {self.sub_channel_id} out of range")


def encode_trunk(frame: TrunkFrame) -> bytes:
    return _TRUNK.pack(frame.sub_channel_id, len(frame.inner)) + frame.inner


def decode_trunk(data: bytes) -> TrunkFrame:
    if len(data) < _TRUNK.size:
        raise _malformed("TrunkFrame", data, "short header")
    sub, n = _TRUNK.unpack_from(data)
    if len(data) != _TRUNK.size + n:
        raise _malformed("TrunkFrame", data, f"length field {n} vs {len(data) - _TRUNK.size} bytes")
    return TrunkFrame(sub, bytes(data[_TRUNK.size:]))
