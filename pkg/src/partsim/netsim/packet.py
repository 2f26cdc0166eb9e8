"""Packets carried by the network model and their Ethernet encoding."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..adapters.codec import ETH_MIN, EthFrame, mac

REQ = 1
RESP = 2
BULK = 3

_META = struct.Struct("<QBIIIQQIB")
PID_SHIFT = 40


@dataclass(slots=True)
class Packet:
    pid: int
    kind: int
    flow: int      # host index of the app that owns the exchange
    src: int       # host index
    dst: int       # host index
    length: int    # bytes on the wire
    req_id: int = 0
    issue: int = 0
    key: int = 0
    is_write: bool = False


def make_pid(host_index: int, counter: int) -> int:
    return (host_index << PID_SHIFT) | counter


def to_frame(p: Packet) -> EthFrame:
    meta = _META.pack(p.pid, p.kind, p.flow, p.src, p.dst, p.req_id, p.issue, p.key, p.is_write)
    return EthFrame(mac(p.dst), mac(p.src), max(ETH_MIN, p.length), meta)


def from_frame(f: EthFrame) -> Packet:
    pid, kind, flow, src, dst, req_id, issue, key, w = _META.unpack_from(f.payload)
    return Packet(pid, kind, flow, src, dst, f.length, req_id, issue, key, bool(w))
