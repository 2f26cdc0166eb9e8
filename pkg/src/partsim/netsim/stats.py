"""Per-flow counters, latency summaries, and the binary latency-sample format."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..simtime import NS

_SAMPLE = struct.Struct("<QQQ")


@dataclass
class FlowStats:
    sent: int = 0          # requests (or bulk packets) issued by the flow's source app
    received: int = 0      # responses (or bulk packets) that reached their app
    dropped: int = 0       # packets of this flow dropped anywhere
    bytes: int = 0         # wire bytes of received packets
    injected: int = 0      # every packet of the flow put on the network
    delivered: int = 0     # every packet of the flow that reached its destination host
    samples: list = field(default_factory=list)  # (req id, issue ps, completion ps)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("sent", "received", "dropped", "bytes", "injected", "delivered")}
        d["latency_ns"] = latency_summary(self.samples)
        return d


def latency_summary(samples) -> dict:
    if not samples:
        return {"count": 0, "mean": None, "median": None, "p99": None}
    lat = np.array([c - i for _, i, c in samples], dtype=np.float64) / NS
    return {
        "count": int(lat.size),
        "mean": float(lat.mean()),
        "median": float(np.percentile(lat, 50)),
        "p99": float(np.percentile(lat, 99)),
    }


def write_samples(path, samples) -> None:
    with open(path, "wb") as fh:
        for rec in samples:
            fh.write(_SAMPLE.pack(*rec))


def read_samples(path) -> list[tuple[int, int, int]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) % _SAMPLE.size:
        raise ValueError(f"{path}: truncated latency sample file")
    return [_SAMPLE.unpack_from(data, off) for off in range(0, len(data), _SAMPLE.size)]


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
