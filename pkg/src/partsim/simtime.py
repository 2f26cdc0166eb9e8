"""Simulated time: integer picoseconds, plus parsers for time and bandwidth strings."""

from __future__ import annotations

import re
from decimal import Decimal

PS = 1
NS = 1_000
US = 1_000_000
MS = 1_000_000_000
SEC = 1_000_000_000_000

MAX_TIME = 2**64 - 1

_TIME_UNITS = {"ps": PS, "ns": NS, "us": US, "µs": US, "ms": MS, "s": SEC}
_BW_UNITS = {"bps": 1, "kbps": 10**3, "mbps": 10**6, "gbps": 10**9, "tbps": 10**12}
_NUM_UNIT = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-zµ]*)\s*$")


def parse_time(value) -> int:
    """Convert ``value`` to picoseconds.

    Integers are taken as picoseconds already; strings carry a unit suffix,
    e.g. ``"500ns"``, ``"1.5us"``, ``"100ms"``. Fractional picoseconds are
    rejected rather than rounded.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a time: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"negative time: {value}")
        return value
    if isinstance(value, float):
        raise ValueError(f"ambiguous float time {value!r}; use an int (ps) or a unit string")
    m = _NUM_UNIT.match(str(value))
    if not m:
        raise ValueError(f"cannot parse time {value!r}")
    num, unit = m.groups()
    unit = unit or "ps"
    if unit not in _TIME_UNITS:
        raise ValueError(f"unknown time unit {unit!r} in {value!r}")
    ps = Decimal(num) * _TIME_UNITS[unit]
    if ps != ps.to_integral_value():
        raise ValueError(f"{value!r} is not a whole number of picoseconds")
    if ps < 0 or ps > MAX_TIME:
        raise ValueError(f"time {value!r} out of range")
    return int(ps)


def parse_bandwidth(value) -> int:
    """Convert ``value`` to bits per second (``"10Gbps"``, ``"100 Mbps"``, or an int)."""
    if isinstance(value, bool):
        raise ValueError(f"not a bandwidth: {value!r}")
    if isinstance(value, int):
        if value <= 0:
            raise ValueError(f"bandwidth must be positive: {value}")
        return value
    m = _NUM_UNIT.match(str(value))
    if not m:
        raise ValueError(f"cannot parse bandwidth {value!r}")
    num, unit = m.groups()
    unit = (unit or "bps").lower()
    if unit not in _BW_UNITS:
        raise ValueError(f"unknown bandwidth unit {unit!r} in {value!r}")
    bw = Decimal(num) * _BW_UNITS[unit]
    if bw <= 0 or bw != bw.to_integral_value():
        raise ValueError(f"bad bandwidth {value!r}")
    return int(bw)


def format_time(ps: int) -> str:
    """Shortest exact unit string for ``ps``; inverse of :func:`parse_time`."""
    for unit, scale in (("s", SEC), ("ms", MS), ("us", US), ("ns", NS)):
        if ps and ps % scale == 0:
            return f"{ps // scale}{unit}"
    return f"{ps}ps"


def format_bandwidth(bps: int) -> str:
    for unit, scale in (("Tbps", 10**12), ("Gbps", 10**9), ("Mbps", 10**6), ("kbps", 10**3)):
        if bps % scale == 0:
            return f"{bps // scale}{unit}"
    return f"{bps}bps"


def serialization_time(nbytes: int, bandwidth: int) -> int:
    """Picoseconds to clock ``nbytes`` onto a ``bandwidth`` bit/s link (rounded up)."""
    return -(-nbytes * 8 * SEC // bandwidth)


def to_seconds(ps: int) -> float:
    return ps / SEC
