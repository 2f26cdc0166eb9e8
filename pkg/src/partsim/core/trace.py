"""Event-trace hashing.

Two digests are kept per simulator. ``sequence`` chains records in processing
order and so pins down the exact event order of one simulator. ``multiset`` is
the sum of per-record digests modulo 2**128; it does not depend on record
order, so the multiset digests of the partitions of one run add up to the same
value however the network was split.
"""

from __future__ import annotations

import hashlib

_MOD = 1 << 128


def record_digest(fields) -> int:
    data = "|".join(map(str, fields)).encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=16).digest(), "little")


class TraceHash:
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.count = 0
        self.multiset = 0
        self._seq = hashlib.blake2b(digest_size=16)

    def record(self, *fields) -> None:
        if not self.enabled:
            return
        data = "|".join(map(str, fields)).encode()
        d = hashlib.blake2b(data, digest_size=16).digest()
        self.multiset = (self.multiset + int.from_bytes(d, "little")) % _MOD
        self._seq.update(d)
        self.count += 1

    @property
    def sequence(self) -> str:
        return self._seq.hexdigest()

    @property
    def multiset_hex(self) -> str:
        return f"{self.multiset:032x}"


def combine_multiset(hexes) -> str:
    """Combine per-simulator multiset digests into the digest of their union."""
    total = sum(int(h, 16) for h in hexes) % _MOD
    return f"{total:032x}"
