"""Single-producer/single-consumer message transports.

A transport moves ``(kind, send_time, payload)`` triples in one direction.
:class:`InMemoryTransport` serves endpoints living in one OS process (same or
different threads); :class:`ShmSegment` lays out two ring buffers in a
memory-mapped file so two processes can share a bidirectional channel.
"""

from __future__ import annotations

import collections
import mmap
import os
import struct
import threading
import time

from ..errors import ChannelClosedError, ConfigError, ProtocolError

MAGIC = b"SPLTSIM1"
VERSION = 1
DEFAULT_SLOTS = 2048
DEFAULT_PAYLOAD = 2048

# magic, version, slot count, slot size, latency, sync_interval, writer pid ring 0, writer pid ring 1
_HEADER = struct.Struct("<8sIIIxxxxQQII")
HEADER_SIZE = 64
# kind, send_time, payload length
_SLOT_HEAD = struct.Struct("<BQI")
SLOT_HEAD_SIZE = _SLOT_HEAD.size
_PID_OFFSETS = (40, 44)

EMPTY = 0


class InMemoryTransport:
    """Deque-backed transport for endpoints inside one process.

    ``deque.append``/``popleft`` are atomic under CPython, which is all a
    single producer and single consumer need. ``doorbell`` (a
    :class:`threading.Event`) is set on every push when the consumer runs in
    another thread.
    """

    def __init__(self, doorbell: threading.Event | None = None):
        self._q = collections.deque()
        self.doorbell = doorbell
        self.closed_by_writer = False

    def push(self, kind: int, send_time: int, payload: bytes = b"") -> None:
        self._q.append((kind, send_time, payload))
        if self.doorbell is not None:
            self.doorbell.set()

    def pop(self):
        try:
            return self._q.popleft()
        except IndexError:
            return None

    def peer_alive(self) -> bool:
        return True

    def wait(self, attempt: int) -> None:
        if self.doorbell is not None:
            self.doorbell.wait(0.01)
            self.doorbell.clear()
        else:
            time.sleep(0 if attempt < 64 else 1e-4)

    def __len__(self):
        return len(self._q)


def segment_size(slots: int, slot_size: int) -> int:
    return HEADER_SIZE + 2 * slots * slot_size


class ShmSegment:
    """A channel segment: fixed header followed by one ring per direction.

    Side ``0`` writes ring 0 and reads ring 1; side ``1`` the reverse. Each slot
    is ``{kind u8, send_time u64, length u32, payload}``; ``kind == 0`` marks
    the slot free. The producer fills the body first and stores the kind byte
    last, the consumer clears it after copying the body out.
    """

    def __init__(self, path: str, mm: mmap.mmap, fd: int):
        self.path = path
        self._mm = mm
        self._fd = fd
        magic, version, slots, slot_size, latency, sync_interval, _, _ = _HEADER.unpack_from(mm, 0)
        if magic != MAGIC:
            raise ProtocolError(f"{path}: bad segment magic {magic!r}")
        if version != VERSION:
            raise ProtocolError(f"{path}: segment version {version}, expected {VERSION}")
        self.slots = slots
        self.slot_size = slot_size
        self.latency = latency
        self.sync_interval = sync_interval

    @classmethod
    def create(cls, path: str, latency: int, sync_interval: int,
               slots: int = DEFAULT_SLOTS, payload_size: int = DEFAULT_PAYLOAD) -> "ShmSegment":
        if slots <= 0 or payload_size <= 0:
            raise ConfigError("slot count and payload size must be positive")
        slot_size = SLOT_HEAD_SIZE + payload_size
        size = segment_size(slots, slot_size)
        try:
            fd = os.open(path, os.O_RDWR | os.O_CREAT | os.O_EXCL, 0o600)
        except FileExistsError:
            raise ConfigError(f"shared-memory segment {path} already exists") from None
        try:
            os.ftruncate(fd, size)
            mm = mmap.mmap(fd, size)
        except BaseException:
            os.close(fd)
            os.unlink(path)
            raise
        _HEADER.pack_into(mm, 0, MAGIC, VERSION, slots, slot_size, latency, sync_interval, 0, 0)
        return cls(path, mm, fd)

    @classmethod
    def attach(cls, path: str) -> "ShmSegment":
        fd = os.open(path, os.O_RDWR)
        try:
            mm = mmap.mmap(fd, os.fstat(fd).st_size)
        except BaseException:
            os.close(fd)
            raise
        return cls(path, mm, fd)

    def ring(self, index: int) -> "ShmRing":
        return ShmRing(self, index)

    def side(self, side: int) -> tuple["ShmRing", "ShmRing"]:
        """Return ``(outgoing ring, incoming ring)`` for ``side`` 0 or 1 and claim writership."""
        if side not in (0, 1):
            raise ValueError(side)
        struct.pack_into("<I", self._mm, _PID_OFFSETS[side], os.getpid())
        return self.ring(side), self.ring(1 - side)

    def writer_pid(self, ring: int) -> int:
        return struct.unpack_from("<I", self._mm, _PID_OFFSETS[ring])[0]

    def close(self) -> None:
        try:
            self._mm.close()
        except BufferError:
            pass
        os.close(self._fd)


class ShmRing:
    """One direction of a :class:`ShmSegment`; usable as producer or consumer."""

    def __init__(self, segment: ShmSegment, index: int):
        self.segment = segment
        self.index = index
        self._mm = segment._mm
        self._base = HEADER_SIZE + index * segment.slots * segment.slot_size
        self._slots = segment.slots
        self._slot_size = segment.slot_size
        self._max_payload = segment.slot_size - SLOT_HEAD_SIZE
        self._pos = 0
        self.doorbell = None

    def push(self, kind: int, send_time: int, payload: bytes = b"") -> None:
        n = len(payload)
        if n > self._max_payload:
            raise ProtocolError(f"payload of {n} bytes exceeds slot capacity {self._max_payload}")
        mm = self._mm
        off = self._base + self._pos * self._slot_size
        attempt = 0
        while mm[off] != EMPTY:
            # ring full: back-pressure until the consumer frees the slot
            _backoff(attempt)
            attempt += 1
            if attempt % 1024 == 0 and not self.reader_alive():
                raise ChannelClosedError(f"{self.segment.path}: reader gone while ring full")
        struct.pack_into("<QI", mm, off + 1, send_time, n)
        if n:
            mm[off + SLOT_HEAD_SIZE:off + SLOT_HEAD_SIZE + n] = payload
        mm[off] = kind
        self._pos = (self._pos + 1) % self._slots

    def pop(self):
        mm = self._mm
        off = self._base + self._pos * self._slot_size
        kind = mm[off]
        if kind == EMPTY:
            return None
        send_time, n = struct.unpack_from("<QI", mm, off + 1)
        payload = mm[off + SLOT_HEAD_SIZE:off + SLOT_HEAD_SIZE + n] if n else b""
        mm[off] = EMPTY
        self._pos = (self._pos + 1) % self._slots
        return kind, send_time, payload

    def peer_alive(self) -> bool:
        """Whether the process writing this ring still exists."""
        return _pid_alive(self.segment.writer_pid(self.index))

    def reader_alive(self) -> bool:
        return _pid_alive(self.segment.writer_pid(1 - self.index))

    def wait(self, attempt: int) -> None:
        _backoff(attempt)


def _pid_alive(pid: int) -> bool:
    if pid == 0:
        return True  # not attached yet
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


SPIN_YIELDS = 1024
MAX_SLEEP = 2e-4


def _backoff(attempt: int) -> None:
    # yielding hands the core to whichever peer has work; sleeping only once a
    # peer has been silent for a while keeps wake-up latency low on busy hosts
    if attempt < SPIN_YIELDS:
        os.sched_yield()
    else:
        time.sleep(min(MAX_SLEEP, 1e-5 * (1 << min(attempt - SPIN_YIELDS, 5))))
