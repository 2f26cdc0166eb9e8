"""Per-simulator event loop, conservative waiting, and run drivers.

Event ordering is ``(time, class, key1, key2, insertion counter)``. Local
events use class 0 and sort before channel deliveries (class 1) of the same
time; deliveries are keyed by ``(channel key, seq)`` unless the receiving
simulator supplies its own partition-independent key.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import time

from ..errors import ChannelClosedError, DeadlockError, ProtocolError
from ..profiler.counters import INSTRUMENTATION, read_cycles
from ..simtime import MAX_TIME
from .trace import TraceHash

log = logging.getLogger(__name__)

LOCAL = 0
CHANNEL = 1
DEFAULT_WATCHDOG = 60.0


class Status(enum.Enum):
    BLOCKED = "blocked"
    DONE = "done"


class EventQueue:
    """Min-heap of ``(time, class, key1, key2, counter, callback, args)`` entries."""

    def __init__(self):
        self._heap = []
        self._counter = itertools.count()

    def push(self, time, callback, args=(), cls=LOCAL, key1=0, key2=0) -> None:
        heapq.heappush(self._heap, (time, cls, key1, key2, next(self._counter), callback, args))

    def pop(self):
        return heapq.heappop(self._heap)

    def peek_time(self) -> int:
        return self._heap[0][0] if self._heap else MAX_TIME

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)


class Simulator:
    """Base class for component simulators.

    Subclasses schedule their initial events in :meth:`on_start` and attach
    adapters before the run. ``busy_ns`` adds that much wall time per
    processed event (used to inject an artificial bottleneck). It spins by
    default; with ``busy_sleep`` the cost for a batch of events is slept off
    instead, so the simulator is slow without taking the CPU from its peers.
    """

    def __init__(self, name: str, *, watchdog: float = DEFAULT_WATCHDOG, trace: bool = True):
        self.name = name
        self.now = 0
        self.queue = EventQueue()
        self.in_eps = []
        self.out_eps = []
        self.adapters = []
        self.watchdog = watchdog
        self.logger = None
        self.busy_ns = 0
        self.busy_sleep = False
        self.events_processed = 0
        self._rounds = 0
        self.trace = TraceHash(trace)
        self._started = False
        self._finished = False

    # -- scheduling -------------------------------------------------------
    def schedule(self, time: int, callback, *args, key: int = 0) -> None:
        if time < self.now:
            raise ProtocolError(f"{self.name}: event scheduled at {time} in the past (now {self.now})")
        self.queue.push(time, callback, args, LOCAL, key, 0)

    def schedule_keyed(self, time: int, key1: int, key2: int, callback, *args) -> None:
        if time < self.now:
            raise ProtocolError(f"{self.name}: delivery at {time} in the past (now {self.now})")
        self.queue.push(time, callback, args, CHANNEL, key1, key2)

    def add_endpoints(self, out_ep=None, in_ep=None) -> None:
        if out_ep is not None:
            self.out_eps.append(out_ep)
        if in_ep is not None:
            self.in_eps.append(in_ep)

    def attach(self, adapter) -> None:
        self.adapters.append(adapter)
        self.add_endpoints(adapter.out_ep, adapter.in_ep)

    # -- hooks ------------------------------------------------------------
    def on_start(self) -> None:
        pass

    def on_finish(self) -> None:
        pass

    def start_run(self) -> None:
        if self._started:
            return
        self._started = True
        if self.logger is not None:
            self.logger.start()
        self.on_start()

    def finish_run(self) -> None:
        if self._finished:
            return
        self._finished = True
        for ep in self.out_eps:
            ep.close()
        if self.logger is not None:
            self.logger.sample(final=True)
        self.on_finish()

    # -- main loop --------------------------------------------------------
    def horizon(self) -> int:
        h = MAX_TIME
        for ep in self.in_eps:
            ep.poll()
            if ep.horizon < h:
                h = ep.horizon
        return h

    def advance(self, end_time: int) -> Status:
        """Process every event that is safe now, then report DONE or BLOCKED.

        On BLOCKED the clock has moved up to the input horizon and syncs have
        gone out; the caller waits for some horizon to pass ``self.now``.
        """
        heap = self.queue._heap
        pop = heapq.heappop
        outs = self.out_eps
        horizon = self.horizon()
        limit = horizon if horizon < end_time else end_time
        logger = self.logger
        busy = 0 if self.busy_sleep else self.busy_ns
        n = 0
        while heap and heap[0][0] < limit:
            ev = pop(heap)
            t = ev[0]
            if t != self.now:
                self.now = t
                for ep in outs:
                    ep.maybe_send_sync(t)
            ev[5](*ev[6])
            n += 1
            if busy:
                stop = time.perf_counter_ns() + busy
                while time.perf_counter_ns() < stop:
                    pass
            if logger is not None and not n & 63:
                logger.tick()
        self.events_processed += n
        if n and self.busy_sleep and self.busy_ns:
            time.sleep(n * self.busy_ns / 1e9)
        if logger is not None:
            self._rounds += 1
            if not self._rounds & 15:
                logger.tick()
        target = end_time if horizon >= end_time else horizon
        if target > self.now:
            self.now = target
            for ep in outs:
                ep.maybe_send_sync(target)
        return Status.DONE if horizon >= end_time else Status.BLOCKED

    def horizons(self) -> dict:
        return {ep.config.channel_id: ep.horizon for ep in self.in_eps}


def wait_until(eps, t: int, counters=None, *, watchdog: float = DEFAULT_WATCHDOG,
               on_idle=None, profiling: bool = True) -> None:
    """Block until every endpoint in ``eps`` has an input horizon of at least ``t``.

    Wall time spent blocked goes to ``cycles_wait_sync`` of the endpoint that
    was last to reach ``t``, the one that actually ended the wait (or of
    ``counters`` when given). Raises
    :class:`ChannelClosedError` if a lagging peer closed or died and
    :class:`DeadlockError` after ``watchdog`` seconds without horizon progress.
    """
    profiling = profiling and INSTRUMENTATION
    watchdog_ns = int(watchdog * 1e9)
    attempt = 0
    last_low = None
    deadline = None
    w0 = None
    culprit = None
    while True:
        blocked = None
        for ep in eps:
            if ep.horizon < t:
                ep.poll()
                if ep.horizon < t and (blocked is None or ep.horizon < blocked.horizon):
                    blocked = ep
        if blocked is None:
            if profiling and w0 is not None:
                (counters or culprit.counters).cycles_wait_sync += read_cycles() - w0
            return
        culprit = blocked
        # the watchdog clock doubles as the start of the blocked interval
        now = read_cycles()
        if w0 is None:
            w0 = now
        if blocked.horizon != last_low:
            last_low = blocked.horizon
            deadline = now + watchdog_ns
        elif now > deadline:
            horizons = {ep.config.channel_id: ep.horizon for ep in eps}
            raise DeadlockError(f"no synchronization progress for {watchdog:.0f}s waiting for t={t}; "
                                f"horizons: {horizons}", horizons)
        if blocked.closed:
            raise ChannelClosedError(
                f"channel {blocked.config.channel_id} closed at horizon {blocked.horizon} < {t}")
        if attempt & 255 == 255 and not blocked.peer_alive():
            blocked.poll()
            if blocked.horizon < t:
                raise ChannelClosedError(f"peer of channel {blocked.config.channel_id} died")
        blocked.transport.wait(attempt)
        attempt += 1
        if on_idle is not None and not attempt & 63:
            on_idle()


def run_event_loop(sim: Simulator, end_time: int, *, profiling: bool = True) -> int:
    """Drive ``sim`` to ``end_time`` with blocking waits; returns exit status 0."""
    sim.start_run()
    idle = sim.logger.tick if sim.logger is not None else None
    while sim.advance(end_time) is Status.BLOCKED:
        wait_until(sim.in_eps, sim.now + 1, watchdog=sim.watchdog, on_idle=idle, profiling=profiling)
    sim.finish_run()
    return 0


def run_cooperative(sims, end_time: int) -> None:
    """Run several simulators round-robin in the calling thread.

    Only valid with in-memory transports. Equivalent in simulated outcome to
    running each simulator in its own thread or process.
    """
    sims = list(sims)
    for s in sims:
        s.start_run()
    pending = list(sims)
    while pending:
        progressed = False
        for s in list(pending):
            before = (s.now, s.events_processed)
            if s.advance(end_time) is Status.DONE:
                s.finish_run()
                pending.remove(s)
                progressed = True
            elif (s.now, s.events_processed) != before:
                progressed = True
        if not progressed:
            detail = {s.name: s.horizons() for s in pending}
            raise DeadlockError(f"cooperative run stalled: {detail}", detail)


def run_threaded(sims, end_time: int, *, profiling: bool = True) -> None:
    """Run each simulator in its own thread; re-raises the first failure."""
    import threading

    errors = []

    def body(sim):
        try:
            run_event_loop(sim, end_time, profiling=profiling)
        except BaseException as exc:  # noqa: BLE001 - reported to the caller
            log.error("simulator %s failed: %s", sim.name, exc)
            errors.append(exc)
            for ep in sim.out_eps:
                ep.close()

    threads = [threading.Thread(target=body, args=(s,), name=s.name, daemon=True) for s in sims]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]
