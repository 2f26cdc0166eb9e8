import threading

import pytest

from partsim.core import ChannelConfig, Simulator, Status, create_duplex, run_cooperative, run_threaded
from partsim.core.eventloop import run_event_loop, wait_until
from partsim.errors import ChannelClosedError, DeadlockError, ProtocolError
from partsim.simtime import MS, US


class PingPong(Simulator):
    """Bounces a counter back and forth; ``starts`` decides who serves first."""

    def __init__(self, name, out_ep, in_ep, starts):
        super().__init__(name)
        self.out_ep, self.in_ep = out_ep, in_ep
        self.add_endpoints(out_ep, in_ep)
        in_ep.handler = lambda t, p, seq: self.schedule_keyed(t, 1, seq, self.on_ball, p)
        self.starts = starts
        self.seen = []

    def on_start(self):
        if self.starts:
            self.schedule(0, self.hit, 0)

    def hit(self, n):
        self.out_ep.send_data(self.now, n.to_bytes(4, "little"))

    def on_ball(self, payload):
        n = int.from_bytes(payload, "little")
        self.seen.append((self.now, n))
        self.trace.record("ball", n, self.now)
        self.hit(n + 1)


def pair(latency=US, interval=None, bells=(None, None)):
    (oa, ia), (ob, ib) = create_duplex(ChannelConfig(latency, interval, "pp"), bells)
    return PingPong("a", oa, ia, True), PingPong("b", ob, ib, False)


def test_event_order_local_before_channel():
    s = Simulator("s")
    order = []
    s.schedule_keyed(5, 2, 1, order.append, "chan-2")
    s.schedule_keyed(5, 1, 9, order.append, "chan-1")
    s.schedule(5, order.append, "local-b", key=3)
    s.schedule(5, order.append, "local-a", key=1)
    s.schedule(4, order.append, "early")
    run_cooperative([s], 10)
    assert order == ["early", "local-a", "local-b", "chan-1", "chan-2"]


def test_schedule_in_past_rejected():
    s = Simulator("s")
    s.now = 10
    with pytest.raises(ProtocolError):
        s.schedule(9, print)
    with pytest.raises(ProtocolError):
        s.schedule_keyed(9, 0, 0, print)


def test_pingpong_closed_form():
    a, b = pair(latency=3 * US)
    run_cooperative([a, b], MS)
    # ball n reaches its receiver at (n + 1) * latency
    assert b.seen[:3] == [(3 * US, 0), (9 * US, 2), (15 * US, 4)]
    assert a.seen[:2] == [(6 * US, 1), (12 * US, 3)]
    assert len(a.seen) + len(b.seen) == MS // (3 * US)
    assert a.now == b.now == MS


def test_threads_match_cooperative():
    a1, b1 = pair(US, US // 2)
    run_cooperative([a1, b1], MS)
    bells = (threading.Event(), threading.Event())
    a2, b2 = pair(US, US // 2, bells)
    run_threaded([a2, b2], MS)
    assert a1.seen == a2.seen and b1.seen == b2.seen
    assert a1.trace.sequence == a2.trace.sequence
    assert a1.out_ep.syncs_sent == a2.out_ep.syncs_sent


def test_advance_blocks_at_horizon():
    a, b = pair(latency=10 * US)
    a.start_run()
    assert a.advance(MS) is Status.BLOCKED
    assert a.now == 10 * US
    b.start_run()
    assert b.advance(MS) is Status.BLOCKED


def test_cooperative_stall_is_reported():
    (oa, ia), _ = create_duplex(ChannelConfig(US, channel_id="orphan"))
    s = Simulator("lonely")
    s.add_endpoints(oa, ia)
    with pytest.raises(DeadlockError) as exc:
        run_cooperative([s], MS)
    assert "orphan" in str(exc.value)


def test_watchdog_fires():
    (oa, ia), _ = create_duplex(ChannelConfig(US, channel_id="quiet"))
    with pytest.raises(DeadlockError) as exc:
        wait_until([ia], 5 * US, watchdog=0.2)
    assert exc.value.horizons == {"quiet": US}


def test_closed_peer_is_detected():
    (oa, ia), (ob, ib) = create_duplex(ChannelConfig(US, channel_id="c"))
    ob.close()
    with pytest.raises(ChannelClosedError):
        wait_until([ia], 5 * US, watchdog=5)


def test_blocking_loop_with_peer_thread():
    bells = (threading.Event(), threading.Event())
    a, b = pair(2 * US, None, bells)
    th = threading.Thread(target=run_event_loop, args=(b, 200 * US))
    th.start()
    run_event_loop(a, 200 * US)
    th.join()
    # events at exactly end_time are not processed: balls at 2, 4, ..., 198 us
    assert len(a.seen) + len(b.seen) == 99


def test_busy_cost_slows_wall_time():
    import time
    a, b = pair(US)
    a.busy_ns = 20_000
    t0 = time.perf_counter()
    run_cooperative([a, b], 200 * US)
    assert time.perf_counter() - t0 >= len(a.seen) * 20e-6
