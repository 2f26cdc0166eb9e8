"""Detailed host model: network stack delay, a single CPU with a run queue,
and a bounded transmit descriptor ring in front of the NIC."""

from __future__ import annotations

from collections import deque

from ..adapters.codec import DeviceMessage, DevKind, decode_eth, encode_eth
from ..core.eventloop import Simulator
from ..errors import ConfigError, ProtocolError
from ..netsim.apps import AppSpec, Workload, make_rng
from ..netsim.packet import BULK, REQ, RESP, Packet, from_frame, make_pid, to_frame
from ..netsim.stats import FlowStats
from ..simtime import SEC, US, parse_time
from .nic import IRQ_RX, IRQ_TX, MAC_REGISTER, TX_DOORBELL

DEFAULTS = {
    "stack_delay": 5 * US,
    "cost_cycles": 40_000,
    "cost_dist": "fixed",
    "freq": 4_000_000_000,
    "tx_ring": 256,
    "run_queue": 1024,
}


class HostSimulator(Simulator):
    def __init__(self, name: str, host_id: str, host_names: list, app: AppSpec, *, seed: int = 0,
                 stack_delay=DEFAULTS["stack_delay"], cost_cycles: int = DEFAULTS["cost_cycles"],
                 cost_dist: str = DEFAULTS["cost_dist"], freq: int = DEFAULTS["freq"],
                 tx_ring: int = DEFAULTS["tx_ring"], run_queue: int = DEFAULTS["run_queue"], **kw):
        super().__init__(name, **kw)
        if not isinstance(app, AppSpec):
            app = AppSpec.from_dict(app)
        self.host_id = host_id
        self.host_names = list(host_names)
        self._index_of = {h: i for i, h in enumerate(self.host_names)}
        if host_id not in self._index_of:
            raise ConfigError(f"{name}: host {host_id} is not in the topology")
        if app.target is not None and app.target not in self._index_of:
            raise ConfigError(f"{name}: app targets unknown host {app.target}")
        if cost_dist not in ("fixed", "exp"):
            raise ConfigError(f"{name}: cost distribution must be 'fixed' or 'exp', got {cost_dist!r}")
        if freq <= 0 or cost_cycles < 0 or tx_ring < 1 or run_queue < 1:
            raise ConfigError(f"{name}: host parameters must be positive")
        self.index = self._index_of[host_id]
        self.app = app
        self.stack_delay = parse_time(stack_delay)
        self.cost_cycles = int(cost_cycles)
        self.cost_dist = cost_dist
        self.freq = int(freq)
        self.tx_ring = tx_ring
        self.run_queue = run_queue
        self.workload = Workload(app, seed, host_id) if app.role in ("client", "bulk") else None
        self._cpu_rng = make_rng(seed, host_id + "/cpu")
        self.dev = None
        self.mac = None
        self.counter = 0
        self._tx_id = 0
        self._outstanding = 0
        self._backlog = deque()
        self._rx_pending = deque()
        self._cpu_busy_until = 0
        self._runq = 0
        self.flows: dict[str, FlowStats] = {}
        self.served = 0
        self.runq_drops = 0
        self.max_backlog = 0
        self.tx_packets = 0
        self.rx_packets = 0

    def bind(self, dev_adapter) -> None:
        self.dev = dev_adapter
        dev_adapter.callback = self._on_device

    def on_start(self) -> None:
        self.dev.dev_send(0, DeviceMessage(DevKind.MMIO_READ, MAC_REGISTER, b"", 0))
        if self.workload is not None:
            t, key, w = self.workload.next_request()
            self.schedule(t, self._issue, key, w)

    def flow(self, index: int) -> FlowStats:
        host = self.host_names[index]
        fs = self.flows.get(host)
        if fs is None:
            fs = self.flows[host] = FlowStats()
        return fs

    # -- transmit ---------------------------------------------------------
    def _issue(self, key: int, is_write: bool) -> None:
        spec = self.app
        self.counter += 1
        kind = REQ if spec.role == "client" else BULK
        pkt = Packet(make_pid(self.index, self.counter), kind, self.index, self.index,
                     self._index_of[spec.target], spec.request_size, self.counter, self.now, key, is_write)
        self.flow(self.index).sent += 1
        self.schedule(self.now + self.stack_delay, self._to_nic, pkt)
        t, key, w = self.workload.next_request()
        self.schedule(t, self._issue, key, w)

    def _to_nic(self, pkt: Packet) -> None:
        if self.mac is None or self._outstanding >= self.tx_ring:
            self._backlog.append(pkt)
            if len(self._backlog) > self.max_backlog:
                self.max_backlog = len(self._backlog)
            return
        self._doorbell(pkt)

    def _doorbell(self, pkt: Packet) -> None:
        self._outstanding += 1
        self._tx_id += 1
        self.tx_packets += 1
        self.trace.record("tx", pkt.pid, self.now)
        self.dev.dev_send(self.now, DeviceMessage(DevKind.MMIO_WRITE, TX_DOORBELL, encode_eth(to_frame(pkt)),
                                                  self._tx_id))

    def _drain(self) -> None:
        while self._backlog and self._outstanding < self.tx_ring and self.mac is not None:
            self._doorbell(self._backlog.popleft())

    # -- device messages --------------------------------------------------
    def _on_device(self, msg: DeviceMessage) -> None:
        if msg.kind == DevKind.MMIO_READ_RESP:
            self.mac = msg.data
            self._drain()
        elif msg.kind == DevKind.DMA_WRITE:
            self._rx_pending.append(msg.data)
        elif msg.kind == DevKind.INTERRUPT and msg.address == IRQ_TX:
            self._outstanding -= 1
            self._drain()
        elif msg.kind == DevKind.INTERRUPT and msg.address == IRQ_RX:
            while self._rx_pending:
                pkt = from_frame(decode_eth(self._rx_pending.popleft()))
                self.schedule(self.now + self.stack_delay, self._to_app, pkt)
        else:
            raise ProtocolError(f"{self.name}: unexpected device message {msg.kind.name}")

    # -- receive ----------------------------------------------------------
    def _to_app(self, pkt: Packet) -> None:
        now = self.now
        self.rx_packets += 1
        self.trace.record("rx", pkt.pid, now)
        role = self.app.role
        if pkt.kind == REQ and role == "server":
            if self._runq >= self.run_queue:
                self.runq_drops += 1
                self.flow(pkt.flow).dropped += 1
                return
            self._runq += 1
            start = self._cpu_busy_until if self._cpu_busy_until > now else now
            self._cpu_busy_until = start + self._service_time()
            self.schedule(self._cpu_busy_until, self._served, pkt)
        elif pkt.kind == RESP and role == "client":
            fs = self.flow(pkt.flow)
            fs.received += 1
            fs.bytes += pkt.length
            fs.samples.append((pkt.req_id, pkt.issue, now))
        elif pkt.kind == BULK:
            fs = self.flow(pkt.flow)
            fs.received += 1
            fs.bytes += pkt.length

    def _service_time(self) -> int:
        cycles = self.cost_cycles
        if self.cost_dist == "exp" and cycles:
            cycles = int(self._cpu_rng.exponential(cycles))
        return cycles * SEC // self.freq

    def _served(self, req: Packet) -> None:
        self._runq -= 1
        self.served += 1
        self.counter += 1
        pkt = Packet(make_pid(self.index, self.counter), RESP, req.flow, self.index, req.src,
                     self.app.response_size, req.req_id, req.issue, req.key, req.is_write)
        self.schedule(self.now + self.stack_delay, self._to_nic, pkt)

    def stats(self) -> dict:
        return {
            "sim": self.name,
            "kind": "host",
            "end_time": self.now,
            "events": self.events_processed,
            "served": self.served,
            "runq_drops": self.runq_drops,
            "max_tx_backlog": self.max_backlog,
            "tx_packets": self.tx_packets,
            "rx_packets": self.rx_packets,
            "flows": {h: fs.as_dict() for h, fs in sorted(self.flows.items())},
            "trace": {"records": self.trace.count, "multiset": self.trace.multiset_hex,
                      "sequence": self.trace.sequence},
        }
