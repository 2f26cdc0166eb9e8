"""NIC model: bridges a host's device channel and its Ethernet link."""

from __future__ import annotations

from ..adapters.codec import DeviceMessage, DevKind, decode_eth, encode_eth, mac
from ..core.eventloop import Simulator
from ..errors import ProtocolError
from ..simtime import parse_time

MAC_REGISTER = 0x0
TX_DOORBELL = 0x10
RX_BUFFER = 0x1000
IRQ_RX = 0
IRQ_TX = 1


class NicSimulator(Simulator):
    """Forwards frames between the device and Ethernet channels.

    A transmit doorbell (MMIO write) carries the frame itself; the NIC puts it
    on the wire when the doorbell arrives and raises a TX interrupt. Received
    frames are written into host memory (DMA write) followed by an RX
    interrupt. MMIO reads of the MAC register are answered after
    ``mmio_latency``.
    """

    def __init__(self, name: str, host_index: int, *, mmio_latency=0, **kw):
        super().__init__(name, **kw)
        self.host_index = host_index
        self.mac = mac(host_index)
        self.mmio_latency = parse_time(mmio_latency)
        self.dev = None
        self.eth = None
        self.tx_frames = 0
        self.rx_frames = 0
        self._irq_id = 0

    def bind(self, dev_adapter, eth_adapter) -> None:
        self.dev = dev_adapter
        self.eth = eth_adapter
        dev_adapter.callback = self._on_device
        eth_adapter.callback = self._on_frame

    def _on_device(self, msg: DeviceMessage) -> None:
        now = self.now
        if msg.kind == DevKind.MMIO_WRITE and msg.address == TX_DOORBELL:
            frame = decode_eth(msg.data)
            self.trace.record("ntx", msg.req_id, now)
            self.tx_frames += 1
            self.eth.eth_send(now, frame)
            self.dev.dev_send(now, DeviceMessage(DevKind.INTERRUPT, IRQ_TX, b"", msg.req_id))
        elif msg.kind == DevKind.MMIO_READ:
            data = self.mac if msg.address == MAC_REGISTER else bytes(8)
            self.schedule(now + self.mmio_latency, self._read_resp, msg.req_id, data)
        elif msg.kind == DevKind.MMIO_WRITE:
            pass  # configuration registers are accepted and ignored
        else:
            raise ProtocolError(f"{self.name}: unexpected device message {msg.kind.name}")

    def _read_resp(self, req_id: int, data: bytes) -> None:
        self.dev.dev_send(self.now, DeviceMessage(DevKind.MMIO_READ_RESP, MAC_REGISTER, data, req_id))

    def _on_frame(self, frame) -> None:
        now = self.now
        self.rx_frames += 1
        self._irq_id += 1
        self.trace.record("nrx", self._irq_id, now)
        self.dev.dev_send(now, DeviceMessage(DevKind.DMA_WRITE, RX_BUFFER, encode_eth(frame), self._irq_id))
        self.dev.dev_send(now, DeviceMessage(DevKind.INTERRUPT, IRQ_RX, b"", self._irq_id))

    def stats(self) -> dict:
        return {
            "sim": self.name,
            "kind": "nic",
            "end_time": self.now,
            "events": self.events_processed,
            "tx_frames": self.tx_frames,
            "rx_frames": self.rx_frames,
            "trace": {"records": self.trace.count, "multiset": self.trace.multiset_hex,
                      "sequence": self.trace.sequence},
        }
