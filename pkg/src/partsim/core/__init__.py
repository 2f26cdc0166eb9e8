"""Synchronization substrate: channels, transports, and the event loop."""

from .channel import (ChannelConfig, ChannelMessage, InEndpoint, MsgKind, OutEndpoint, Protocol,
                      create_channel, create_duplex)
from .eventloop import (EventQueue, Simulator, Status, run_cooperative, run_event_loop, run_threaded,
                        wait_until)
from .transport import InMemoryTransport, ShmSegment

__all__ = [
    "ChannelConfig", "ChannelMessage", "EventQueue", "InEndpoint", "InMemoryTransport", "MsgKind",
    "OutEndpoint", "Protocol", "ShmSegment", "Simulator", "Status", "create_channel", "create_duplex",
    "run_cooperative", "run_event_loop", "run_threaded", "wait_until",
]
