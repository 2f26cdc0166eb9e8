"""Protocol layers over synchronized channels."""

from .base import BaseAdapter
from .codec import (DeviceMessage, DevKind, EthFrame, TrunkFrame, decode_dev, decode_eth, decode_trunk,
                    encode_dev, encode_eth, encode_trunk, mac)
from .protocols import DeviceAdapter, EthAdapter, LogicalEndpoint, TrunkAdapter

__all__ = [
    "BaseAdapter", "DevKind", "DeviceAdapter", "DeviceMessage", "EthAdapter", "EthFrame", "LogicalEndpoint",
    "TrunkAdapter", "TrunkFrame", "decode_dev", "decode_eth", "decode_trunk", "encode_dev", "encode_eth",
    "encode_trunk", "mac",
]
