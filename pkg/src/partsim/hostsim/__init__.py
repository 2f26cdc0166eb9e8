"""Detailed host and NIC simulators."""

from .host import DEFAULTS, HostSimulator
from .nic import NicSimulator

__all__ = ["DEFAULTS", "HostSimulator", "NicSimulator"]
