"""Configuration parsing, instantiation, execution, and report merging."""

from .config import (HostConfig, Instantiation, LinkConfig, NicConfig, SwitchConfig, SystemConfig, load_instantiation,
                     load_system, parse_instantiation, parse_system, system_from_topology)
from .execute import EXIT_DEADLOCK, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, execute
from .instantiate import ChannelPlan, ProcessPlan, RunPlan, instantiate
from .report import WALL_SECTIONS, merge_reports

__all__ = [
    "EXIT_DEADLOCK", "EXIT_OK", "EXIT_RUNTIME", "EXIT_VALIDATION", "WALL_SECTIONS", "ChannelPlan", "HostConfig",
    "Instantiation", "LinkConfig", "NicConfig", "ProcessPlan", "RunPlan", "SwitchConfig", "SystemConfig", "execute",
    "instantiate", "load_instantiation", "load_system", "merge_reports", "parse_instantiation", "parse_system",
    "system_from_topology",
]
