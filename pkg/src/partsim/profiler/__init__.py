"""Synchronization and communication profiling."""

from .analysis import (ProfileReport, SimSpeedMismatch, WtpEdge, WtpGraph, WtpNode, build_wtpg,
                       compute_efficiency, compute_sim_speed, emit_dot, profile_report)
from .counters import CYCLES_PER_SECOND, INSTRUMENTATION, AdapterCounters
from .log import ProfileLog, ProfileSample, SampleLogger, load_logs, parse_logs

__all__ = [
    "CYCLES_PER_SECOND", "INSTRUMENTATION", "AdapterCounters", "ProfileLog", "ProfileReport", "ProfileSample",
    "SampleLogger", "SimSpeedMismatch", "WtpEdge", "WtpGraph", "WtpNode", "build_wtpg", "compute_efficiency",
    "compute_sim_speed", "emit_dot", "load_logs", "parse_logs", "profile_report",
]
