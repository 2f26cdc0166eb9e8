"""Partitionable packet-level network model."""

from .apps import AppSpec, Workload, ZipfSampler, make_rng
from .network import DEFAULT_QUEUE_CAPACITY, NetworkSimulator
from .packet import Packet
from .partition import Partition, partition_topology
from .stats import FlowStats, latency_summary, read_samples, write_samples
from .topology import (HostSpec, LinkSpec, RoutingError, SwitchSpec, Topology, compute_routes, gen_car_topology,
                       gen_fat_tree)

__all__ = [
    "DEFAULT_QUEUE_CAPACITY", "AppSpec", "FlowStats", "HostSpec", "LinkSpec", "NetworkSimulator", "Packet",
    "Partition", "RoutingError", "SwitchSpec", "Topology", "Workload", "ZipfSampler", "compute_routes",
    "gen_car_topology", "gen_fat_tree", "latency_summary", "make_rng", "partition_topology", "read_samples",
    "write_samples",
]
