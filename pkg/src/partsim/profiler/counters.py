"""Per-adapter cycle counters.

"Cycles" are readings of :func:`time.perf_counter_ns`, so one cycle is one
nanosecond of wall time and :data:`CYCLES_PER_SECOND` is 1e9. Logs record the
constant in their header so post-processing never assumes it.

Setting ``PARTSIM_NO_INSTRUMENTATION=1`` in the environment before import
removes counter updates from all hot paths regardless of runtime settings.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

CYCLES_PER_SECOND = 1_000_000_000
INSTRUMENTATION = os.environ.get("PARTSIM_NO_INSTRUMENTATION", "") not in ("1", "true", "yes")

read_cycles = time.perf_counter_ns


@dataclass
class AdapterCounters:
    """Monotone wall-cycle totals for one adapter.

    The three categories are disjoint: every measured interval is added to
    exactly one of them.
    """

    cycles_wait_sync: int = 0
    cycles_tx: int = 0
    cycles_rx: int = 0

    def snapshot(self) -> tuple[int, int, int]:
        return (self.cycles_wait_sync, self.cycles_tx, self.cycles_rx)
