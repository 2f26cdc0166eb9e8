import io
import warnings

import pytest
from hypothesis import given, strategies as st

from partsim.core import Simulator
from partsim.errors import ConfigError
from partsim.profiler import (AdapterCounters, ProfileLog, ProfileSample, SampleLogger, SimSpeedMismatch,
                              build_wtpg, compute_efficiency, compute_sim_speed, emit_dot, parse_logs,
                              profile_report)
from partsim.profiler.analysis import GREEN, RED
from partsim.simtime import SEC

CPS = 1000  # synthetic logs use 1000 cycles per second


def log(sim, rows, cps=CPS):
    """rows: (wall_cycles, sim_time_s, {adapter: (wait, tx, rx)})."""
    samples = [ProfileSample(w, int(t * SEC), {k: AdapterCounters(*v) for k, v in c.items()}) for w, t, c in rows]
    return ProfileLog(sim, cps, samples)


def test_sim_speed_reference_numbers():
    # 20 simulated seconds in 175 wall minutes
    wall = 175 * 60 * CPS
    entry = log("net", [(0, 0, {}), (0, 0, {}), (wall, 20, {}), (wall, 20, {})])
    assert compute_sim_speed({"net": entry}) == pytest.approx(20 / (175 * 60), abs=1e-12)
    assert abs(compute_sim_speed({"net": entry}) - 1.905e-3) <= 1e-6
    unit = log("x", [(0, 0, {}), (0, 0, {}), (10 * CPS, 10, {}), (10 * CPS, 10, {})])
    assert compute_sim_speed({"x": unit}) == 1.0


def test_sim_speed_uses_warmup_and_cooldown():
    rows = [(0, 0, {}), (100, 50, {}), (1100, 51, {}), (2100, 52, {}), (9999, 99, {})]
    # window is sample 1 .. sample 3: 2 sim s in 2 wall s
    assert compute_sim_speed({"a": log("a", rows)}) == 1.0
    assert compute_sim_speed({"a": log("a", rows)}, warmup=0, cooldown=0) == pytest.approx(99 / 9.999)


def test_too_few_samples_names_log():
    with pytest.raises(ValueError, match="shorty"):
        compute_sim_speed({"shorty": log("shorty", [(0, 0, {}), (1, 1, {}), (2, 2, {})])})


def test_speed_disagreement_warns():
    a = log("a", [(0, 0, {}), (0, 0, {}), (CPS, 1, {}), (CPS, 1, {})])
    b = log("b", [(0, 0, {}), (0, 0, {}), (CPS, 1.05, {}), (CPS, 1.05, {})])
    with pytest.warns(SimSpeedMismatch):
        compute_sim_speed({"a": a, "b": b})
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        compute_sim_speed({"a": a, "a2": log("a2", [(0, 0, {}), (0, 0, {}), (CPS, 1.005, {}), (CPS, 1.005, {})])})


def test_efficiency_reference_numbers():
    z = (0, 0, 0)
    e = log("s", [(0, 0, {"c": z}), (0, 0, {"c": z}), (100, 1, {"c": (20, 10, 30)}), (100, 1, {"c": (20, 10, 30)})])
    assert compute_efficiency(e) == 0.4
    idle = log("i", [(0, 0, {"c": z}), (0, 0, {"c": z}), (100, 1, {"c": (100, 0, 0)}), (100, 1, {"c": (100, 0, 0)})])
    assert compute_efficiency(idle) == 0.0
    free = log("f", [(0, 0, {}), (0, 0, {}), (100, 1, {}), (100, 1, {})])
    assert compute_efficiency(free) == 1.0
    flat = log("z", [(0, 0, {}), (0, 0, {}), (0, 1, {}), (0, 1, {})])
    with pytest.raises(ValueError):
        compute_efficiency(flat)


@given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6)), min_size=1, max_size=5),
       st.integers(1, 10**7))
def test_efficiency_matches_definition(adapters, dwall):
    z = (0, 0, 0)
    late = {f"c{i}": v for i, v in enumerate(adapters)}
    early = {k: z for k in late}
    e = log("s", [(0, 0, early), (0, 0, early), (dwall, 1, late), (dwall, 1, late)])
    spent = sum(sum(v) for v in adapters)
    assert compute_efficiency(e) == min(1.0, max(0.0, 1 - spent / dwall))


def two_sim_logs(wait_a, wait_b, wall=200):
    z = (0, 0, 0)
    a = log("A", [(0, 0, {"ch": z}), (0, 0, {"ch": z}), (wall, 1, {"ch": (wait_a, 0, 0)}), (wall, 1, {"ch": (wait_a, 0, 0)})])
    b = log("B", [(0, 0, {"ch": z}), (0, 0, {"ch": z}), (wall, 1, {"ch": (wait_b, 0, 0)}), (wall, 1, {"ch": (wait_b, 0, 0)})])
    return {"A": a, "B": b}


def test_wtpg_edges_and_colors():
    g = build_wtpg(two_sim_logs(50, 0), {"ch": ("A", "B")})
    assert g.edge("A", "B") == 0.25
    assert g.edge("B", "A") == 0.0
    assert g.nodes["B"].color == "#%02x%02x%02x" % RED
    assert g.nodes["A"].color == "#%02x%02x%02x" % GREEN
    assert g.nodes["A"].total == 0.25


def test_wtpg_equal_totals_midpoint():
    g = build_wtpg(two_sim_logs(10, 10), {"ch": ("A", "B")})
    assert g.nodes["A"].color == g.nodes["B"].color == "#6e6400"


def test_wtpg_unknown_adapter():
    with pytest.raises(KeyError):
        build_wtpg(two_sim_logs(1, 1), {"other": ("A", "B")})


def test_dot_output():
    g = build_wtpg(two_sim_logs(50, 0), {"ch": ("A", "B")})
    dot = emit_dot(g)
    assert dot == emit_dot(build_wtpg(two_sim_logs(50, 0), {"ch": ("A", "B")}))
    assert dot.count("->") == 2
    assert sum(1 for ln in dot.splitlines() if "fillcolor" in ln) == 2
    assert '"25.0%"' in dot
    empty = emit_dot(build_wtpg({}, {}))
    assert empty.startswith("digraph") and "->" not in empty


def test_report_is_pure():
    logs = two_sim_logs(50, 0)
    assert profile_report(logs, {"ch": ("A", "B")}).to_json() == profile_report(logs, {"ch": ("A", "B")}).to_json()


class FakeClock:
    def __init__(self):
        self.t = 0

    def __call__(self):
        return self.t


def test_sample_logger_interval_and_format():
    sim = Simulator("sim0")
    clock = FakeClock()
    sink = io.StringIO()
    lg = SampleLogger(sim, 10.0, sink, clock=clock, cycles_per_second=CPS)
    lg.start()
    for sec in range(61):
        clock.t = sec * CPS
        sim.now = sec * SEC
        lg.tick()
    assert 6 <= lg.samples_written <= 7
    parsed = parse_logs(sink.getvalue())
    assert parsed["sim0"].cycles_per_second == CPS
    walls = [s.wall_cycles for s in parsed["sim0"].samples]
    assert walls == sorted(walls)


def test_sample_logger_rejects_zero_interval():
    with pytest.raises(ConfigError):
        SampleLogger(Simulator("s"), 0, io.StringIO())


def test_sample_logger_survives_sink_failure(caplog):
    class Broken(io.StringIO):
        def write(self, s):
            raise OSError("disk full")

    lg = SampleLogger(Simulator("s"), 1.0, Broken())
    lg.start()
    lg.sample()
    lg.sample()
    assert sum("disk full" in r.getMessage() for r in caplog.records) == 1


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_logs("PROF a 1 2\n")
    with pytest.raises(ValueError):
        parse_logs("PROFHDR 10\nNOPE\n")
