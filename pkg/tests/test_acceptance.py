"""Acceptance criteria, each checked at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL|SKIP`` line; the lines are
printed as they happen and again in the pytest terminal summary.
"""

import json
import os
import subprocess
import sys
import tempfile
import time
import warnings

import numpy as np
import pytest

from partsim.netsim import AppSpec, HostSpec, LinkSpec, SwitchSpec, Topology, gen_car_topology, gen_fat_tree
from partsim.orchestrator import Instantiation, execute, instantiate, system_from_topology
from partsim.orchestrator.report import WALL_SECTIONS
from partsim.profiler import compute_efficiency, compute_sim_speed, parse_logs
from partsim.profiler.analysis import SimSpeedMismatch
from partsim.simtime import MS, NS, SEC, US

from conftest import ACCEPTANCE, fat_tree_system, pairs_apps, plan_for, worker_pids


def record(n, title, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"criterion {n}: {status} {title} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def timed_run(plan, out=None):
    with tempfile.TemporaryDirectory() as d:
        t0 = time.perf_counter()
        summary = execute(plan, out or d, force=True)
        return summary, time.perf_counter() - t0


def deterministic(summary):
    return json.dumps({k: v for k, v in summary.items() if k not in WALL_SECTIONS}, sort_keys=True)


# -- 1 and 9 share the fat-tree runs ------------------------------------------

def fat_tree_assignment(groups):
    """Cores join partition 0; pod ``p`` goes to partition ``p * groups // 4``."""
    asg = {}
    for s in gen_fat_tree(4, 2).switches:
        asg[s.id] = 0 if s.role == "core" else s.group * groups // 4
    return asg


@pytest.fixture(scope="module")
def invariance_runs():
    system = fat_tree_system(end_time=100 * MS)
    variants = [
        ("s", "s", True),
        ("custom-2", {"custom": fat_tree_assignment(2)}, True),
        ("custom-4", {"custom": fat_tree_assignment(4)}, True),
        ("rs-analogue", "rs", True),
        ("rs-analogue untrunked", "rs", False),
    ]
    runs = {}
    for label, part, trunk in variants:
        summary, wall = timed_run(plan_for(system, partition=part, trunk=trunk, mode="processes"))
        runs[label] = (summary, wall)
    return system, runs


def test_criterion_1_partition_invariance(invariance_runs):
    _, runs = invariance_runs
    ref = runs["s"][0]["trace"]["multiset"]
    same = all(s["trace"]["multiset"] == ref for s, _ in runs.values())
    fast = all(w < 60 for _, w in runs.values())
    complete = all(s["complete"] and s["totals"]["received"] > 0 for s, _ in runs.values())
    procs = {k: s["processes"] for k, (s, _) in runs.items()}
    walls = ", ".join(f"{k} {w:.1f}s" for k, (_, w) in runs.items())
    ok = record(1, "partition invariance", same and fast and complete,
                f"trace {ref[:16]} identical={same}; processes {procs}; wall {walls}")
    assert ok


def test_criterion_9_profiling_overhead(invariance_runs):
    system, runs = invariance_runs
    off = [runs["rs-analogue"][1]]
    on = []
    # alternate so slow drift on the shared core hits both sides; the minimum
    # of several runs is the least noisy estimate of the intrinsic cost
    for profiling in (True, False, True, False, True, False, True):
        _, wall = timed_run(plan_for(system, partition="rs", mode="processes", profiling=profiling))
        (on if profiling else off).append(wall)
    change = abs(min(on) - min(off)) / min(off)
    # repeatability of the unprofiled runs themselves; a difference below this
    # floor cannot be told apart from scheduling noise
    floor = (max(off) - min(off)) / min(off)
    detail = (f"rs-analogue 100ms, min of {len(off)} runs each: off {min(off):.2f}s on {min(on):.2f}s, "
              f"change {100 * change:.2f}%, off-run spread {100 * floor:.2f}%; "
              f"all off {[round(w, 1) for w in off]} on {[round(w, 1) for w in on]}")
    if change < 0.03:
        record(9, "profiling overhead", True, detail)
        return
    if floor >= 0.03:
        record(9, "profiling overhead", False, detail + "; inconclusive: noise floor above tolerance", "SKIP")
        pytest.skip("profiling overhead not resolvable: repeat runs without profiling differ by "
                    f"{100 * floor:.1f}% on this machine")
    assert record(9, "profiling overhead", False, detail)


# -- 2 -------------------------------------------------------------------------

def test_criterion_2_determinism():
    topo = gen_fat_tree(4, 2, latency=20 * US)
    apps = pairs_apps(topo, 20000.0, arrival="poisson", key_dist="zipf", write_fraction=0.3)
    system = system_from_topology(topo, apps, seed=11, end_time=10 * MS, detailed=["h0_0_0", "h3_1_1"])
    plan = plan_for(system, partition={"custom": fat_tree_assignment(2)}, mode="processes")
    (a, wa), (b, wb) = timed_run(plan), timed_run(plan)
    same = deterministic(a) == deterministic(b)
    ok = record(2, "determinism", same and wa < 60 and wb < 60,
                f"summaries identical={same}, received {a['totals']['received']}, wall {wa:.1f}s/{wb:.1f}s")
    assert ok


# -- 3 -------------------------------------------------------------------------

def physical_cores():
    cores = set()
    try:
        with open("/proc/cpuinfo") as fh:
            phys = core = None
            for line in fh:
                if line.startswith("physical id"):
                    phys = line.split(":")[1].strip()
                elif line.startswith("core id"):
                    core = line.split(":")[1].strip()
                elif not line.strip() and core is not None:
                    cores.add((phys, core))
                    phys = core = None
            if core is not None:
                cores.add((phys, core))
    except OSError:
        pass
    usable = len(os.sched_getaffinity(0))
    return min(len(cores) or usable, usable)


def speedup_system(end_time):
    topo = gen_car_topology(4, 2, 10)
    hosts = [h.id for h in topo.hosts]
    rng = np.random.default_rng(5)
    order = rng.permutation(len(hosts))
    apps = {h: AppSpec("sink") for h in hosts}
    for i in range(0, len(hosts) - 1, 2):
        apps[hosts[order[i]]] = AppSpec("bulk", target=hosts[order[i + 1]], rate=1e6, request_size=1500)
    return system_from_topology(topo, apps, end_time=end_time)


def test_criterion_3_parallel_speedup():
    cores = physical_cores()
    enough = cores >= 8
    system = speedup_system(2 * MS if enough else 200 * US)
    single, w1 = timed_run(plan_for(system, partition="s", mode="processes"))
    multi, w2 = timed_run(plan_for(system, partition="rs", mode="processes"))
    assert multi["trace"] == single["trace"]
    ratio = w2 / w1
    detail = f"{cores} physical cores; {multi['processes']} partitions {w2:.2f}s vs 1 partition {w1:.2f}s, ratio {ratio:.2f}"
    if not enough:
        record(3, "parallel speedup", False, detail + "; needs >= 8 physical cores, not asserted", status="SKIP")
        pytest.skip("criterion 3 needs >= 8 physical cores; " + detail)
    ok = record(3, "parallel speedup", ratio <= 0.67 and w1 + w2 < 300, detail)
    assert ok


# -- 4 -------------------------------------------------------------------------

def test_criterion_4_profiler_arithmetic():
    t0 = time.perf_counter()
    cps = 10**9
    speed_log = parse_logs(
        f"PROFHDR {cps}\n"
        f"PROF sim 0 0\n"
        f"PROF sim {175 * 60 * cps} {20 * SEC}\n")
    speed = compute_sim_speed(speed_log, warmup=0, cooldown=0)
    eff_log = parse_logs(
        "PROFHDR 1000\n"
        "PROF sim 1000 0 chan:0:0:0\n"
        "PROF sim 1100 5 chan:20:10:30\n")
    eff = compute_efficiency(eff_log["sim"], warmup=0, cooldown=0)
    elapsed = time.perf_counter() - t0
    ok = record(4, "profiler arithmetic", abs(speed - 1.905e-3) <= 1e-6 and eff == 0.4 and elapsed < 1,
                f"sim_speed {speed:.6e}, efficiency {eff!r}, {elapsed * 1000:.1f} ms")
    assert ok


# -- 5 -------------------------------------------------------------------------

def test_criterion_5_bottleneck_localization():
    topo = gen_car_topology(4, 2, 2, latency=20 * US)
    system = system_from_topology(topo, pairs_apps(topo, 20000.0), end_time=10 * MS)
    base = 50_000
    slow = "net.np2"
    busy = {f"net.np{i}": base for i in range(5)}
    busy[slow] = 10 * base
    plan = instantiate(system, Instantiation(partition="ac", mode="processes", busy_ns=busy, busy_mode="sleep",
                                             profiling=True, profile_interval=0.2))
    with warnings.catch_warnings():
        # sample windows of separate processes never line up exactly
        warnings.simplefilter("ignore", SimSpeedMismatch)
        summary, wall = timed_run(plan)
    graph = summary["profile"]["wtpg"]
    totals = {n: v["total"] for n, v in graph["nodes"].items()}
    minimal = all(totals[slow] < t for n, t in totals.items() if n != slow)
    neighbours = {a if b == slow else b for a, b in plan.wiring().values() if slow in (a, b)}
    toward = {n: sum(e["weight"] for e in graph["edges"] if e["src"] == n and e["dst"] == slow) for n in neighbours}
    heavy = all(w >= 0.5 for w in toward.values())
    ok = record(5, "bottleneck localization", minimal and heavy and wall < 120,
                f"{len(totals)} partitions; wait totals {({k: round(v, 3) for k, v in sorted(totals.items())})}; "
                f"edges toward {slow} {({k: round(v, 3) for k, v in toward.items()})}; wall {wall:.1f}s")
    assert ok


# -- 6 and 7 share the mixed-fidelity runs --------------------------------------

CLIENTS = ("c0", "c1", "c2")
SERVERS = ("s0", "s1")


def mixed_system(rate, arrival, detailed, end_time=100 * MS):
    names = list(CLIENTS + SERVERS)
    topo = Topology([SwitchSpec("sw", len(names))], [HostSpec(h, "sw", i) for i, h in enumerate(names)],
                    [LinkSpec(h, "sw", 10 * 10**9, 1 * US, f"l.{h}") for h in names])
    targets = {"c0": "s0", "c1": "s0", "c2": "s1"}
    apps = {c: AppSpec("client", target=targets[c], rate=rate, arrival=arrival) for c in CLIENTS}
    apps.update({s: AppSpec("server") for s in SERVERS})
    return system_from_topology(topo, apps, end_time=end_time, detailed=detailed)


@pytest.fixture(scope="module")
def mixed_runs():
    sat = 150_000.0   # per client; each detailed server completes 100k req/s
    low = 500.0       # 1% of one server's capacity
    cfgs = {
        "sat abstract clients": (sat, "poisson", SERVERS),
        "sat detailed clients": (sat, "poisson", CLIENTS + SERVERS),
        "sat all abstract": (sat, "poisson", ()),
        "low abstract clients": (low, "fixed", SERVERS),
        "low detailed clients": (low, "fixed", CLIENTS + SERVERS),
    }
    out = {}
    for label, (rate, arrival, detailed) in cfgs.items():
        plan = instantiate(mixed_system(rate, arrival, detailed), Instantiation(mode="inline"))
        out[label] = timed_run(plan)
    return out


def throughput(summary):
    return summary["totals"]["received"] * SEC / summary["end_time_ps"]


def test_criterion_6_mixed_fidelity_throughput(mixed_runs):
    a = throughput(mixed_runs["sat abstract clients"][0])
    d = throughput(mixed_runs["sat detailed clients"][0])
    ideal = throughput(mixed_runs["sat all abstract"][0])
    walls = [mixed_runs[k][1] for k in ("sat abstract clients", "sat detailed clients", "sat all abstract")]
    close = abs(a - d) / d <= 0.05
    overstated = ideal / a - 1 > 0.30
    ok = record(6, "mixed-fidelity throughput", close and overstated and sum(walls) < 180,
                f"abstract clients {a:.0f}/s, detailed clients {d:.0f}/s, all abstract {ideal:.0f}/s "
                f"(+{100 * (ideal / a - 1):.0f}%); wall {sum(walls):.1f}s")
    assert ok


def test_criterion_7_mixed_fidelity_latency(mixed_runs):
    def medians(label):
        return {c: mixed_runs[label][0]["flows"][c]["latency_ns"]["median"] for c in CLIENTS}

    sat_a, sat_d = medians("sat abstract clients"), medians("sat detailed clients")
    low_a, low_d = medians("low abstract clients"), medians("low detailed clients")
    sat_ok = all(abs(sat_a[c] - sat_d[c]) / sat_d[c] <= 0.05 for c in CLIENTS)
    gap = 2 * (5 * US + 1 * US)
    gaps = {c: round((low_d[c] - low_a[c]) * NS) for c in CLIENTS}
    low_ok = all(abs(g - gap) <= 2 for g in gaps.values())
    walls = sum(w for _, w in mixed_runs.values())
    ok = record(7, "mixed-fidelity latency", sat_ok and low_ok and walls < 180,
                f"saturated medians ns abstract {({c: round(v) for c, v in sat_a.items()})} "
                f"detailed {({c: round(v) for c, v in sat_d.items()})}; low-load gaps ps {gaps} vs {gap}")
    assert ok


# -- 8 -------------------------------------------------------------------------

def idle_star(links=8, latency=500 * NS):
    leaves = [f"b{i}" for i in range(links)]
    switches = [SwitchSpec("a", links + 1)] + [SwitchSpec(b, 2) for b in leaves]
    hosts = [HostSpec("ha", "a", links)] + [HostSpec(f"h{b}", b, 1) for b in leaves]
    lks = [LinkSpec("a", b, 10 * 10**9, latency, f"l.a.{b}") for b in leaves]
    lks += [LinkSpec(h.id, h.switch, 10 * 10**9, latency, f"l.{h.id}") for h in hosts]
    topo = Topology(switches, hosts, lks).validate()
    return topo, system_from_topology(topo, {h.id: AppSpec("sink") for h in hosts}, end_time=1 * MS)


def test_criterion_8_trunk_sync_reduction():
    topo, system = idle_star()
    asg = {"a": 0, **{s.id: 1 for s in topo.switches if s.id != "a"}}
    counts, traces, walls = {}, {}, {}
    for trunk in (True, False):
        plan = instantiate(system, Instantiation(partition={"custom": asg}, trunk=trunk, mode="inline",
                                                 sync_interval="latency"))
        summary, walls[trunk] = timed_run(plan)
        counts[trunk] = summary["totals"]["sync_messages"]
        traces[trunk] = summary["trace"]["multiset"]
    per_direction = (1 * MS) // (500 * NS)
    ok = record(8, "trunk sync reduction",
                counts[False] == 8 * counts[True] and counts[True] == 2 * per_direction
                and traces[True] == traces[False] and sum(walls.values()) < 30,
                f"trunked {counts[True]} syncs, untrunked {counts[False]} (ratio {counts[False] / counts[True]:g}); "
                f"traces identical={traces[True] == traces[False]}")
    assert ok


# -- 10 ------------------------------------------------------------------------

def shm_segments():
    return {p for p in os.listdir("/dev/shm") if p.startswith("psim.")}


def test_criterion_10_cleanup(tmp_path):
    topo = gen_car_topology(2, 2, 2, latency=20 * US)
    system = system_from_topology(topo, pairs_apps(topo, 20000.0), end_time=200 * MS)
    sysf = tmp_path / "system.yaml"
    sysf.write_text(system.dump())
    instf = tmp_path / "inst.yaml"
    instf.write_text("partition: rs\nmode: processes\ncrash: {process: net.np3, at: 2ms}\n")
    out = tmp_path / "run"
    before = shm_segments()
    t0 = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "partsim", "run", str(sysf), str(instf), "--out", str(out)],
                         capture_output=True, text=True, timeout=60)
    wall = time.perf_counter() - t0
    plan = json.loads((out / "plan.json").read_text())
    survivors = worker_pids(str(out))
    leaked = shm_segments() - before
    ok = record(10, "cleanup", res.returncode != 0 and not survivors and not leaked and wall < 30
                and len(plan["processes"]) == 7,
                f"{len(plan['processes'])} processes, exit {res.returncode}, survivors {survivors}, "
                f"leaked segments {sorted(leaked)}, wall {wall:.1f}s")
    assert ok
