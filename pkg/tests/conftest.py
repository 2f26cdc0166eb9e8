import os

import pytest

from partsim.netsim import AppSpec, gen_fat_tree
from partsim.orchestrator import Instantiation, instantiate, system_from_topology
from partsim.simtime import MS, US


@pytest.fixture
def shm_dir(tmp_path):
    # segments are plain mmapped files; a temp dir keeps tests isolated from /dev/shm
    d = tmp_path / "shm"
    d.mkdir()
    return str(d)


def pairs_apps(topo, rate=20000.0, **kw):
    hosts = [h.id for h in topo.hosts]
    n = len(hosts)
    apps = {}
    for i in range(n // 2):
        apps[hosts[i]] = AppSpec("client", target=hosts[n - 1 - i], rate=rate, **kw)
        apps[hosts[n - 1 - i]] = AppSpec("server")
    return apps


def fat_tree_system(latency=20 * US, rate=20000.0, end_time=5 * MS, seed=0, **kw):
    topo = gen_fat_tree(4, 2, latency=latency)
    return system_from_topology(topo, pairs_apps(topo, rate, **kw), seed=seed, end_time=end_time)


def plan_for(system, **inst):
    return instantiate(system, Instantiation(**inst))


def worker_pids(marker: str):
    """Live processes whose command line mentions ``marker``."""
    pids = []
    for pid in os.listdir("/proc"):
        if not pid.isdigit():
            continue
        try:
            with open(f"/proc/{pid}/cmdline", "rb") as fh:
                cmd = fh.read().replace(b"\0", b" ").decode(errors="replace")
            with open(f"/proc/{pid}/stat") as fh:
                state = fh.read().rsplit(")", 1)[1].split()[0]
        except OSError:
            continue
        if "partsim.worker" in cmd and marker in cmd and state != "Z":
            pids.append(int(pid))
    return pids


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
