"""Merge per-process outputs of a run into one summary."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from ..core.trace import combine_multiset
from ..netsim.stats import latency_summary, read_samples, write_json
from ..profiler.analysis import emit_dot, profile_report
from ..profiler.log import load_logs
from ..simtime import SEC
from .instantiate import RunPlan

log = logging.getLogger(__name__)

# sections that depend on wall-clock time and are excluded from determinism checks
WALL_SECTIONS = ("wall", "profile")
_COUNTERS = ("sent", "received", "dropped", "bytes", "injected", "delivered")


def merge_reports(run_dir, plan: RunPlan | None = None, *, wall: dict | None = None,
                  warmup: int = 1, cooldown: int = 1) -> dict:
    """Combine ``stats/*.json``, ``latency/*.bin`` and profile logs into ``summary.json``/``summary.txt``."""
    run = Path(run_dir)
    if plan is None and (run / "plan.json").exists():
        plan = RunPlan.from_json((run / "plan.json").read_text())
    stats = {}
    for p in sorted((run / "stats").glob("*.json")):
        stats[p.stem] = json.loads(p.read_text())
    expected = [p.name for p in plan.processes] if plan else sorted(stats)
    missing = [n for n in expected if n not in stats]

    flows = {}
    for st in stats.values():
        for host, f in st.get("flows", {}).items():
            agg = flows.setdefault(host, {k: 0 for k in _COUNTERS})
            for k in _COUNTERS:
                agg[k] += f.get(k, 0)
    end_time = plan.end_time if plan else max((s["end_time"] for s in stats.values()), default=0)
    for host, agg in flows.items():
        path = run / "latency" / f"{host}.bin"
        agg["latency_ns"] = latency_summary(read_samples(path) if path.exists() else [])
        agg["throughput_rps"] = agg["received"] * SEC / end_time if end_time else 0.0

    hosts = {}
    for name, st in stats.items():
        if st.get("kind") == "host":
            hosts[name] = {k: st[k] for k in ("served", "runq_drops", "max_tx_backlog", "tx_packets", "rx_packets")}
    channels = {}
    for name, st in sorted(stats.items()):
        for cid, c in st.get("channels", {}).items():
            channels.setdefault(cid, {})[name] = c
    syncs = sum(c["syncs_sent"] for per in channels.values() for c in per.values())

    summary = {
        "complete": not missing,
        "missing": missing,
        "end_time_ps": end_time,
        "processes": len(expected),
        "totals": {
            "received": sum(f["received"] for f in flows.values()),
            "sent": sum(f["sent"] for f in flows.values()),
            "dropped": sum(f["dropped"] for f in flows.values()),
            "switch_drops": sum(s.get("drops", 0) for s in stats.values()),
            "unroutable": sum(s.get("unroutable", 0) for s in stats.values()),
            "events": sum(s.get("events", 0) for s in stats.values()),
            "sync_messages": syncs,
        },
        "flows": dict(sorted(flows.items())),
        "hosts": dict(sorted(hosts.items())),
        "channels": dict(sorted(channels.items())),
        "trace": {
            "multiset": combine_multiset(s["trace"]["multiset"] for s in stats.values()),
            "records": sum(s["trace"]["records"] for s in stats.values()),
            "network_multiset": combine_multiset(s["trace"]["multiset"] for s in stats.values()
                                                 if s.get("kind") == "net"),
        },
    }
    if wall:
        summary["wall"] = dict(wall)
    prof_files = sorted((run / "profile").glob("*.prof")) if (run / "profile").is_dir() else []
    if prof_files and plan is not None:
        try:
            logs = load_logs(prof_files)
            rep = profile_report(logs, plan.wiring(), warmup, cooldown)
            (run / "profile" / "report.json").write_text(rep.to_json())
            (run / "profile" / "wtpg.dot").write_text(emit_dot(rep.graph))
            summary["profile"] = json.loads(rep.to_json())
        except (ValueError, KeyError) as exc:
            log.warning("profile post-processing skipped: %s", exc)
            summary["profile"] = {"error": str(exc)}
    write_json(run / "summary.json", summary)
    (run / "summary.txt").write_text(format_summary(summary))
    return summary


def format_summary(s: dict) -> str:
    lines = []
    state = "complete" if s["complete"] else "INCOMPLETE (missing: " + ", ".join(s["missing"]) + ")"
    lines.append(f"run {state}; {s['processes']} processes; simulated {s['end_time_ps'] / SEC:g} s")
    t = s["totals"]
    lines.append(f"sent {t['sent']}  received {t['received']}  dropped {t['dropped']}  "
                 f"events {t['events']}  sync messages {t['sync_messages']}")
    lines.append("")
    lines.append(f"{'flow':<16}{'sent':>10}{'recv':>10}{'drop':>8}{'rps':>12}{'mean_ns':>12}{'p50_ns':>12}{'p99_ns':>12}")
    for host, f in s["flows"].items():
        lat = f["latency_ns"]

        def fmt(v):
            return f"{v:12.0f}" if v is not None else f"{'-':>12}"

        lines.append(f"{host:<16}{f['sent']:>10}{f['received']:>10}{f['dropped']:>8}{f['throughput_rps']:>12.1f}"
                     f"{fmt(lat['mean'])}{fmt(lat['median'])}{fmt(lat['p99'])}")
    if s.get("profile") and "sim_speed" in s["profile"]:
        p = s["profile"]
        lines.append("")
        lines.append(f"sim speed {p['sim_speed']:.3e} sim-s/wall-s")
        for name, eff in p["efficiency"].items():
            lines.append(f"  efficiency {name:<20}{eff:.3f}")
    lines.append(f"trace {s['trace']['multiset']}")
    return "\n".join(lines) + "\n"
