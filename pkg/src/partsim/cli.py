"""Command-line interface: ``partsim run|topo|profile|validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, RunError, ValidationError
from .netsim.apps import AppSpec
from .netsim.topology import gen_car_topology, gen_fat_tree
from .orchestrator.config import load_instantiation, load_system, system_from_topology
from .orchestrator.execute import EXIT_RUNTIME, EXIT_VALIDATION, execute
from .orchestrator.instantiate import instantiate
from .simtime import parse_bandwidth, parse_time

log = logging.getLogger("partsim")


def _time(s):
    try:
        return parse_time(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sim_seconds(s):
    # plain numbers are seconds here; unit strings are accepted too
    try:
        float(s)
        s = f"{s}s"
    except ValueError:
        pass
    return _time(s)


def cmd_run(args) -> int:
    system = load_system(args.system)
    inst = load_instantiation(args.instantiation)
    if args.profile:
        inst.profiling = True
    if args.profile_interval is not None:
        inst.profile_interval = args.profile_interval
    if args.seed is not None:
        inst.seed = args.seed
    if args.end_time is not None:
        inst.end_time = args.end_time
    if args.mode:
        inst.mode = args.mode
    plan = instantiate(system, inst)
    out = args.out or "run-out"
    summary = execute(plan, out, force=args.force)
    print((Path(out) / "summary.txt").read_text(), end="")
    return 0 if summary["complete"] else EXIT_RUNTIME


def workload(topo, kind: str, rate: float, seed: int, size: int) -> dict:
    hosts = [h.id for h in topo.hosts]
    apps = {h: AppSpec("sink") for h in hosts}
    n = len(hosts)
    if kind == "pairs":
        for i in range(n // 2):
            apps[hosts[i]] = AppSpec("client", target=hosts[n - 1 - i], rate=rate, request_size=size)
            apps[hosts[n - 1 - i]] = AppSpec("server", response_size=size)
    elif kind == "bulk":
        order = np.random.default_rng(seed).permutation(n)
        for i in range(0, n - 1, 2):
            src, dst = hosts[order[i]], hosts[order[i + 1]]
            apps[src] = AppSpec("bulk", target=dst, rate=rate, request_size=size)
    return apps


def cmd_topo_gen(args) -> int:
    kw = {"bandwidth": args.bandwidth, "latency": args.latency}
    if args.kind == "fat-tree":
        topo = gen_fat_tree(args.k, args.hosts_per_edge, **kw)
    else:
        topo = gen_car_topology(args.aggs, args.racks, args.hosts, args.core_bw, **kw)
    apps = workload(topo, args.workload, args.rate, args.seed, args.size)
    cfg = system_from_topology(topo, apps, seed=args.seed, end_time=args.end_time)
    text = cfg.dump()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: {len(topo.switches)} switches, {len(topo.hosts)} hosts, {len(topo.links)} links")
    return 0


def cmd_profile_post(args) -> int:
    from .orchestrator.instantiate import RunPlan
    from .profiler import emit_dot, load_logs, profile_report

    run = Path(args.run_dir)
    plan_path = run / "plan.json"
    if not plan_path.exists():
        raise ConfigError(f"{run} has no plan.json; not a run directory")
    plan = RunPlan.from_json(plan_path.read_text())
    files = sorted((run / "profile").glob("*.prof"))
    if not files:
        raise ConfigError(f"{run}/profile has no profile logs; rerun with --profile")
    rep = profile_report(load_logs(files), plan.wiring(), args.warmup, args.cooldown)
    (run / "profile" / "report.json").write_text(rep.to_json())
    (run / "profile" / "wtpg.dot").write_text(emit_dot(rep.graph))
    print(f"sim speed {rep.sim_speed:.4e}")
    for name, eff in sorted(rep.efficiency.items()):
        print(f"  {name:<24} efficiency {eff:.3f}  waiting {rep.graph.nodes[name].total:.3f}")
    print(f"wrote {run / 'profile' / 'report.json'} and {run / 'profile' / 'wtpg.dot'}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_system(args.system)
    msg = (f"{args.system}: ok ({len(cfg.hosts)} hosts, {len(cfg.nics)} nics, {len(cfg.switches)} switches, "
           f"{len(cfg.links)} links)")
    if args.instantiation:
        plan = instantiate(cfg, load_instantiation(args.instantiation))
        msg += f"; plan has {len(plan.processes)} processes and {len(plan.channels)} channels"
    print(msg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="partsim", description="Partitioned parallel co-simulation runner.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="instantiate and execute a system configuration")
    r.add_argument("system")
    r.add_argument("instantiation")
    r.add_argument("--out")
    r.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    r.add_argument("--profile", action="store_true")
    r.add_argument("--profile-interval", type=float, metavar="SECS")
    r.add_argument("--seed", type=int)
    r.add_argument("--end-time", type=_sim_seconds, metavar="SIMSECS")
    r.add_argument("--mode", choices=("processes", "threads", "inline"))
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("topo", help="topology tools")
    tsub = t.add_subparsers(dest="topo_command", required=True)
    g = tsub.add_parser("gen", help="generate a system configuration for a standard topology")
    g.add_argument("kind", choices=("fat-tree", "car"))
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--hosts-per-edge", type=int, default=2)
    g.add_argument("--aggs", type=int, default=4)
    g.add_argument("--racks", type=int, default=6)
    g.add_argument("--hosts", type=int, default=40)
    g.add_argument("--core-bw", type=parse_bandwidth, default=100 * 10**9)
    g.add_argument("--bandwidth", type=parse_bandwidth, default=10 * 10**9)
    g.add_argument("--latency", type=_time, default=parse_time("1us"))
    g.add_argument("--workload", choices=("none", "pairs", "bulk"), default="none")
    g.add_argument("--rate", type=float, default=1000.0)
    g.add_argument("--size", type=int, default=128)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--end-time", type=_sim_seconds, default=parse_time("100ms"))
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_topo_gen)

    p = sub.add_parser("profile", help="profiler post-processing")
    psub = p.add_subparsers(dest="profile_command", required=True)
    post = psub.add_parser("post", help="compute sim speed, efficiency, and the wait-time graph")
    post.add_argument("run_dir")
    post.add_argument("--warmup", type=int, default=1)
    post.add_argument("--cooldown", type=int, default=1)
    post.set_defaults(func=cmd_profile_post)

    v = sub.add_parser("validate", help="check a system configuration (and optionally an instantiation)")
    v.add_argument("system")
    v.add_argument("instantiation", nargs="?")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation failed with {len(exc.problems)} problem(s):", file=sys.stderr)
        for loc, msg in exc.problems:
            print(f"  {loc}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
