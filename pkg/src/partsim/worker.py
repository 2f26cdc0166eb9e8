"""Child-process entry point: run one simulator of a saved plan over shared memory."""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path

from .core.eventloop import run_event_loop
from .errors import DeadlockError, SimError
from .orchestrator.build import SHM_DIR, build_simulator, kill_self, load_plan, shm_endpoints, write_outputs


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="partsim.worker")
    ap.add_argument("plan")
    ap.add_argument("name")
    ap.add_argument("--run-id", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--shm-dir", default=SHM_DIR)
    ap.add_argument("--handshake-timeout", type=float, default=30.0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format=f"%(levelname)s {args.name}: %(message)s")
    out = Path(args.out)
    sim = None
    try:
        plan = load_plan(args.plan)
        eps = shm_endpoints(plan, plan.process(args.name), args.run_id, args.shm_dir)
        sink = out / "profile" / f"{args.name}.prof" if plan.profiling else None
        sim = build_simulator(plan, args.name, eps, profile_sink=sink, crash_action=kill_self)
        for a in sim.adapters:
            a.send_handshake()
        for a in sim.adapters:
            a.await_handshake(args.handshake_timeout)
        run_event_loop(sim, plan.end_time, profiling=plan.profiling)
        write_outputs(sim, out)
        return 0
    except DeadlockError as exc:
        print(f"deadlock: {exc}", file=sys.stderr)
        return 3
    except SimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 2
    finally:
        if sim is not None:
            for ep in sim.out_eps:
                try:
                    ep.close()
                except Exception:  # noqa: BLE001 - best effort on the way out
                    pass


if __name__ == "__main__":
    sys.exit(main())
