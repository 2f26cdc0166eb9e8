"""Run a plan: in this process (inline or threads) or as supervised child processes."""

from __future__ import annotations

import glob
import logging
import os
import shutil
import signal
import subprocess
import sys
import time
import uuid
from pathlib import Path

from ..core.eventloop import run_cooperative, run_threaded
from ..errors import DeadlockError, RunError
from .build import (SHM_DIR, build_simulator, create_segments, doorbells_for, handshake_all, memory_endpoints,
                    run_prefix, save_plan, write_outputs)
from .instantiate import RunPlan
from .report import merge_reports

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_DEADLOCK = 3
TERM_GRACE = 2.0
POLL_INTERVAL = 0.02
FAILURE_SETTLE = 0.5


def prepare_out_dir(out_dir, force: bool = False) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise RunError(f"output directory {out} is not empty; use --force to overwrite", EXIT_VALIDATION)
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def execute(plan: RunPlan, out_dir, *, force: bool = False, run_id: str | None = None,
            shm_dir: str = SHM_DIR, handshake_timeout: float = 30.0) -> dict:
    """Run ``plan`` and merge its outputs into ``out_dir``; returns the summary.

    Raises :class:`RunError` (with an exit code) when any simulator fails.
    """
    out = prepare_out_dir(out_dir, force)
    save_plan(plan, out)
    for sub in ("stats", "logs") + (("profile",) if plan.profiling else ()):
        (out / sub).mkdir(exist_ok=True)
    t0 = time.perf_counter()
    if plan.mode == "processes":
        per_proc = _run_processes(plan, out, run_id or _new_run_id(), shm_dir, handshake_timeout)
    else:
        per_proc = _run_in_process(plan, out, handshake_timeout)
    wall = {"elapsed_s": time.perf_counter() - t0, "mode": plan.mode}
    if per_proc:
        wall["processes_s"] = per_proc
    return merge_reports(out, plan, wall=wall)


def _new_run_id() -> str:
    return f"{os.getpid()}-{uuid.uuid4().hex[:8]}"


def _run_in_process(plan: RunPlan, out: Path, timeout: float) -> dict:
    threaded = plan.mode == "threads"
    eps = memory_endpoints(plan, doorbells_for(plan) if threaded else None)

    def crash():
        raise RunError(f"injected crash in {plan.crash['process']}", EXIT_RUNTIME)

    sims = []
    for p in plan.processes:
        sink = out / "profile" / f"{p.name}.prof" if plan.profiling else None
        sims.append(build_simulator(plan, p.name, eps, profile_sink=sink, crash_action=crash))
    handshake_all(sims, timeout)
    try:
        if threaded:
            run_threaded(sims, plan.end_time, profiling=plan.profiling)
        else:
            run_cooperative(sims, plan.end_time)
    except DeadlockError as exc:
        raise RunError(str(exc), EXIT_DEADLOCK) from exc
    except RunError:
        raise
    except Exception as exc:
        raise RunError(f"{type(exc).__name__}: {exc}", EXIT_RUNTIME) from exc
    for s in sims:
        write_outputs(s, out)
    return {}


def _child_preexec():  # pragma: no cover - runs in the child
    # die with the orchestrator even if it is SIGKILLed
    try:
        import ctypes
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        libc.prctl(1, signal.SIGKILL)  # PR_SET_PDEATHSIG
    except OSError:
        pass


class _Child:
    def __init__(self, name, popen, log_path):
        self.name = name
        self.popen = popen
        self.log_path = log_path
        self.started = time.perf_counter()
        self.elapsed = None


def _run_processes(plan: RunPlan, out: Path, run_id: str, shm_dir: str, timeout: float) -> dict:
    segments = []
    children: list[_Child] = []
    interrupted = []

    def on_signal(signum, frame):
        interrupted.append(signum)
        raise KeyboardInterrupt

    old = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            old[sig] = signal.signal(sig, on_signal)
        except ValueError:  # not the main thread
            pass
    try:
        segments = create_segments(plan, run_id, shm_dir)
        plan_path = out / "plan.json"
        env = dict(os.environ)
        src = str(Path(__file__).resolve().parents[2])
        env["PYTHONPATH"] = src + (os.pathsep + env["PYTHONPATH"] if env.get("PYTHONPATH") else "")
        for name in plan.start_order:
            log_path = out / "logs" / f"{name}.log"
            fh = open(log_path, "wb")
            cmd = [sys.executable, "-m", "partsim.worker", str(plan_path), name, "--run-id", run_id,
                   "--out", str(out), "--shm-dir", shm_dir, "--handshake-timeout", str(timeout)]
            popen = subprocess.Popen(cmd, stdout=fh, stderr=subprocess.STDOUT, stdin=subprocess.DEVNULL,
                                     env=env, preexec_fn=_child_preexec)
            fh.close()
            children.append(_Child(name, popen, log_path))
        _supervise(children)
        return {c.name: round(c.elapsed, 6) for c in children}
    except KeyboardInterrupt:
        raise RunError(f"interrupted by signal {interrupted[0] if interrupted else 'SIGINT'}", EXIT_RUNTIME) from None
    finally:
        _terminate(children)
        for p in segments:
            try:
                os.unlink(p)
            except FileNotFoundError:
                pass
        for p in glob.glob(run_prefix(run_id, shm_dir) + "*"):
            os.unlink(p)
        for sig, h in old.items():
            signal.signal(sig, h)


def _supervise(children: list[_Child]) -> None:
    pending = list(children)
    failed = []
    while pending:
        for c in list(pending):
            rc = c.popen.poll()
            if rc is None:
                continue
            c.elapsed = time.perf_counter() - c.started
            pending.remove(c)
            if rc != 0:
                failed.append((c, rc))
        if failed:
            break
        time.sleep(POLL_INTERVAL)
    if not failed:
        return
    # peers of a dead simulator fail right after it; give them a moment so the
    # report can name the process that went first (a signal death beats a peer error)
    deadline = time.monotonic() + FAILURE_SETTLE
    while pending and time.monotonic() < deadline:
        for c in list(pending):
            rc = c.popen.poll()
            if rc is not None:
                pending.remove(c)
                if rc != 0:
                    failed.append((c, rc))
        time.sleep(POLL_INTERVAL)
    failed.sort(key=lambda f: f[1] >= 0)
    c, rc = failed[0]
    what = f"signal {-rc}" if rc < 0 else f"exit code {rc}"
    code = EXIT_DEADLOCK if rc == EXIT_DEADLOCK else EXIT_RUNTIME
    others = ", ".join(f.name for f, _ in failed[1:])
    also = f" (also failed: {others})" if others else ""
    raise RunError(f"simulator {c.name} failed with {what}{also}; aborting run.\n{_tail(c.log_path)}", code)


def _terminate(children: list[_Child]) -> None:
    live = [c for c in children if c.popen.poll() is None]
    for c in live:
        c.popen.terminate()
    deadline = time.monotonic() + TERM_GRACE
    for c in live:
        try:
            c.popen.wait(max(0.0, deadline - time.monotonic()))
        except subprocess.TimeoutExpired:
            c.popen.kill()
            c.popen.wait()


def _tail(path: Path, lines: int = 20) -> str:
    try:
        text = path.read_text(errors="replace").splitlines()
    except OSError:
        return ""
    return "\n".join("  | " + ln for ln in text[-lines:])
