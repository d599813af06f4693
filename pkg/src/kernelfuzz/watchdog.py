"""Session orchestration: child processes, restarts, timeouts, memory caps.

One fuzzing session is a chain of child processes for a single kernel. A
child runs the kernel's driver test with instrumentation active; when a
mutation kills it with a fault exit code, the watchdog reads the in-flight
UIN from the mutation log, appends a crash record, and spawns the next
child, which resumes one combination later. The chain ends on a graceful
exit, on the session deadline, on a memory breach, or when the rerun budget
is spent.

Children are forked, not spawned: the corpus is deterministic and already
registered in the parent, and a fork costs about a millisecond, which is
what keeps crash-dense sessions cheap.
"""

from __future__ import annotations

import faulthandler
import hashlib
import multiprocessing
import os
import time
import traceback
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .artifacts import ArtifactPaths
from .harness import (
    LogCorruptError,
    SessionState,
    fuzz_entry,
    mutation_log_path,
    read_mutation_log,
)
from .kernels import KernelEntry, Registry, extract_targets, register_corpus, run_driver_test
from .mutations import MutationConfig, config_fingerprint
from .tensors import FAULT_LOG_ENV, FaultClass

INTERNAL_ERROR_EXIT = 70

_PAGE_SIZE = os.sysconf("SC_PAGE_SIZE")


class WatchdogError(RuntimeError):
    pass


class SessionStatus(Enum):
    COMPLETED = "completed"
    CRASHED = "crashed"
    TIMED_OUT = "timed_out"
    MEMORY_EXCEEDED = "memory_exceeded"


@dataclass
class SessionOutcome:
    kernel: str
    status: SessionStatus
    crash_uins: list[int] = field(default_factory=list)
    fault_classes: list[FaultClass] = field(default_factory=list)
    started_unix_ns: int = 0
    ended_unix_ns: int = 0
    rerun_count: int = 0

    def __post_init__(self) -> None:
        if len(self.crash_uins) != len(self.fault_classes):
            raise ValueError("crash_uins and fault_classes must align")


@dataclass(frozen=True)
class CampaignConfig:
    timeout_per_kernel: float = 60.0
    memory_cap_bytes: int = 1 << 30
    kernel_order_seed: int = 1
    max_reruns: int = 1000

    def __post_init__(self) -> None:
        if self.timeout_per_kernel <= 0:
            raise ValueError("timeout_per_kernel must be positive")
        if self.memory_cap_bytes <= 0:
            raise ValueError("memory_cap_bytes must be positive")
        if self.max_reruns < 1:
            raise ValueError("max_reruns must be >= 1")


def classify_exit(code: int) -> FaultClass | str:
    """Map a child exit code to a FaultClass, "graceful", or "other(<code>)"."""
    if code == 0:
        return "graceful"
    fault = FaultClass.from_exit_code(code)
    if fault is not None:
        return fault
    return f"other({code})"


@dataclass(frozen=True)
class ChildResult:
    exit_code: int | None  # None when the watchdog killed the child
    timed_out: bool = False
    memory_exceeded: bool = False


def _read_rss(pid: int) -> int | None:
    try:
        fields = Path(f"/proc/{pid}/statm").read_text().split()
        return int(fields[1]) * _PAGE_SIZE
    except (OSError, ValueError, IndexError):
        return None


def run_in_child(
    fn: Callable[[], object],
    *,
    timeout_s: float | None = None,
    memory_bytes: int | None = None,
    quiet: bool = True,
) -> ChildResult:
    """Fork, run fn, reap. The child always leaves via os._exit.

    The memory cap applies to RSS growth relative to the child's first
    sample, because a forked child starts out sharing the parent's pages;
    an absolute cap would either never fire or fire immediately.
    """
    pid = os.fork()
    if pid == 0:
        code = 0
        try:
            if quiet:
                # A host harness may have armed faulthandler on a duplicate
                # of the original stderr, which dup2 below cannot reach, so
                # signal deaths we provoke on purpose would still dump there.
                faulthandler.disable()
                devnull = os.open(os.devnull, os.O_WRONLY)
                os.dup2(devnull, 1)
                os.dup2(devnull, 2)
            fn()
        except SystemExit as exc:
            if isinstance(exc.code, int):
                code = exc.code
            elif exc.code is not None:
                code = 1
        except BaseException:
            traceback.print_exc()
            code = INTERNAL_ERROR_EXIT
        os._exit(code)

    deadline = time.monotonic() + timeout_s if timeout_s is not None else None
    baseline_rss: int | None = None
    while True:
        wpid, status = os.waitpid(pid, os.WNOHANG)
        if wpid == pid:
            code = os.waitstatus_to_exitcode(status)
            if code < 0:
                code = 128 - code  # killed by a real signal
            return ChildResult(exit_code=code)
        if memory_bytes is not None:
            rss = _read_rss(pid)
            if rss is not None:
                if baseline_rss is None:
                    baseline_rss = rss
                elif rss - baseline_rss > memory_bytes:
                    _kill_and_reap(pid)
                    return ChildResult(exit_code=None, memory_exceeded=True)
        if deadline is not None and time.monotonic() >= deadline:
            _kill_and_reap(pid)
            return ChildResult(exit_code=None, timed_out=True)
        time.sleep(0.002)


def _kill_and_reap(pid: int) -> None:
    try:
        os.kill(pid, 9)
    except ProcessLookupError:
        pass
    try:
        os.waitpid(pid, 0)
    except ChildProcessError:
        pass


def _session_child(
    kernel: str,
    registry: Registry,
    paths: ArtifactPaths,
    mcfg: MutationConfig,
    normalize_timestamps: bool = False,
) -> None:
    os.environ[FAULT_LOG_ENV] = str(paths.fault_log)
    state = SessionState(
        log_dir=paths.logs,
        timing_dir=paths.timing,
        done_dir=paths.done,
        normalize_timestamps=normalize_timestamps,
    )
    run_driver_test(
        registry,
        kernel,
        wrapper=lambda entry, args: fuzz_entry(entry, args, state, mcfg),
    )


def _append_crash_record(
    crash_file: Path, uin: int, fault: FaultClass, at_ns: int
) -> None:
    with open(crash_file, "a") as fh:
        fh.write(f"uin={uin} class={fault.token} at_ns={at_ns}\n")


@dataclass(frozen=True)
class CrashRecord:
    uin: int
    fault: FaultClass
    at_ns: int


def read_crash_records(path: Path) -> list[CrashRecord]:
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            fields = dict(p.split("=", 1) for p in parts)
            records.append(
                CrashRecord(
                    uin=int(fields["uin"]),
                    fault=FaultClass.from_token(fields["class"]),
                    at_ns=int(fields["at_ns"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise WatchdogError(f"{path}:{lineno}: bad crash record") from exc
    return records


def run_session(
    entry: KernelEntry,
    registry: Registry,
    paths: ArtifactPaths,
    ccfg: CampaignConfig,
    mcfg: MutationConfig,
    *,
    normalize_timestamps: bool = False,
) -> SessionOutcome:
    """Restart the kernel's session child until it exits gracefully or a
    limit binds. Returns the aggregated outcome; crash records are appended
    to crashes/<kernel>.crashes as they happen."""
    started = time.time_ns()
    deadline = time.monotonic() + ccfg.timeout_per_kernel
    crash_uins: list[int] = []
    fault_classes: list[FaultClass] = []
    reruns = 0
    corrupt_warned = False
    cfghash = config_fingerprint(mcfg)
    log_path = mutation_log_path(
        SessionState(log_dir=paths.logs, timing_dir=paths.timing, done_dir=paths.done),
        entry.name,
    )
    crash_file = paths.crashes / f"{entry.name}.crashes"
    status = SessionStatus.COMPLETED
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            status = SessionStatus.TIMED_OUT
            break
        result = run_in_child(
            lambda: _session_child(
                entry.name, registry, paths, mcfg, normalize_timestamps
            ),
            timeout_s=remaining,
            memory_bytes=ccfg.memory_cap_bytes,
        )
        if result.timed_out:
            status = SessionStatus.TIMED_OUT
            break
        if result.memory_exceeded:
            status = SessionStatus.MEMORY_EXCEEDED
            break
        code = result.exit_code
        assert code is not None
        if code == 0:
            status = SessionStatus.COMPLETED
            break
        fault = FaultClass.from_exit_code(code)
        if fault is None:
            raise WatchdogError(
                f"{entry.name}: session child exited with unexpected code {code}"
            )
        record = None
        try:
            record = read_mutation_log(log_path)
        except LogCorruptError:
            pass
        if (
            record is not None
            and record.kernel == entry.name
            and record.seed == mcfg.rng_seed
            and record.cfghash == cfghash
        ):
            at_ns = 0 if normalize_timestamps else time.time_ns()
            _append_crash_record(crash_file, record.uin, fault, at_ns)
            crash_uins.append(record.uin)
            fault_classes.append(fault)
        elif not corrupt_warned:
            corrupt_warned = True
            warnings.warn(
                f"{entry.name}: crash with unusable mutation log; restarting from 0"
            )
        reruns += 1
        if reruns >= ccfg.max_reruns:
            status = SessionStatus.COMPLETED
            break
    if crash_uins:
        status = SessionStatus.CRASHED
    ended = time.time_ns()
    if normalize_timestamps:
        started = ended = 0
    return SessionOutcome(
        kernel=entry.name,
        status=status,
        crash_uins=crash_uins,
        fault_classes=fault_classes,
        started_unix_ns=started,
        ended_unix_ns=ended,
        rerun_count=reruns,
    )


def session_order(registry: Registry, order_seed: int) -> list[KernelEntry]:
    """Seeded permutation of the fuzz targets, stable across interpreters."""

    def key(entry: KernelEntry) -> str:
        return hashlib.sha256(f"{order_seed}|{entry.name}".encode()).hexdigest()

    return sorted(extract_targets(registry), key=key)


def _session_task(args: tuple) -> SessionOutcome | str:
    kernel, root, ccfg, mcfg, normalize = args
    registry = register_corpus()
    paths = ArtifactPaths(root=Path(root))
    try:
        return run_session(
            registry[kernel], registry, paths, ccfg, mcfg,
            normalize_timestamps=normalize,
        )
    except Exception:
        return f"{kernel}: {traceback.format_exc()}"


def orchestrate(
    registry: Registry,
    paths: ArtifactPaths,
    ccfg: CampaignConfig,
    mcfg: MutationConfig,
    *,
    kernel_limit: int | None = None,
    jobs: int = 1,
    normalize_timestamps: bool = False,
) -> list[SessionOutcome | Exception]:
    """Run sessions for the selected targets; never aborts the campaign.

    Returns one result per kernel in visitation order; a kernel whose
    session machinery failed outright contributes its exception instead of
    an outcome.
    """
    order = session_order(registry, ccfg.kernel_order_seed)
    if kernel_limit is not None:
        order = order[:kernel_limit]
    results: list[SessionOutcome | Exception] = []
    if jobs <= 1:
        for entry in order:
            try:
                results.append(
                    run_session(
                        entry, registry, paths, ccfg, mcfg,
                        normalize_timestamps=normalize_timestamps,
                    )
                )
            except Exception as exc:
                results.append(exc)
        return results
    tasks = [
        (entry.name, str(paths.root), ccfg, mcfg, normalize_timestamps)
        for entry in order
    ]
    with multiprocessing.get_context("fork").Pool(processes=jobs) as pool:
        raw = pool.map(_session_task, tasks)
    for item in raw:
        results.append(item if isinstance(item, SessionOutcome) else WatchdogError(item))
    return results


RESULTS_HEADER = "kernel,status,started_unix_ns,ended_unix_ns,crash_count,rerun_count"


def write_results_csv(
    paths: ArtifactPaths,
    order: list[KernelEntry],
    results: list[SessionOutcome | Exception],
) -> None:
    lines = [RESULTS_HEADER]
    for entry, result in zip(order, results):
        if isinstance(result, SessionOutcome):
            lines.append(
                f"{result.kernel},{result.status.value},{result.started_unix_ns},"
                f"{result.ended_unix_ns},{len(result.crash_uins)},{result.rerun_count}"
            )
        else:
            lines.append(f"{entry.name},error,0,0,0,0")
    paths.results_csv.write_text("\n".join(lines) + "\n")
