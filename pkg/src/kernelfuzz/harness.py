"""Force-execution wrapper and the crash-surviving mutation log.

fuzz_entry is what an instrumented kernel invocation runs instead of the
kernel itself: on first entry it enumerates the whole mutation space for
that kernel, writing the current combination index (UIN) durably to a small
log file before every invocation. If a combination kills the process, the
log tells the next run exactly where to resume. The log is a single record
overwritten in place; crash history is kept elsewhere (by the watchdog), so
this file never grows.
"""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .kernels import KernelEntry, KernelValidationError
from .mutations import (
    MutationConfig,
    combination_count,
    config_fingerprint,
    build_pools,
    nth_combination,
)

# Operational failure of the log itself; deliberately not a fault exit code.
LOG_WRITE_FAILURE_EXIT = 81


@dataclass
class SessionState:
    """Per-process fuzzing state shared by all wrapped invocations."""

    log_dir: Path
    timing_dir: Path
    done_dir: Path
    already_fuzzing: bool = field(default=False)
    normalize_timestamps: bool = field(default=False)


@dataclass(frozen=True)
class LogRecord:
    kernel: str
    seed: int
    cfghash: str
    uin: int


class LogCorruptError(Exception):
    pass


def mutation_log_path(state: SessionState, kernel: str) -> Path:
    return state.log_dir / f"{kernel}.log"


def _render_log(kernel: str, seed: int, cfghash: str, uin: int) -> bytes:
    return f"kernel={kernel}\nseed={seed}\ncfghash={cfghash}\nuin={uin}\n".encode()


def read_mutation_log(path: Path) -> LogRecord | None:
    """None when the file does not exist; LogCorruptError when unparseable."""
    try:
        text = path.read_text()
    except FileNotFoundError:
        return None
    except OSError as exc:
        raise LogCorruptError(f"unreadable mutation log {path}: {exc}") from exc
    lines = text.splitlines()
    if len(lines) != 4:
        raise LogCorruptError(f"{path}: expected 4 lines, found {len(lines)}")
    expected = ("kernel=", "seed=", "cfghash=", "uin=")
    values = []
    for prefix, line in zip(expected, lines):
        if not line.startswith(prefix):
            raise LogCorruptError(f"{path}: expected {prefix!r} line, got {line!r}")
        values.append(line[len(prefix):])
    try:
        seed = int(values[1])
        uin = int(values[3])
    except ValueError as exc:
        raise LogCorruptError(f"{path}: non-numeric field") from exc
    if uin < 0:
        raise LogCorruptError(f"{path}: negative uin")
    return LogRecord(kernel=values[0], seed=seed, cfghash=values[2], uin=uin)


def resume_from(path: Path, kernel: str, seed: int, cfghash: str) -> int:
    """First UIN the next run should execute.

    No log means start at 0. A parseable log matching this session's
    identity resumes one past the logged UIN. Anything else (corrupt file,
    or a log written under a different kernel/seed/config) restarts at 0
    with a warning.
    """
    try:
        record = read_mutation_log(path)
    except LogCorruptError as exc:
        warnings.warn(f"corrupt mutation log, restarting from 0: {exc}")
        return 0
    if record is None:
        return 0
    if (record.kernel, record.seed, record.cfghash) != (kernel, seed, cfghash):
        warnings.warn(
            f"mutation log {path} belongs to a different session, restarting from 0"
        )
        return 0
    return record.uin + 1


class _LogWriter:
    """Rewrites the one-record mutation log durably on every attempt."""

    def __init__(self, path: Path, kernel: str, seed: int, cfghash: str):
        self._kernel = kernel
        self._seed = seed
        self._cfghash = cfghash
        self._fd = os.open(path, os.O_CREAT | os.O_WRONLY, 0o644)

    def write_uin(self, uin: int) -> None:
        payload = _render_log(self._kernel, self._seed, self._cfghash, uin)
        try:
            os.pwrite(self._fd, payload, 0)
            os.ftruncate(self._fd, len(payload))
            os.fsync(self._fd)
        except OSError:
            os._exit(LOG_WRITE_FAILURE_EXIT)

    def close(self) -> None:
        try:
            os.close(self._fd)
        except OSError:
            pass


def log_uin(path: Path, kernel: str, seed: int, cfghash: str, uin: int) -> None:
    """One-shot durable log write (the loop in fuzz_entry keeps the fd open)."""
    writer = _LogWriter(path, kernel, seed, cfghash)
    try:
        writer.write_uin(uin)
    finally:
        writer.close()


class _TimingWriter:
    def __init__(self, path: Path):
        new = not path.exists()
        self._fd = os.open(path, os.O_CREAT | os.O_WRONLY | os.O_APPEND, 0o644)
        if new:
            os.write(self._fd, b"uin,start_ns,end_ns,outcome\n")

    def row(self, uin: int, start_ns: int, end_ns: int, outcome: str) -> None:
        os.write(self._fd, f"{uin},{start_ns},{end_ns},{outcome}\n".encode())

    def close(self) -> None:
        try:
            os.close(self._fd)
        except OSError:
            pass


def done_marker_path(state: SessionState, kernel: str) -> Path:
    return state.done_dir / f"{kernel}.done"


def was_fuzzed(state: SessionState, kernel: str) -> bool:
    return done_marker_path(state, kernel).exists()


def mark_done(state: SessionState, kernel: str) -> None:
    done_marker_path(state, kernel).touch()


def fuzz_entry(
    entry: KernelEntry,
    original_args: tuple,
    state: SessionState,
    cfg: MutationConfig,
    post_log_hook: Callable[[int], None] | None = None,
):
    """Fuzz the kernel once per process lifetime, then behave transparently.

    Re-entrant and repeat calls (already fuzzing, or the completion marker
    exists) go straight to the kernel with the caller's arguments. The
    first call enumerates combinations from the resume point; recoverable
    validation errors are swallowed, faults terminate the process and are
    the watchdog's business. Afterwards the marker is written and the
    original invocation's result is returned, so the caller never sees the
    fuzzing detour.

    post_log_hook, when given, runs right after each durable UIN write and
    before the invocation; it exists so tests can park the process inside
    that window.
    """
    if state.already_fuzzing or was_fuzzed(state, entry.name):
        return entry.call(original_args)
    state.already_fuzzing = True
    try:
        pools = build_pools(entry.signature, original_args, cfg)
        count = combination_count(pools, cfg)
        cfghash = config_fingerprint(cfg)
        log_path = mutation_log_path(state, entry.name)
        start = resume_from(log_path, entry.name, cfg.rng_seed, cfghash)
        writer = _LogWriter(log_path, entry.name, cfg.rng_seed, cfghash)
        timing = _TimingWriter(state.timing_dir / f"{entry.name}.csv")
        clock = (lambda: 0) if state.normalize_timestamps else time.time_ns
        try:
            for uin in range(start, count):
                writer.write_uin(uin)
                if post_log_hook is not None:
                    post_log_hook(uin)
                args = nth_combination(pools, uin)
                start_ns = clock()
                outcome = "ok"
                try:
                    entry.call(args)
                except KernelValidationError:
                    outcome = "invalid"
                timing.row(uin, start_ns, clock(), outcome)
        finally:
            writer.close()
            timing.close()
        mark_done(state, entry.name)
    finally:
        state.already_fuzzing = False
    return entry.call(original_args)
