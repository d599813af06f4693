"""Tensor values, typed scalars, and the fault-injection substrate.

Everything downstream (kernels, mutation pools, crash reports) builds on the
data model in this module. Faults are emulated: instead of letting a bad
access corrupt memory, the substrate terminates the process with the exit
code the corresponding fatal signal would produce (128 + signo), after
appending one record to the file named by the FAULT_LOG environment variable
when that variable is set. Faults are not recoverable; validation problems
raise ordinary exceptions instead.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
MAX_RANK = 15
MAX_STR_LEN = 300

ScalarValue = int | float | bool | str


class DType(Enum):
    INT64 = "int64"
    FLOAT64 = "float64"
    BOOL = "bool"
    STR = "str"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "DType":
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"unknown dtype {token!r}")


class FaultClass(Enum):
    """The three emulated fatal-signal classes and their exit codes."""

    SEGV = ("segv", 139)
    FPE = ("fpe", 136)
    ABORT = ("abort", 134)

    @property
    def token(self) -> str:
        return self.value[0]

    @property
    def exit_code(self) -> int:
        return self.value[1]

    @classmethod
    def from_token(cls, token: str) -> "FaultClass":
        for member in cls:
            if member.token == token:
                return member
        raise ValueError(f"unknown fault class {token!r}")

    @classmethod
    def from_exit_code(cls, code: int) -> "FaultClass | None":
        for member in cls:
            if member.exit_code == code:
                return member
        return None


FAULT_LOG_ENV = "FAULT_LOG"

# Kernel name attached to fault records, set around each kernel invocation.
_fault_context = "-"


def set_fault_context(name: str) -> None:
    global _fault_context
    _fault_context = name


def clear_fault_context() -> None:
    set_fault_context("-")


def raise_fault(fault: FaultClass, detail: str) -> None:
    """Record the fault and terminate the process. Does not return."""
    path = os.environ.get(FAULT_LOG_ENV)
    if path:
        line = f"FAULT {fault.token} {_fault_context} {detail}\n"
        try:
            fd = os.open(path, os.O_CREAT | os.O_WRONLY | os.O_APPEND, 0o644)
            try:
                os.write(fd, line.encode())
                os.fsync(fd)
            finally:
                os.close(fd)
        except OSError:
            pass  # a broken fault log must not mask the fault itself
    os._exit(fault.exit_code)


def check_scalar(dtype: DType, value: ScalarValue) -> None:
    """Raise ValueError unless value conforms to dtype.

    bool is checked before int because Python bools are ints; an int64 slot
    never accepts True/False.
    """
    if dtype is DType.BOOL:
        if not isinstance(value, bool):
            raise ValueError(f"bool slot got {type(value).__name__}")
    elif dtype is DType.INT64:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"int64 slot got {type(value).__name__}")
        if not INT64_MIN <= value <= INT64_MAX:
            raise ValueError(f"int64 out of range: {value}")
    elif dtype is DType.FLOAT64:
        if not isinstance(value, float):
            raise ValueError(f"float64 slot got {type(value).__name__}")
    elif dtype is DType.STR:
        if not isinstance(value, str):
            raise ValueError(f"str slot got {type(value).__name__}")
        if len(value) > MAX_STR_LEN:
            raise ValueError(f"str too long: {len(value)} > {MAX_STR_LEN}")
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unhandled dtype {dtype}")


def check_shape(dims: tuple[int, ...]) -> None:
    if len(dims) > MAX_RANK:
        raise ValueError(f"rank {len(dims)} exceeds {MAX_RANK}")
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, int) or d < 0:
            raise ValueError(f"bad dimension {d!r}")


@dataclass(frozen=True, eq=False)
class Tensor:
    """Immutable dense tensor, stored as a fill value or explicit elements.

    A fill tensor never materializes its elements, so even a large one is a
    constant-size object. The empty shape () is rank 0 and holds exactly one
    element; any 0-sized dimension makes the element count 0. Str tensors are
    fill-only.
    """

    dtype: DType
    shape: tuple[int, ...]
    fill: ScalarValue | None = None
    values: tuple[ScalarValue, ...] | None = None

    def __post_init__(self) -> None:
        check_shape(self.shape)
        n = math.prod(self.shape)
        if (self.fill is None) == (self.values is None):
            raise ValueError("exactly one of fill/values must be given")
        if self.fill is not None:
            check_scalar(self.dtype, self.fill)
        else:
            if self.dtype is DType.STR:
                raise ValueError("str tensors support fill only")
            assert self.values is not None
            if len(self.values) != n:
                raise ValueError(
                    f"{len(self.values)} values for shape {list(self.shape)}"
                )
            for v in self.values:
                check_scalar(self.dtype, v)

    @property
    def num_elements(self) -> int:
        return math.prod(self.shape)

    @property
    def rank(self) -> int:
        return len(self.shape)

    def element(self, i: int) -> ScalarValue:
        if not 0 <= i < self.num_elements:
            raise IndexError(i)
        if self.values is not None:
            return self.values[i]
        assert self.fill is not None
        return self.fill

    def tolist(self) -> list[ScalarValue]:
        if self.values is not None:
            return list(self.values)
        assert self.fill is not None
        return [self.fill] * self.num_elements

    def is_uniform(self) -> bool:
        """True when every element equals the first (vacuously for empty)."""
        if self.fill is not None or self.num_elements == 0:
            return True
        assert self.values is not None
        first = self.values[0]
        return all(v == first for v in self.values[1:])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        if self.dtype is not other.dtype or self.shape != other.shape:
            return False
        if self.fill is not None and other.fill is not None:
            return self.num_elements == 0 or self.fill == other.fill
        return self.tolist() == other.tolist()

    __hash__ = None  # type: ignore[assignment]


def tensor_new(dtype: DType, dims: list[int] | tuple[int, ...], fill: ScalarValue) -> Tensor:
    return Tensor(dtype=dtype, shape=tuple(dims), fill=fill)


def tensor_from_values(
    dtype: DType, dims: list[int] | tuple[int, ...], values: list[ScalarValue]
) -> Tensor:
    return Tensor(dtype=dtype, shape=tuple(dims), values=tuple(values))


def tensor_num_elements(t: Tensor) -> int:
    return t.num_elements


class RawBuffer:
    """Fixed-length scratch storage with self-enforced bounds.

    An out-of-range access is the substrate's stand-in for touching memory
    outside an allocation: it records a fault and terminates the process with
    the SEGV exit code. There is nothing to catch.
    """

    def __init__(self, length: int, fill: ScalarValue = 0):
        if length < 0:
            raise ValueError(f"negative buffer length {length}")
        self._cells: list[ScalarValue] = [fill] * length

    @property
    def length(self) -> int:
        return len(self._cells)

    def write(self, index: int, value: ScalarValue) -> None:
        if not 0 <= index < len(self._cells):
            raise_fault(
                FaultClass.SEGV, f"write index={index} len={len(self._cells)}"
            )
        self._cells[index] = value

    def read(self, index: int) -> ScalarValue:
        if not 0 <= index < len(self._cells):
            raise_fault(
                FaultClass.SEGV, f"read index={index} len={len(self._cells)}"
            )
        return self._cells[index]

    def snapshot(self) -> list[ScalarValue]:
        return list(self._cells)


def fault_abort(reason: str) -> None:
    """Unconditional abort, exit code 134. Does not return."""
    raise_fault(FaultClass.ABORT, reason)


def fault_divide(num: int, den: int) -> int:
    """Integer division with hardware-style semantics.

    Division by zero is fatal (exit code 136). The quotient truncates toward
    zero, matching what native integer division would produce.
    """
    if isinstance(num, bool) or not isinstance(num, int):
        raise TypeError(f"fault_divide numerator: {type(num).__name__}")
    if isinstance(den, bool) or not isinstance(den, int):
        raise TypeError(f"fault_divide denominator: {type(den).__name__}")
    if den == 0:
        raise_fault(FaultClass.FPE, f"division by zero num={num}")
    q = abs(num) // abs(den)
    return q if (num >= 0) == (den >= 0) else -q


def wrap_i64(x: int) -> int:
    """Reduce x into signed 64-bit range with two's-complement wraparound."""
    return ((x - INT64_MIN) % 2**64) + INT64_MIN
