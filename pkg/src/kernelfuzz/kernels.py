"""The seeded kernel corpus.

Thirteen registered kernels: six with planted bugs, four that validate
properly, and three that are excluded from fuzzing (shared state, out
variant, thin wrapper). Each entry carries a typed signature, a set of
benign driver arguments, and optionally the name it is bound under for
replay. Buggy kernels check some preconditions so ordinary inputs pass;
only edge-case mutations reach the planted fault.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .tensors import (
    INT64_MAX,
    INT64_MIN,
    DType,
    RawBuffer,
    Tensor,
    clear_fault_context,
    fault_abort,
    fault_divide,
    set_fault_context,
    tensor_from_values,
    tensor_new,
    wrap_i64,
)

STRIDED_BUFFER_LEN = 64


class TypeTag(Enum):
    TENSOR = "tensor"
    INT = "int"
    FLOAT = "float"
    BOOL = "bool"
    STR = "str"
    INT_LIST = "int_list"


class KernelValidationError(Exception):
    """Recoverable rejection of bad arguments; never terminates a process."""


class CorpusError(Exception):
    """Registry-level problem: unknown kernel, duplicate name, bad entry."""


@dataclass(frozen=True)
class Param:
    name: str
    tag: TypeTag


@dataclass(frozen=True)
class KernelSignature:
    name: str
    params: tuple[Param, ...]
    returns: TypeTag | None


@dataclass(frozen=True)
class KernelEntry:
    signature: KernelSignature
    impl: Callable
    binding: str | None = None
    shared_state: bool = False
    out_variant: bool = False
    wrapper_only: bool = False
    driver_seeds: tuple[tuple, ...] = field(default_factory=tuple)

    @property
    def name(self) -> str:
        return self.signature.name

    @property
    def fuzzable(self) -> bool:
        return not (self.shared_state or self.out_variant or self.wrapper_only)

    def call(self, args: tuple):
        """Invoke the kernel with the fault context set to its name."""
        if len(args) != len(self.signature.params):
            raise KernelValidationError(
                f"{self.name} takes {len(self.signature.params)} args, got {len(args)}"
            )
        set_fault_context(self.name)
        try:
            return self.impl(*args)
        finally:
            clear_fault_context()


Registry = dict[str, KernelEntry]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise KernelValidationError(message)


def _require_tensor(value, name: str, dtypes: tuple[DType, ...] | None = None) -> Tensor:
    _require(isinstance(value, Tensor), f"{name} must be a tensor")
    if dtypes is not None:
        _require(value.dtype in dtypes, f"{name} must have dtype in {[d.token for d in dtypes]}")
    return value


def _require_int(value, name: str) -> int:
    _require(not isinstance(value, bool) and isinstance(value, int), f"{name} must be an int")
    return value


def _require_int_list(value, name: str) -> list[int]:
    _require(isinstance(value, list), f"{name} must be a list")
    for v in value:
        _require(not isinstance(v, bool) and isinstance(v, int), f"{name} entries must be ints")
    return value


# --- buggy kernels -----------------------------------------------------------


def _strided_write(indices, strides, payload):
    indices = _require_tensor(indices, "indices", (DType.INT64,))
    strides = _require_tensor(strides, "strides", (DType.INT64,))
    payload = _require_int(payload, "payload")
    if indices.num_elements != strides.num_elements:
        raise KernelValidationError("indices/strides length mismatch")
    # Inner product in wrapping 64-bit arithmetic, like the native original.
    loc = 0
    for i in range(indices.num_elements):
        loc = wrap_i64(loc + wrap_i64(indices.element(i) * strides.element(i)))
    buf = RawBuffer(STRIDED_BUFFER_LEN, 0)
    # Planted bug: only the upper bound is checked before the write.
    if loc >= buf.length:
        raise KernelValidationError(f"location {loc} beyond buffer")
    buf.write(loc, payload)
    return tensor_from_values(DType.INT64, [buf.length], buf.snapshot())


def _insert_dim(sizes, batch_size, out_dim):
    sizes = _require_tensor(sizes, "sizes", (DType.INT64,))
    batch_size = _require_int(batch_size, "batch_size")
    out_dim = _require_int(out_dim, "out_dim")
    r = sizes.num_elements
    buf = RawBuffer(r + 1, 0)
    # Planted bug: out_dim is trusted, so anything outside [0, r] lands
    # outside the freshly sized buffer.
    buf.write(out_dim, batch_size)
    for i in range(r):
        buf.write(i if i < out_dim else i + 1, sizes.element(i))
    return tensor_from_values(DType.INT64, [r + 1], buf.snapshot())


def _delete_handle(handle):
    handle = _require_tensor(handle, "handle")
    if handle.num_elements != 1:
        fault_abort("handle must be scalar")
    return None


def _mean_pool(data, window):
    data = _require_tensor(data, "data", (DType.INT64, DType.FLOAT64))
    window = _require_int(window, "window")
    n = data.num_elements
    # Planted bug: the window count divides by the raw window argument.
    count = max(0, fault_divide(n, window))
    out = []
    for w in range(count):
        if data.dtype is DType.INT64:
            s = 0
            for i in range(w * window, (w + 1) * window):
                s = wrap_i64(s + data.element(i))
            out.append(fault_divide(s, window))
        else:
            s = 0.0
            for i in range(w * window, (w + 1) * window):
                s += data.element(i)
            out.append(s / window)
    return tensor_from_values(data.dtype, [count], out)


def _gather_internal(source, indices):
    source = _require_tensor(
        source, "source", (DType.INT64, DType.FLOAT64, DType.BOOL)
    )
    indices = _require_int_list(indices, "indices")
    n = source.num_elements
    buf = RawBuffer(n, 0)
    for i in range(n):
        buf.write(i, source.element(i))
    # Planted bug: gathered positions go straight to the buffer.
    out = [buf.read(j) for j in indices]
    return tensor_from_values(source.dtype, [len(out)], out)


_NORM_SCALE = 2**53


def _normalize(data):
    data = _require_tensor(data, "data", (DType.FLOAT64,))
    n = data.num_elements
    for i in range(n):
        _require(math.isfinite(data.element(i)), "data must be finite")
    if n == 0:
        return tensor_from_values(DType.FLOAT64, data.shape, [])
    m = max(abs(data.element(i)) for i in range(n))
    mn, md = m.as_integer_ratio()
    out = []
    for i in range(n):
        xn, xd = data.element(i).as_integer_ratio()
        # Planted bug: scaled integer division with no zero guard, so an
        # all-zero tensor divides by zero. Exact ratios keep the fault
        # condition at m == 0.0 precisely.
        q = fault_divide(xn * md * _NORM_SCALE, xd * mn)
        out.append(q / _NORM_SCALE)
    return tensor_from_values(DType.FLOAT64, data.shape, out)


# --- safe kernels ------------------------------------------------------------


def _add(a, b):
    a = _require_tensor(a, "a", (DType.INT64, DType.FLOAT64))
    b = _require_tensor(b, "b", (DType.INT64, DType.FLOAT64))
    _require(a.dtype is b.dtype, "dtype mismatch")
    _require(a.shape == b.shape, "shape mismatch")
    if a.dtype is DType.INT64:
        def add_one(x, y):
            s = x + y
            if not INT64_MIN <= s <= INT64_MAX:
                raise KernelValidationError("add overflow")
            return s
    else:
        def add_one(x, y):
            return x + y
    if a.fill is not None and b.fill is not None:
        return tensor_new(a.dtype, a.shape, add_one(a.fill, b.fill))
    out = [add_one(x, y) for x, y in zip(a.tolist(), b.tolist())]
    return tensor_from_values(a.dtype, a.shape, out)


def _concat(a, b):
    a = _require_tensor(a, "a", (DType.INT64, DType.FLOAT64))
    b = _require_tensor(b, "b", (DType.INT64, DType.FLOAT64))
    _require(a.dtype is b.dtype, "dtype mismatch")
    _require(a.rank == 1 and b.rank == 1, "concat takes rank-1 tensors")
    out = a.tolist() + b.tolist()
    return tensor_from_values(a.dtype, [len(out)], out)


def _reshape(data, dims):
    data = _require_tensor(data, "data")
    dims = _require_int_list(dims, "dims")
    _require(all(d >= 0 for d in dims), "dims must be non-negative")
    _require(len(dims) <= 15, "too many dims")
    _require(math.prod(dims) == data.num_elements, "element count mismatch")
    if data.fill is not None:
        return tensor_new(data.dtype, dims, data.fill)
    return tensor_from_values(data.dtype, dims, data.tolist())


def _scale(data, factor):
    data = _require_tensor(data, "data", (DType.FLOAT64,))
    _require(isinstance(factor, float), "factor must be a float")
    if data.fill is not None:
        return tensor_new(data.dtype, data.shape, data.fill * factor)
    return tensor_from_values(
        data.dtype, data.shape, [x * factor for x in data.tolist()]
    )


# --- excluded kernels --------------------------------------------------------

_counter = 0


def _counter_update(amount):
    global _counter
    amount = _require_int(amount, "amount")
    _counter += amount
    return _counter


def _add_out(a, b, out):
    _require_tensor(out, "out")
    return _add(a, b)


def _add_alias(a, b):
    return _add(a, b)


# --- registry ----------------------------------------------------------------


def _sig(name: str, params: list[tuple[str, TypeTag]], returns: TypeTag | None) -> KernelSignature:
    return KernelSignature(
        name=name, params=tuple(Param(n, t) for n, t in params), returns=returns
    )


def register_corpus() -> Registry:
    """Build the corpus registry. Names are unique; order is registration order."""
    i64 = DType.INT64
    f64 = DType.FLOAT64
    T, I, F, L = TypeTag.TENSOR, TypeTag.INT, TypeTag.FLOAT, TypeTag.INT_LIST
    entries = [
        KernelEntry(
            signature=_sig("strided_write", [("indices", T), ("strides", T), ("payload", I)], T),
            impl=_strided_write,
            binding="ops.strided_write",
            driver_seeds=((tensor_new(i64, [2], 1), tensor_new(i64, [2], 2), 5),),
        ),
        KernelEntry(
            signature=_sig("insert_dim", [("sizes", T), ("batch_size", I), ("out_dim", I)], T),
            impl=_insert_dim,
            binding="ops.insert_dim",
            driver_seeds=((tensor_new(i64, [2], 3), 4, 1),),
        ),
        KernelEntry(
            signature=_sig("delete_handle", [("handle", T)], None),
            impl=_delete_handle,
            binding="ops.delete_handle",
            driver_seeds=((tensor_new(i64, [], 7),),),
        ),
        KernelEntry(
            signature=_sig("mean_pool", [("data", T), ("window", I)], T),
            impl=_mean_pool,
            binding="ops.mean_pool",
            driver_seeds=((tensor_new(i64, [6], 2), 3),),
        ),
        KernelEntry(
            signature=_sig("gather_internal", [("source", T), ("indices", L)], T),
            impl=_gather_internal,
            binding=None,  # deliberately unbound
            driver_seeds=((tensor_new(i64, [3], 5), [0, 2]),),
        ),
        KernelEntry(
            signature=_sig("normalize", [("data", T)], T),
            impl=_normalize,
            binding="ops.normalize",
            driver_seeds=((tensor_new(f64, [4], 2.5),),),
        ),
        KernelEntry(
            signature=_sig("add", [("a", T), ("b", T)], T),
            impl=_add,
            binding="ops.add",
            driver_seeds=(
                (tensor_new(i64, [2, 3], 1), tensor_new(i64, [2, 3], 2)),
                (tensor_new(f64, [2], 0.5), tensor_new(f64, [2], 1.5)),
            ),
        ),
        KernelEntry(
            signature=_sig("concat", [("a", T), ("b", T)], T),
            impl=_concat,
            binding="ops.concat",
            driver_seeds=((tensor_new(i64, [2], 1), tensor_new(i64, [3], 2)),),
        ),
        KernelEntry(
            signature=_sig("reshape", [("data", T), ("dims", L)], T),
            impl=_reshape,
            binding="ops.reshape",
            driver_seeds=((tensor_new(i64, [2, 3], 1), [3, 2]),),
        ),
        KernelEntry(
            signature=_sig("scale", [("data", T), ("factor", F)], T),
            impl=_scale,
            binding="ops.scale",
            driver_seeds=((tensor_new(f64, [3], 2.0), 1.5),),
        ),
        KernelEntry(
            signature=_sig("counter_update", [("amount", I)], I),
            impl=_counter_update,
            shared_state=True,
            driver_seeds=((1,),),
        ),
        KernelEntry(
            signature=_sig("add_out", [("a", T), ("b", T), ("out", T)], T),
            impl=_add_out,
            out_variant=True,
            driver_seeds=(
                (tensor_new(i64, [2], 1), tensor_new(i64, [2], 2), tensor_new(i64, [2], 0)),
            ),
        ),
        KernelEntry(
            signature=_sig("add_alias", [("a", T), ("b", T)], T),
            impl=_add_alias,
            wrapper_only=True,
            driver_seeds=((tensor_new(i64, [2], 1), tensor_new(i64, [2], 2)),),
        ),
    ]
    registry: Registry = {}
    for entry in entries:
        if entry.name in registry:
            raise CorpusError(f"duplicate kernel name {entry.name}")
        if not entry.driver_seeds:
            raise CorpusError(f"{entry.name} has no driver seeds")
        registry[entry.name] = entry
    return registry


def extract_targets(registry: Registry) -> list[KernelEntry]:
    """Fuzzable kernels only: no shared state, no out variants, no wrappers,
    and every parameter type must be one the mutation engine supports."""
    targets = []
    for entry in registry.values():
        if not entry.fuzzable:
            continue
        if not all(isinstance(p.tag, TypeTag) for p in entry.signature.params):
            continue
        targets.append(entry)
    return targets


def run_driver_test(
    registry: Registry,
    kernel_name: str,
    wrapper: Callable[[KernelEntry, tuple], object] | None = None,
) -> None:
    """Run the kernel's driver seeds in order.

    With a wrapper (the fuzz entry point), every invocation goes through it;
    without one the kernel is called directly. Returns normally when all
    seeds complete; driver seeds are benign by construction, so an
    uninstrumented run never faults.
    """
    entry = registry.get(kernel_name)
    if entry is None:
        raise CorpusError(f"unknown kernel {kernel_name!r}")
    for seed_args in entry.driver_seeds:
        if wrapper is not None:
            wrapper(entry, seed_args)
        else:
            entry.call(seed_args)
