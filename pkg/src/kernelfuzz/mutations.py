"""Type-aware mutation pools and the combination index (UIN) arithmetic.

Pools are built per parameter from its static type tag plus the original
argument, so every candidate is well-typed for its slot. A combination of
candidates is addressed by a single integer, the UIN: a mixed-radix numeral
whose least-significant digit selects the first parameter's candidate. Plain
counting over that numeral makes enumeration prefix-stable, which is what
lets a restarted session resume at logged-UIN + 1.

Everything here is pure: no global RNG, no clocks. The only "randomness" is
a counter-based hash keyed on (rng_seed, kernel, param index, sample index),
so equal seeds give byte-identical pools.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path

from .kernels import KernelSignature, TypeTag
from .tensors import DType, ScalarValue, Tensor, tensor_new

_RANK_CHOICES = (1, 2, 3)
_SIZE_CHOICES = (0, 1, 2, 3, 7, 64)

DEFAULT_INT_EXTREMES = (0, 1, -1, 2**31 - 1, -(2**31), 2**62, -(2**62))
DEFAULT_FLOAT_EXTREMES = (0.0, 1.0, -1.0, 1e308, -1e308, 1e-308)


class MutationCategory(Enum):
    RANDOM_DIMS = "random_dims"
    EXTREME_TENSOR = "extreme_tensor"
    ORIGINAL = "original"
    ZERO_VALUE = "zero_value"
    EXTREME_LIST = "extreme_list"
    EMPTY_SHAPE = "empty_shape"
    EXTREME_PRIMITIVE = "extreme_primitive"
    EMPTY_LIST = "empty_list"
    DEEP_TENSOR = "deep_tensor"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "MutationCategory":
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"unknown mutation category {token!r}")


@dataclass(frozen=True)
class MutationConfig:
    rng_seed: int = 1
    max_tensor_rank: int = 15
    max_string_len: int = 300
    max_combinations: int = 2**20
    int_extremes: tuple[int, ...] = DEFAULT_INT_EXTREMES
    float_extremes: tuple[float, ...] = DEFAULT_FLOAT_EXTREMES
    dim_samples_per_arg: int = 4

    def __post_init__(self) -> None:
        if not 1 <= self.max_tensor_rank <= 15:
            raise ValueError("max_tensor_rank must be in [1, 15]")
        if self.max_string_len < 0:
            raise ValueError("max_string_len must be >= 0")
        if self.max_combinations < 1:
            raise ValueError("max_combinations must be >= 1")
        if self.dim_samples_per_arg < 1:
            raise ValueError("dim_samples_per_arg must be >= 1")
        if not self.int_extremes or 0 not in self.int_extremes:
            raise ValueError("int_extremes must be nonempty and include 0")
        if not self.float_extremes or 0.0 not in self.float_extremes:
            raise ValueError("float_extremes must be nonempty and include 0.0")


_CONFIG_FIELD_NAMES = [f.name for f in fields(MutationConfig)]


def config_text(cfg: MutationConfig) -> str:
    """Canonical key=value rendering; load_config(config_text(c)) == c."""
    lines = [
        f"rng_seed={cfg.rng_seed}",
        f"max_tensor_rank={cfg.max_tensor_rank}",
        f"max_string_len={cfg.max_string_len}",
        f"max_combinations={cfg.max_combinations}",
        "int_extremes=" + ",".join(str(v) for v in cfg.int_extremes),
        "float_extremes=" + ",".join(repr(v) for v in cfg.float_extremes),
        f"dim_samples_per_arg={cfg.dim_samples_per_arg}",
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> MutationConfig:
    """Parse key=value lines; every key optional, unknown keys rejected."""
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_FIELD_NAMES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key == "int_extremes":
            overrides[key] = tuple(int(v) for v in value.split(",")) if value else ()
        elif key == "float_extremes":
            overrides[key] = tuple(float(v) for v in value.split(",")) if value else ()
        else:
            overrides[key] = int(value)
    return replace(MutationConfig(), **overrides)


def load_config(path: str | Path) -> MutationConfig:
    return parse_config(Path(path).read_text())


def config_fingerprint(cfg: MutationConfig) -> str:
    """Short stable hex fingerprint of the full config."""
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Candidate:
    value: object
    category: MutationCategory


@dataclass(frozen=True)
class MutationPool:
    """Ordered, duplicate-free candidates for one parameter slot."""

    param_name: str
    candidates: tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def values(self) -> list:
        return [c.value for c in self.candidates]


PoolSet = list[MutationPool]


def _hash_bytes(*key_parts) -> bytes:
    text = "|".join(str(p) for p in key_parts)
    return hashlib.sha256(text.encode()).digest()


def _sample_dims(cfg: MutationConfig, kernel: str, param_index: int, sample_index: int) -> list[int]:
    h = _hash_bytes(cfg.rng_seed, kernel, param_index, sample_index)
    rank = _RANK_CHOICES[h[0] % len(_RANK_CHOICES)]
    return [_SIZE_CHOICES[h[1 + i] % len(_SIZE_CHOICES)] for i in range(rank)]


def _unit_fill(dtype: DType) -> ScalarValue:
    if dtype is DType.INT64:
        return 1
    if dtype is DType.FLOAT64:
        return 1.0
    if dtype is DType.BOOL:
        return True
    return "x"


class _PoolBuilder:
    """Collects candidates, dropping equal values (first category wins)."""

    def __init__(self) -> None:
        self._cands: list[Candidate] = []

    def add(self, value, category: MutationCategory) -> None:
        for existing in self._cands:
            eq = existing.value == value
            if eq is True and type(existing.value) is type(value):
                return
        self._cands.append(Candidate(value, category))

    def done(self, param_name: str) -> MutationPool:
        return MutationPool(param_name=param_name, candidates=tuple(self._cands))


def _tensor_pool(cfg: MutationConfig, kernel: str, index: int, name: str, original: Tensor) -> MutationPool:
    b = _PoolBuilder()
    unit = _unit_fill(original.dtype)
    for s in range(cfg.dim_samples_per_arg):
        dims = _sample_dims(cfg, kernel, index, s)
        b.add(tensor_new(original.dtype, dims, unit), MutationCategory.RANDOM_DIMS)
    for e in cfg.int_extremes:
        b.add(tensor_new(DType.INT64, original.shape, e), MutationCategory.EXTREME_TENSOR)
    for e in cfg.float_extremes:
        b.add(tensor_new(DType.FLOAT64, original.shape, e), MutationCategory.EXTREME_TENSOR)
    b.add(tensor_new(original.dtype, [], unit), MutationCategory.EMPTY_SHAPE)
    b.add(
        tensor_new(original.dtype, [1] * cfg.max_tensor_rank, unit),
        MutationCategory.DEEP_TENSOR,
    )
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def _int_pool(cfg: MutationConfig, name: str, original: int) -> MutationPool:
    b = _PoolBuilder()
    b.add(0, MutationCategory.ZERO_VALUE)
    for e in cfg.int_extremes:
        b.add(e, MutationCategory.EXTREME_PRIMITIVE)
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def _float_pool(cfg: MutationConfig, name: str, original: float) -> MutationPool:
    b = _PoolBuilder()
    b.add(0.0, MutationCategory.ZERO_VALUE)
    for e in cfg.float_extremes:
        b.add(e, MutationCategory.EXTREME_PRIMITIVE)
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def _bool_pool(name: str, original: bool) -> MutationPool:
    b = _PoolBuilder()
    b.add(False, MutationCategory.EXTREME_PRIMITIVE)
    b.add(True, MutationCategory.EXTREME_PRIMITIVE)
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def _str_pool(cfg: MutationConfig, name: str, original: str) -> MutationPool:
    b = _PoolBuilder()
    b.add("", MutationCategory.EXTREME_PRIMITIVE)
    b.add("a" * cfg.max_string_len, MutationCategory.EXTREME_PRIMITIVE)
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def _int_list_pool(cfg: MutationConfig, name: str, original: list) -> MutationPool:
    b = _PoolBuilder()
    b.add([], MutationCategory.EMPTY_LIST)
    for e in cfg.int_extremes:
        b.add([e, e, e], MutationCategory.EXTREME_LIST)
    b.add(original, MutationCategory.ORIGINAL)
    return b.done(name)


def build_pools(signature: KernelSignature, original_args: tuple, cfg: MutationConfig) -> PoolSet:
    """One pool per parameter, seeded from the original arguments."""
    if len(original_args) != len(signature.params):
        raise ValueError(
            f"{signature.name}: {len(original_args)} args for "
            f"{len(signature.params)} params"
        )
    pools: PoolSet = []
    for index, (param, original) in enumerate(zip(signature.params, original_args)):
        if param.tag is TypeTag.TENSOR:
            if not isinstance(original, Tensor):
                raise ValueError(f"{param.name}: original is not a tensor")
            pool = _tensor_pool(cfg, signature.name, index, param.name, original)
        elif param.tag is TypeTag.INT:
            pool = _int_pool(cfg, param.name, original)
        elif param.tag is TypeTag.FLOAT:
            pool = _float_pool(cfg, param.name, original)
        elif param.tag is TypeTag.BOOL:
            pool = _bool_pool(param.name, original)
        elif param.tag is TypeTag.STR:
            pool = _str_pool(cfg, param.name, original)
        elif param.tag is TypeTag.INT_LIST:
            pool = _int_list_pool(cfg, param.name, original)
        else:
            raise ValueError(f"unsupported parameter type {param.tag}")
        if len(pool) == 0:
            raise ValueError(f"{param.name}: empty pool")
        pools.append(pool)
    return pools


def raw_combination_count(pools: PoolSet) -> int:
    n = 1
    for pool in pools:
        n *= len(pool)
    return n


def combination_count(pools: PoolSet, cfg: MutationConfig) -> int:
    """Number of enumerable combinations, capped by the config."""
    return min(raw_combination_count(pools), cfg.max_combinations)


def nth_combination(pools: PoolSet, uin: int) -> tuple:
    """Decode a UIN into one argument tuple.

    Mixed-radix decoding: the least-significant digit indexes the first
    pool. Valid for any uin in [0, product of pool sizes).
    """
    return tuple(c.value for c in _nth_candidates(pools, uin))


def _nth_candidates(pools: PoolSet, uin: int) -> list[Candidate]:
    if uin < 0 or uin >= raw_combination_count(pools):
        raise ValueError(f"uin {uin} out of range")
    chosen = []
    n = uin
    for pool in pools:
        n, digit = divmod(n, len(pool))
        chosen.append(pool.candidates[digit])
    return chosen


def category_of(pools: PoolSet, uin: int) -> list[MutationCategory]:
    """Categories of the selected candidates, deduplicated in param order."""
    cats: list[MutationCategory] = []
    for cand in _nth_candidates(pools, uin):
        if cand.category not in cats:
            cats.append(cand.category)
    return cats


def primary_category(pools: PoolSet, uin: int) -> MutationCategory:
    """Single-category attribution for cross-tabulation.

    The first non-original category in parameter order; a combination made
    entirely of original arguments attributes to ORIGINAL.
    """
    for cat in category_of(pools, uin):
        if cat is not MutationCategory.ORIGINAL:
            return cat
    return MutationCategory.ORIGINAL
