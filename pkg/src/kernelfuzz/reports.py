"""Crash reports, canonical argument literals, and the binding map.

Two small text grammars live here. Crash reports record one crashing
combination in a human-readable, exactly round-trippable form (render then
parse then render is byte-identical). Canonical literals are the one-line
encoding of argument values used by PoV manifests and by anything that
drives kernels from outside this process. Both grammars are versioned by
the report's version line and change only by bumping it; parsers reject
versions they do not know.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .kernels import KernelEntry, Registry, TypeTag
from .mutations import (
    MutationConfig,
    config_fingerprint,
    build_pools,
    combination_count,
    nth_combination,
)
from .tensors import DType, FaultClass, Tensor, tensor_from_values, tensor_new

REPORT_VERSION = 1


class ReportFormatError(Exception):
    pass


class ReportConsistencyError(Exception):
    pass


class UnsupportedArgError(Exception):
    """Argument value outside what the literal/report grammars can carry."""


# --- scalar tokens -----------------------------------------------------------


def _quote(text: str) -> str:
    if any(ord(c) < 0x20 for c in text):
        raise UnsupportedArgError("control characters in string value")
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _scan_quoted(text: str, start: int) -> tuple[str, int]:
    """Parse a double-quoted token beginning at start; returns (value, end)."""
    if start >= len(text) or text[start] != '"':
        raise ReportFormatError(f"expected quoted string at {text[start:]!r}")
    out = []
    i = start + 1
    while i < len(text):
        c = text[i]
        if c == "\\":
            if i + 1 >= len(text) or text[i + 1] not in ('"', "\\"):
                raise ReportFormatError("bad escape in string token")
            out.append(text[i + 1])
            i += 2
        elif c == '"':
            return "".join(out), i + 1
        else:
            out.append(c)
            i += 1
    raise ReportFormatError("unterminated string token")


def _split_tokens(text: str) -> list[str]:
    """Split space-separated tokens, keeping quoted tokens intact."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] == " ":
            i += 1
            continue
        if text[i] == '"':
            _, end = _scan_quoted(text, i)
            tokens.append(text[i:end])
            i = end
        else:
            j = text.find(" ", i)
            if j == -1:
                j = n
            tokens.append(text[i:j])
            i = j
    return tokens


def _render_element(dtype: DType, value) -> str:
    if dtype is DType.INT64:
        return str(value)
    if dtype is DType.FLOAT64:
        return repr(value)
    if dtype is DType.BOOL:
        return "true" if value else "false"
    return _quote(value)


def _parse_element(dtype: DType, token: str):
    try:
        if dtype is DType.INT64:
            return int(token)
        if dtype is DType.FLOAT64:
            return float(token)
        if dtype is DType.BOOL:
            if token == "true":
                return True
            if token == "false":
                return False
            raise ValueError(token)
        value, end = _scan_quoted(token, 0)
        if end != len(token):
            raise ValueError(token)
        return value
    except ValueError as exc:
        raise ReportFormatError(
            f"bad {dtype.token} element {token!r}"
        ) from exc


# --- crash-report argument lines ---------------------------------------------


def _render_shape(shape: tuple[int, ...]) -> str:
    return "[" + ",".join(str(d) for d in shape) + "]"


def _parse_shape(text: str) -> tuple[int, ...]:
    if not (text.startswith("[") and text.endswith("]")):
        raise ReportFormatError(f"bad shape {text!r}")
    inner = text[1:-1]
    if not inner:
        return ()
    try:
        return tuple(int(d) for d in inner.split(","))
    except ValueError as exc:
        raise ReportFormatError(f"bad shape {text!r}") from exc


def render_arg_line(value) -> str:
    if isinstance(value, Tensor):
        elems = " ".join(_render_element(value.dtype, v) for v in value.tolist())
        body = f"type: {value.dtype.token} shape: {_render_shape(value.shape)} values:"
        if elems:
            body += " " + elems
        return f"Tensor<{body}>"
    if isinstance(value, bool):
        return f"Scalar<type: bool value: {_render_element(DType.BOOL, value)}>"
    if isinstance(value, int):
        return f"Scalar<type: int64 value: {value}>"
    if isinstance(value, float):
        return f"Scalar<type: float64 value: {repr(value)}>"
    if isinstance(value, str):
        return f"Scalar<type: str value: {_quote(value)}>"
    if isinstance(value, list):
        body = "type: int64 values:"
        if value:
            body += " " + " ".join(str(v) for v in value)
        return f"List<{body}>"
    raise UnsupportedArgError(f"cannot render {type(value).__name__}")


def parse_arg_line(line: str):
    if line.startswith("Tensor<") and line.endswith(">"):
        inner = line[len("Tensor<"):-1]
        dtype, rest = _take_field(inner, "type: ")
        shape_text, rest = _take_word(rest, "shape: ")
        if not rest.startswith("values:"):
            raise ReportFormatError(f"missing values in {line!r}")
        values_text = rest[len("values:"):].lstrip(" ")
        dt = _dtype_from(dtype)
        shape = _parse_shape(shape_text)
        tokens = _split_tokens(values_text)
        values = [_parse_element(dt, t) for t in tokens]
        if dt is DType.STR:
            if not values:
                return tensor_new(dt, shape, "")
            first = values[0]
            if any(v != first for v in values):
                raise ReportFormatError("str tensors are fill-only")
            return tensor_new(dt, shape, first)
        return tensor_from_values(dt, shape, values)
    if line.startswith("Scalar<") and line.endswith(">"):
        inner = line[len("Scalar<"):-1]
        dtype, rest = _take_field(inner, "type: ")
        if not rest.startswith("value: "):
            raise ReportFormatError(f"missing value in {line!r}")
        return _parse_element(_dtype_from(dtype), rest[len("value: "):])
    if line.startswith("List<") and line.endswith(">"):
        inner = line[len("List<"):-1]
        dtype, rest = _take_field(inner, "type: ")
        if dtype != "int64":
            raise ReportFormatError(f"unsupported list dtype {dtype!r}")
        if not rest.startswith("values:"):
            raise ReportFormatError(f"missing values in {line!r}")
        values_text = rest[len("values:"):].lstrip(" ")
        tokens = _split_tokens(values_text)
        return [_parse_element(DType.INT64, t) for t in tokens]
    raise ReportFormatError(f"unrecognized argument line {line!r}")


def _dtype_from(token: str) -> DType:
    try:
        return DType.from_token(token)
    except ValueError as exc:
        raise ReportFormatError(str(exc)) from exc


def _take_field(text: str, prefix: str) -> tuple[str, str]:
    if not text.startswith(prefix):
        raise ReportFormatError(f"expected {prefix!r} in {text!r}")
    rest = text[len(prefix):]
    space = rest.find(" ")
    if space == -1:
        raise ReportFormatError(f"truncated field after {prefix!r}")
    return rest[:space], rest[space + 1:]


_take_word = _take_field


# --- crash reports -----------------------------------------------------------


@dataclass(frozen=True)
class CrashReport:
    kernel: str
    args: tuple
    uin: int
    fault: FaultClass
    seed: int
    cfghash: str


def render_crash_report(report: CrashReport) -> str:
    lines = [f"# {report.kernel}"]
    lines.extend(render_arg_line(a) for a in report.args)
    lines.append(f"version={REPORT_VERSION}")
    lines.append(f"uin={report.uin}")
    lines.append(f"class={report.fault.token}")
    lines.append(f"seed={report.seed}")
    lines.append(f"cfghash={report.cfghash}")
    return "\n".join(lines) + "\n"


def parse_crash_report(text: str) -> CrashReport:
    lines = text.splitlines()
    if len(lines) < 6 or not lines[0].startswith("# "):
        raise ReportFormatError("missing kernel header line")
    kernel = lines[0][2:]
    meta = lines[-5:]
    arg_lines = lines[1:-5]
    expected = ("version=", "uin=", "class=", "seed=", "cfghash=")
    fields = []
    for prefix, line in zip(expected, meta):
        if not line.startswith(prefix):
            raise ReportFormatError(f"expected {prefix!r} line, got {line!r}")
        fields.append(line[len(prefix):])
    try:
        version = int(fields[0])
        uin = int(fields[1])
        seed = int(fields[3])
    except ValueError as exc:
        raise ReportFormatError("non-numeric metadata") from exc
    if version != REPORT_VERSION:
        raise ReportFormatError(f"unknown report version {version}")
    fault = FaultClass.from_token(fields[2])
    args = tuple(parse_arg_line(line) for line in arg_lines)
    return CrashReport(
        kernel=kernel, args=args, uin=uin, fault=fault, seed=seed, cfghash=fields[4]
    )


def build_crash_report(
    entry: KernelEntry, uin: int, fault: FaultClass, mcfg: MutationConfig
) -> CrashReport:
    """Reconstruct the offending arguments for a recorded crasher.

    The pools are rebuilt from the kernel's first driver seed under the
    same config, so the UIN decodes to exactly the combination that was
    in flight when the process died.
    """
    pools = build_pools(entry.signature, entry.driver_seeds[0], mcfg)
    if not 0 <= uin < combination_count(pools, mcfg):
        raise ReportConsistencyError(
            f"{entry.name}: uin {uin} not reconstructible under this config"
        )
    args = nth_combination(pools, uin)
    return CrashReport(
        kernel=entry.name,
        args=args,
        uin=uin,
        fault=fault,
        seed=mcfg.rng_seed,
        cfghash=config_fingerprint(mcfg),
    )


def report_filename(kernel: str, uin: int) -> str:
    return f"{kernel}__{uin}.report"


def write_crash_report(directory: Path, report: CrashReport) -> Path:
    path = directory / report_filename(report.kernel, report.uin)
    path.write_text(render_crash_report(report))
    return path


def read_crash_report(path: Path) -> CrashReport:
    return parse_crash_report(path.read_text())


# --- canonical literals ------------------------------------------------------


def render_literal(value) -> str:
    """One-line canonical encoding of an argument value."""
    if isinstance(value, Tensor):
        shape = _render_shape(value.shape)
        if value.is_uniform():
            fill = value.fill if value.fill is not None else (
                value.values[0] if value.values else _zero_of(value.dtype)
            )
            fill_text = _render_element(value.dtype, fill)
            return f"tensor({value.dtype.token}, shape={shape}, fill={fill_text})"
        elems = ",".join(_render_element(value.dtype, v) for v in value.tolist())
        return f"tensor({value.dtype.token}, shape={shape}, values=[{elems}])"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return _quote(value)
    if isinstance(value, list):
        return "[" + ",".join(str(v) for v in value) + "]"
    raise UnsupportedArgError(f"cannot render {type(value).__name__}")


def _zero_of(dtype: DType):
    if dtype is DType.INT64:
        return 0
    if dtype is DType.FLOAT64:
        return 0.0
    if dtype is DType.BOOL:
        return False
    return ""


def parse_literal(text: str, tag: TypeTag):
    """Parse a canonical literal for a parameter of the given type."""
    text = text.strip()
    try:
        if tag is TypeTag.TENSOR:
            return _parse_tensor_literal(text)
        if tag is TypeTag.INT:
            return int(text)
        if tag is TypeTag.FLOAT:
            if not any(c in text for c in ".eE") and text not in ("inf", "-inf", "nan"):
                raise ValueError(text)
            return float(text)
        if tag is TypeTag.BOOL:
            if text == "true":
                return True
            if text == "false":
                return False
            raise ValueError(text)
        if tag is TypeTag.STR:
            value, end = _scan_quoted(text, 0)
            if end != len(text):
                raise ValueError(text)
            return value
        if tag is TypeTag.INT_LIST:
            if not (text.startswith("[") and text.endswith("]")):
                raise ValueError(text)
            inner = text[1:-1]
            return [int(v) for v in inner.split(",")] if inner else []
    except ReportFormatError:
        raise
    except ValueError as exc:
        raise ReportFormatError(f"bad {tag.value} literal {text!r}") from exc
    raise UnsupportedArgError(f"unsupported parameter type {tag}")


def _parse_tensor_literal(text: str) -> Tensor:
    if not (text.startswith("tensor(") and text.endswith(")")):
        raise ReportFormatError(f"bad tensor literal {text!r}")
    inner = text[len("tensor("):-1]
    parts = _split_top_level(inner)
    if len(parts) != 3:
        raise ReportFormatError(f"tensor literal needs 3 fields: {text!r}")
    dt = _dtype_from(parts[0])
    if not parts[1].startswith("shape="):
        raise ReportFormatError(f"missing shape= in {text!r}")
    shape = _parse_shape(parts[1][len("shape="):])
    payload = parts[2]
    if payload.startswith("fill="):
        fill = _parse_element(dt, payload[len("fill="):])
        return tensor_new(dt, shape, fill)
    if payload.startswith("values=[") and payload.endswith("]"):
        body = payload[len("values=["):-1]
        tokens = _split_top_level(body) if body else []
        values = [_parse_element(dt, t) for t in tokens]
        return tensor_from_values(dt, shape, values)
    raise ReportFormatError(f"missing fill=/values= in {text!r}")


def _split_top_level(text: str) -> list[str]:
    """Split on commas that are not inside brackets or quotes."""
    parts = []
    depth = 0
    in_quote = False
    current = []
    i = 0
    while i < len(text):
        c = text[i]
        if in_quote:
            current.append(c)
            if c == "\\" and i + 1 < len(text):
                current.append(text[i + 1])
                i += 1
            elif c == '"':
                in_quote = False
        elif c == '"':
            in_quote = True
            current.append(c)
        elif c == "[":
            depth += 1
            current.append(c)
        elif c == "]":
            depth -= 1
            current.append(c)
        elif c == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(c)
        i += 1
    if current or parts:
        parts.append("".join(current).strip())
    return parts


# --- binding map -------------------------------------------------------------


class BindingMapError(Exception):
    pass


def record_binding_map(registry: Registry, path: Path) -> None:
    """Write kernel-to-binding lines for every bound, fuzzable kernel."""
    seen = set()
    lines = []
    for entry in registry.values():
        if entry.binding is None or not entry.fuzzable:
            continue
        if entry.name in seen:
            raise BindingMapError(f"duplicate kernel {entry.name}")
        seen.add(entry.name)
        lines.append(f"{entry.name}\t{entry.binding}")
    path.write_text("\n".join(lines) + "\n" if lines else "")


def read_binding_map(path: Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise BindingMapError(f"line {lineno}: expected tab-separated pair")
        kernel, _, binding = line.partition("\t")
        if kernel in mapping:
            raise BindingMapError(f"line {lineno}: duplicate kernel {kernel}")
        mapping[kernel] = binding
    return mapping
