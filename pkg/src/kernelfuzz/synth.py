"""PoV manifests: synthesis from crash reports, replay, categorization.

A PoV manifest is the portable form of one crash: which binding to call,
the argument literals, and the fault class the crash originally produced.
Replay executes the manifest in a fresh child process with no
instrumentation and compares what actually happens against the
expectation. Categorization cross-tabulates confirmed PoVs by the mutation
category that produced them and by fault class.
"""

from __future__ import annotations

from dataclasses import dataclass

from .artifacts import ArtifactPaths
from .kernels import KernelEntry, Registry
from .mutations import (
    MutationConfig,
    MutationCategory,
    build_pools,
    primary_category,
)
from .reports import (
    CrashReport,
    ReportFormatError,
    UnsupportedArgError,
    build_crash_report,
    parse_literal,
    render_literal,
    write_crash_report,
)
from .tensors import FaultClass
from .watchdog import read_crash_records, run_in_child

POV_VERSION = 1


class NoBindingError(Exception):
    def __init__(self, kernel: str):
        super().__init__(f"no binding recorded for kernel {kernel!r}")
        self.kernel = kernel


class ReplayError(Exception):
    pass


@dataclass(frozen=True)
class PovManifest:
    binding: str
    kernel: str
    uin: int
    expect: FaultClass | None
    args: tuple[tuple[str, str], ...]  # (param name, canonical literal)


def render_pov_manifest(manifest: PovManifest) -> str:
    lines = [
        f"pov-version={POV_VERSION}",
        f"binding={manifest.binding}",
        f"provenance={manifest.kernel}:{manifest.uin}",
        f"expect={manifest.expect.token if manifest.expect else 'none'}",
    ]
    lines.extend(f"arg.{name}={literal}" for name, literal in manifest.args)
    return "\n".join(lines) + "\n"


def parse_pov_manifest(text: str) -> PovManifest:
    lines = [l for l in text.splitlines() if l.strip()]
    if len(lines) < 4:
        raise ReportFormatError("manifest too short")
    head = {}
    for expected, line in zip(("pov-version", "binding", "provenance", "expect"), lines[:4]):
        key, sep, value = line.partition("=")
        if not sep or key != expected:
            raise ReportFormatError(f"expected {expected}= line, got {line!r}")
        head[key] = value
    if head["pov-version"] != str(POV_VERSION):
        raise ReportFormatError(f"unknown pov-version {head['pov-version']!r}")
    kernel, sep, uin_text = head["provenance"].partition(":")
    if not sep:
        raise ReportFormatError(f"bad provenance {head['provenance']!r}")
    try:
        uin = int(uin_text)
    except ValueError as exc:
        raise ReportFormatError(f"bad provenance uin {uin_text!r}") from exc
    expect_token = head["expect"]
    expect = None if expect_token == "none" else FaultClass.from_token(expect_token)
    args = []
    for line in lines[4:]:
        if not line.startswith("arg."):
            raise ReportFormatError(f"expected arg. line, got {line!r}")
        key, sep, literal = line.partition("=")
        if not sep:
            raise ReportFormatError(f"expected arg.<name>=<literal>, got {line!r}")
        args.append((key[len("arg."):], literal))
    return PovManifest(
        binding=head["binding"], kernel=kernel, uin=uin, expect=expect,
        args=tuple(args),
    )


def pov_filename(kernel: str, uin: int) -> str:
    return f"{kernel}__{uin}.pov"


def synthesize_pov(
    report: CrashReport, binding_map: dict[str, str], registry: Registry
) -> PovManifest:
    """Convert one crash report into a manifest.

    Raises NoBindingError for kernels absent from the binding map and
    UnsupportedArgError for argument values the literal grammar cannot
    carry.
    """
    binding = binding_map.get(report.kernel)
    if binding is None:
        raise NoBindingError(report.kernel)
    entry = registry.get(report.kernel)
    if entry is None:
        raise ReportFormatError(f"unknown kernel {report.kernel!r}")
    params = entry.signature.params
    if len(params) != len(report.args):
        raise ReportFormatError(
            f"{report.kernel}: report has {len(report.args)} args, "
            f"signature has {len(params)}"
        )
    args = tuple(
        (param.name, render_literal(value))
        for param, value in zip(params, report.args)
    )
    return PovManifest(
        binding=binding, kernel=report.kernel, uin=report.uin,
        expect=report.fault, args=args,
    )


def resolve_binding(binding: str, registry: Registry) -> KernelEntry:
    for entry in registry.values():
        if entry.binding == binding:
            return entry
    raise ReplayError(f"no kernel bound as {binding!r}")


def manifest_arg_values(manifest: PovManifest, entry: KernelEntry) -> tuple:
    params = entry.signature.params
    if tuple(name for name, _ in manifest.args) != tuple(p.name for p in params):
        raise ReportFormatError(
            f"{manifest.kernel}: manifest args do not match signature"
        )
    return tuple(
        parse_literal(literal, param.tag)
        for (_, literal), param in zip(manifest.args, params)
    )


def replay_pov(
    manifest: PovManifest, registry: Registry, *, timeout_s: float = 30.0
) -> FaultClass | None:
    """Execute the manifest in a fresh, uninstrumented child.

    Returns the observed FaultClass, or None for a graceful run. Validation
    errors in the child count as graceful: the kernel rejected the inputs
    without faulting.
    """
    entry = resolve_binding(manifest.binding, registry)
    args = manifest_arg_values(manifest, entry)

    def invoke() -> None:
        from .kernels import KernelValidationError

        try:
            entry.call(args)
        except KernelValidationError:
            pass

    result = run_in_child(invoke, timeout_s=timeout_s)
    if result.timed_out:
        raise ReplayError(f"{manifest.kernel}: replay timed out")
    code = result.exit_code
    assert code is not None
    if code == 0:
        return None
    fault = FaultClass.from_exit_code(code)
    if fault is None:
        raise ReplayError(f"{manifest.kernel}: replay child exited with {code}")
    return fault


# --- campaign-level synthesis --------------------------------------------------


@dataclass
class SynthesisResult:
    manifests: list[PovManifest]
    log_lines: list[str]
    report_count: int = 0


def synthesize_campaign(
    paths: ArtifactPaths,
    registry: Registry,
    binding_map: dict[str, str],
    mcfg: MutationConfig,
) -> SynthesisResult:
    """Materialize crash reports for every recorded crash, then manifests
    for every crash whose kernel has a binding. Failures are logged, not
    raised; one bad record never blocks the rest."""
    out = SynthesisResult(manifests=[], log_lines=[])
    for crash_path in sorted(paths.crashes.glob("*.crashes")):
        kernel = crash_path.stem
        entry = registry.get(kernel)
        if entry is None:
            out.log_lines.append(f"skip {kernel}: not in registry")
            continue
        for record in read_crash_records(crash_path):
            try:
                report = build_crash_report(entry, record.uin, record.fault, mcfg)
            except Exception as exc:
                out.log_lines.append(f"error {kernel}:{record.uin}: {exc}")
                continue
            write_crash_report(paths.reports, report)
            out.report_count += 1
            try:
                manifest = synthesize_pov(report, binding_map, registry)
            except NoBindingError as exc:
                out.log_lines.append(f"nobinding {kernel}:{record.uin}: {exc}")
                continue
            except UnsupportedArgError as exc:
                out.log_lines.append(f"unsupportedarg {kernel}:{record.uin}: {exc}")
                continue
            pov_path = paths.povs / pov_filename(kernel, record.uin)
            pov_path.write_text(render_pov_manifest(manifest))
            out.manifests.append(manifest)
    return out


# --- categorization ------------------------------------------------------------


_FAULT_COLUMNS = (FaultClass.SEGV, FaultClass.FPE, FaultClass.ABORT)


@dataclass
class CategoryTable:
    # rows: (category, segv, fpe, abort), ordered by total desc then name
    rows: list[tuple[MutationCategory, int, int, int]]

    def total(self) -> int:
        return sum(r[1] + r[2] + r[3] for r in self.rows)

    def column_totals(self) -> tuple[int, int, int]:
        return (
            sum(r[1] for r in self.rows),
            sum(r[2] for r in self.rows),
            sum(r[3] for r in self.rows),
        )

    def csv_text(self) -> str:
        lines = ["category,segv,fpe,abort,total"]
        for cat, segv, fpe, abort in self.rows:
            lines.append(f"{cat.token},{segv},{fpe},{abort},{segv + fpe + abort}")
        return "\n".join(lines) + "\n"

    def pretty_text(self) -> str:
        header = ("category", "segv", "fpe", "abort", "total")
        body = [
            (cat.token, str(segv), str(fpe), str(abort), str(segv + fpe + abort))
            for cat, segv, fpe, abort in self.rows
        ]
        totals = self.column_totals()
        body.append(("total", str(totals[0]), str(totals[1]), str(totals[2]), str(self.total())))
        widths = [
            max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i])
            for i in range(5)
        ]
        lines = [
            header[0].ljust(widths[0]) + "  " +
            "  ".join(header[i].rjust(widths[i]) for i in range(1, 5))
        ]
        for row in body:
            lines.append(
                row[0].ljust(widths[0]) + "  " +
                "  ".join(row[i].rjust(widths[i]) for i in range(1, 5))
            )
        return "\n".join(lines) + "\n"


def categorize_povs(
    records: list[tuple[PovManifest, FaultClass | None]],
    registry: Registry,
    mcfg: MutationConfig,
) -> CategoryTable:
    """Cross-tabulate confirmed PoVs (observed class equals expected).

    Each PoV lands in exactly one category row, the attribution of its UIN
    under the pools that produced it.
    """
    counts: dict[MutationCategory, list[int]] = {}
    pools_cache: dict[str, list] = {}
    for manifest, observed in records:
        if observed is None or manifest.expect is None:
            continue
        if observed is not manifest.expect:
            continue
        entry = registry.get(manifest.kernel)
        if entry is None:
            continue
        if manifest.kernel not in pools_cache:
            pools_cache[manifest.kernel] = build_pools(
                entry.signature, entry.driver_seeds[0], mcfg
            )
        category = primary_category(pools_cache[manifest.kernel], manifest.uin)
        row = counts.setdefault(category, [0, 0, 0])
        row[_FAULT_COLUMNS.index(observed)] += 1
    ordered = sorted(
        counts.items(), key=lambda item: (-sum(item[1]), item[0].token)
    )
    return CategoryTable(
        rows=[(cat, row[0], row[1], row[2]) for cat, row in ordered]
    )


# --- replay verdict files -------------------------------------------------------


def render_verdict(observed: FaultClass | None, expected: FaultClass | None) -> str:
    obs = observed.token if observed else "none"
    exp = expected.token if expected else "none"
    return f"observed={obs}\nexpected={exp}\nmatch={'true' if observed is expected else 'false'}\n"


def parse_verdict(text: str) -> tuple[FaultClass | None, FaultClass | None, bool]:
    fields = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep:
            fields[key] = value
    observed = None if fields.get("observed") == "none" else FaultClass.from_token(fields["observed"])
    expected = None if fields.get("expected") == "none" else FaultClass.from_token(fields["expected"])
    return observed, expected, fields.get("match") == "true"
