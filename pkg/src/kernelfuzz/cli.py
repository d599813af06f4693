"""Command-line front end.

Stages write into one artifact directory and are idempotent: re-running a
completed stage without --force changes nothing. Exit codes: 0 success,
1 verification failure (replay mismatch), 2 usage error, 3 operational
error.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from .artifacts import ArtifactPaths, artifact_paths
from .kernels import KernelValidationError, register_corpus
from .mutations import MutationConfig, config_text, load_config
from .reports import (
    BindingMapError,
    ReportFormatError,
    read_binding_map,
    record_binding_map,
    render_literal,
)
from .synth import (
    PovManifest,
    ReplayError,
    categorize_povs,
    manifest_arg_values,
    parse_pov_manifest,
    parse_verdict,
    render_verdict,
    replay_pov,
    resolve_binding,
    synthesize_campaign,
)
from .watchdog import (
    CampaignConfig,
    SessionOutcome,
    WatchdogError,
    orchestrate,
    read_crash_records,
    session_order,
    write_results_csv,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_OPERATIONAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelfuzz",
        description="Mutation fuzzer and PoV pipeline for the kernel corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuzz", help="run fuzzing sessions for the corpus")
    p.add_argument("--seed", type=int, default=None,
                   help="campaign seed (default 1, or the config file's rng_seed)")
    p.add_argument("--timeout", type=float, default=60.0,
                   help="per-kernel session timeout in seconds")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--kernels", type=int, metavar="N",
                     help="fuzz the first N kernels of the seeded order")
    sel.add_argument("--all", action="store_true", help="fuzz every target")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent sessions (default 1, deterministic)")
    p.add_argument("--config", default=None, help="mutation config file")
    p.add_argument("--memory-mb", type=int, default=1024,
                   help="per-session memory cap in MiB")
    p.add_argument("--max-reruns", type=int, default=1000)
    p.add_argument("--normalize-timestamps", action="store_true",
                   help="write zeros instead of wall-clock timestamps")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("synthesize", help="build crash reports and PoV manifests")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("replay", help="replay every manifest and verify it")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("report", help="write campaign summary tables")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("exec", help="execute one PoV manifest in this process")
    p.add_argument("--pov", required=True, help="manifest file")

    p = sub.add_parser("describe", help="print bound kernel signatures")
    p.add_argument("--json", action="store_true", default=True)

    return parser


def _load_campaign_config(paths: ArtifactPaths) -> MutationConfig:
    if not paths.config_file.exists():
        raise FileNotFoundError(f"{paths.config_file} missing; run fuzz first")
    return load_config(paths.config_file)


def _effective_mutation_config(args: argparse.Namespace) -> MutationConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = MutationConfig()
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, rng_seed=args.seed)
    return cfg


def _wipe_artifacts(paths: ArtifactPaths) -> None:
    for d in (paths.logs, paths.crashes, paths.timing, paths.done,
              paths.reports, paths.povs, paths.summary):
        shutil.rmtree(d, ignore_errors=True)
    for f in (paths.results_csv, paths.binding_map, paths.config_file,
              paths.fault_log):
        try:
            f.unlink()
        except FileNotFoundError:
            pass


def cmd_fuzz(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.kernels is not None and args.kernels <= 0:
        parser.error("--kernels must be a positive count")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    paths = artifact_paths(args.out)
    if paths.results_csv.exists():
        if not args.force:
            print(f"fuzz stage already complete in {paths.root} (use --force to re-run)")
            return EXIT_OK
        _wipe_artifacts(paths)
    paths.ensure()
    mcfg = _effective_mutation_config(args)
    paths.config_file.write_text(config_text(mcfg))
    registry = register_corpus()
    record_binding_map(registry, paths.binding_map)
    ccfg = CampaignConfig(
        timeout_per_kernel=args.timeout,
        memory_cap_bytes=args.memory_mb * (1 << 20),
        kernel_order_seed=mcfg.rng_seed,
        max_reruns=args.max_reruns,
    )
    order = session_order(registry, ccfg.kernel_order_seed)
    if args.kernels is not None:
        order = order[: args.kernels]
    results = orchestrate(
        registry, paths, ccfg, mcfg,
        kernel_limit=args.kernels,
        jobs=args.jobs,
        normalize_timestamps=args.normalize_timestamps,
    )
    write_results_csv(paths, order, results)
    failed = False
    for entry, result in zip(order, results):
        if isinstance(result, SessionOutcome):
            print(
                f"{result.kernel}: {result.status.value} "
                f"crashes={len(result.crash_uins)} reruns={result.rerun_count}"
            )
        else:
            failed = True
            print(f"{entry.name}: session error: {result}", file=sys.stderr)
    return EXIT_OPERATIONAL if failed else EXIT_OK


def cmd_synthesize(args: argparse.Namespace) -> int:
    paths = artifact_paths(args.out)
    if not paths.results_csv.exists():
        print("no completed fuzz stage in --out", file=sys.stderr)
        return EXIT_OPERATIONAL
    if paths.synthesis_log.exists() and not args.force:
        print(f"synthesize stage already complete in {paths.root} (use --force to re-run)")
        return EXIT_OK
    if args.force:
        shutil.rmtree(paths.reports, ignore_errors=True)
        shutil.rmtree(paths.povs, ignore_errors=True)
    paths.ensure()
    mcfg = _load_campaign_config(paths)
    binding_map = read_binding_map(paths.binding_map)
    registry = register_corpus()
    result = synthesize_campaign(paths, registry, binding_map, mcfg)
    nobinding = sum(1 for l in result.log_lines if l.startswith("nobinding"))
    unsupported = sum(1 for l in result.log_lines if l.startswith("unsupportedarg"))
    summary = (
        f"reports={result.report_count} manifests={len(result.manifests)} "
        f"nobinding={nobinding} unsupportedarg={unsupported}"
    )
    paths.synthesis_log.write_text(
        "\n".join(result.log_lines + [summary]) + "\n"
    )
    print(summary)
    return EXIT_OK


def _verdict_path(paths: ArtifactPaths, pov_path: Path) -> Path:
    return pov_path.with_suffix(".verdict")


def cmd_replay(args: argparse.Namespace) -> int:
    paths = artifact_paths(args.out)
    pov_paths = sorted(paths.povs.glob("*.pov"))
    if not paths.results_csv.exists():
        print("no completed fuzz stage in --out", file=sys.stderr)
        return EXIT_OPERATIONAL
    registry = register_corpus()
    all_match = True
    total = 0
    if all(_verdict_path(paths, p).exists() for p in pov_paths) and not args.force and pov_paths:
        for pov_path in pov_paths:
            _, _, match = parse_verdict(_verdict_path(paths, pov_path).read_text())
            total += 1
            all_match = all_match and match
        print(f"replay stage already complete: {total} verdicts (use --force to re-run)")
        return EXIT_OK if all_match else EXIT_VERIFY_FAILED
    mismatches = []
    for pov_path in pov_paths:
        manifest = parse_pov_manifest(pov_path.read_text())
        observed = replay_pov(manifest, registry)
        _verdict_path(paths, pov_path).write_text(
            render_verdict(observed, manifest.expect)
        )
        total += 1
        if observed is not manifest.expect:
            all_match = False
            mismatches.append(
                f"{manifest.kernel}:{manifest.uin} expected="
                f"{manifest.expect.token if manifest.expect else 'none'} "
                f"observed={observed.token if observed else 'none'}"
            )
    print(f"replayed {total} manifests, {total - len(mismatches)} confirmed")
    for line in mismatches:
        print(f"mismatch {line}", file=sys.stderr)
    return EXIT_OK if all_match else EXIT_VERIFY_FAILED


def cmd_report(args: argparse.Namespace) -> int:
    paths = artifact_paths(args.out)
    if not paths.results_csv.exists():
        print("no completed fuzz stage in --out", file=sys.stderr)
        return EXIT_OPERATIONAL
    over_time = paths.summary / "crashes_over_time.csv"
    table_csv = paths.summary / "category_table.csv"
    table_txt = paths.summary / "category_table.txt"
    if over_time.exists() and table_csv.exists() and not args.force:
        print(f"report stage already complete in {paths.root} (use --force to re-run)")
        return EXIT_OK
    paths.ensure()

    started_values = []
    for line in paths.results_csv.read_text().splitlines()[1:]:
        fields = line.split(",")
        if len(fields) >= 3 and fields[1] != "error":
            started_values.append(int(fields[2]))
    campaign_start = min(started_values) if started_values else 0

    at_times = []
    for crash_path in sorted(paths.crashes.glob("*.crashes")):
        at_times.extend(r.at_ns for r in read_crash_records(crash_path))
    at_times.sort()
    lines = ["elapsed_ns,cumulative_crashes"]
    for i, at_ns in enumerate(at_times, start=1):
        lines.append(f"{max(0, at_ns - campaign_start)},{i}")
    over_time.write_text("\n".join(lines) + "\n")

    mcfg = _load_campaign_config(paths)
    registry = register_corpus()
    records: list[tuple[PovManifest, object]] = []
    for pov_path in sorted(paths.povs.glob("*.pov")):
        manifest = parse_pov_manifest(pov_path.read_text())
        verdict_path = _verdict_path(paths, pov_path)
        if verdict_path.exists():
            observed, _, _ = parse_verdict(verdict_path.read_text())
        else:
            observed = manifest.expect  # not yet replayed; provisional
        records.append((manifest, observed))
    table = categorize_povs(records, registry, mcfg)
    table_csv.write_text(table.csv_text())
    table_txt.write_text(table.pretty_text())
    print(f"crashes={len(at_times)} categorized={table.total()}")
    return EXIT_OK


def cmd_exec(args: argparse.Namespace) -> int:
    manifest = parse_pov_manifest(Path(args.pov).read_text())
    registry = register_corpus()
    entry = resolve_binding(manifest.binding, registry)
    values = manifest_arg_values(manifest, entry)
    try:
        result = entry.call(values)
    except KernelValidationError as exc:
        print(f"invalid={exc}")
        return EXIT_OK
    if result is None:
        print("result=none")
    else:
        print(f"result={render_literal(result)}")
    return EXIT_OK


def cmd_describe(args: argparse.Namespace) -> int:
    registry = register_corpus()
    kernels = []
    for entry in registry.values():
        if entry.binding is None or not entry.fuzzable:
            continue
        kernels.append(
            {
                "kernel": entry.name,
                "binding": entry.binding,
                "params": [
                    {"name": p.name, "type": p.tag.value}
                    for p in entry.signature.params
                ],
                "returns": entry.signature.returns.value
                if entry.signature.returns
                else None,
            }
        )
    print(json.dumps({"version": 1, "kernels": kernels}, indent=2))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fuzz":
            return cmd_fuzz(args, parser)
        if args.command == "synthesize":
            return cmd_synthesize(args)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "report":
            return cmd_report(args)
        if args.command == "exec":
            return cmd_exec(args)
        if args.command == "describe":
            return cmd_describe(args)
    except (OSError, ValueError, WatchdogError, ReplayError,
            ReportFormatError, BindingMapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE  # unreachable; parser.error raises
