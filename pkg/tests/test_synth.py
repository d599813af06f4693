"""Crash reports, canonical literals, PoV manifests, replay, and tables."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kernelfuzz.artifacts import artifact_paths
from kernelfuzz.kernels import TypeTag, register_corpus
from kernelfuzz.mutations import (
    MutationCategory,
    MutationConfig,
    build_pools,
    combination_count,
    config_fingerprint,
    nth_combination,
    primary_category,
)
from kernelfuzz.reports import (
    BindingMapError,
    CrashReport,
    ReportConsistencyError,
    ReportFormatError,
    UnsupportedArgError,
    build_crash_report,
    parse_arg_line,
    parse_crash_report,
    parse_literal,
    read_binding_map,
    read_crash_report,
    record_binding_map,
    render_arg_line,
    render_crash_report,
    render_literal,
    write_crash_report,
)
from kernelfuzz.synth import (
    CategoryTable,
    NoBindingError,
    PovManifest,
    ReplayError,
    categorize_povs,
    manifest_arg_values,
    parse_pov_manifest,
    parse_verdict,
    pov_filename,
    render_pov_manifest,
    render_verdict,
    replay_pov,
    resolve_binding,
    synthesize_campaign,
    synthesize_pov,
)
from kernelfuzz.tensors import (
    DType,
    FaultClass,
    Tensor,
    tensor_from_values,
    tensor_new,
)
from kernelfuzz.watchdog import CampaignConfig, run_session

I64 = DType.INT64
F64 = DType.FLOAT64

SMALL = MutationConfig(
    int_extremes=(0, -1, 2**62),
    float_extremes=(0.0, 1e308),
    dim_samples_per_arg=1,
)


@pytest.fixture(scope="module")
def registry():
    return register_corpus()


# --- canonical literals --------------------------------------------------------


def test_literal_exact_strings():
    assert render_literal(tensor_new(I64, (2, 3), 5)) == (
        "tensor(int64, shape=[2,3], fill=5)"
    )
    assert render_literal(tensor_from_values(F64, (2,), [0.5, 1.5])) == (
        "tensor(float64, shape=[2], values=[0.5,1.5])"
    )
    assert render_literal(5) == "5"
    assert render_literal(-3) == "-3"
    assert render_literal(2.5) == "2.5"
    assert render_literal(True) == "true"
    assert render_literal(False) == "false"
    assert render_literal("hi") == '"hi"'
    assert render_literal([0, 2]) == "[0,2]"
    assert render_literal([]) == "[]"


def test_uniform_values_render_as_fill():
    t = tensor_from_values(I64, (2,), [7, 7])
    assert render_literal(t) == "tensor(int64, shape=[2], fill=7)"


def test_empty_tensor_renders_as_zero_fill():
    t = tensor_from_values(I64, (0,), [])
    assert render_literal(t) == "tensor(int64, shape=[0], fill=0)"


def test_scalar_shape_renders_empty_brackets():
    assert render_literal(tensor_new(I64, (), 7)) == (
        "tensor(int64, shape=[], fill=7)"
    )


def test_parse_literal_per_tag():
    assert parse_literal("5", TypeTag.INT) == 5
    assert parse_literal("2.5", TypeTag.FLOAT) == 2.5
    assert parse_literal("true", TypeTag.BOOL) is True
    assert parse_literal('"hi"', TypeTag.STR) == "hi"
    assert parse_literal("[0,2]", TypeTag.INT_LIST) == [0, 2]
    assert parse_literal("[]", TypeTag.INT_LIST) == []
    t = parse_literal("tensor(int64, shape=[2,3], fill=5)", TypeTag.TENSOR)
    assert t == tensor_new(I64, (2, 3), 5)


def test_parse_float_literal_requires_float_syntax():
    # a bare integer token must not silently become a float argument
    with pytest.raises(ReportFormatError):
        parse_literal("1", TypeTag.FLOAT)
    assert parse_literal("1.0", TypeTag.FLOAT) == 1.0
    assert parse_literal("1e308", TypeTag.FLOAT) == 1e308
    assert parse_literal("1e-308", TypeTag.FLOAT) == 1e-308


def test_parse_literal_rejects_wrong_shape_of_value():
    with pytest.raises(ReportFormatError):
        parse_literal("maybe", TypeTag.BOOL)
    with pytest.raises(ReportFormatError):
        parse_literal("unquoted", TypeTag.STR)
    with pytest.raises(ReportFormatError):
        parse_literal("0,2", TypeTag.INT_LIST)
    with pytest.raises(ReportFormatError):
        parse_literal("tensor(int64, shape=[1])", TypeTag.TENSOR)


def test_string_quoting_round_trip():
    for s in ("", "plain", 'with "quotes"', "back\\slash", "mixed \\ and \" x"):
        assert parse_literal(render_literal(s), TypeTag.STR) == s


def test_control_characters_are_unsupported():
    with pytest.raises(UnsupportedArgError):
        render_literal("line\nbreak")
    with pytest.raises(UnsupportedArgError):
        render_literal("tab\there")


@given(st.integers(min_value=-(2**63), max_value=2**63 - 1))
def test_int_literal_round_trip(x):
    assert parse_literal(render_literal(x), TypeTag.INT) == x


@given(st.floats(allow_nan=False))
def test_float_literal_round_trip(x):
    assert parse_literal(render_literal(x), TypeTag.FLOAT) == x


def test_nan_literal_round_trip():
    out = parse_literal(render_literal(float("nan")), TypeTag.FLOAT)
    assert math.isnan(out)


@given(
    st.lists(st.integers(min_value=-(2**63), max_value=2**63 - 1), max_size=6)
)
def test_int_list_literal_round_trip(xs):
    assert parse_literal(render_literal(xs), TypeTag.INT_LIST) == xs


@given(
    st.lists(
        st.floats(allow_nan=False), min_size=1, max_size=6
    )
)
def test_tensor_literal_round_trip(values):
    t = tensor_from_values(F64, (len(values),), values)
    again = parse_literal(render_literal(t), TypeTag.TENSOR)
    assert again == t


# --- crash-report argument lines -------------------------------------------------


def test_arg_line_exact_strings():
    assert render_arg_line(tensor_new(I64, (2,), 5)) == (
        "Tensor<type: int64 shape: [2] values: 5 5>"
    )
    assert render_arg_line(tensor_from_values(I64, (0,), [])) == (
        "Tensor<type: int64 shape: [0] values:>"
    )
    assert render_arg_line(7) == "Scalar<type: int64 value: 7>"
    assert render_arg_line(False) == "Scalar<type: bool value: false>"
    assert render_arg_line(1.5) == "Scalar<type: float64 value: 1.5>"
    assert render_arg_line("hi") == 'Scalar<type: str value: "hi">'
    assert render_arg_line([0, 2]) == "List<type: int64 values: 0 2>"
    assert render_arg_line([]) == "List<type: int64 values:>"


def test_arg_line_round_trips():
    samples = [
        tensor_new(I64, (2, 3), -9),
        tensor_from_values(F64, (3,), [0.5, -1.5, 1e308]),
        tensor_new(DType.BOOL, (2,), True),
        tensor_new(DType.STR, (2,), 'quo"te'),
        tensor_from_values(I64, (0,), []),
        42,
        -1.25,
        True,
        "plain",
        [7, -7],
        [],
    ]
    for value in samples:
        parsed = parse_arg_line(render_arg_line(value))
        if isinstance(value, Tensor):
            assert parsed == value
        else:
            assert parsed == value and type(parsed) is type(value)


def test_arg_line_str_tensor_must_be_uniform():
    with pytest.raises(ReportFormatError):
        parse_arg_line('Tensor<type: str shape: [2] values: "a" "b">')


def test_arg_line_rejects_unknown_head():
    with pytest.raises(ReportFormatError):
        parse_arg_line("Mystery<type: int64 value: 1>")


# --- crash reports ---------------------------------------------------------------


def make_report(registry):
    entry = registry["mean_pool"]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    # the zero window is the FPE crasher; find its uin
    for uin in range(combination_count(pools, SMALL)):
        data, window = nth_combination(pools, uin)
        if window == 0:
            return build_crash_report(entry, uin, FaultClass.FPE, SMALL)
    raise AssertionError("no zero-window combination found")


def test_crash_report_layout(registry):
    report = make_report(registry)
    text = render_crash_report(report)
    lines = text.splitlines()
    assert lines[0] == "# mean_pool"
    assert lines[1].startswith("Tensor<")
    assert lines[2].startswith("Scalar<type: int64 value: 0")
    assert lines[3] == "version=1"
    assert lines[4] == f"uin={report.uin}"
    assert lines[5] == "class=fpe"
    assert lines[6] == f"seed={SMALL.rng_seed}"
    assert lines[7] == f"cfghash={config_fingerprint(SMALL)}"


def test_crash_report_round_trip_is_byte_identical(registry):
    report = make_report(registry)
    text = render_crash_report(report)
    assert render_crash_report(parse_crash_report(text)) == text


def test_crash_report_file_round_trip(tmp_path, registry):
    report = make_report(registry)
    path = write_crash_report(tmp_path, report)
    assert path.name == f"mean_pool__{report.uin}.report"
    again = read_crash_report(path)
    assert again.kernel == report.kernel
    assert again.uin == report.uin
    assert again.fault is report.fault
    assert again.args == report.args


def test_crash_report_rejects_unknown_version(registry):
    report = make_report(registry)
    text = render_crash_report(report).replace("version=1", "version=2")
    with pytest.raises(ReportFormatError):
        parse_crash_report(text)


def test_build_crash_report_args_match_decode(registry):
    entry = registry["delete_handle"]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    report = build_crash_report(entry, 0, FaultClass.ABORT, SMALL)
    assert report.args == nth_combination(pools, 0)


def test_build_crash_report_range_check(registry):
    entry = registry["delete_handle"]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    count = combination_count(pools, SMALL)
    with pytest.raises(ReportConsistencyError):
        build_crash_report(entry, count, FaultClass.ABORT, SMALL)


# --- binding map -----------------------------------------------------------------


def test_binding_map_contents(tmp_path, registry):
    path = tmp_path / "binding_map.tsv"
    record_binding_map(registry, path)
    mapping = read_binding_map(path)
    assert len(mapping) == 9
    assert mapping["delete_handle"] == "ops.delete_handle"
    assert "gather_internal" not in mapping
    for excluded in ("counter_update", "add_out", "add_alias"):
        assert excluded not in mapping
    for line in path.read_text().splitlines():
        kernel, binding = line.split("\t")
        assert binding == f"ops.{kernel}"


def test_binding_map_rejects_duplicates(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("add\tops.add\nadd\tops.add2\n")
    with pytest.raises(BindingMapError):
        read_binding_map(path)


def test_binding_map_rejects_untabbed_line(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("add ops.add\n")
    with pytest.raises(BindingMapError):
        read_binding_map(path)


# --- manifests -------------------------------------------------------------------


def make_manifest(registry, kernel="delete_handle"):
    entry = registry[kernel]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    for uin in range(combination_count(pools, SMALL)):
        (handle,) = nth_combination(pools, uin)
        if handle.num_elements != 1:
            report = build_crash_report(entry, uin, FaultClass.ABORT, SMALL)
            return synthesize_pov(
                report, {kernel: entry.binding}, registry
            )
    raise AssertionError("no crasher found")


def test_manifest_exact_text(registry):
    manifest = make_manifest(registry)
    text = render_pov_manifest(manifest)
    lines = text.splitlines()
    assert lines[0] == "pov-version=1"
    assert lines[1] == "binding=ops.delete_handle"
    assert lines[2] == f"provenance=delete_handle:{manifest.uin}"
    assert lines[3] == "expect=abort"
    assert lines[4].startswith("arg.handle=tensor(int64, shape=")


def test_manifest_round_trip(registry):
    manifest = make_manifest(registry)
    text = render_pov_manifest(manifest)
    assert parse_pov_manifest(text) == manifest
    assert render_pov_manifest(parse_pov_manifest(text)) == text


def test_manifest_parse_rejects_bad_input():
    with pytest.raises(ReportFormatError):
        parse_pov_manifest("pov-version=9\nbinding=b\nprovenance=k:0\nexpect=none\n")
    with pytest.raises(ReportFormatError):
        parse_pov_manifest("pov-version=1\nbinding=b\nprovenance=nouin\nexpect=none\n")
    with pytest.raises(ReportFormatError):
        parse_pov_manifest(
            "pov-version=1\nbinding=b\nprovenance=k:0\nexpect=none\njunk line\n"
        )
    with pytest.raises(ReportFormatError):
        parse_pov_manifest("too\nshort\n")


def test_synthesize_pov_requires_binding(registry):
    entry = registry["gather_internal"]
    report = build_crash_report(entry, 0, FaultClass.SEGV, SMALL)
    with pytest.raises(NoBindingError):
        synthesize_pov(report, {}, registry)


def test_manifest_args_follow_signature_order(registry):
    entry = registry["strided_write"]
    report = build_crash_report(entry, 0, FaultClass.SEGV, SMALL)
    manifest = synthesize_pov(
        report, {"strided_write": entry.binding}, registry
    )
    assert [name for name, _ in manifest.args] == ["indices", "strides", "payload"]


def test_manifest_arg_values_validates_names(registry):
    manifest = make_manifest(registry)
    wrong = PovManifest(
        binding=manifest.binding, kernel=manifest.kernel, uin=manifest.uin,
        expect=manifest.expect, args=(("nothandle", "5"),),
    )
    with pytest.raises(ReportFormatError):
        manifest_arg_values(wrong, registry["delete_handle"])


def test_resolve_binding(registry):
    assert resolve_binding("ops.add", registry).name == "add"
    with pytest.raises(ReplayError):
        resolve_binding("ops.never_registered", registry)


def test_pov_filename():
    assert pov_filename("add", 12) == "add__12.pov"


# --- replay ----------------------------------------------------------------------


def test_replay_confirms_crasher(registry):
    manifest = make_manifest(registry)
    assert replay_pov(manifest, registry) is FaultClass.ABORT


def test_replay_benign_manifest_is_none(registry):
    manifest = PovManifest(
        binding="ops.add", kernel="add", uin=0, expect=None,
        args=(
            ("a", "tensor(int64, shape=[2], fill=1)"),
            ("b", "tensor(int64, shape=[2], fill=2)"),
        ),
    )
    assert replay_pov(manifest, registry) is None


def test_replay_validation_rejection_is_graceful(registry):
    manifest = PovManifest(
        binding="ops.add", kernel="add", uin=0, expect=None,
        args=(
            ("a", "tensor(int64, shape=[2], fill=1)"),
            ("b", "tensor(int64, shape=[3], fill=2)"),  # shape mismatch
        ),
    )
    assert replay_pov(manifest, registry) is None


# --- campaign synthesis ------------------------------------------------------------


def test_synthesize_campaign_end_to_end(tmp_path, registry):
    paths = artifact_paths(tmp_path)
    paths.ensure()
    ccfg = CampaignConfig()
    for kernel in ("delete_handle", "gather_internal"):
        run_session(registry[kernel], registry, paths, ccfg, SMALL,
                    normalize_timestamps=True)
    binding_map = {"delete_handle": "ops.delete_handle"}
    result = synthesize_campaign(paths, registry, binding_map, SMALL)

    from kernelfuzz.watchdog import read_crash_records

    handle_crashes = read_crash_records(paths.crashes / "delete_handle.crashes")
    gather_crashes = read_crash_records(paths.crashes / "gather_internal.crashes")
    total = len(handle_crashes) + len(gather_crashes)
    assert result.report_count == total
    assert len(list(paths.reports.glob("*.report"))) == total
    # manifests only for the bound kernel
    assert len(result.manifests) == len(handle_crashes)
    povs = sorted(paths.povs.glob("*.pov"))
    assert [p.name for p in povs] == sorted(
        pov_filename("delete_handle", r.uin) for r in handle_crashes
    )
    nobinding = [l for l in result.log_lines if l.startswith("nobinding")]
    assert len(nobinding) == len(gather_crashes)
    assert all("gather_internal" in l for l in nobinding)
    # written manifests parse back to the returned ones
    parsed = [parse_pov_manifest(p.read_text()) for p in povs]
    assert sorted(parsed, key=lambda m: m.uin) == sorted(
        result.manifests, key=lambda m: m.uin
    )


def test_synthesize_campaign_skips_unknown_kernel(tmp_path, registry):
    paths = artifact_paths(tmp_path)
    paths.ensure()
    (paths.crashes / "ghost.crashes").write_text("uin=0 class=segv at_ns=0\n")
    result = synthesize_campaign(paths, registry, {}, SMALL)
    assert result.report_count == 0
    assert any(l.startswith("skip ghost") for l in result.log_lines)


# --- categorization ---------------------------------------------------------------


def test_categorize_confirmed_only(registry):
    manifest = make_manifest(registry)
    records = [
        (manifest, FaultClass.ABORT),   # confirmed
        (manifest, FaultClass.SEGV),    # wrong class, dropped
        (manifest, None),               # graceful, dropped
    ]
    table = categorize_povs(records, registry, SMALL)
    assert table.total() == 1
    entry = registry["delete_handle"]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    expected_cat = primary_category(pools, manifest.uin)
    assert table.rows[0][0] is expected_cat
    assert table.column_totals() == (0, 0, 1)


def test_category_table_csv_exact():
    table = CategoryTable(rows=[
        (MutationCategory.RANDOM_DIMS, 2, 1, 0),
        (MutationCategory.ZERO_VALUE, 0, 0, 1),
    ])
    assert table.csv_text() == (
        "category,segv,fpe,abort,total\n"
        "random_dims,2,1,0,3\n"
        "zero_value,0,0,1,1\n"
    )
    assert table.total() == 4
    assert table.column_totals() == (2, 1, 1)


def test_category_table_pretty_shape():
    table = CategoryTable(rows=[(MutationCategory.RANDOM_DIMS, 2, 1, 0)])
    text = table.pretty_text()
    lines = text.splitlines()
    assert lines[0].split() == ["category", "segv", "fpe", "abort", "total"]
    assert lines[1].split() == ["random_dims", "2", "1", "0", "3"]
    assert lines[2].split() == ["total", "2", "1", "0", "3"]
    # columns align
    assert len(set(len(l) for l in lines)) == 1


def test_categorize_orders_by_total_then_name(registry):
    # build synthetic manifests over two kernels to force two rows
    m1 = make_manifest(registry)  # delete_handle abort
    entry = registry["insert_dim"]
    pools = build_pools(entry.signature, entry.driver_seeds[0], SMALL)
    seg_uins = []
    for uin in range(combination_count(pools, SMALL)):
        sizes, batch, out_dim = nth_combination(pools, uin)
        if isinstance(out_dim, int) and (out_dim < 0 or out_dim > sizes.num_elements):
            seg_uins.append(uin)
        if len(seg_uins) == 3:
            break
    records = [(m1, FaultClass.ABORT)]
    for uin in seg_uins:
        report = build_crash_report(entry, uin, FaultClass.SEGV, SMALL)
        m = synthesize_pov(report, {"insert_dim": entry.binding}, registry)
        records.append((m, FaultClass.SEGV))
    table = categorize_povs(records, registry, SMALL)
    totals = [r[1] + r[2] + r[3] for r in table.rows]
    assert totals == sorted(totals, reverse=True)
    assert table.total() == 4


# --- verdicts ----------------------------------------------------------------------


def test_verdict_round_trip():
    text = render_verdict(FaultClass.SEGV, FaultClass.SEGV)
    assert text == "observed=segv\nexpected=segv\nmatch=true\n"
    assert parse_verdict(text) == (FaultClass.SEGV, FaultClass.SEGV, True)

    text = render_verdict(None, FaultClass.FPE)
    assert text == "observed=none\nexpected=fpe\nmatch=false\n"
    assert parse_verdict(text) == (None, FaultClass.FPE, False)

    text = render_verdict(None, None)
    assert parse_verdict(text) == (None, None, True)
