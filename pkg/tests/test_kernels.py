"""Corpus behavior: benign paths by hand-computed oracle, fault paths in
forked children, registry invariants."""

import pytest

from kernelfuzz.kernels import (
    CorpusError,
    KernelValidationError,
    TypeTag,
    extract_targets,
    register_corpus,
    run_driver_test,
)
from kernelfuzz.tensors import (
    DType,
    FaultClass,
    tensor_from_values,
    tensor_new,
)
from kernelfuzz.watchdog import run_in_child

I64 = DType.INT64
F64 = DType.FLOAT64


@pytest.fixture(scope="module")
def registry():
    return register_corpus()


def call(registry, name, *args):
    return registry[name].call(tuple(args))


def expect_fault(registry, name, args, fault):
    result = run_in_child(lambda: registry[name].call(tuple(args)))
    assert not result.timed_out
    assert result.exit_code == fault.exit_code


# --- registry shape ----------------------------------------------------------


def test_registry_has_thirteen_kernels(registry):
    assert len(registry) == 13


def test_target_extraction_excludes_flagged_kernels(registry):
    names = sorted(e.name for e in extract_targets(registry))
    assert names == [
        "add", "concat", "delete_handle", "gather_internal", "insert_dim",
        "mean_pool", "normalize", "reshape", "scale", "strided_write",
    ]
    assert "counter_update" not in names
    assert "add_out" not in names
    assert "add_alias" not in names


def test_excluded_kernels_carry_their_reason(registry):
    assert registry["counter_update"].shared_state
    assert registry["add_out"].out_variant
    assert registry["add_alias"].wrapper_only
    for name in ("counter_update", "add_out", "add_alias"):
        assert not registry[name].fuzzable


def test_bindings_unique_and_gather_unbound(registry):
    bound = [e.binding for e in registry.values() if e.binding is not None]
    assert len(bound) == len(set(bound)) == 9
    assert registry["gather_internal"].binding is None


def test_every_kernel_has_driver_seeds(registry):
    for entry in registry.values():
        assert entry.driver_seeds
        for seed in entry.driver_seeds:
            assert len(seed) == len(entry.signature.params)


def test_all_driver_seeds_are_benign(registry):
    for name, entry in registry.items():
        if entry.fuzzable:
            run_driver_test(registry, name)


def test_run_driver_test_unknown_kernel(registry):
    with pytest.raises(CorpusError):
        run_driver_test(registry, "missing_kernel")


def test_run_driver_test_wrapper_seam(registry):
    seen = []
    run_driver_test(
        registry, "add", wrapper=lambda entry, args: seen.append((entry.name, args))
    )
    assert [s[0] for s in seen] == ["add", "add"]
    assert all(len(args) == 2 for _, args in seen)


def test_call_arity_mismatch_is_validation_error(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "add", tensor_new(I64, [1], 1))


# --- strided_write -----------------------------------------------------------


def test_strided_write_benign(registry):
    out = call(
        registry, "strided_write",
        tensor_new(I64, [2], 1), tensor_new(I64, [2], 2), 5,
    )
    # location 1*2 + 1*2 = 4
    expected = [0] * 64
    expected[4] = 5
    assert out.shape == (64,)
    assert out.tolist() == expected


def test_strided_write_wrapping_inner_product(registry):
    # 2**62 * 4 wraps to zero in 64-bit arithmetic
    out = call(
        registry, "strided_write",
        tensor_new(I64, [1], 2**62), tensor_new(I64, [1], 4), 9,
    )
    assert out.element(0) == 9


def test_strided_write_upper_bound_is_validated(registry):
    with pytest.raises(KernelValidationError):
        call(
            registry, "strided_write",
            tensor_new(I64, [1], 8), tensor_new(I64, [1], 8), 1,
        )


def test_strided_write_length_mismatch(registry):
    with pytest.raises(KernelValidationError):
        call(
            registry, "strided_write",
            tensor_new(I64, [2], 1), tensor_new(I64, [3], 1), 1,
        )


def test_strided_write_negative_location_faults(registry):
    expect_fault(
        registry, "strided_write",
        (tensor_new(I64, [1], -1), tensor_new(I64, [1], 1), 1),
        FaultClass.SEGV,
    )


# --- insert_dim --------------------------------------------------------------


def test_insert_dim_middle(registry):
    out = call(registry, "insert_dim", tensor_new(I64, [2], 3), 4, 1)
    assert out.tolist() == [3, 4, 3]


def test_insert_dim_front_and_back(registry):
    assert call(registry, "insert_dim", tensor_new(I64, [2], 3), 4, 0).tolist() == [4, 3, 3]
    assert call(registry, "insert_dim", tensor_new(I64, [2], 3), 4, 2).tolist() == [3, 3, 4]


def test_insert_dim_past_end_faults(registry):
    expect_fault(
        registry, "insert_dim",
        (tensor_new(I64, [2], 3), 4, 3),
        FaultClass.SEGV,
    )


def test_insert_dim_negative_faults(registry):
    expect_fault(
        registry, "insert_dim",
        (tensor_new(I64, [2], 3), 4, -1),
        FaultClass.SEGV,
    )


# --- delete_handle -----------------------------------------------------------


def test_delete_handle_accepts_single_element(registry):
    assert call(registry, "delete_handle", tensor_new(I64, [], 7)) is None
    assert call(registry, "delete_handle", tensor_new(I64, [1], 7)) is None


def test_delete_handle_multi_element_aborts(registry):
    expect_fault(
        registry, "delete_handle", (tensor_new(I64, [2], 7),), FaultClass.ABORT
    )


def test_delete_handle_empty_aborts(registry):
    expect_fault(
        registry, "delete_handle", (tensor_new(I64, [0], 7),), FaultClass.ABORT
    )


# --- mean_pool ---------------------------------------------------------------


def test_mean_pool_int_exact(registry):
    out = call(registry, "mean_pool", tensor_new(I64, [6], 2), 3)
    assert out.tolist() == [2, 2]
    assert out.dtype is I64


def test_mean_pool_int_truncates(registry):
    data = tensor_from_values(I64, (4,), [1, 2, 3, 5])
    out = call(registry, "mean_pool", data, 2)
    # (1+2)//2 = 1, (3+5)//2 = 4
    assert out.tolist() == [1, 4]


def test_mean_pool_float(registry):
    data = tensor_from_values(F64, (4,), [1.0, 2.0, 3.0, 4.0])
    out = call(registry, "mean_pool", data, 2)
    assert out.tolist() == [1.5, 3.5]


def test_mean_pool_tail_remainder_dropped(registry):
    data = tensor_from_values(I64, (5,), [10, 20, 30, 40, 50])
    out = call(registry, "mean_pool", data, 2)
    assert out.tolist() == [15, 35]


def test_mean_pool_negative_window_is_empty(registry):
    out = call(registry, "mean_pool", tensor_new(I64, [6], 2), -2)
    assert out.shape == (0,)
    assert out.tolist() == []


def test_mean_pool_wrapping_sum(registry):
    out = call(registry, "mean_pool", tensor_new(I64, [2], 2**62), 2)
    # 2**62 + 2**62 wraps to -(2**63); dividing by 2 gives -(2**62)
    assert out.tolist() == [-(2**62)]


def test_mean_pool_zero_window_faults(registry):
    expect_fault(
        registry, "mean_pool", (tensor_new(I64, [6], 2), 0), FaultClass.FPE
    )


# --- gather_internal ---------------------------------------------------------


def test_gather_benign(registry):
    out = call(registry, "gather_internal", tensor_new(I64, [3], 5), [0, 2])
    assert out.tolist() == [5, 5]


def test_gather_values_order(registry):
    src = tensor_from_values(I64, (4,), [10, 20, 30, 40])
    out = call(registry, "gather_internal", src, [3, 0, 1])
    assert out.tolist() == [40, 10, 20]


def test_gather_empty_indices(registry):
    out = call(registry, "gather_internal", tensor_new(I64, [3], 5), [])
    assert out.shape == (0,)


def test_gather_out_of_range_faults(registry):
    expect_fault(
        registry, "gather_internal",
        (tensor_new(I64, [3], 5), [3]),
        FaultClass.SEGV,
    )


def test_gather_negative_index_faults(registry):
    expect_fault(
        registry, "gather_internal",
        (tensor_new(I64, [3], 5), [-1]),
        FaultClass.SEGV,
    )


def test_gather_rejects_bool_indices(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "gather_internal", tensor_new(I64, [3], 5), [True])


# --- normalize ---------------------------------------------------------------


def test_normalize_exact_quarters(registry):
    data = tensor_from_values(F64, (3,), [1.0, 2.0, -4.0])
    out = call(registry, "normalize", data)
    assert out.tolist() == [0.25, 0.5, -1.0]


def test_normalize_uniform(registry):
    out = call(registry, "normalize", tensor_new(F64, [4], 2.5))
    assert out.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_normalize_subnormal_scale_survives(registry):
    data = tensor_from_values(F64, (2,), [1e-308, -1e-308])
    out = call(registry, "normalize", data)
    assert out.tolist() == [1.0, -1.0]


def test_normalize_empty_is_noop(registry):
    out = call(registry, "normalize", tensor_new(F64, [0], 0.0))
    assert out.tolist() == []


def test_normalize_rejects_non_finite(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "normalize", tensor_new(F64, [2], float("inf")))
    with pytest.raises(KernelValidationError):
        call(registry, "normalize", tensor_new(F64, [2], float("nan")))


def test_normalize_all_zero_faults(registry):
    expect_fault(
        registry, "normalize", (tensor_new(F64, [3], 0.0),), FaultClass.FPE
    )


# --- safe kernels ------------------------------------------------------------


def test_add_int_fill(registry):
    out = call(registry, "add", tensor_new(I64, [2, 2], 3), tensor_new(I64, [2, 2], 4))
    assert out == tensor_new(I64, (2, 2), 7)


def test_add_float_values(registry):
    a = tensor_from_values(F64, (2,), [0.5, 1.5])
    b = tensor_from_values(F64, (2,), [1.0, 2.0])
    assert call(registry, "add", a, b).tolist() == [1.5, 3.5]


def test_add_overflow_is_validation_not_fault(registry):
    a = tensor_new(I64, [1], 2**63 - 1)
    b = tensor_new(I64, [1], 1)
    with pytest.raises(KernelValidationError):
        call(registry, "add", a, b)


def test_add_mismatches_rejected(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "add", tensor_new(I64, [2], 1), tensor_new(I64, [3], 1))
    with pytest.raises(KernelValidationError):
        call(registry, "add", tensor_new(I64, [2], 1), tensor_new(F64, [2], 1.0))


def test_concat(registry):
    a = tensor_from_values(I64, (2,), [1, 2])
    b = tensor_from_values(I64, (1,), [3])
    assert call(registry, "concat", a, b).tolist() == [1, 2, 3]


def test_concat_rejects_rank_2(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "concat", tensor_new(I64, [2, 2], 1), tensor_new(I64, [2], 1))


def test_reshape_preserves_fill(registry):
    out = call(registry, "reshape", tensor_new(I64, [2, 3], 1), [3, 2])
    assert out.shape == (3, 2)
    assert out.fill == 1


def test_reshape_count_mismatch(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "reshape", tensor_new(I64, [2, 3], 1), [7])


def test_reshape_empty(registry):
    out = call(registry, "reshape", tensor_new(I64, [0], 1), [0, 5])
    assert out.shape == (0, 5)


def test_scale(registry):
    out = call(registry, "scale", tensor_new(F64, [3], 2.0), 1.5)
    assert out == tensor_new(F64, (3,), 3.0)
    vals = tensor_from_values(F64, (2,), [1.0, -2.0])
    assert call(registry, "scale", vals, 0.5).tolist() == [0.5, -1.0]


def test_scale_rejects_int_factor(registry):
    with pytest.raises(KernelValidationError):
        call(registry, "scale", tensor_new(F64, [3], 2.0), 2)


# --- fault attribution -------------------------------------------------------


def test_fault_line_names_the_kernel(registry, tmp_path, monkeypatch):
    log = tmp_path / "faults.log"
    monkeypatch.setenv("FAULT_LOG", str(log))
    expect_fault(
        registry, "mean_pool", (tensor_new(I64, [6], 2), 0), FaultClass.FPE
    )
    line = log.read_text().splitlines()[-1]
    assert line.startswith("FAULT fpe mean_pool ")


def test_type_tags_cover_signature_params(registry):
    for entry in registry.values():
        for param in entry.signature.params:
            assert isinstance(param.tag, TypeTag)
