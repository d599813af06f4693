"""Type-aware mutation fuzzer and PoV pipeline for a tensor kernel corpus."""

from .kernels import (
    CorpusError,
    KernelEntry,
    KernelSignature,
    KernelValidationError,
    Param,
    TypeTag,
    extract_targets,
    register_corpus,
    run_driver_test,
)
from .mutations import (
    MutationCategory,
    MutationConfig,
    MutationPool,
    build_pools,
    category_of,
    combination_count,
    config_fingerprint,
    config_text,
    load_config,
    nth_combination,
    parse_config,
    primary_category,
)
from .reports import (
    CrashReport,
    ReportConsistencyError,
    ReportFormatError,
    UnsupportedArgError,
    build_crash_report,
    parse_crash_report,
    parse_literal,
    read_binding_map,
    read_crash_report,
    record_binding_map,
    render_crash_report,
    render_literal,
    write_crash_report,
)
from .synth import (
    NoBindingError,
    PovManifest,
    ReplayError,
    categorize_povs,
    parse_pov_manifest,
    render_pov_manifest,
    replay_pov,
    synthesize_campaign,
    synthesize_pov,
)
from .tensors import DType, FaultClass, Tensor, tensor_from_values, tensor_new
from .watchdog import (
    CampaignConfig,
    SessionOutcome,
    SessionStatus,
    orchestrate,
    read_crash_records,
    run_session,
    session_order,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignConfig",
    "CorpusError",
    "CrashReport",
    "DType",
    "FaultClass",
    "KernelEntry",
    "KernelSignature",
    "KernelValidationError",
    "MutationCategory",
    "MutationConfig",
    "MutationPool",
    "NoBindingError",
    "Param",
    "PovManifest",
    "ReplayError",
    "ReportConsistencyError",
    "ReportFormatError",
    "SessionOutcome",
    "SessionStatus",
    "Tensor",
    "TypeTag",
    "UnsupportedArgError",
    "build_crash_report",
    "build_pools",
    "categorize_povs",
    "category_of",
    "combination_count",
    "config_fingerprint",
    "config_text",
    "extract_targets",
    "load_config",
    "nth_combination",
    "orchestrate",
    "parse_config",
    "parse_crash_report",
    "parse_literal",
    "parse_pov_manifest",
    "primary_category",
    "read_binding_map",
    "read_crash_records",
    "read_crash_report",
    "record_binding_map",
    "register_corpus",
    "render_crash_report",
    "render_literal",
    "render_pov_manifest",
    "replay_pov",
    "run_driver_test",
    "run_session",
    "session_order",
    "synthesize_campaign",
    "synthesize_pov",
    "tensor_from_values",
    "tensor_new",
    "write_crash_report",
]
