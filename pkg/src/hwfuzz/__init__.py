"""Coverage-guided fuzzing lab for cycle-accurate hardware models.

The pieces: software models of a digital lock family and two bus
peripherals (a 64-bit timer and a lock behind registers), harnesses
that map fuzzer byte strings onto model inputs, AFL-style edge
coverage with scope filtering, a greybox mutation campaign driver, a
constrained-random baseline, Mann-Whitney comparison statistics, and
an experiment runner that writes CSV trajectories and plots.
"""

from .bus import (
    BusHost,
    LockPeripheral,
    MmioDevice,
    RegisterSpec,
    TimerDevice,
    arm_interrupt_assertion,
    register_map_markdown,
)
from .coverage import (
    MAP_SIZE,
    Component,
    CoverageMap,
    EdgeTracer,
    FsmCoverage,
    ScopeFilter,
    bucket_class,
    edge_index,
    fsm_coverage_fraction,
    is_interesting,
    merge,
)
from .dut import (
    AssertionRegistry,
    DigitalLock,
    DutSnapshot,
    LockConfig,
    SnapshotMismatchError,
    arm_unlock_assertion,
    derive_rng,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    census_edges,
    census_programs,
    consolidate_trajectories,
    load_experiment_config,
    run_experiment,
)
from .fuzzer import (
    Budget,
    CampaignResult,
    CrashRecord,
    CrvConfig,
    FuzzerConfig,
    TestCase,
    TrajectorySample,
    crv_campaign,
    fuzz_campaign,
    havoc,
    mutate,
    splice,
)
from .grammar import (
    FrameFormat,
    HwfInstruction,
    Opcode,
    OpcodeFormat,
    SeedTextError,
    compile_seed_text,
    decode_stream,
    encode_instructions,
    parse_seed_text,
)
from .harness import (
    BusHarness,
    CrashInfo,
    ForkPoint,
    GenericHarness,
    TestOutcome,
    run_bus,
    run_generic,
)
from .reporting import (
    TRAJECTORY_HEADER,
    load_test_file,
    render_bars,
    render_heatmap,
    render_trajectories,
    save_corpus,
    write_summary_csv,
    write_trajectory_csv,
)
from .stats import UTestResult, mann_whitney_u, normalize_to_median, trim_middle_third

__version__ = "0.1.0"

__all__ = [
    "AssertionRegistry",
    "Budget",
    "BusHarness",
    "BusHost",
    "CampaignResult",
    "Component",
    "CoverageMap",
    "CrashInfo",
    "CrashRecord",
    "CrvConfig",
    "DigitalLock",
    "DutSnapshot",
    "EdgeTracer",
    "ExperimentConfig",
    "ExperimentResult",
    "ForkPoint",
    "FrameFormat",
    "FsmCoverage",
    "FuzzerConfig",
    "GenericHarness",
    "HwfInstruction",
    "LockConfig",
    "LockPeripheral",
    "MAP_SIZE",
    "MmioDevice",
    "Opcode",
    "OpcodeFormat",
    "RegisterSpec",
    "ScopeFilter",
    "SeedTextError",
    "SnapshotMismatchError",
    "TRAJECTORY_HEADER",
    "TestCase",
    "TestOutcome",
    "TimerDevice",
    "TrajectorySample",
    "UTestResult",
    "arm_interrupt_assertion",
    "arm_unlock_assertion",
    "bucket_class",
    "census_edges",
    "census_programs",
    "compile_seed_text",
    "consolidate_trajectories",
    "crv_campaign",
    "decode_stream",
    "derive_rng",
    "edge_index",
    "encode_instructions",
    "fsm_coverage_fraction",
    "fuzz_campaign",
    "havoc",
    "is_interesting",
    "load_experiment_config",
    "load_test_file",
    "mann_whitney_u",
    "merge",
    "mutate",
    "normalize_to_median",
    "parse_seed_text",
    "register_map_markdown",
    "render_bars",
    "render_heatmap",
    "render_trajectories",
    "run_bus",
    "run_experiment",
    "run_generic",
    "save_corpus",
    "splice",
    "trim_middle_third",
    "write_summary_csv",
    "write_trajectory_csv",
]
