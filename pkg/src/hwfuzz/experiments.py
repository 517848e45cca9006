"""Experiment orchestration: config ingestion, trial execution, artifacts.

Five experiment kinds are supported:

- ``fuzz_vs_crv``: coverage-guided campaigns against the constrained
  random baseline over a lock grid; emits per-cell cycle medians,
  heatmaps of mean cycles, and a ratio table (CRV cells that never
  unlock within budget are censored at the budget and marked).
- ``instrumentation_scope``: DUT-only versus whole-binary tracing,
  cycles-to-unlock distributions plus a U test per lock size.
- ``fork_point``: reset-per-test versus snapshot-restore; checks
  bitwise outcome identity and compares wall-time distributions.
- ``grammar_ablation``: all four opcode/frame format combinations on
  the bus-attached lock, execs to a fixed FSM-coverage threshold.
- ``empty_seed_coverage``: fuzzing each device from one empty seed,
  scored against a census of reachable edges (the union of edges hit
  by hand-written instruction programs run through the same harness).

The config file is TOML; the resolved configuration is echoed to
``config.json`` in the output directory. Trials run on a thread pool
(each trial is single-threaded and shares nothing); per-trial rng seed
is base_seed + submission index, so reruns are reproducible.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import tomli

from . import reporting
from .bus import LockPeripheral, MmioDevice, TimerDevice
from .coverage import ScopeFilter
from .dut import DigitalLock, LockConfig, arm_unlock_assertion
from .fuzzer import (
    Budget,
    CampaignResult,
    CrvConfig,
    FuzzerConfig,
    TrajectorySample,
    crv_campaign,
    fuzz_campaign,
)
from .grammar import FrameFormat, HwfInstruction, OpcodeFormat, encode_instructions
from .harness import BusHarness, ForkPoint, GenericHarness
from .stats import mann_whitney_u

EXPERIMENT_KINDS = (
    "fuzz_vs_crv",
    "instrumentation_scope",
    "fork_point",
    "grammar_ablation",
    "empty_seed_coverage",
)

_SCOPES = {"dut_only": ScopeFilter.DUT_ONLY, "all": ScopeFilter.ALL}
_FORKS = {"at_start": ForkPoint.AT_START, "after_reset": ForkPoint.AFTER_RESET}
_OPCODES = {"constant": OpcodeFormat.CONSTANT, "mapped": OpcodeFormat.MAPPED}
_FRAMES = {"fixed": FrameFormat.FIXED, "variable": FrameFormat.VARIABLE}


@dataclass
class ExperimentConfig:
    kind: str
    out_dir: Path
    trials: int = 20
    base_seed: int = 0
    workers: int = 2
    state_bits: tuple[int, ...] = (2, 4)
    code_widths: tuple[int, ...] = (2, 4)
    lock_seed: int = 1
    opcode_format: OpcodeFormat = OpcodeFormat.CONSTANT
    frame_format: FrameFormat = FrameFormat.VARIABLE
    fork_point: ForkPoint = ForkPoint.AFTER_RESET
    scope: ScopeFilter = ScopeFilter.DUT_ONLY
    fuzz_budget: Budget = field(default_factory=lambda: Budget(max_sim_cycles=1_000_000))
    crv_budget: Budget = field(default_factory=lambda: Budget(max_sim_cycles=2_000_000))
    max_len: int = 4096
    fsm_threshold: float = 0.75
    census_threshold: float = 0.9
    devices: tuple[str, ...] = ("timer", "lock_peripheral")

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.state_bits or not self.code_widths:
            raise ValueError("lock grid must be non-empty")
        for device in self.devices:
            if device not in ("timer", "lock_peripheral"):
                raise ValueError(f"unknown device {device!r}")

    def grid(self) -> list[tuple[int, int]]:
        return [(n, m) for n in self.state_bits for m in self.code_widths]

    def echo_dict(self) -> dict:
        return {
            "kind": self.kind,
            "out_dir": str(self.out_dir),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "lock": {
                "state_bits": list(self.state_bits),
                "code_widths": list(self.code_widths),
                "rng_seed": self.lock_seed,
            },
            "formats": {"opcode": self.opcode_format.value, "frame": self.frame_format.value},
            "harness": {"fork_point": self.fork_point.value, "scope": self.scope.value},
            "budget": {
                "fuzz": _budget_dict(self.fuzz_budget),
                "crv": _budget_dict(self.crv_budget),
            },
            "max_len": self.max_len,
            "fsm_threshold": self.fsm_threshold,
            "census_threshold": self.census_threshold,
            "devices": list(self.devices),
        }


def _budget_dict(budget: Budget) -> dict:
    return {
        "max_execs": budget.max_execs,
        "max_sim_cycles": budget.max_sim_cycles,
        "max_wall_ms": budget.max_wall_ms,
    }


def _budget_from(table: dict, default: Budget) -> Budget:
    if not table:
        return default
    return Budget(
        max_execs=table.get("max_execs"),
        max_sim_cycles=table.get("max_sim_cycles"),
        max_wall_ms=table.get("max_wall_ms"),
    )


def load_experiment_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Parse a TOML experiment file; keyword overrides win over the file."""
    with open(path, "rb") as fh:
        raw = tomli.load(fh)
    lock = raw.get("lock", {})
    formats = raw.get("formats", {})
    harness = raw.get("harness", {})
    budget = raw.get("budget", {})
    kwargs = {
        "kind": raw.get("kind", ""),
        "out_dir": Path(raw.get("out_dir", "runs/" + raw.get("kind", "experiment"))),
        "trials": raw.get("trials", 20),
        "base_seed": raw.get("base_seed", 0),
        "workers": raw.get("workers", 2),
        "state_bits": tuple(lock.get("state_bits", (2, 4))),
        "code_widths": tuple(lock.get("code_widths", (2, 4))),
        "lock_seed": lock.get("rng_seed", 1),
        "opcode_format": _OPCODES[formats.get("opcode", "constant")],
        "frame_format": _FRAMES[formats.get("frame", "variable")],
        "fork_point": _FORKS[harness.get("fork_point", "after_reset")],
        "scope": _SCOPES[harness.get("scope", "dut_only")],
        "fuzz_budget": _budget_from(budget.get("fuzz", {}), Budget(max_sim_cycles=1_000_000)),
        "crv_budget": _budget_from(budget.get("crv", {}), Budget(max_sim_cycles=2_000_000)),
        "max_len": raw.get("max_len", 4096),
        "fsm_threshold": raw.get("fsm_threshold", 0.75),
        "census_threshold": raw.get("census_threshold", 0.9),
        "devices": tuple(raw.get("devices", ("timer", "lock_peripheral"))),
    }
    kwargs.update(overrides)
    if "out_dir" in overrides:
        kwargs["out_dir"] = Path(overrides["out_dir"])
    return ExperimentConfig(**kwargs)


@dataclass
class ExperimentResult:
    kind: str
    out_dir: Path
    summary_rows: list[tuple]
    artifacts: list[Path]


def _run_jobs(jobs: Sequence[Callable[[], CampaignResult]], workers: int) -> list[CampaignResult]:
    # results keep submission order regardless of completion order
    if workers <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def consolidate_trajectories(
    trials: Sequence[Sequence[TrajectorySample]], x_field: str = "execs"
) -> list[tuple[float, float, float, float]]:
    """Average trial trajectories onto the union of sample points.

    Returns (x, mean_sim_cycles, mean_edges, mean_fsm_fraction) rows,
    carrying each trial's last value forward between its own samples.
    """
    xs = sorted({getattr(s, x_field) for samples in trials for s in samples})
    rows = []
    for x in xs:
        cycles, edges, fracs = [], [], []
        for samples in trials:
            last = None
            for s in samples:
                if getattr(s, x_field) <= x:
                    last = s
                else:
                    break
            if last is None:
                cycles.append(0.0)
                edges.append(0.0)
                fracs.append(0.0)
            else:
                cycles.append(float(last.sim_cycles))
                edges.append(float(last.edges_covered))
                fracs.append(float(last.fsm_fraction or 0.0))
        rows.append(
            (x, statistics.fmean(cycles), statistics.fmean(edges), statistics.fmean(fracs))
        )
    return rows


def _write_consolidated(path: Path, trials, x_field: str = "execs") -> Path:
    rows = consolidate_trajectories(trials, x_field)
    return reporting.write_summary_csv(
        path, (x_field, "mean_sim_cycles", "mean_edges_covered", "mean_fsm_fraction"),
        [(x, f"{c:.2f}", f"{e:.2f}", f"{f:.6f}") for x, c, e, f in rows],
    )


def _make_lock(cfg: ExperimentConfig, n: int, m: int) -> DigitalLock:
    lock = DigitalLock(LockConfig(n, m, rng_seed=cfg.lock_seed))
    arm_unlock_assertion(lock)
    return lock


def _fuzz_lock_job(
    cfg: ExperimentConfig,
    n: int,
    m: int,
    seed: int,
    scope: ScopeFilter | None = None,
    fork_point: ForkPoint | None = None,
) -> Callable[[], CampaignResult]:
    def job() -> CampaignResult:
        harness = GenericHarness(_make_lock(cfg, n, m))
        fuzzer_config = FuzzerConfig(
            budget=cfg.fuzz_budget,
            rng_seed=seed,
            max_len=cfg.max_len,
            fork_point=fork_point or cfg.fork_point,
            scope=scope or cfg.scope,
            stop_on_first_crash=True,
        )
        return fuzz_campaign(harness, [b""], fuzzer_config)

    return job


def _unlock_cycles(result: CampaignResult) -> tuple[int, bool]:
    """Simulated cycles to unlock; censored results count the full budget."""
    if result.sim_cycles_to_first_crash is not None:
        return result.sim_cycles_to_first_crash, False
    return result.total_sim_cycles, True


# --- experiment kinds -------------------------------------------------------


def _run_fuzz_vs_crv(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    grid = cfg.grid()
    jobs: list[Callable[[], CampaignResult]] = []
    labels: list[tuple[str, int, int, int]] = []
    index = 0
    for n, m in grid:
        for trial in range(cfg.trials):
            jobs.append(_fuzz_lock_job(cfg, n, m, cfg.base_seed + index))
            labels.append(("fuzz", n, m, trial))
            index += 1
        for trial in range(cfg.trials):
            seed = cfg.base_seed + index

            def job(n=n, m=m, seed=seed) -> CampaignResult:
                lock = DigitalLock(LockConfig(n, m, rng_seed=cfg.lock_seed))
                return crv_campaign(lock, CrvConfig(n, m, budget=cfg.crv_budget, rng_seed=seed))

            jobs.append(job)
            labels.append(("crv", n, m, trial))
            index += 1

    results = _run_jobs(jobs, cfg.workers)

    per_cell: dict[tuple[str, int, int], list[CampaignResult]] = {}
    for (arm, n, m, _), result in zip(labels, results):
        per_cell.setdefault((arm, n, m), []).append(result)

    artifacts = []
    summary_rows = []
    ratio_rows = []
    mean_tables = {"fuzz": [], "crv": []}
    censored_tables = {"fuzz": [], "crv": []}
    for arm in ("fuzz", "crv"):
        for n in cfg.state_bits:
            mean_row, cens_row = [], []
            for m in cfg.code_widths:
                cell = per_cell[(arm, n, m)]
                cycles = [_unlock_cycles(r)[0] for r in cell]
                censored = [_unlock_cycles(r)[1] for r in cell]
                unlocked = censored.count(False)
                summary_rows.append(
                    (
                        arm, n, m, len(cell), unlocked,
                        f"{statistics.fmean(cycles):.1f}",
                        statistics.median(cycles),
                        censored.count(True),
                    )
                )
                mean_row.append(statistics.fmean(cycles))
                cens_row.append(any(censored))
                artifacts.append(
                    reporting.write_trajectory_csv(
                        out / f"trajectory_{arm}_N{n}_M{m}.csv", [r.trajectory for r in cell]
                    )
                )
            mean_tables[arm].append(mean_row)
            censored_tables[arm].append(cens_row)

    for n in cfg.state_bits:
        for m in cfg.code_widths:
            fuzz_median = statistics.median(
                _unlock_cycles(r)[0] for r in per_cell[("fuzz", n, m)]
            )
            crv_median = statistics.median(_unlock_cycles(r)[0] for r in per_cell[("crv", n, m)])
            crv_censored = sum(_unlock_cycles(r)[1] for r in per_cell[("crv", n, m)])
            ratio = crv_median / fuzz_median if fuzz_median else float("inf")
            ratio_rows.append(
                (n, m, fuzz_median, crv_median, crv_censored, cfg.trials, f"{ratio:.2f}")
            )

    artifacts.append(
        reporting.write_summary_csv(
            out / "summary.csv",
            ("arm", "state_bits", "code_width", "trials", "unlocked",
             "mean_cycles", "median_cycles", "censored"),
            summary_rows,
        )
    )
    artifacts.append(
        reporting.write_summary_csv(
            out / "ratio.csv",
            ("state_bits", "code_width", "fuzz_median_cycles", "crv_median_cycles",
             "crv_censored", "trials", "crv_over_fuzz_ratio"),
            ratio_rows,
        )
    )
    row_labels = [1 << n for n in cfg.state_bits]
    for arm in ("fuzz", "crv"):
        artifacts.append(
            reporting.render_heatmap(
                out / f"heatmap_{arm}_mean_cycles.png",
                row_labels, cfg.code_widths, mean_tables[arm],
                title=f"{arm}: mean simulated cycles to unlock",
                censored=censored_tables[arm],
                value_fmt="{:.0f}",
                cbar_label="cycles",
            )
        )
    ratio_table = [
        [mean_tables["crv"][i][j] / max(mean_tables["fuzz"][i][j], 1.0)
         for j in range(len(cfg.code_widths))]
        for i in range(len(cfg.state_bits))
    ]
    artifacts.append(
        reporting.render_heatmap(
            out / "heatmap_ratio.png",
            row_labels, cfg.code_widths, ratio_table,
            title="CRV / fuzz mean-cycle ratio (censored cells are lower bounds)",
            censored=censored_tables["crv"],
            value_fmt="{:.1f}",
            cbar_label="ratio",
        )
    )
    return ExperimentResult("fuzz_vs_crv", out, ratio_rows, artifacts)


def _run_instrumentation_scope(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    jobs, labels = [], []
    index = 0
    for n, m in cfg.grid():
        for scope_name, scope in (("dut_only", ScopeFilter.DUT_ONLY), ("all", ScopeFilter.ALL)):
            for trial in range(cfg.trials):
                jobs.append(_fuzz_lock_job(cfg, n, m, cfg.base_seed + index, scope=scope))
                labels.append((scope_name, n, m, trial))
                index += 1
    results = _run_jobs(jobs, cfg.workers)

    per_cell: dict[tuple[str, int, int], list[CampaignResult]] = {}
    for (scope_name, n, m, _), result in zip(labels, results):
        per_cell.setdefault((scope_name, n, m), []).append(result)

    artifacts, summary_rows, stats_rows = [], [], []
    for n, m in cfg.grid():
        samples = {}
        for scope_name in ("dut_only", "all"):
            cell = per_cell[(scope_name, n, m)]
            cycles = [_unlock_cycles(r)[0] for r in cell]
            samples[scope_name] = cycles
            summary_rows.append(
                (scope_name, n, m, len(cell),
                 sum(1 for r in cell if not _unlock_cycles(r)[1]),
                 f"{statistics.fmean(cycles):.1f}", statistics.median(cycles))
            )
            artifacts.append(
                reporting.write_trajectory_csv(
                    out / f"trajectory_{scope_name}_N{n}_M{m}.csv", [r.trajectory for r in cell]
                )
            )
        test = mann_whitney_u(samples["dut_only"], samples["all"])
        dut_median = statistics.median(samples["dut_only"])
        all_median = statistics.median(samples["all"])
        stats_rows.append(
            (n, m, dut_median, all_median, f"{test.u_statistic:.1f}", f"{test.p_value:.5f}",
             test.significant, dut_median <= all_median)
        )
    artifacts.append(
        reporting.write_summary_csv(
            out / "summary.csv",
            ("scope", "state_bits", "code_width", "trials", "unlocked",
             "mean_cycles", "median_cycles"),
            summary_rows,
        )
    )
    artifacts.append(
        reporting.write_summary_csv(
            out / "stats.csv",
            ("state_bits", "code_width", "dut_only_median_cycles", "all_median_cycles",
             "u_statistic", "p_value", "significant", "dut_only_not_worse"),
            stats_rows,
        )
    )
    groups = [
        (f"{scope} N={n} M={m}", [r.trajectory for r in per_cell[(scope, n, m)]])
        for (scope, n, m) in per_cell
    ]
    artifacts.append(
        reporting.render_trajectories(
            out / "trajectories.png", groups, title="Coverage by instrumentation scope"
        )
    )
    return ExperimentResult("instrumentation_scope", out, stats_rows, artifacts)


def _run_fork_point(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    import random as _random

    # bitwise identity on random tests, smallest grid cell
    n, m = min(cfg.grid())
    rng = _random.Random(cfg.base_seed)
    mismatches = 0
    harness_a = GenericHarness(_make_lock(cfg, n, m), fork_point=ForkPoint.AT_START,
                               scope=cfg.scope)
    harness_b = GenericHarness(_make_lock(cfg, n, m), fork_point=ForkPoint.AFTER_RESET,
                               scope=cfg.scope)
    identity_tests = 1000
    for _ in range(identity_tests):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 64)))
        if harness_a.run(data).fingerprint() != harness_b.run(data).fingerprint():
            mismatches += 1

    jobs, labels = [], []
    index = 0
    for cell_n, cell_m in cfg.grid():
        for trial in range(cfg.trials):
            # both fork points of a trial share one seed: exec-indexed
            # metrics must come out identical, only wall time may differ
            seed = cfg.base_seed + index
            index += 1
            for fork_name, fork in (("at_start", ForkPoint.AT_START),
                                    ("after_reset", ForkPoint.AFTER_RESET)):
                jobs.append(_fuzz_lock_job(cfg, cell_n, cell_m, seed, fork_point=fork))
                labels.append((fork_name, cell_n, cell_m, trial))
    results = _run_jobs(jobs, cfg.workers)

    per_cell: dict[tuple[str, int, int], list[CampaignResult]] = {}
    for (fork_name, cell_n, cell_m, _), result in zip(labels, results):
        per_cell.setdefault((fork_name, cell_n, cell_m), []).append(result)

    artifacts, stats_rows = [], []
    for cell_n, cell_m in cfg.grid():
        at_start = per_cell[("at_start", cell_n, cell_m)]
        after_reset = per_cell[("after_reset", cell_n, cell_m)]
        signatures_match = all(
            a.exec_signature() == b.exec_signature() for a, b in zip(at_start, after_reset)
        )
        walls_a = [r.wall_ms for r in at_start]
        walls_b = [r.wall_ms for r in after_reset]
        test = mann_whitney_u(walls_b, walls_a)
        stats_rows.append(
            (cell_n, cell_m,
             f"{statistics.median(walls_a):.2f}", f"{statistics.median(walls_b):.2f}",
             f"{sum(walls_a):.2f}", f"{sum(walls_b):.2f}",
             f"{test.u_statistic:.1f}", f"{test.p_value:.5f}", test.significant,
             signatures_match)
        )
        for fork_name, cell in (("at_start", at_start), ("after_reset", after_reset)):
            artifacts.append(
                reporting.write_trajectory_csv(
                    out / f"trajectory_{fork_name}_N{cell_n}_M{cell_m}.csv",
                    [r.trajectory for r in cell],
                )
            )
    artifacts.append(
        reporting.write_summary_csv(
            out / "stats.csv",
            ("state_bits", "code_width", "at_start_median_wall_ms",
             "after_reset_median_wall_ms", "at_start_total_wall_ms",
             "after_reset_total_wall_ms", "u_statistic", "p_value", "significant",
             "exec_signatures_match"),
            stats_rows,
        )
    )
    artifacts.append(
        reporting.write_summary_csv(
            out / "identity.csv",
            ("state_bits", "code_width", "random_tests", "fingerprint_mismatches"),
            [(n, m, identity_tests, mismatches)],
        )
    )
    return ExperimentResult("fork_point", out, stats_rows, artifacts)


def _threshold_stop(threshold: float) -> Callable:
    def stop(progress) -> bool:
        return (
            progress.fsm_total is not None
            and progress.fsm_visited_count >= threshold * progress.fsm_total
        )

    return stop


def _execs_to_threshold(result: CampaignResult, threshold: float, total: int) -> tuple[int, bool]:
    if len(result.fsm_visited) >= threshold * total:
        return result.total_execs, False
    return result.total_execs, True


def _run_grammar_ablation(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    n, m = min(cfg.grid())
    combos = [
        (of_name, ff_name, _OPCODES[of_name], _FRAMES[ff_name])
        for of_name in ("constant", "mapped")
        for ff_name in ("fixed", "variable")
    ]
    jobs, labels = [], []
    index = 0
    for of_name, ff_name, opcode_format, frame_format in combos:
        for trial in range(cfg.trials):
            seed = cfg.base_seed + index

            def job(opcode_format=opcode_format, frame_format=frame_format, seed=seed):
                lock = DigitalLock(LockConfig(n, m, rng_seed=cfg.lock_seed))
                harness = BusHarness(LockPeripheral(lock), opcode_format, frame_format)
                fuzzer_config = FuzzerConfig(
                    budget=cfg.fuzz_budget,
                    rng_seed=seed,
                    max_len=cfg.max_len,
                    fork_point=cfg.fork_point,
                    scope=cfg.scope,
                    stop_when=_threshold_stop(cfg.fsm_threshold),
                )
                return fuzz_campaign(harness, [b""], fuzzer_config)

            jobs.append(job)
            labels.append((f"{of_name}+{ff_name}", trial))
            index += 1
    results = _run_jobs(jobs, cfg.workers)

    per_combo: dict[str, list[CampaignResult]] = {}
    for (combo, _), result in zip(labels, results):
        per_combo.setdefault(combo, []).append(result)

    total_states = 1 << n
    artifacts, summary_rows = [], []
    medians, combo_names = [], []
    for combo, cell in per_combo.items():
        execs = [_execs_to_threshold(r, cfg.fsm_threshold, total_states)[0] for r in cell]
        reached = sum(
            1 for r in cell if not _execs_to_threshold(r, cfg.fsm_threshold, total_states)[1]
        )
        summary_rows.append(
            (combo, n, m, cfg.fsm_threshold, len(cell), reached,
             statistics.median(execs), f"{statistics.fmean(execs):.1f}")
        )
        combo_names.append(combo)
        medians.append(statistics.median(execs))
        artifacts.append(
            reporting.write_trajectory_csv(
                out / f"trajectory_{combo.replace('+', '_')}.csv", [r.trajectory for r in cell]
            )
        )
        artifacts.append(
            _write_consolidated(
                out / f"consolidated_{combo.replace('+', '_')}.csv",
                [r.trajectory for r in cell],
            )
        )
    artifacts.append(
        reporting.write_summary_csv(
            out / "summary.csv",
            ("formats", "state_bits", "code_width", "fsm_threshold", "trials",
             "reached_threshold", "median_execs", "mean_execs"),
            summary_rows,
        )
    )
    artifacts.append(
        reporting.render_bars(
            out / "median_execs.png", combo_names, medians,
            title=f"Execs to {cfg.fsm_threshold:.0%} FSM coverage (lock N={n} M={m})",
            ylabel="median execs",
        )
    )
    groups = [(combo, [r.trajectory for r in cell]) for combo, cell in per_combo.items()]
    artifacts.append(
        reporting.render_trajectories(
            out / "trajectories.png", groups,
            title="FSM coverage by grammar formats", y_field="fsm_fraction",
        )
    )
    return ExperimentResult("grammar_ablation", out, summary_rows, artifacts)


def _make_device(cfg: ExperimentConfig, name: str) -> MmioDevice:
    if name == "timer":
        return TimerDevice()
    n, m = min(cfg.grid())
    lock = DigitalLock(LockConfig(n, m, rng_seed=cfg.lock_seed))
    return LockPeripheral(lock)


def census_programs(device: MmioDevice) -> list[list[HwfInstruction]]:
    """Hand-written instruction programs that walk every reachable behavior.

    The union of edges these programs cover, run through the same
    harness configuration as the campaign, approximates the reachable
    edge set a fuzzer is scored against.
    """
    wait = HwfInstruction.wait
    read = HwfInstruction.read
    write = HwfInstruction.write
    programs: list[list[HwfInstruction]] = []
    offsets = sorted(spec.offset for spec in device.REGISTERS)
    unmapped = (max(offsets) + 8, 0xFFFF_FFF0)

    # register sweep: read everything, poke error paths
    sweep: list[HwfInstruction] = [read(off) for off in offsets]
    sweep += [wait(), read(unmapped[0]), write(unmapped[0], 1), read(unmapped[1]), wait()]
    programs.append(sweep)

    if isinstance(device, TimerDevice):
        # write-only and read-only error paths + rw write/read pairs
        rw = [write(0x18, 1)]  # INTR_STATE is read-only
        for off in (0x04, 0x08, 0x0C, 0x10, 0x14):
            rw += [write(off, 0xFFFFFFFF), read(off), write(off, 0), read(off)]
        programs.append(rw)
        # plain counting, then stop
        programs.append(
            [write(0x00, 1)] + [wait()] * 4 + [read(0x08), read(0x0C), write(0x00, 0), wait(), wait()]
        )
        # prescaler and step
        programs.append(
            [write(0x04, (2 << 12) | 3), write(0x00, 1)] + [wait()] * 12
            + [read(0x08), write(0x00, 0), wait()]
        )
        # interrupt raise then clear by moving the compare value away
        programs.append(
            [write(0x10, 2), write(0x14, 0), write(0x00, 1)] + [wait()] * 4
            + [read(0x18), write(0x10, 0xFFFFFFFF)] + [wait()] * 2
            + [read(0x18), write(0x00, 0), wait()]
        )
    if isinstance(device, LockPeripheral):
        codes = device.lock.correct_codes
        states = device.lock.config.state_count
        mask = (1 << device.lock.config.code_width) - 1
        # control strobe variants and the read-only error path
        programs.append([write(0x08, 1), write(0x00, 0), write(0x00, 1), read(0x08), wait()])
        # wrong code then right code at every state, reading status as we go
        walk: list[HwfInstruction] = []
        for state in range(states - 1):
            walk.append(write(0x04, (codes[state] ^ mask) & mask or (codes[state] + 1) & mask))
            walk.append(write(0x04, codes[state]))
            walk.append(read(0x08))
        walk.append(write(0x04, codes[0]))  # held in the unlocked state
        walk.append(write(0x00, 1))  # reset strobe from unlocked
        walk.append(read(0x08))
        walk.append(write(0x04, codes[0]))  # partial rewalk after reset
        walk.append(read(0x08))
        programs.append(walk)
    return programs


def census_edges(
    device_factory: Callable[[], MmioDevice],
    opcode_format: OpcodeFormat,
    frame_format: FrameFormat,
    scope: ScopeFilter,
) -> frozenset[int]:
    """Union of edge indices the census programs cover."""
    covered: set[int] = set()
    device = device_factory()
    harness = BusHarness(device, opcode_format, frame_format, scope=scope)
    for program in census_programs(device):
        data = encode_instructions(program, opcode_format, frame_format)
        outcome = harness.run(data)
        covered |= outcome.coverage.covered_indices()
    return frozenset(covered)


def _census_stop(census: frozenset[int], threshold: float, want_full_fsm: bool) -> Callable:
    need = threshold * len(census)

    def stop(progress) -> bool:
        buckets = progress.global_map.buckets
        hit = sum(1 for edge in census if buckets[edge])
        if hit < need:
            return False
        if want_full_fsm and progress.fsm_total is not None:
            return progress.fsm_visited_count >= progress.fsm_total
        return True

    return stop


def _run_empty_seed_coverage(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    artifacts, summary_rows = [], []
    trace_groups = []
    index = 0
    for device_name in cfg.devices:
        factory = lambda device_name=device_name: _make_device(cfg, device_name)
        census = census_edges(factory, cfg.opcode_format, cfg.frame_format, cfg.scope)
        want_fsm = device_name == "lock_peripheral"
        jobs = []
        for trial in range(cfg.trials):
            seed = cfg.base_seed + index
            index += 1

            def job(seed=seed, factory=factory, census=census, want_fsm=want_fsm):
                device = factory()
                if isinstance(device, LockPeripheral):
                    arm_unlock_assertion(device)
                harness = BusHarness(device, cfg.opcode_format, cfg.frame_format)
                fuzzer_config = FuzzerConfig(
                    budget=cfg.fuzz_budget,
                    rng_seed=seed,
                    max_len=cfg.max_len,
                    fork_point=cfg.fork_point,
                    scope=cfg.scope,
                    stop_when=_census_stop(census, cfg.census_threshold, want_fsm),
                )
                return fuzz_campaign(harness, [b""], fuzzer_config)

            jobs.append(job)
        results = _run_jobs(jobs, cfg.workers)

        for trial, result in enumerate(results):
            buckets = result.global_map.buckets
            hit = sum(1 for edge in census if buckets[edge])
            summary_rows.append(
                (device_name, trial, len(census), hit, f"{hit / len(census):.4f}",
                 "" if result.fsm_fraction is None else f"{result.fsm_fraction:.4f}",
                 result.total_execs, result.total_sim_cycles, f"{result.wall_ms:.1f}")
            )
        artifacts.append(
            reporting.write_trajectory_csv(
                out / f"trajectory_{device_name}.csv", [r.trajectory for r in results]
            )
        )
        artifacts.append(
            _write_consolidated(out / f"consolidated_{device_name}.csv",
                                [r.trajectory for r in results])
        )
        trace_groups.append((device_name, [r.trajectory for r in results]))
    artifacts.append(
        reporting.write_summary_csv(
            out / "summary.csv",
            ("device", "trial", "census_edges", "covered_census_edges", "census_fraction",
             "fsm_fraction", "execs", "sim_cycles", "wall_ms"),
            summary_rows,
        )
    )
    artifacts.append(
        reporting.render_trajectories(
            out / "trajectories.png", trace_groups,
            title="Edge coverage growth from an empty seed",
        )
    )
    return ExperimentResult("empty_seed_coverage", out, summary_rows, artifacts)


_RUNNERS = {
    "fuzz_vs_crv": _run_fuzz_vs_crv,
    "instrumentation_scope": _run_instrumentation_scope,
    "fork_point": _run_fork_point,
    "grammar_ablation": _run_grammar_ablation,
    "empty_seed_coverage": _run_empty_seed_coverage,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "config.json").open("w") as fh:
        json.dump(cfg.echo_dict(), fh, indent=2)
    result = _RUNNERS[cfg.kind](cfg, out)
    result.artifacts.insert(0, out / "config.json")
    return result
