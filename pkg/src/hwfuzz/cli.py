"""Command-line front end.

Verbs:

- ``fuzz``: run one coverage-guided campaign, persist queue/ and
  crashes/ corpora, the trajectory CSV, a trajectory figure, and a
  config echo under --out.
- ``crv``: run the constrained-random baseline on the same lock.
- ``replay <testfile>``: execute one .hwf file through a freshly built
  harness; exits 2 if the test crashes the model.
- ``experiment <config>``: run a TOML-described experiment; flags
  override file values.
- ``seed-compile <text> -o <out.hwf>``: compile seed text to bytes.
- ``regmap <device>``: print a device register map as markdown.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import reporting
from .bus import LockPeripheral, TimerDevice, register_map_markdown
from .coverage import ScopeFilter
from .dut import DigitalLock, LockConfig, arm_unlock_assertion
from .experiments import load_experiment_config, run_experiment
from .fuzzer import Budget, CrvConfig, FuzzerConfig, crv_campaign, fuzz_campaign
from .grammar import FrameFormat, OpcodeFormat, SeedTextError, compile_seed_text
from .harness import BusHarness, ForkPoint, GenericHarness

_DUT_CHOICES = ("lock", "timer", "lock_peripheral")


def _add_harness_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dut", choices=_DUT_CHOICES, default="lock",
                        help="model under test (default: %(default)s)")
    parser.add_argument("--state-bits", type=int, default=2, metavar="N",
                        help="lock FSM state bits (default: %(default)s)")
    parser.add_argument("--code-width", type=int, default=4, metavar="M",
                        help="lock code width in bits (default: %(default)s)")
    parser.add_argument("--lock-seed", type=int, default=1,
                        help="seed for the lock's code table (default: %(default)s)")
    parser.add_argument("--opcode", choices=("constant", "mapped"), default="constant",
                        help="bus opcode format (default: %(default)s)")
    parser.add_argument("--frame", choices=("fixed", "variable"), default="variable",
                        help="bus frame format (default: %(default)s)")
    parser.add_argument("--fork-point", choices=("at_start", "after_reset"),
                        default="after_reset")
    parser.add_argument("--scope", choices=("dut_only", "all"), default="dut_only",
                        help="coverage instrumentation scope (default: %(default)s)")


def _add_budget_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-execs", type=int, default=None)
    parser.add_argument("--max-sim-cycles", type=int, default=None)
    parser.add_argument("--max-wall-ms", type=float, default=None)


def _build_harness(args: argparse.Namespace):
    fork_point = ForkPoint(args.fork_point)
    scope = ScopeFilter(args.scope)
    if args.dut == "lock":
        lock = DigitalLock(LockConfig(args.state_bits, args.code_width,
                                      rng_seed=args.lock_seed))
        arm_unlock_assertion(lock)
        return GenericHarness(lock, fork_point=fork_point, scope=scope)
    if args.dut == "timer":
        device = TimerDevice()
    else:
        lock = DigitalLock(LockConfig(args.state_bits, args.code_width,
                                      rng_seed=args.lock_seed))
        device = LockPeripheral(lock)
        arm_unlock_assertion(device)
    return BusHarness(device, OpcodeFormat(args.opcode), FrameFormat(args.frame),
                      fork_point=fork_point, scope=scope)


def _budget_from_args(args: argparse.Namespace, default: Budget) -> Budget:
    if args.max_execs is None and args.max_sim_cycles is None and args.max_wall_ms is None:
        return default
    return Budget(max_execs=args.max_execs, max_sim_cycles=args.max_sim_cycles,
                  max_wall_ms=args.max_wall_ms)


def _echo_config(out: Path, args: argparse.Namespace, budget: Budget) -> None:
    echo = {key.replace("-", "_"): value for key, value in vars(args).items()
            if key != "func" and not callable(value)}
    echo["budget"] = {"max_execs": budget.max_execs,
                      "max_sim_cycles": budget.max_sim_cycles,
                      "max_wall_ms": budget.max_wall_ms}
    for key, value in list(echo.items()):
        if isinstance(value, Path):
            echo[key] = str(value)
    with (out / "config.json").open("w") as fh:
        json.dump(echo, fh, indent=2, default=str)


def _cmd_fuzz(args: argparse.Namespace) -> int:
    harness = _build_harness(args)
    budget = _budget_from_args(args, Budget(max_execs=100_000))
    seeds = [Path(p).read_bytes() for p in args.seed_file] or [b""]
    config = FuzzerConfig(budget=budget, rng_seed=args.seed, max_len=args.max_len,
                          fork_point=ForkPoint(args.fork_point),
                          scope=ScopeFilter(args.scope),
                          stop_on_first_crash=args.stop_on_crash)
    result = fuzz_campaign(harness, seeds, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(out, args, budget)
    reporting.save_corpus(out, result)
    reporting.write_trajectory_csv(out / "trajectory.csv", [result.trajectory])
    reporting.render_trajectories(out / "trajectory.png",
                                  [("campaign", [result.trajectory])],
                                  title="Edge coverage")
    fsm = "" if result.fsm_fraction is None else f" fsm={result.fsm_fraction:.3f}"
    print(f"execs={result.total_execs} sim_cycles={result.total_sim_cycles} "
          f"wall_ms={result.wall_ms:.1f} edges={result.edges_covered}{fsm} "
          f"queue={len(result.queue)} crashes={len(result.crashes)}")
    if result.crashes:
        first = result.crashes[0]
        print(f"first crash: assertion={first.assertion!r} cycle={first.cycle} "
              f"exec={first.exec_index} sim_cycles={first.sim_cycles}")
    print(f"artifacts: {out}")
    return 0


def _cmd_crv(args: argparse.Namespace) -> int:
    lock = DigitalLock(LockConfig(args.state_bits, args.code_width,
                                  rng_seed=args.lock_seed))
    budget = _budget_from_args(args, Budget(max_sim_cycles=2_000_000))
    config = CrvConfig(args.state_bits, args.code_width, budget=budget,
                       rng_seed=args.seed)
    result = crv_campaign(lock, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(out, args, budget)
    reporting.save_corpus(out, result)
    reporting.write_trajectory_csv(out / "trajectory.csv", [result.trajectory])
    status = "unlocked" if result.crashes else "censored"
    print(f"attempts={result.total_execs} sim_cycles={result.total_sim_cycles} "
          f"wall_ms={result.wall_ms:.1f} {status}")
    print(f"artifacts: {out}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    harness = _build_harness(args)
    try:
        data = reporting.load_test_file(args.testfile)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    outcome = harness.run(data)
    if outcome.crash is None:
        print(f"ok cycles={outcome.executed_cycles} "
              f"instructions={outcome.decoded_instruction_count} "
              f"edges={len(outcome.coverage.covered_indices())}")
        return 0
    print(f"crash assertion={outcome.crash.assertion!r} cycle={outcome.crash.cycle} "
          f"cycles={outcome.executed_cycles}")
    return 2


def _cmd_experiment(args: argparse.Namespace) -> int:
    overrides = {}
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.base_seed is not None:
        overrides["base_seed"] = args.base_seed
    try:
        config = load_experiment_config(args.config, **overrides)
    except (OSError, ValueError) as err:
        # covers a missing file, TOML syntax, and config validation
        print(f"error: {err}", file=sys.stderr)
        return 1
    result = run_experiment(config)
    print(f"experiment {result.kind}: {len(result.artifacts)} artifacts in {result.out_dir}")
    return 0


def _cmd_seed_compile(args: argparse.Namespace) -> int:
    try:
        text = sys.stdin.read() if args.text == "-" else Path(args.text).read_text()
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        data = compile_seed_text(text, OpcodeFormat(args.opcode), FrameFormat(args.frame))
    except SeedTextError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    Path(args.output).write_bytes(data)
    print(f"wrote {len(data)} bytes to {args.output}")
    return 0


def _cmd_regmap(args: argparse.Namespace) -> int:
    device = TimerDevice if args.device == "timer" else LockPeripheral
    print(register_map_markdown(device), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hwfuzz",
                                     description="Coverage-guided fuzzing of "
                                                 "cycle-accurate hardware models.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("fuzz", help="run a coverage-guided campaign")
    _add_harness_args(p)
    _add_budget_args(p)
    p.add_argument("--seed", type=int, default=0, help="fuzzer rng seed")
    p.add_argument("--max-len", type=int, default=4096)
    p.add_argument("--seed-file", action="append", default=[], metavar="PATH",
                   help="initial corpus file, repeatable (default: one empty test)")
    p.add_argument("--stop-on-crash", action="store_true")
    p.add_argument("--out", default="runs/fuzz", help="artifact directory")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("crv", help="run the constrained-random baseline")
    p.add_argument("--state-bits", type=int, default=2, metavar="N")
    p.add_argument("--code-width", type=int, default=4, metavar="M")
    p.add_argument("--lock-seed", type=int, default=1)
    _add_budget_args(p)
    p.add_argument("--seed", type=int, default=0, help="stimulus rng seed")
    p.add_argument("--out", default="runs/crv", help="artifact directory")
    p.set_defaults(func=_cmd_crv)

    p = sub.add_parser("replay", help="run one saved test and report its outcome")
    p.add_argument("testfile", help=".hwf file to execute")
    _add_harness_args(p)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("experiment", help="run an experiment from a TOML config")
    p.add_argument("config", help="path to the TOML experiment file")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--base-seed", type=int, default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("seed-compile", help="compile seed text into a .hwf file")
    p.add_argument("text", help="seed text file, or - for stdin")
    p.add_argument("-o", "--output", required=True, metavar="OUT.hwf")
    p.add_argument("--opcode", choices=("constant", "mapped"), default="constant")
    p.add_argument("--frame", choices=("fixed", "variable"), default="variable")
    p.set_defaults(func=_cmd_seed_compile)

    p = sub.add_parser("regmap", help="print a device register map as markdown")
    p.add_argument("device", choices=("timer", "lock_peripheral"))
    p.set_defaults(func=_cmd_regmap)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
