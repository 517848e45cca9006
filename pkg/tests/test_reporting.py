"""CSV layouts, corpus persistence, figure rendering."""

import csv

from hwfuzz import (
    Budget,
    FuzzerConfig,
    GenericHarness,
    TRAJECTORY_HEADER,
    TrajectorySample,
    fuzz_campaign,
    load_test_file,
    render_bars,
    render_heatmap,
    render_trajectories,
    save_corpus,
    write_summary_csv,
    write_trajectory_csv,
)
from hwfuzz import DigitalLock, LockConfig, arm_unlock_assertion

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _small_campaign(stop_on_first_crash=True, seed=7):
    lock = DigitalLock(LockConfig(2, 4, rng_seed=1))
    arm_unlock_assertion(lock)
    config = FuzzerConfig(budget=Budget(max_execs=20_000), rng_seed=seed, max_len=64,
                          stop_on_first_crash=stop_on_first_crash)
    return fuzz_campaign(GenericHarness(lock), [b""], config)


def test_trajectory_csv_header_and_rows(tmp_path):
    assert TRAJECTORY_HEADER == (
        "trial_id", "execs", "sim_cycles", "wall_ms", "edges_covered", "fsm_fraction"
    )
    trials = [
        [TrajectorySample(1, 10, 0.5, 3, 0.25), TrajectorySample(5, 50, 1.75, 4, 0.5)],
        [TrajectorySample(2, 20, 0.25, 2, None)],
    ]
    path = write_trajectory_csv(tmp_path / "t.csv", trials)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(TRAJECTORY_HEADER)
    assert rows[1] == ["0", "1", "10", "0.500", "3", "0.250000"]
    assert rows[2] == ["0", "5", "50", "1.750", "4", "0.500000"]
    assert rows[3] == ["1", "2", "20", "0.250", "2", ""]  # no FSM: empty field


def test_summary_csv_round_trips(tmp_path):
    path = write_summary_csv(tmp_path / "s.csv", ("a", "b"), [(1, "x"), (2, "y")])
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows == [["a", "b"], ["1", "x"], ["2", "y"]]


def test_save_corpus_file_naming(tmp_path):
    result = _small_campaign()
    out = save_corpus(tmp_path, result)
    queue_files = sorted((out / "queue").iterdir())
    crash_files = sorted((out / "crashes").iterdir())
    assert [f.name for f in queue_files[:2]] == ["id0.hwf", "id1.hwf"]
    assert len(queue_files) == len(result.queue)
    assert len(crash_files) == len(result.crashes) == 1
    assert crash_files[0].name == "id0.hwf"
    # payloads are the raw test bytes
    assert load_test_file(crash_files[0]) == result.crashes[0].test.data
    assert load_test_file(queue_files[0]) == result.queue[0].data


def test_render_heatmap_writes_png(tmp_path):
    path = render_heatmap(
        tmp_path / "h.png", [4, 16], [2, 4],
        [[10.0, 20.0], [30.0, 40.0]],
        title="cycles", censored=[[False, True], [False, False]],
        cbar_label="cycles",
    )
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_render_trajectories_writes_png(tmp_path):
    result = _small_campaign()
    path = render_trajectories(
        tmp_path / "t.png", [("fuzz", [result.trajectory])], title="coverage"
    )
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_render_bars_writes_png(tmp_path):
    path = render_bars(tmp_path / "b.png", ["a", "b"], [1.0, 2.0],
                       title="medians", ylabel="execs")
    assert path.read_bytes()[:8] == PNG_MAGIC
