"""Campaign artifacts on disk: CSV tables, corpora and rendered figures.

Every experiment writes delimited output first (one trajectory row per
retained sample, one summary row per cell) and then renders figures
next to it. Corpora use the raw test-file format: `queue/id{N}.hwf` and
`crashes/id{N}.hwf`, each file holding exactly the bytes the harness
executed.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .fuzzer import CampaignResult, TrajectorySample

TRAJECTORY_HEADER = ("trial_id", "execs", "sim_cycles", "wall_ms", "edges_covered", "fsm_fraction")


def write_trajectory_csv(path: str | Path, trials: Sequence[Sequence[TrajectorySample]]) -> Path:
    """One row per sample, trials identified by their list index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for trial_id, samples in enumerate(trials):
            for s in samples:
                frac = "" if s.fsm_fraction is None else f"{s.fsm_fraction:.6f}"
                writer.writerow(
                    (trial_id, s.execs, s.sim_cycles, f"{s.wall_ms:.3f}", s.edges_covered, frac)
                )
    return path


def write_summary_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def save_corpus(out_dir: str | Path, result: CampaignResult) -> Path:
    """Persist queue and crash inputs as raw .hwf test files."""
    out_dir = Path(out_dir)
    queue_dir = out_dir / "queue"
    crash_dir = out_dir / "crashes"
    queue_dir.mkdir(parents=True, exist_ok=True)
    crash_dir.mkdir(parents=True, exist_ok=True)
    for n, case in enumerate(result.queue):
        (queue_dir / f"id{n}.hwf").write_bytes(case.data)
    for n, crash in enumerate(result.crashes):
        (crash_dir / f"id{n}.hwf").write_bytes(crash.test.data)
    return out_dir


def load_test_file(path: str | Path) -> bytes:
    return Path(path).read_bytes()


def render_heatmap(
    path: str | Path,
    row_labels: Sequence,
    col_labels: Sequence,
    values: Sequence[Sequence[float]],
    *,
    title: str,
    censored: Sequence[Sequence[bool]] | None = None,
    value_fmt: str = "{:.1f}",
    cbar_label: str = "",
) -> Path:
    """Grid figure; censored cells are annotated with a >= prefix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(1.1 * len(col_labels) + 2.4, 0.8 * len(row_labels) + 1.8))
    image = ax.imshow(values, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(col_labels)), labels=[str(c) for c in col_labels])
    ax.set_yticks(range(len(row_labels)), labels=[str(r) for r in row_labels])
    ax.set_xlabel("code width M (bits)")
    ax.set_ylabel("lock states 2^N")
    ax.set_title(title)
    for i in range(len(row_labels)):
        for j in range(len(col_labels)):
            text = value_fmt.format(values[i][j])
            if censored is not None and censored[i][j]:
                text = ">=" + text
            ax.text(j, i, text, ha="center", va="center", color="white", fontsize=8)
    cbar = fig.colorbar(image, ax=ax)
    if cbar_label:
        cbar.set_label(cbar_label)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trajectories(
    path: str | Path,
    groups: Sequence[tuple[str, Sequence[Sequence[TrajectorySample]]]],
    *,
    title: str,
    x_field: str = "execs",
    y_field: str = "edges_covered",
) -> Path:
    """Step plots of per-trial coverage trajectories, one color per group."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for gi, (label, trials) in enumerate(groups):
        color = colors[gi % len(colors)]
        for ti, samples in enumerate(trials):
            xs = [getattr(s, x_field) for s in samples]
            ys = [getattr(s, y_field) or 0 for s in samples]
            ax.step(xs, ys, where="post", color=color, alpha=0.5,
                    label=label if ti == 0 else None)
    ax.set_xlabel(x_field)
    ax.set_ylabel(y_field)
    ax.set_title(title)
    if groups:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_bars(
    path: str | Path,
    labels: Sequence[str],
    values: Sequence[float],
    *,
    title: str,
    ylabel: str,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(1.2 * len(labels) + 2.5, 4))
    ax.bar(range(len(labels)), values, color="tab:blue")
    ax.set_xticks(range(len(labels)), labels=labels, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
