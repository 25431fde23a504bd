"""Report emission: exact-rational CSV files, and matplotlib figures
rendered to files alongside them.

CSV capital columns always carry exact numerator/denominator pairs; the
figures convert to floats for display only and never feed back into any
computation.  Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import csv
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import Capital
from .strategies import RunTrace

TRACE_COLUMNS = ("move", "position", "bit", "capital_num", "capital_den", "halt")
GAIN_COLUMNS = ("interval", "moves", "gain_num", "gain_den", "cleared_one")


def _atomic_write(path: Path, write_fn) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path: str | Path, trace: RunTrace) -> None:
    """One row per resolved move; capital columns show the value after the
    move, and the halt column repeats the trace's halt reason."""

    def emit(fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        moves = min(len(trace.positions), len(trace.capitals) - 1)
        for k in range(moves):
            c = trace.capitals[k + 1]
            writer.writerow([k, trace.positions[k], trace.history[k],
                             c.numerator, c.denominator, trace.halt])

    _atomic_write(Path(path), emit)


def write_gain_csv(path: str | Path, rows: Sequence[dict]) -> None:
    def emit(fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(GAIN_COLUMNS)
        for row in rows:
            gain: Fraction = row["gain"]
            writer.writerow([row["interval"], row["moves"],
                             gain.numerator, gain.denominator,
                             int(gain >= 1)])

    _atomic_write(Path(path), emit)


def _to_float(c: Capital) -> float:
    try:
        return float(c)
    except OverflowError:
        return float("inf")


def plot_capitals(path: str | Path, series: dict[str, Sequence[Capital]],
                  title: str = "capital trajectory") -> None:
    """Render capital trajectories to an image file (display only)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, capitals in series.items():
        ax.plot(range(len(capitals)), [_to_float(c) for c in capitals],
                drawstyle="steps-post", label=label)
    ax.set_xlabel("move")
    ax.set_ylabel("capital")
    ax.set_yscale("symlog")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata={"Software": "mlab"})
    plt.close(fig)


def plot_adversary(path: str | Path, d_values: Sequence[Capital],
                   bound: Capital = Fraction(2)) -> None:
    """Adversary value along the constructed prefix, with the bound line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(range(len(d_values)), [_to_float(v) for v in d_values],
            drawstyle="steps-post", label="adversary value")
    ax.axhline(float(bound), color="red", linestyle="--", label="bound")
    ax.set_xlabel("prefix length")
    ax.set_ylabel("capital")
    ax.set_title("weighted-sum adversary along the constructed prefix")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata={"Software": "mlab"})
    plt.close(fig)
