"""Static figures written next to the CSV output.  Uses the Agg backend only."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricsReport  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "savefig.dpi": 120,
}

_SERIES = (
    ("throughput_bps", "throughput (kbit/s)", 1e-3),
    ("utilization_pct", "utilization (%)", 1.0),
    ("free_bw_pct", "free bandwidth (%)", 1.0),
    ("delay_ms", "access delay (ms)", 1.0),
)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_timeseries(reports: Sequence[MetricsReport], labels: Sequence[str], out: str | Path) -> Path:
    """Per-window throughput, utilization, free bandwidth and delay, one line per run."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
        for ax, (col, name, scale) in zip(axes.flat, _SERIES):
            for rep, lab in zip(reports, labels):
                t = [w.time_s for w in rep.windows]
                ax.plot(t, [getattr(w, col) * scale for w in rep.windows], label=lab, lw=1.2)
            ax.set_ylabel(name)
        for ax in axes[1]:
            ax.set_xlabel("time (s)")
        axes[0, 0].legend(fontsize=8)
        fig.tight_layout()
        return _save(fig, Path(out))


def plot_comparison(labels: Sequence[str], reports: Sequence[MetricsReport], out: str | Path) -> Path:
    bars = (
        ("throughput_bps", "throughput (kbit/s)", 1e-3),
        ("utilization_pct", "utilization (%)", 1.0),
        ("mean_access_delay_ms", "delay (ms)", 1.0),
        ("frame_loss_ratio", "loss ratio", 1.0),
        ("capacity_calls", "capacity (calls)", 1.0),
    )
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(bars), figsize=(3 * len(bars), 3.2))
        x = range(len(labels))
        for ax, (attr, name, scale) in zip(axes, bars):
            ax.bar(x, [getattr(r, attr) * scale for r in reports], color="C0", width=0.6)
            ax.set_xticks(list(x), labels, rotation=30, ha="right")
            ax.set_title(name, fontsize=10)
        fig.tight_layout()
        return _save(fig, Path(out))


def plot_sweep(calls: Sequence[int], free_pct: Sequence[float], out: str | Path,
               util_pct: Sequence[float] | None = None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(calls, free_pct, "o-", label="free bandwidth")
        if util_pct is not None:
            ax.plot(calls, util_pct, "s--", label="utilization")
        ax.axhline(1.0, color="0.5", lw=0.8, ls=":")
        ax.set_xlabel("calls")
        ax.set_ylabel("% of channel time")
        ax.legend()
        return _save(fig, Path(out))
