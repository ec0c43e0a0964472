"""CSV serialization, controller comparisons, call-count sweeps and batch runs."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Sequence

from .metrics import COLUMNS, MetricsReport, WindowRow
from .network import run_scenario
from .scenario import CONTROLLER_KEYS, ScenarioConfig, ScenarioError

SUMMARY_LABEL = "summary"


def _fmt(x: float) -> str:
    # repr round-trips exactly; nan and inf come out as "nan" / "inf"
    return repr(float(x))


def emit_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in report.windows:
        w.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    w.writerow([SUMMARY_LABEL, *(_fmt(x) for x in report.summary_row())])
    return buf.getvalue()


def parse_csv(text: str) -> MetricsReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError("missing or unexpected header row")
    if len(rows) < 2 or rows[-1][0] != SUMMARY_LABEL:
        raise ValueError("missing summary row")
    windows = []
    for n, row in enumerate(rows[1:-1], 2):
        if len(row) != len(COLUMNS):
            raise ValueError(f"row {n}: expected {len(COLUMNS)} fields")
        windows.append(WindowRow(*(float(x) for x in row)))
    summary = [float(x) for x in rows[-1][1:]]
    if len(summary) != len(COLUMNS) - 1:
        raise ValueError("summary row has the wrong number of fields")
    return MetricsReport(*summary, windows=windows)


def run_batch(configs: Sequence[ScenarioConfig], jobs: int = 1) -> list[MetricsReport]:
    """Run independent scenarios, optionally in worker processes.  Order is preserved."""
    if jobs <= 1 or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_scenario, configs))


def seed_batch(cfg: ScenarioConfig, n_seeds: int, jobs: int = 1) -> list[MetricsReport]:
    return run_batch([cfg.replace(seed=s) for s in range(1, n_seeds + 1)], jobs)


# -- comparisons ----------------------------------------------------------------

DELTA_FIELDS = ("throughput_bps", "utilization_pct", "mean_access_delay_ms",
                "frame_loss_ratio", "capacity_calls")


def delta_pct(base: float, value: float) -> float:
    """Relative change of ``value`` against ``base`` in percent."""
    if value == base:
        return 0.0
    if base == 0 or math.isnan(base) or math.isnan(value):
        return math.nan
    return (value - base) / abs(base) * 100.0


def label(cfg: ScenarioConfig) -> str:
    if cfg.controller == "fixed":
        return f"fixed-{cfg.fixed_rate_mbps:g}M"
    return cfg.controller


@dataclass
class ComparisonTable:
    labels: list[str]
    reports: list[MetricsReport]

    def delta(self, i: int, name: str) -> float:
        """Change of report ``i`` relative to the first report, in percent."""
        return delta_pct(getattr(self.reports[0], name), getattr(self.reports[i], name))

    def rows(self) -> list[dict]:
        out = []
        for i, (lab, rep) in enumerate(zip(self.labels, self.reports)):
            row = {"controller": lab}
            for f in DELTA_FIELDS:
                row[f] = getattr(rep, f)
                row[f"{f}_delta_pct"] = self.delta(i, f)
            out.append(row)
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r.values()])
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'controller':<12}{'thr kb/s':>10}{'util %':>9}{'delay ms':>10}{'loss':>9}{'calls':>8}"
        lines = [head]
        for i, (lab, r) in enumerate(zip(self.labels, self.reports)):
            lines.append(f"{lab:<12}{r.throughput_bps / 1e3:>10.1f}{r.utilization_pct:>9.2f}"
                         f"{r.mean_access_delay_ms:>10.3f}{r.frame_loss_ratio:>9.4f}{r.capacity_calls:>8.2f}")
        lines.append("")
        lines.append(f"deltas against {self.labels[0]} (%)")
        for i, lab in enumerate(self.labels[1:], 1):
            parts = "  ".join(f"{f}={self.delta(i, f):+.2f}" for f in DELTA_FIELDS)
            lines.append(f"  {lab}: {parts}")
        return "\n".join(lines) + "\n"


def check_comparable(configs: Sequence[ScenarioConfig]) -> None:
    if len(configs) < 2:
        raise ScenarioError("compare needs at least two scenarios")
    base = configs[0]
    for cfg in configs[1:]:
        for f in fields(ScenarioConfig):
            if f.name in CONTROLLER_KEYS:
                continue
            if getattr(cfg, f.name) != getattr(base, f.name):
                raise ScenarioError(f"{f.name}: scenarios may differ only in the controller")


def compare(configs: Sequence[ScenarioConfig], jobs: int = 1) -> ComparisonTable:
    check_comparable(configs)
    reports = run_batch(list(configs), jobs)
    return ComparisonTable([label(c) for c in configs], reports)


# -- sweeps ---------------------------------------------------------------------

@dataclass
class SweepPoint:
    calls: int
    report: MetricsReport
    steady_free_pct: float


def sweep_calls(cfg: ScenarioConfig, counts: Sequence[int], jobs: int = 1) -> list[SweepPoint]:
    """Same scenario at each call count; free bandwidth is averaged after warm-up."""
    reports = run_batch([cfg.replace(stations=n) for n in counts], jobs)
    return [SweepPoint(n, r, r.steady_free_pct(cfg.warmup_s)) for n, r in zip(counts, reports)]
