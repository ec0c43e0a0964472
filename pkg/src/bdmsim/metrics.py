"""Transmission log and the evaluation metrics computed from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass
class TxRecord:
    station: int
    enqueue_time: int
    first_attempt_time: int | None
    completion_time: int
    payload_bytes: int
    delivered: bool
    retries: int
    rate_used: int
    kind: str = "voice"
    reason: str = ""           # "retry" or "overflow" for dropped frames

    def __post_init__(self) -> None:
        if self.delivered and not (self.enqueue_time <= self.first_attempt_time <= self.completion_time):
            raise ValueError("delivered frame needs enqueue <= first attempt <= completion")

    @property
    def access_delay_us(self) -> int:
        return self.completion_time - self.enqueue_time

    @property
    def service_delay_us(self) -> int | None:
        if self.first_attempt_time is None:
            return None
        return self.completion_time - self.first_attempt_time


class MetricsLog:
    """Per-frame records plus medium busy time binned by tick."""

    def __init__(self, tick_us: int = 100_000, horizon_us: int | None = None) -> None:
        self.tick_us = tick_us
        self.horizon_us = horizon_us
        self.records: list[TxRecord] = []
        self.busy_by_tick: list[int] = []

    def record(self, rec: TxRecord) -> None:
        self.records.append(rec)

    def add_busy(self, start: int, end: int) -> None:
        if self.horizon_us is not None:
            end = min(end, self.horizon_us)
        if end <= start:
            return
        tick = self.tick_us
        bins = self.busy_by_tick
        last = (end - 1) // tick
        if len(bins) <= last:
            bins.extend([0] * (last + 1 - len(bins)))
        t = start
        while t < end:
            k = t // tick
            stop = min(end, (k + 1) * tick)
            bins[k] += stop - t
            t = stop

    def busy_in(self, start: int, end: int) -> int:
        """Busy microseconds in ``[start, end)``; both ends must sit on tick boundaries."""
        tick = self.tick_us
        if start % tick or end % tick:
            raise ValueError("busy time is binned per tick; query on tick boundaries")
        lo, hi = start // tick, -(-end // tick)
        return sum(self.busy_by_tick[lo:hi])


def throughput(records: Iterable[TxRecord], start: int, end: int) -> float:
    """Delivered payload bits per second over ``[start, end)`` microseconds."""
    if end <= start:
        raise ValueError("interval must be positive")
    bits = sum(8 * r.payload_bytes for r in records
               if r.delivered and start <= r.completion_time < end)
    return bits * 1e6 / (end - start)


def frame_loss_ratio(records: Sequence[TxRecord]) -> float:
    if not records:
        raise ValueError("no frames completed")
    dropped = sum(1 for r in records if not r.delivered)
    return dropped / len(records)


def mean_access_delay(records: Iterable[TxRecord]) -> float:
    """Mean enqueue-to-completion delay of delivered frames, in ms."""
    delays = [r.access_delay_us for r in records if r.delivered]
    if not delays:
        raise ValueError("no delivered frames")
    return sum(delays) / len(delays) / 1000.0


def utilization(busy_us: float, interval_us: float) -> float:
    if interval_us <= 0:
        raise ValueError("interval must be positive")
    return 100.0 * busy_us / interval_us


def call_capacity(max_throughput_bps: float, per_call_rate_bps: float) -> float:
    if per_call_rate_bps <= 0:
        raise ValueError("per-call rate must be positive")
    return max_throughput_bps / per_call_rate_bps


@dataclass
class WindowRow:
    time_s: float
    throughput_bps: float
    loss_ratio: float
    delay_ms: float
    utilization_pct: float
    free_bw_pct: float
    capacity_calls: float


COLUMNS = ("time_s", "throughput_bps", "loss_ratio", "delay_ms",
           "utilization_pct", "free_bw_pct", "capacity_calls")


@dataclass
class MetricsReport:
    throughput_bps: float
    frame_loss_ratio: float
    mean_access_delay_ms: float
    utilization_pct: float
    free_bw_pct: float
    capacity_calls: float
    windows: list[WindowRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def summary_row(self) -> tuple[float, ...]:
        return (self.throughput_bps, self.frame_loss_ratio, self.mean_access_delay_ms,
                self.utilization_pct, self.free_bw_pct, self.capacity_calls)

    def steady_state(self, warmup_s: float = 0.0) -> list[WindowRow]:
        return [w for w in self.windows if w.time_s >= warmup_s]

    def steady_free_pct(self, warmup_s: float = 0.0) -> float:
        rows = self.steady_state(warmup_s)
        if not rows:
            return self.free_bw_pct
        return sum(w.free_bw_pct for w in rows) / len(rows)


def _nan_if_empty(fn, records):
    try:
        return fn(records)
    except ValueError:
        return math.nan


def build_report(log: MetricsLog, duration_us: int, window_us: int,
                 per_call_rate_bps: float, meta: dict | None = None) -> MetricsReport:
    """Aggregate a finished run into whole-run figures and per-window rows."""
    if window_us % log.tick_us:
        raise ValueError("report window must be a whole number of ticks")
    recs = sorted(log.records, key=lambda r: (r.completion_time, r.station))
    rows = []
    max_voice_bps = 0.0
    start = 0
    i = 0
    while start < duration_us:
        end = min(start + window_us, duration_us)
        j = i
        while j < len(recs) and recs[j].completion_time < end:
            j += 1
        chunk = recs[i:j]
        i = j
        busy = log.busy_in(start, end)
        util = utilization(busy, end - start)
        voice_bps = throughput((r for r in chunk if r.kind == "voice"), start, end)
        max_voice_bps = max(max_voice_bps, voice_bps)
        rows.append(WindowRow(
            time_s=start / 1e6,
            throughput_bps=throughput(chunk, start, end),
            loss_ratio=_nan_if_empty(frame_loss_ratio, chunk),
            delay_ms=_nan_if_empty(mean_access_delay, chunk),
            utilization_pct=util,
            free_bw_pct=100.0 - util,
            capacity_calls=call_capacity(voice_bps, per_call_rate_bps),
        ))
        start = end
    busy_total = log.busy_in(0, duration_us)
    util_total = utilization(busy_total, duration_us)
    return MetricsReport(
        throughput_bps=throughput(recs, 0, duration_us),
        frame_loss_ratio=_nan_if_empty(frame_loss_ratio, recs),
        mean_access_delay_ms=_nan_if_empty(mean_access_delay, recs),
        utilization_pct=util_total,
        free_bw_pct=100.0 - util_total,
        capacity_calls=call_capacity(max_voice_bps, per_call_rate_bps),
        windows=rows,
        meta=dict(meta or {}),
    )
