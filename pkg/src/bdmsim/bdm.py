"""Bandwidth/data-rate moderation: coupled rate and free-bandwidth ladders.

A successful transmission moves the station one rate level up and lowers the
free-bandwidth reserve it insists on; a failure does the opposite.  Both
ladders saturate at their ends.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace

from .mac import RATES_BPS

RATE_LEVELS = len(RATES_BPS)          # 1, 2, 5.5, 11 Mbit/s
FREE_BW_PCT = (1, 2, 3, 4, 5)         # reserve per free-bandwidth level
FREE_LEVELS = len(FREE_BW_PCT)


class Outcome(enum.Enum):
    NONE = "none"
    SUCCESS = "success"
    FAILURE = "failure"


class Decision(enum.Enum):
    SEND = "send"
    DEFER = "defer"


@dataclass(frozen=True)
class BdmState:
    rate_level: int = 0
    free_bw_level: int = FREE_LEVELS - 1
    last_outcome: Outcome = Outcome.NONE

    def __post_init__(self) -> None:
        if not 0 <= self.rate_level < RATE_LEVELS:
            raise ValueError(f"rate level {self.rate_level} out of range")
        if not 0 <= self.free_bw_level < FREE_LEVELS:
            raise ValueError(f"free-bandwidth level {self.free_bw_level} out of range")

    @property
    def rate_bps(self) -> int:
        return RATES_BPS[self.rate_level]

    @property
    def target_free_pct(self) -> int:
        return FREE_BW_PCT[self.free_bw_level]


def bdm_init(rate_level: int = 0) -> BdmState:
    return BdmState(rate_level=rate_level, free_bw_level=FREE_LEVELS - 1)


def bdm_update(state: BdmState, outcome: Outcome | bool) -> BdmState:
    if isinstance(outcome, bool):
        outcome = Outcome.SUCCESS if outcome else Outcome.FAILURE
    if outcome is Outcome.SUCCESS:
        return BdmState(min(state.rate_level + 1, RATE_LEVELS - 1),
                        max(state.free_bw_level - 1, 0), outcome)
    if outcome is Outcome.FAILURE:
        return BdmState(max(state.rate_level - 1, 0),
                        min(state.free_bw_level + 1, FREE_LEVELS - 1), outcome)
    return replace(state, last_outcome=outcome)


@dataclass(frozen=True)
class UtilizationWindow:
    window_len: int
    busy_us: int

    @property
    def utilization_pct(self) -> float:
        return 100.0 * self.busy_us / self.window_len

    @property
    def free_pct(self) -> float:
        return measure_free_bandwidth(self)


def measure_free_bandwidth(window: UtilizationWindow) -> float:
    if window.window_len <= 0:
        raise ValueError("window length must be positive")
    return 100.0 - 100.0 * window.busy_us / window.window_len


class SlidingUtilization:
    """BSS-wide busy-time monitor over the last ``window_us``, advanced per tick."""

    def __init__(self, window_us: int = 1_000_000, tick_us: int = 100_000) -> None:
        if window_us % tick_us:
            raise ValueError("window must be a whole number of ticks")
        self.window_us = window_us
        self.tick_us = tick_us
        self._buckets: deque[int] = deque(maxlen=window_us // tick_us)

    def push(self, busy_us: int) -> None:
        if not 0 <= busy_us <= self.tick_us:
            raise ValueError(f"tick busy time {busy_us} outside [0, {self.tick_us}]")
        self._buckets.append(busy_us)

    def current(self) -> UtilizationWindow | None:
        if not self._buckets:
            return None
        return UtilizationWindow(len(self._buckets) * self.tick_us, sum(self._buckets))

    @property
    def free_pct(self) -> float:
        w = self.current()
        return 100.0 if w is None else w.free_pct


def tx_gate(state: BdmState, measured_free_pct: float, kind: str = "voice") -> Decision:
    """Hold back setup and best-effort frames while the reserve is violated.

    Voice frames of admitted calls are never held.
    """
    if kind == "voice":
        return Decision.SEND
    if measured_free_pct < state.target_free_pct:
        return Decision.DEFER
    return Decision.SEND


def admit_call(measured_free_pct: float, target_free_pct: float, per_call_airtime_pct: float) -> bool:
    if per_call_airtime_pct < 0:
        raise ValueError("per-call airtime must be non-negative")
    return measured_free_pct - per_call_airtime_pct >= target_free_pct


class FixedRate:
    name = "fixed"

    def __init__(self, rate_bps: int) -> None:
        self._rate = int(rate_bps)

    def rate_bps(self) -> int:
        return self._rate

    def on_attempt(self, success: bool) -> None:
        pass

    def on_outcome(self, success: bool) -> None:
        pass


class ArfRate:
    """Rate ladder alone: BDM with the free-bandwidth coupling switched off.

    ``granularity`` picks the outcome that moves the ladders: every
    transmission attempt, or only the end of a retry chain (delivery or drop).
    """

    name = "arf"
    gated = False

    def __init__(self, initial_level: int = 0, granularity: str = "attempt") -> None:
        if granularity not in ("attempt", "chain"):
            raise ValueError(f"unknown update granularity {granularity!r}")
        self.state = bdm_init(initial_level)
        self.granularity = granularity

    def rate_bps(self) -> int:
        return self.state.rate_bps

    def on_attempt(self, success: bool) -> None:
        if self.granularity == "attempt":
            self.state = bdm_update(self.state, success)

    def on_outcome(self, success: bool) -> None:
        if self.granularity == "chain":
            self.state = bdm_update(self.state, success)


class BdmRate(ArfRate):
    name = "bdm"
    gated = True

    @property
    def target_free_pct(self) -> int:
        return self.state.target_free_pct
