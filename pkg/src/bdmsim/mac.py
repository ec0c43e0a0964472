"""802.11b DCF stations and the shared medium.

Every station hears every other station, so carrier sensing is global and
instantaneous.  Contention is slotted: after the medium goes idle at
``idle_since`` a station counts its backoff on the grid
``idle_since + ifs + k * slot``.  Stations whose countdowns expire on the same
microsecond collide.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

from .sim_core import BROADCAST, Event, EventKind, RngStream, Simulator


RATES_BPS = (1_000_000, 2_000_000, 5_500_000, 11_000_000)

# (rate bps, min metres, max metres), searched top to bottom
PROFILE_B = ((11_000_000, 0.0, 48.0),)
PROFILE_FULL = (
    (54_000_000, 0.0, 27.0),
    (48_000_000, 27.0, 29.0),
    (36_000_000, 29.0, 30.0),
    (24_000_000, 30.0, 42.0),
    (18_000_000, 42.0, 54.0),
)
RATE_PROFILES = {"b": PROFILE_B, "full": PROFILE_FULL}

RTS_BYTES = 20
CTS_BYTES = 14

DEFAULT_BER = {
    1_000_000: 0.0,
    2_000_000: 1e-6,
    5_500_000: 1e-5,
    11_000_000: 1e-4,
}


class OutOfCoverage(ValueError):
    """Distance lies outside every row of the rate/distance table."""


class MacStateError(AssertionError):
    """A station received an event its current phase cannot accept."""


@dataclass(frozen=True)
class MacTiming:
    difs: int = 50
    sifs: int = 10
    slot: int = 20
    cw_min: int = 32
    cw_max: int = 1023
    phy_header: int = 192
    mac_header: int = 34
    ack_time: int = 248
    basic_rate: int = 1_000_000
    retry_limit: int = 7

    def __post_init__(self) -> None:
        if not 0 < self.sifs < self.difs:
            raise ValueError("need 0 < SIFS < DIFS")
        if not 0 < self.cw_min < self.cw_max:
            raise ValueError("need 0 < CWmin < CWmax")

    @property
    def ack_timeout(self) -> int:
        return self.sifs + self.ack_time + self.slot


@dataclass(frozen=True)
class DataRate:
    level: int

    def __post_init__(self) -> None:
        if not 0 <= self.level < len(RATES_BPS):
            raise ValueError(f"rate level {self.level} outside 0..{len(RATES_BPS) - 1}")

    @property
    def bits_per_second(self) -> int:
        return RATES_BPS[self.level]

    @classmethod
    def from_bps(cls, bps: float) -> "DataRate":
        try:
            return cls(RATES_BPS.index(int(bps)))
        except ValueError:
            raise ValueError(f"{bps} bit/s is not an 802.11b rate") from None


@dataclass(frozen=True)
class AccessParams:
    """Contention parameters of one queue: inter-frame space and CW bounds."""

    ifs: int
    cw_min: int
    cw_max: int
    name: str = "dcf"

    @classmethod
    def dcf(cls, timing: MacTiming) -> "AccessParams":
        return cls(timing.difs, timing.cw_min, timing.cw_max, "dcf")

    @classmethod
    def edca(cls, timing: MacTiming, aifsn: int, cw_min: int, cw_max: int, name: str) -> "AccessParams":
        return cls(timing.sifs + aifsn * timing.slot, cw_min, cw_max, name)


def frame_airtime(payload_bytes: int, mac_header_bytes: int, rate_bps: int,
                  phy_header_us: int = MacTiming.phy_header) -> int:
    if rate_bps <= 0:
        raise ValueError(f"invalid rate {rate_bps}")
    bits = 8 * (mac_header_bytes + payload_bytes)
    return phy_header_us + -(-bits * 1_000_000 // int(rate_bps))


def control_airtime(nbytes: int, timing: MacTiming) -> int:
    return timing.phy_header + -(-8 * nbytes * 1_000_000 // timing.basic_rate)


def draw_backoff(cw: int, rng: RngStream) -> int:
    return rng.next_uniform(cw)


def advance_cw(cw: int, success: bool, cw_min: int = MacTiming.cw_min,
               cw_max: int = MacTiming.cw_max) -> int:
    if success:
        return cw_min
    return min(2 * cw, cw_max)


def frame_error_rate(payload_bytes: int, mac_header_bytes: int, rate_bps: int,
                     ber_per_rate: dict[int, float]) -> float:
    ber = ber_per_rate.get(int(rate_bps), 0.0)
    if not 0 <= ber < 1:
        raise ValueError(f"bit error rate {ber} outside [0, 1)")
    bits = 8 * (mac_header_bytes + payload_bytes)
    return -math.expm1(bits * math.log1p(-ber))


def rate_for_distance(distance_m: float, table: Iterable[tuple[int, float, float]] = PROFILE_B) -> int:
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    for rate, lo, hi in table:
        if lo <= distance_m <= hi:
            return rate
    raise OutOfCoverage(f"no rate covers {distance_m} m")


def resolve_transmissions(frame_error_rates: list[float], error_rng: RngStream) -> list[bool]:
    """Per-transmitter success flags for transmissions that began together."""
    if not frame_error_rates:
        raise ValueError("transmitter set is empty")
    if len(frame_error_rates) > 1:
        return [False] * len(frame_error_rates)
    fer = frame_error_rates[0]
    if fer <= 0:
        return [True]
    return [error_rng.random() >= fer]


@dataclass(eq=False)
class Frame:
    src: int
    dst: int
    payload_bytes: int
    enqueue_time: int
    kind: str = "voice"
    flow: int = -1
    retry_count: int = 0
    rate_bps: int = 0
    first_attempt_time: int | None = None


class RateController(Protocol):
    def rate_bps(self) -> int: ...
    def on_attempt(self, success: bool) -> None: ...
    def on_outcome(self, success: bool) -> None: ...


class Phase(enum.Enum):
    IDLE = "idle"
    DEFERRED = "deferred"
    DIFS_WAIT = "difs-wait"
    BACKOFF = "backoff"
    TRANSMITTING = "transmitting"
    AWAITING_ACK = "awaiting-ack"


class Input(enum.Enum):
    FRAME_READY = "frame-ready"
    GATE_RETRY = "gate-retry"
    MEDIUM_IDLE = "medium-idle"
    MEDIUM_BUSY = "medium-busy"
    BACKOFF_DONE = "backoff-done"
    TX_END = "tx-end"
    ACK = "ack"
    ACK_TIMEOUT = "ack-timeout"


class Act(enum.Enum):
    SCHEDULE_ACCESS = "schedule-access"
    CANCEL_ACCESS = "cancel-access"
    TRANSMIT = "transmit"
    DELIVERED = "delivered"
    DROPPED = "dropped"


@dataclass(frozen=True)
class Action:
    kind: Act
    at: int | None = None
    frame: Frame | None = None


@dataclass
class ChannelState:
    idle_since: int | None = 0
    busy_until: int = 0
    current_transmitters: set[int] = field(default_factory=set)

    @property
    def idle(self) -> bool:
        return self.idle_since is not None


class Station:
    def __init__(self, sid: int, rng: RngStream, timing: MacTiming = MacTiming(),
                 access: AccessParams | None = None, controller: RateController | None = None,
                 distance_m: float = 0.0, rate_cap_bps: int | None = None,
                 queue_limit: int | None = None,
                 gate: Callable[["Station", Frame], bool] | None = None) -> None:
        self.sid = sid
        self.rng = rng
        self.timing = timing
        self.access = access or AccessParams.dcf(timing)
        self.controller = controller
        self.distance_m = distance_m
        self.rate_cap_bps = rate_cap_bps
        self.queue_limit = queue_limit
        self.gate = gate
        self.queue: deque[Frame] = deque()
        self.cw = self.access.cw_min
        self.backoff: int | None = None
        self.phase = Phase.IDLE
        self.ready_at = 0
        self.countdown_start: int | None = None
        self.access_at: int | None = None
        self.pending: Event | None = None

    def __repr__(self) -> str:
        return f"Station({self.sid}, {self.phase.value}, cw={self.cw}, backoff={self.backoff}, q={len(self.queue)})"

    def current_rate(self) -> int:
        rate = self.controller.rate_bps() if self.controller else RATES_BPS[-1]
        if self.rate_cap_bps is not None:
            rate = min(rate, self.rate_cap_bps)
        return rate

    def _contend(self, now: int, channel: ChannelState) -> list[Action]:
        slot = self.timing.slot
        base = channel.idle_since + self.access.ifs
        start = base
        if self.ready_at > base:
            start = base + -(-(self.ready_at - base) // slot) * slot
        self.countdown_start = start
        self.access_at = start + self.backoff * slot
        self.phase = Phase.DIFS_WAIT if now < base else Phase.BACKOFF
        return [Action(Act.SCHEDULE_ACCESS, at=self.access_at)]

    def _start_head(self, now: int, channel: ChannelState) -> list[Action]:
        if not self.queue:
            self.phase = Phase.IDLE
            return []
        if self.gate is not None and not self.gate(self, self.queue[0]):
            self.phase = Phase.DEFERRED
            return []
        if self.backoff is None:
            self.backoff = draw_backoff(self.cw, self.rng)
        self.ready_at = now
        self.phase = Phase.DIFS_WAIT
        if channel.idle:
            return self._contend(now, channel)
        return []

    def _bad(self, inp: Input) -> MacStateError:
        return MacStateError(f"station {self.sid}: {inp.value} in phase {self.phase.value}")


def step_station(st: Station, inp: Input, now: int, channel: ChannelState) -> list[Action]:
    """Advance one station's DCF automaton and return the side effects to apply."""
    timing = st.timing
    if inp is Input.FRAME_READY or inp is Input.GATE_RETRY:
        expected = Phase.IDLE if inp is Input.FRAME_READY else Phase.DEFERRED
        if st.phase is not expected or not st.queue:
            raise st._bad(inp)
        return st._start_head(now, channel)

    if inp is Input.MEDIUM_IDLE:
        if st.phase in (Phase.DIFS_WAIT, Phase.BACKOFF) and st.pending is None and st.queue:
            return st._contend(now, channel)
        return []

    if inp is Input.MEDIUM_BUSY:
        if st.pending is None:
            return []
        if st.countdown_start is not None and now > st.countdown_start:
            st.backoff -= (now - st.countdown_start) // timing.slot
        st.countdown_start = None
        st.access_at = None
        st.phase = Phase.DIFS_WAIT
        return [Action(Act.CANCEL_ACCESS)]

    if inp is Input.BACKOFF_DONE:
        if st.phase not in (Phase.DIFS_WAIT, Phase.BACKOFF) or not st.queue:
            raise st._bad(inp)
        st.phase = Phase.TRANSMITTING
        st.backoff = None
        st.countdown_start = None
        st.access_at = None
        frame = st.queue[0]
        if frame.first_attempt_time is None:
            frame.first_attempt_time = now
        frame.rate_bps = st.current_rate()
        return [Action(Act.TRANSMIT, frame=frame)]

    if inp is Input.TX_END:
        if st.phase is not Phase.TRANSMITTING:
            raise st._bad(inp)
        st.phase = Phase.AWAITING_ACK
        return []

    if inp is Input.ACK:
        if st.phase is not Phase.AWAITING_ACK:
            raise st._bad(inp)
        frame = st.queue.popleft()
        st.cw = advance_cw(st.cw, True, st.access.cw_min, st.access.cw_max)
        if st.controller is not None:
            st.controller.on_attempt(True)
        return [Action(Act.DELIVERED, frame=frame)] + st._start_head(now, channel)

    if inp is Input.ACK_TIMEOUT:
        if st.phase is not Phase.AWAITING_ACK:
            raise st._bad(inp)
        frame = st.queue[0]
        frame.retry_count += 1
        if st.controller is not None:
            st.controller.on_attempt(False)
        if frame.retry_count > timing.retry_limit:
            st.queue.popleft()
            st.cw = st.access.cw_min
            return [Action(Act.DROPPED, frame=frame)] + st._start_head(now, channel)
        st.cw = advance_cw(st.cw, False, st.access.cw_min, st.access.cw_max)
        st.backoff = draw_backoff(st.cw, st.rng)
        st.ready_at = now
        st.phase = Phase.DIFS_WAIT
        if channel.idle:
            return st._contend(now, channel)
        return []

    raise st._bad(inp)


@dataclass
class Attempt:
    start: int
    station: int
    transmitters: int
    success: bool
    rate_bps: int


@dataclass
class _TxGroup:
    start: int
    members: list[tuple[Station, Frame, int]]


class Bss:
    """Shared medium plus the stations contending on it.

    ``on_complete(station, frame, delivered, now)`` fires once per frame when
    its attempt chain ends; ``on_busy(start, end)`` receives every busy
    interval of the medium (they never overlap).
    """

    def __init__(self, sim: Simulator, stations: list[Station], timing: MacTiming,
                 error_rng: RngStream, ber_per_rate: dict[int, float] | None = None,
                 rts_cts: bool = False,
                 on_complete: Callable[[Station, Frame, bool, int], None] | None = None,
                 on_busy: Callable[[int, int], None] | None = None,
                 log_attempts: bool = True) -> None:
        self.sim = sim
        self.stations = stations
        self.by_id = {st.sid: st for st in stations}
        self.timing = timing
        self.error_rng = error_rng
        self.ber = dict(DEFAULT_BER if ber_per_rate is None else ber_per_rate)
        self.rts_cts = rts_cts
        self.on_complete = on_complete
        self.on_busy = on_busy
        self.channel = ChannelState(idle_since=sim.now)
        self.attempts: list[Attempt] | None = [] if log_attempts else None
        self._fer_cache: dict[tuple[int, int], float] = {}
        sim.handlers[EventKind.BACKOFF_SLOT] = self._on_backoff
        sim.handlers[EventKind.TX_END] = self._on_tx_end
        sim.handlers[EventKind.MEDIUM_IDLE] = self._on_medium_idle
        sim.handlers[EventKind.ACK_TIMEOUT] = self._on_ack_timeout

    # -- station-facing API -------------------------------------------------

    def enqueue(self, st: Station, frame: Frame) -> bool:
        if st.queue_limit is not None and len(st.queue) >= st.queue_limit:
            return False
        st.queue.append(frame)
        if st.phase is Phase.IDLE:
            self._apply(st, step_station(st, Input.FRAME_READY, self.sim.now, self.channel))
        return True

    def retry_deferred(self) -> None:
        now = self.sim.now
        for st in self.stations:
            if st.phase is Phase.DEFERRED:
                self._apply(st, step_station(st, Input.GATE_RETRY, now, self.channel))

    def fer(self, frame: Frame) -> float:
        key = (frame.payload_bytes, frame.rate_bps)
        val = self._fer_cache.get(key)
        if val is None:
            val = frame_error_rate(frame.payload_bytes, self.timing.mac_header, frame.rate_bps, self.ber)
            self._fer_cache[key] = val
        return val

    # -- internals ------------------------------------------------------------

    def _apply(self, st: Station, actions: list[Action]) -> list[Frame]:
        sent = []
        for a in actions:
            k = a.kind
            if k is Act.SCHEDULE_ACCESS:
                st.pending = self.sim.schedule(a.at, EventKind.BACKOFF_SLOT, st.sid)
            elif k is Act.CANCEL_ACCESS:
                self.sim.cancel(st.pending)
                st.pending = None
            elif k is Act.TRANSMIT:
                sent.append(a.frame)
            else:
                if self.on_complete is not None:
                    self.on_complete(st, a.frame, k is Act.DELIVERED, self.sim.now)
        return sent

    def _airtime(self, frame: Frame) -> int:
        t = self.timing
        return frame_airtime(frame.payload_bytes, t.mac_header, frame.rate_bps, t.phy_header)

    def _on_backoff(self, ev: Event) -> None:
        now = self.sim.now
        first = self.by_id[ev.target]
        first.pending = None
        group = [first]
        for st in self.stations:
            if st is not first and st.pending is not None and st.access_at == now:
                self.sim.cancel(st.pending)
                st.pending = None
                group.append(st)
        group.sort(key=lambda s: s.sid)
        members = []
        for st in group:
            (frame,) = self._apply(st, step_station(st, Input.BACKOFF_DONE, now, self.channel))
            if self.rts_cts:
                dur = control_airtime(RTS_BYTES, self.timing)
            else:
                dur = self._airtime(frame)
            members.append((st, frame, dur))
        ch = self.channel
        ch.idle_since = None
        ch.current_transmitters = {st.sid for st in group}
        for st in self.stations:
            if st.pending is not None:
                self._apply(st, step_station(st, Input.MEDIUM_BUSY, now, ch))
        end = now + max(d for _, _, d in members)
        ch.busy_until = end
        self.sim.schedule(end, EventKind.TX_END, BROADCAST, _TxGroup(now, members))

    def _on_tx_end(self, ev: Event) -> None:
        now = self.sim.now
        t = self.timing
        grp: _TxGroup = ev.data
        for st, _, _ in grp.members:
            step_station(st, Input.TX_END, now, self.channel)
        if self.rts_cts:
            # data error is drawn only once the handshake has won the medium
            ok = resolve_transmissions([0.0] * len(grp.members), self.error_rng)
        else:
            ok = resolve_transmissions([self.fer(f) for _, f, _ in grp.members], self.error_rng)
        n = len(grp.members)
        if self.attempts is not None:
            for (st, f, _), good in zip(grp.members, ok):
                self.attempts.append(Attempt(grp.start, st.sid, n, good, f.rate_bps))

        if n == 1 and ok[0]:
            st, frame, _ = grp.members[0]
            if self.rts_cts:
                data_start = now + t.sifs + control_airtime(CTS_BYTES, t) + t.sifs
                data_end = data_start + self._airtime(frame)
                if resolve_transmissions([self.fer(frame)], self.error_rng)[0]:
                    idle_at = data_end + t.sifs + t.ack_time
                    self._busy(grp.start, idle_at)
                    self.sim.schedule(idle_at, EventKind.MEDIUM_IDLE, st.sid)
                else:
                    if self.attempts is not None:
                        self.attempts[-1].success = False
                    self._busy(grp.start, data_end)
                    self.sim.schedule(data_end, EventKind.MEDIUM_IDLE, BROADCAST)
                    self.sim.schedule(data_end + t.ack_timeout, EventKind.ACK_TIMEOUT, st.sid)
                return
            idle_at = now + t.sifs + t.ack_time
            self._busy(grp.start, idle_at)
            self.sim.schedule(idle_at, EventKind.MEDIUM_IDLE, st.sid)
            return

        self._busy(grp.start, now)
        self.sim.schedule(now, EventKind.MEDIUM_IDLE, BROADCAST)
        if self.rts_cts:
            wait = t.sifs + control_airtime(CTS_BYTES, t) + t.slot
        else:
            wait = t.ack_timeout
        for st, _, dur in grp.members:
            # a shorter colliding frame may time out while the longer one is still on
            # air; the station could not contend before the medium clears anyway
            self.sim.schedule(max(now, grp.start + dur + wait), EventKind.ACK_TIMEOUT, st.sid)

    def _busy(self, start: int, end: int) -> None:
        self.channel.busy_until = end
        if self.on_busy is not None and end > start:
            self.on_busy(start, end)

    def _on_medium_idle(self, ev: Event) -> None:
        now = self.sim.now
        ch = self.channel
        ch.idle_since = now
        ch.current_transmitters = set()
        if ev.target != BROADCAST:
            st = self.by_id[ev.target]
            self._apply(st, step_station(st, Input.ACK, now, ch))
        for st in self.stations:
            self._apply(st, step_station(st, Input.MEDIUM_IDLE, now, ch))

    def _on_ack_timeout(self, ev: Event) -> None:
        st = self.by_id[ev.target]
        self._apply(st, step_station(st, Input.ACK_TIMEOUT, self.sim.now, self.channel))
