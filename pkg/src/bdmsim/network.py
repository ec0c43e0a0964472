"""Builds and runs one BSS from a :class:`ScenarioConfig`.

Station 0 is the AP.  Voice station ``i`` (1..N) carries the uplink half of
call ``i`` and the AP carries every downlink half.  Data stations follow the
voice stations.  Random stream 0 drives channel errors and station ``s`` owns
stream ``s + 1``, so adding stations never perturbs existing draw sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import bdm
from .mac import (RATE_PROFILES, RATES_BPS, AccessParams, Bss, Frame, MacTiming, Station,
                  frame_airtime, rate_for_distance)
from .metrics import MetricsLog, MetricsReport, TxRecord, build_report
from .scenario import ScenarioConfig
from .sim_core import EventKind, RngStream, Simulator
from .voip import (HeaderMode, HeaderStack, TalkspurtModel, VoipFlow, codec_by_name,
                   next_voice_packet, per_call_bandwidth)

AP = 0
PLACEMENT_STREAM = 1_000_000
# traffic draws sit on their own per-station streams so every controller sees
# the same offered load for a given seed
TRAFFIC_STREAM_BASE = 2_000_000

EDCA_VOICE = dict(aifsn=2, cw_min=8, cw_max=16, name="AC_VO")
EDCA_DATA = dict(aifsn=3, cw_min=32, cw_max=1023, name="AC_BE")


@dataclass
class _Source:
    station: Station
    dst: int
    kind: str
    payload_bytes: int
    flow: VoipFlow | None = None
    mean_gap_us: float | None = None    # Poisson data source
    saturated: bool = False
    call: int = -1


class Network:
    def __init__(self, cfg: ScenarioConfig) -> None:
        self.cfg = cfg
        self.sim = Simulator()
        self.timing = MacTiming(retry_limit=cfg.retry_limit)
        self.tick_us = cfg.tick_ms * 1000
        self.log = MetricsLog(self.tick_us, horizon_us=cfg.duration_us)
        self.window = bdm.SlidingUtilization(cfg.window_ms * 1000, self.tick_us)
        self.flow_template = VoipFlow(
            codec=codec_by_name(cfg.codec), ptime_ms=cfg.ptime_ms,
            header=HeaderStack(mode=HeaderMode(cfg.header)),
            talkspurt=TalkspurtModel(cfg.talk_on_ms, cfg.talk_off_ms) if cfg.talkspurt else TalkspurtModel(),
        )
        self.admitted: list[int] = []
        self.rejected: list[int] = []
        self.gate_deferrals = 0
        self._ticks = 0

        n_total = 1 + cfg.stations + cfg.data_stations
        distances = self._place(n_total)
        profile = RATE_PROFILES[cfg.rate_profile]
        self.stations: list[Station] = []
        self.traffic_rng: list[RngStream] = []
        for sid in range(n_total):
            kind = "data" if sid > cfg.stations else "voice"
            cap = rate_for_distance(distances[sid], profile)
            self.traffic_rng.append(RngStream(cfg.seed, TRAFFIC_STREAM_BASE + sid))
            st = Station(
                sid, RngStream(cfg.seed, sid + 1), self.timing,
                access=self._access(kind), controller=self._controller(),
                distance_m=distances[sid], rate_cap_bps=cap if cap < RATES_BPS[-1] else None,
                queue_limit=cfg.queue_limit,
                gate=self._gate if cfg.controller == "bdm" else None,
            )
            self.stations.append(st)
        self.bss = Bss(self.sim, self.stations, self.timing, RngStream(cfg.seed, 0),
                       cfg.ber_table, cfg.rts_cts, on_complete=self._on_complete,
                       on_busy=self.log.add_busy)
        self.sim.handlers[EventKind.PACKET_ARRIVAL] = self._on_arrival
        self.sim.handlers[EventKind.CALL_REQUEST] = self._on_call_request
        self.sim.handlers[EventKind.WINDOW_TICK] = self._on_tick
        self._sources: list[_Source] = []
        self._saturated: dict[int, _Source] = {}
        self._schedule_traffic()
        self.sim.schedule(self.tick_us, EventKind.WINDOW_TICK)

    # -- construction -----------------------------------------------------------

    def _place(self, n_total: int) -> list[float]:
        cfg = self.cfg
        if cfg.distances is not None:
            return [0.0, *cfg.distances]
        rng = RngStream(cfg.seed, PLACEMENT_STREAM)
        # uniform over the disc of radius max_distance_m, at least 1 m from the AP
        r = cfg.max_distance_m
        return [0.0] + [max(1.0, r * math.sqrt(rng.random())) for _ in range(n_total - 1)]

    def _access(self, kind: str) -> AccessParams:
        if self.cfg.controller == "edca":
            return AccessParams.edca(self.timing, **(EDCA_VOICE if kind == "voice" else EDCA_DATA))
        return AccessParams.dcf(self.timing)

    def _controller(self):
        c = self.cfg.controller
        if c == "bdm":
            return bdm.BdmRate(self.cfg.initial_rate_level, self.cfg.bdm_granularity)
        if c == "arf":
            return bdm.ArfRate(self.cfg.initial_rate_level, self.cfg.bdm_granularity)
        if c == "fixed":
            return bdm.FixedRate(round(self.cfg.fixed_rate_mbps * 1e6))
        return bdm.FixedRate(RATES_BPS[-1])

    def _gate(self, st: Station, frame: Frame) -> bool:
        ok = bdm.tx_gate(st.controller.state, self.window.free_pct, frame.kind) is bdm.Decision.SEND
        if not ok:
            self.gate_deferrals += 1
        return ok

    def _new_flow(self, direction: str) -> VoipFlow:
        t = self.flow_template
        return VoipFlow(t.codec, t.ptime_ms, t.header, direction, t.talkspurt)

    def _schedule_traffic(self) -> None:
        cfg = self.cfg
        voice_payload = self.flow_template.payload_bytes
        if cfg.traffic == "saturated":
            size = voice_payload if cfg.payload_bytes is None else cfg.payload_bytes
            for sid in range(1, cfg.stations + 1):
                src = _Source(self.stations[sid], AP, "voice", size, saturated=True)
                self._saturated[sid] = src
                self._emit(src)
        else:
            spacing = round(cfg.call_spacing_ms * 1000)
            for call in range(1, cfg.stations + 1):
                self.sim.schedule((call - 1) * spacing, EventKind.CALL_REQUEST, call)
        for sid in range(cfg.stations + 1, cfg.stations + cfg.data_stations + 1):
            st = self.stations[sid]
            src = _Source(st, AP, "data", cfg.data_payload_bytes)
            if cfg.data_load_bps is None:
                src.saturated = True
                self._saturated[sid] = src
                self._emit(src)
            elif cfg.data_load_bps > 0:
                src.mean_gap_us = cfg.data_payload_bytes * 8e6 / cfg.data_load_bps
                self.sim.schedule(round(self.traffic_rng[sid].exponential(src.mean_gap_us)),
                                  EventKind.PACKET_ARRIVAL, sid, src)

    # -- admission --------------------------------------------------------------

    def per_call_airtime_pct(self) -> float:
        """Airtime share one more call would take at the AP's current rate."""
        t = self.timing
        rate = self.stations[AP].current_rate()
        exchange = (frame_airtime(self.flow_template.payload_bytes, t.mac_header, rate, t.phy_header)
                    + t.sifs + t.ack_time + t.difs + (t.cw_min - 1) * t.slot / 2)
        return 2 * self.flow_template.packets_per_second * exchange / 1e6 * 100

    def admission_target_pct(self) -> float:
        if self.cfg.admission_target_pct is not None:
            return self.cfg.admission_target_pct
        ctl = self.stations[AP].controller
        return ctl.target_free_pct if isinstance(ctl, bdm.BdmRate) else 1.0

    def _on_call_request(self, ev) -> None:
        call = ev.target
        if self.cfg.admission and not bdm.admit_call(
                self.window.free_pct, self.admission_target_pct(), self.per_call_airtime_pct()):
            self.rejected.append(call)
            return
        self.admitted.append(call)
        now = self.sim.now
        sta = self.stations[call]
        ap = self.stations[AP]
        for st, dst, direction in ((sta, AP, "up"), (ap, call, "down")):
            flow = self._new_flow(direction)
            src = _Source(st, dst, "voice", flow.payload_bytes, flow=flow, call=call)
            offset = self.traffic_rng[call].next_uniform(flow.ptime_us)
            self.sim.schedule(now + offset, EventKind.PACKET_ARRIVAL, st.sid, src)

    # -- traffic ----------------------------------------------------------------

    def _emit(self, src: _Source) -> None:
        now = self.sim.now
        frame = Frame(src.station.sid, src.dst, src.payload_bytes, now, src.kind, src.call)
        if not self.bss.enqueue(src.station, frame):
            self.log.record(TxRecord(src.station.sid, now, None, now, frame.payload_bytes,
                                     False, 0, 0, src.kind, "overflow"))

    def _on_arrival(self, ev) -> None:
        src: _Source = ev.data
        self._emit(src)
        now = self.sim.now
        rng = self.traffic_rng[src.station.sid if src.call < 0 else src.call]
        if src.flow is not None:
            nxt = next_voice_packet(src.flow, now, rng)
        else:
            nxt = now + max(1, round(rng.exponential(src.mean_gap_us)))
        self.sim.schedule(nxt, EventKind.PACKET_ARRIVAL, ev.target, src)

    def _on_complete(self, st: Station, frame: Frame, delivered: bool, now: int) -> None:
        self.log.record(TxRecord(st.sid, frame.enqueue_time, frame.first_attempt_time, now,
                                 frame.payload_bytes, delivered, frame.retry_count,
                                 frame.rate_bps, frame.kind, "" if delivered else "retry"))
        if st.controller is not None:
            st.controller.on_outcome(delivered)
        src = self._saturated.get(st.sid)
        if src is not None:
            self._emit(src)

    def _on_tick(self, ev) -> None:
        k = self._ticks
        bins = self.log.busy_by_tick
        self.window.push(bins[k] if k < len(bins) else 0)
        self._ticks += 1
        self.bss.retry_deferred()
        self.sim.schedule(self.sim.now + self.tick_us, EventKind.WINDOW_TICK)

    # -- run --------------------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.cfg
        self.sim.run_until(cfg.duration_us)
        per_call = 2 * per_call_bandwidth(self.flow_template)
        attempts = self.bss.attempts or []
        collided = sum(1 for a in attempts if a.transmitters > 1)
        meta = {
            "controller": cfg.controller,
            "seed": cfg.seed,
            "stations": cfg.stations,
            "data_stations": cfg.data_stations,
            "admitted_calls": len(self.admitted),
            "rejected_calls": len(self.rejected),
            "per_call_rate_bps": per_call,
            "attempts": len(attempts),
            "collision_ratio": collided / len(attempts) if attempts else 0.0,
            "gate_deferrals": self.gate_deferrals,
        }
        if cfg.controller == "edca":
            meta["edca_voice"] = EDCA_VOICE
            meta["edca_data"] = EDCA_DATA
        if cfg.controller == "fixed":
            meta["fixed_rate_mbps"] = cfg.fixed_rate_mbps
        return build_report(self.log, cfg.duration_us, cfg.report_window_ms * 1000, per_call, meta)


def run_scenario(cfg: ScenarioConfig) -> MetricsReport:
    return Network(cfg).run()
