"""Scenario files: a line-oriented ``key=value`` format with ``#`` comments.

Example::

    # ten calls, default BER table
    stations=10
    controller=bdm
    data_stations=2
    data_load_bps=300000
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .mac import DEFAULT_BER, RATE_PROFILES, RATES_BPS, OutOfCoverage, rate_for_distance
from .voip import CODECS, HeaderMode, packet_payload_bytes

CONTROLLERS = ("bdm", "fixed", "arf", "edca")
# keys allowed to differ between the runs of one comparison
CONTROLLER_KEYS = frozenset({"controller", "fixed_rate_mbps"})


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    stations: int
    controller: str = "bdm"
    fixed_rate_mbps: float = 11.0
    initial_rate_level: int = 0
    bdm_granularity: str = "attempt"
    traffic: str = "voice"
    payload_bytes: int | None = None
    codec: str = "g729"
    ptime_ms: int = 20
    header: str = "full"
    talkspurt: bool = False
    talk_on_ms: float = 1000.0
    talk_off_ms: float = 1500.0
    data_stations: int = 0
    data_load_bps: float | None = 0.0          # None means saturated
    data_payload_bytes: int = 1500
    distances: tuple[float, ...] | None = None
    max_distance_m: float = 30.0
    rate_profile: str = "b"
    duration_s: float = 30.0
    seed: int = 1
    ber: tuple[tuple[int, float], ...] = tuple(sorted(DEFAULT_BER.items()))
    rts_cts: bool = False
    window_ms: int = 1000
    tick_ms: int = 100
    report_window_ms: int = 1000
    correc_fac: float = 0.7
    retry_limit: int = 7
    queue_limit: int = 100
    admission: bool = False
    admission_target_pct: float | None = None   # None: the AP's BDM reserve, else 1 %
    call_spacing_ms: float = 0.0
    warmup_s: float = 2.0

    def __post_init__(self) -> None:
        validate(self)

    @property
    def duration_us(self) -> int:
        return round(self.duration_s * 1e6)

    @property
    def ber_table(self) -> dict[int, float]:
        return dict(self.ber)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name}={_format_value(f.name, getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _check(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{key}: {msg}")


def validate(c: ScenarioConfig) -> None:
    _check(c.stations >= 1, "stations", "need at least one station")
    _check(c.controller in CONTROLLERS, "controller", f"expected one of {', '.join(CONTROLLERS)}")
    _check(round(c.fixed_rate_mbps * 1e6) in RATES_BPS, "fixed_rate_mbps", "must be 1, 2, 5.5 or 11")
    _check(0 <= c.initial_rate_level < len(RATES_BPS), "initial_rate_level", "must be 0..3")
    _check(c.bdm_granularity in ("attempt", "chain"), "bdm_granularity", "expected attempt or chain")
    _check(c.traffic in ("voice", "saturated"), "traffic", "expected voice or saturated")
    _check(c.codec in CODECS, "codec", f"expected one of {', '.join(sorted(CODECS))}")
    _check(c.ptime_ms > 0, "ptime_ms", "must be positive")
    try:
        packet_payload_bytes(CODECS[c.codec], c.ptime_ms)
    except ValueError as e:
        raise ScenarioError(f"ptime_ms: {e}") from None
    _check(c.header in {m.value for m in HeaderMode}, "header", "expected full or compressed")
    _check(c.payload_bytes is None or c.payload_bytes >= 0, "payload_bytes", "must be >= 0")
    _check(c.talk_on_ms > 0 and c.talk_off_ms >= 0, "talk_on_ms", "durations must be positive")
    _check(c.data_stations >= 0, "data_stations", "must be >= 0")
    _check(c.data_load_bps is None or c.data_load_bps >= 0, "data_load_bps", "must be >= 0")
    _check(c.data_payload_bytes > 0, "data_payload_bytes", "must be positive")
    _check(c.rate_profile in RATE_PROFILES, "rate_profile", "expected b or full")
    _check(c.max_distance_m > 0, "max_distance_m", "must be positive")
    profile = RATE_PROFILES[c.rate_profile]
    try:
        rate_for_distance(c.max_distance_m, profile)
    except OutOfCoverage:
        raise ScenarioError(f"max_distance_m: {c.max_distance_m} m is outside the {c.rate_profile} profile") from None
    if c.distances is not None:
        _check(len(c.distances) == c.stations + c.data_stations, "distances",
               "need one distance per voice and data station")
        for d in c.distances:
            try:
                rate_for_distance(d, profile)
            except (OutOfCoverage, ValueError):
                raise ScenarioError(f"distances: {d} m is outside the {c.rate_profile} profile") from None
    _check(c.duration_s > 0, "duration_s", "must be positive")
    _check(c.tick_ms > 0 and c.window_ms > 0 and c.report_window_ms > 0, "window_ms", "must be positive")
    _check(c.window_ms % c.tick_ms == 0, "window_ms", "must be a multiple of tick_ms")
    _check(c.report_window_ms % c.tick_ms == 0, "report_window_ms", "must be a multiple of tick_ms")
    _check(c.duration_us % (c.tick_ms * 1000) == 0, "duration_s", "must be a multiple of tick_ms")
    _check(0 < c.correc_fac <= 1, "correc_fac", "must be in (0, 1]")
    _check(c.retry_limit >= 0, "retry_limit", "must be >= 0")
    _check(c.queue_limit >= 1, "queue_limit", "must be >= 1")
    _check(c.admission_target_pct is None or 0 <= c.admission_target_pct < 100,
           "admission_target_pct", "must be in [0, 100)")
    _check(c.call_spacing_ms >= 0, "call_spacing_ms", "must be >= 0")
    _check(c.warmup_s >= 0, "warmup_s", "must be >= 0")
    for rate, ber in c.ber:
        _check(rate in RATES_BPS, "ber", f"{rate} is not an 802.11b rate")
        _check(0 <= ber < 1, "ber", f"bit error rate {ber} outside [0, 1)")


_BOOL = {"on": True, "true": True, "yes": True, "1": True,
         "off": False, "false": False, "no": False, "0": False}


def _parse_value(key: str, raw: str):
    v = raw.strip()
    if key in ("stations", "initial_rate_level", "ptime_ms", "data_stations", "data_payload_bytes",
               "seed", "window_ms", "tick_ms", "report_window_ms", "retry_limit", "queue_limit"):
        return int(v)
    if key == "payload_bytes":
        return None if v.lower() in ("", "auto") else int(v)
    if key in ("fixed_rate_mbps", "talk_on_ms", "talk_off_ms", "max_distance_m", "duration_s",
               "correc_fac", "call_spacing_ms", "warmup_s"):
        return float(v)
    if key in ("talkspurt", "rts_cts", "admission"):
        try:
            return _BOOL[v.lower()]
        except KeyError:
            raise ValueError(f"expected on/off, got {v!r}") from None
    if key == "data_load_bps":
        return None if v.lower() == "saturated" else float(v)
    if key == "admission_target_pct":
        return None if v.lower() == "auto" else float(v)
    if key == "distances":
        return None if v.lower() in ("", "auto") else tuple(float(x) for x in v.split(","))
    if key == "ber":
        table = dict(DEFAULT_BER)
        for item in v.split(","):
            rate, _, ber = item.partition(":")
            table[round(float(rate) * 1e6)] = float(ber)
        return tuple(sorted(table.items()))
    return v.lower()


def _format_value(key: str, value) -> str:
    if value is None:
        return {"data_load_bps": "saturated", "admission_target_pct": "auto"}.get(key, "auto")
    if isinstance(value, bool):
        return "on" if value else "off"
    if key == "distances":
        return ",".join(repr(d) for d in value)
    if key == "ber":
        return ",".join(f"{r / 1e6:g}:{b!r}" for r, b in value)
    return str(value)


_KEYS = {f.name for f in fields(ScenarioConfig)}


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict = {}
    lines: dict[str, int] = {}
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key = key.strip()
        if not sep:
            raise ScenarioError(f"line {n}: expected key=value, got {body!r}")
        if key not in _KEYS:
            raise ScenarioError(f"line {n}: {key}: unknown key")
        if key in values:
            raise ScenarioError(f"line {n}: {key}: duplicate key (first set on line {lines[key]})")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as e:
            raise ScenarioError(f"line {n}: {key}: {e}") from None
        lines[key] = n
    if "stations" not in values:
        raise ScenarioError("stations: missing required key")
    try:
        return ScenarioConfig(**values)
    except ScenarioError as e:
        key = str(e).split(":", 1)[0]
        where = f"line {lines[key]}: " if key in lines else ""
        raise ScenarioError(f"{where}{e}") from None


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())
