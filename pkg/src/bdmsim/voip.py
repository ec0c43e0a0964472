"""Codec profiles, header overhead, per-call bandwidth, capacity and Erlang-B."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .sim_core import RngStream


@dataclass(frozen=True)
class CodecProfile:
    name: str
    media_bps: int

    @property
    def bytes_per_second(self) -> int:
        return self.media_bps // 8


G711 = CodecProfile("g711", 64_000)
G729 = CodecProfile("g729", 8_000)
CODECS = {c.name: c for c in (G711, G729)}


class HeaderMode(str, enum.Enum):
    FULL = "full"
    COMPRESSED = "compressed"


@dataclass(frozen=True)
class HeaderStack:
    ip_bytes: int = 20
    udp_bytes: int = 8
    rtp_bytes: int = 12
    compressed_bytes: int = 2
    mode: HeaderMode = HeaderMode.FULL

    @property
    def total_bytes(self) -> int:
        if self.mode is HeaderMode.COMPRESSED:
            return self.compressed_bytes
        return self.ip_bytes + self.udp_bytes + self.rtp_bytes

    @property
    def total_bits(self) -> int:
        return 8 * self.total_bytes


def codec_by_name(name: str) -> CodecProfile:
    try:
        return CODECS[name.lower().replace(".", "")]
    except KeyError:
        raise ValueError(f"unknown codec {name!r}; expected one of {sorted(CODECS)}") from None


def packet_payload_bytes(codec: CodecProfile, ptime_ms: float) -> int:
    """Voice bytes carried by one packet of ``ptime_ms`` milliseconds."""
    exact = codec.bytes_per_second * ptime_ms / 1000
    if exact < 0 or not float(exact).is_integer():
        raise ValueError(
            f"{ptime_ms} ms of {codec.name} is {exact} bytes; packetization must give whole bytes")
    return int(exact)


def header_overhead_bps(ptime_ms: float, header_mode: HeaderMode | str = HeaderMode.FULL) -> float:
    if ptime_ms <= 0:
        raise ValueError("ptime must be positive")
    bits = HeaderStack(mode=HeaderMode(header_mode)).total_bits
    return bits * 1000 / ptime_ms


@dataclass(frozen=True)
class TalkspurtModel:
    """Exponential on/off speech activity; ``None`` fields mean always-on."""

    mean_on_ms: float | None = None
    mean_off_ms: float | None = None

    @property
    def always_on(self) -> bool:
        return self.mean_on_ms is None or self.mean_off_ms is None or self.mean_off_ms == 0

    @property
    def on_fraction(self) -> float:
        if self.always_on:
            return 1.0
        return self.mean_on_ms / (self.mean_on_ms + self.mean_off_ms)


@dataclass
class VoipFlow:
    codec: CodecProfile = G729
    ptime_ms: int = 20
    header: HeaderStack = HeaderStack()
    direction: str = "up"
    talkspurt: TalkspurtModel = TalkspurtModel()
    # on/off generator state, in microseconds
    _on_until: int | None = None

    @property
    def packets_per_second(self) -> float:
        return 1000 / self.ptime_ms

    @property
    def ptime_us(self) -> int:
        return int(self.ptime_ms * 1000)

    @property
    def payload_bytes(self) -> int:
        """Voice sample plus RTP/UDP/IP headers, i.e. the MAC payload."""
        return packet_payload_bytes(self.codec, self.ptime_ms) + self.header.total_bytes


def per_call_bandwidth(flow: VoipFlow) -> float:
    """One-direction bandwidth of a call in bits/s (codec plus IP/UDP/RTP)."""
    return flow.codec.media_bps + header_overhead_bps(flow.ptime_ms, flow.header.mode)


def next_voice_packet(flow: VoipFlow, now: int, rng: RngStream | None) -> int:
    """Arrival time (us) of the packet following one emitted at ``now``.

    With an on/off source the gap may span a silence period.
    """
    step = flow.ptime_us
    if flow.talkspurt.always_on:
        return now + step
    if flow._on_until is None:
        flow._on_until = now + _draw_ms(rng, flow.talkspurt.mean_on_ms)
    nxt = now + step
    while nxt >= flow._on_until:
        silence_end = flow._on_until + _draw_ms(rng, flow.talkspurt.mean_off_ms)
        flow._on_until = silence_end + _draw_ms(rng, flow.talkspurt.mean_on_ms)
        nxt = max(nxt, silence_end)
    return nxt


def _draw_ms(rng: RngStream, mean_ms: float) -> int:
    return max(1, round(rng.exponential(mean_ms * 1000)))


@dataclass(frozen=True)
class CapacityInputs:
    correc_fac: float
    rb: float
    rbt: float
    codec_bw: float

    def __post_init__(self) -> None:
        if not 0 < self.correc_fac <= 1:
            raise ValueError("correction factor must be in (0, 1]")
        if not self.rb >= self.rbt >= 0:
            raise ValueError("need rb >= rbt >= 0")
        if self.codec_bw <= 0:
            raise ValueError("codec bandwidth must be positive")


def call_ratio(inputs: CapacityInputs) -> float:
    return inputs.correc_fac * (inputs.rb - inputs.rbt) / inputs.codec_bw


def number_of_calls(inputs: CapacityInputs) -> int:
    # decimal-exact so that 0.7 * 4.8e6 / 2.4e4 floors to 140, not 139
    f = Fraction(repr(inputs.correc_fac)) * (Fraction(repr(inputs.rb)) - Fraction(repr(inputs.rbt)))
    return math.floor(f / Fraction(repr(inputs.codec_bw)))


def erlang_b(servers: int, offered_erlangs: float) -> float:
    """Blocking probability for ``servers`` trunks offered ``offered_erlangs``."""
    if servers < 0 or offered_erlangs < 0:
        raise ValueError("servers and offered load must be non-negative")
    if int(servers) != servers:
        raise ValueError("servers must be a whole number")
    b = 1.0
    a = float(offered_erlangs)
    for n in range(1, int(servers) + 1):
        b = a * b / (n + a * b)
    return b
