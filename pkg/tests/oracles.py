"""Reference values computed independently of the package under test."""

from fractions import Fraction
from math import factorial


def first_cycle_collision_probability(cw: int = 32) -> Fraction:
    # two fresh stations draw uniformly from [0, cw-1]; the first access
    # collides exactly when the two draws coincide
    hits = sum(1 for a in range(cw) for b in range(cw) if a == b)
    return Fraction(hits, cw * cw)


def erlang_b_summation(servers: int, erlangs: float) -> float:
    a = Fraction(erlangs)
    terms = [a ** k / factorial(k) for k in range(servers + 1)]
    return float(terms[-1] / sum(terms))


def saturated_throughput_bps(payload_bytes: int, rate_bps: int) -> float:
    difs, sifs, slot, phy, mac_hdr, ack = 50, 10, 20, 192, 34, 248
    bits = 8 * (mac_hdr + payload_bytes)
    t_data = phy + -(-bits * 10**6 // rate_bps)
    cycle = difs + 15.5 * slot + t_data + sifs + ack
    return 8 * payload_bytes * 1e6 / cycle


def bdm_reference(rate: int, free: int, success: bool) -> tuple[int, int]:
    # literal reading of the pseudo-code: on success raise the rate and lower
    # the free-bandwidth reserve, on failure the reverse, saturating at the ends
    if success:
        rate = rate + 1 if rate < 3 else 3
        free = free - 1 if free > 0 else 0
    else:
        rate = rate - 1 if rate > 0 else 0
        free = free + 1 if free < 4 else 4
    return rate, free
