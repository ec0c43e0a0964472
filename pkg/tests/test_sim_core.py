import math
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from bdmsim.sim_core import CausalityError, EventKind, RngStream, Simulator, derive_seed, next_uniform


def _recording_sim():
    sim = Simulator()
    seen = []
    for kind in EventKind:
        sim.handlers[kind] = lambda ev, seen=seen: seen.append((ev.fire_at, ev.target))
    return sim, seen


def test_events_fire_in_time_then_insertion_order():
    sim, seen = _recording_sim()
    sim.schedule(30, EventKind.TX_END, 1)
    sim.schedule(10, EventKind.TX_END, 2)
    sim.schedule(10, EventKind.TX_END, 3)
    sim.schedule(20, EventKind.TX_END, 4)
    assert sim.run_until(100) == 4
    assert seen == [(10, 2), (10, 3), (20, 4), (30, 1)]
    assert sim.now == 100


def test_schedule_in_the_past_is_rejected():
    sim, _ = _recording_sim()
    sim.schedule(50, EventKind.TX_END)
    sim.run_until(50)
    with pytest.raises(CausalityError):
        sim.schedule(49, EventKind.TX_END)
    with pytest.raises(CausalityError):
        sim.run_until(10)


def test_same_time_scheduling_is_allowed():
    sim, seen = _recording_sim()
    sim.handlers[EventKind.TX_END] = lambda ev: sim.schedule(sim.now, EventKind.ACK_TIMEOUT, 9)
    sim.schedule(5, EventKind.TX_END)
    sim.run_until(5)
    assert seen == [(5, 9)]


def test_cancelled_events_are_skipped():
    sim, seen = _recording_sim()
    ev = sim.schedule(5, EventKind.TX_END, 1)
    sim.schedule(6, EventKind.TX_END, 2)
    Simulator.cancel(ev)
    Simulator.cancel(None)
    assert sim.pending() == 1
    sim.run_until(10)
    assert seen == [(6, 2)]


def test_run_until_leaves_later_events_queued():
    sim, seen = _recording_sim()
    sim.schedule(10, EventKind.TX_END)
    sim.schedule(11, EventKind.TX_END)
    sim.run_until(10)
    assert len(seen) == 1 and sim.pending() == 1


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=60))
def test_pop_order_is_sorted_by_time_and_sequence(times):
    sim, seen = _recording_sim()
    for i, t in enumerate(times):
        sim.schedule(t, EventKind.TX_END, i)
    sim.run_until(1000)
    expected = sorted(((t, i) for i, t in enumerate(times)))
    assert seen == expected


def test_streams_are_reproducible_and_independent():
    s1, s2 = RngStream(7, 3), RngStream(7, 3)
    assert [s1.next_uniform(1000) for _ in range(50)] == [s2.next_uniform(1000) for _ in range(50)]
    other = RngStream(7, 4)
    fresh = RngStream(7, 3)
    assert [fresh.next_uniform(10**6) for _ in range(5)] != [other.next_uniform(10**6) for _ in range(5)]
    assert derive_seed(1, 0) != derive_seed(0, 1)


def test_next_uniform_degenerate_and_invalid():
    s = RngStream(1, 1)
    assert all(next_uniform(s, 1) == 0 for _ in range(20))
    with pytest.raises(ValueError):
        s.next_uniform(0)


def test_next_uniform_chi_square_uniform():
    # 10^6 draws over 32 cells; 31 degrees of freedom, 99.9 % quantile is 61.1
    s = RngStream(2024, 5)
    n = 1_000_000
    counts = Counter(s.next_uniform(32) for _ in range(n))
    expected = n / 32
    chi2 = sum((counts[k] - expected) ** 2 / expected for k in range(32))
    assert set(counts) == set(range(32))
    assert chi2 < 61.1


def test_exponential_mean():
    s = RngStream(3, 9)
    n = 50_000
    mean = sum(s.exponential(2.0) for _ in range(n)) / n
    assert math.isclose(mean, 2.0, rel_tol=0.03)
