import itertools

import pytest
from hypothesis import given, strategies as st

from bdmsim.bdm import (FREE_BW_PCT, ArfRate, BdmRate, BdmState, Decision, FixedRate, Outcome,
                        SlidingUtilization, UtilizationWindow, admit_call, bdm_init, bdm_update,
                        measure_free_bandwidth, tx_gate)
from oracles import bdm_reference


def test_initial_state():
    s = bdm_init()
    assert (s.rate_level, s.free_bw_level) == (0, 4)
    assert s.rate_bps == 1_000_000 and s.target_free_pct == 5


def test_single_steps():
    s = bdm_update(BdmState(1, 2), Outcome.SUCCESS)
    assert (s.rate_level, s.free_bw_level) == (2, 1)
    s = bdm_update(BdmState(2, 2), Outcome.FAILURE)
    assert (s.rate_level, s.free_bw_level) == (1, 3)
    s = bdm_update(BdmState(3, 0), True)
    assert (s.rate_level, s.free_bw_level) == (3, 0)
    s = bdm_update(BdmState(0, 4), False)
    assert (s.rate_level, s.free_bw_level) == (0, 4)


def test_exhaustive_transition_table():
    for r, f, ok in itertools.product(range(4), range(5), (True, False)):
        s = bdm_update(BdmState(r, f), ok)
        assert (s.rate_level, s.free_bw_level) == bdm_reference(r, f, ok)


def test_no_outcome_keeps_levels():
    s = bdm_update(BdmState(2, 1), Outcome.NONE)
    assert (s.rate_level, s.free_bw_level, s.last_outcome) == (2, 1, Outcome.NONE)


def test_invalid_levels_rejected():
    with pytest.raises(ValueError):
        BdmState(4, 0)
    with pytest.raises(ValueError):
        BdmState(0, 5)


@given(st.lists(st.booleans(), max_size=200))
def test_levels_stay_in_range(outcomes):
    s = bdm_init()
    for ok in outcomes:
        s = bdm_update(s, ok)
        assert 0 <= s.rate_level <= 3 and 0 <= s.free_bw_level <= 4
        assert s.target_free_pct in FREE_BW_PCT


def test_free_bandwidth_measure():
    assert measure_free_bandwidth(UtilizationWindow(100, 50)) == 50.0
    assert measure_free_bandwidth(UtilizationWindow(100, 87.5)) == 12.5
    assert UtilizationWindow(1000, 0).free_pct == 100.0
    assert UtilizationWindow(1000, 1000).free_pct == 0.0
    with pytest.raises(ValueError):
        measure_free_bandwidth(UtilizationWindow(0, 0))


@given(st.integers(1, 10**7), st.data())
def test_utilization_plus_free_is_100(length, data):
    busy = data.draw(st.integers(0, length))
    w = UtilizationWindow(length, busy)
    assert w.utilization_pct + w.free_pct == pytest.approx(100.0, abs=1e-9)


def test_sliding_window():
    win = SlidingUtilization(window_us=300, tick_us=100)
    assert win.free_pct == 100.0 and win.current() is None
    for b in (100, 50, 0):
        win.push(b)
    assert win.free_pct == 50.0
    win.push(0)  # the 100 us bucket drops out
    assert win.current().busy_us == 50
    with pytest.raises(ValueError):
        win.push(101)
    with pytest.raises(ValueError):
        SlidingUtilization(250, 100)


def test_gate_rule():
    assert tx_gate(BdmState(0, 4), 3.0, "setup") is Decision.DEFER
    assert tx_gate(BdmState(0, 4), 3.0, "data") is Decision.DEFER
    assert tx_gate(BdmState(0, 0), 2.0, "data") is Decision.SEND
    assert tx_gate(BdmState(0, 4), 0.5, "voice") is Decision.SEND


def test_admission_rule():
    assert admit_call(10.0, 5.0, 4.0)
    assert not admit_call(10.0, 5.0, 6.0)
    assert admit_call(10.0, 5.0, 5.0)
    with pytest.raises(ValueError):
        admit_call(10.0, 1.0, -1.0)


def test_controllers():
    fixed = FixedRate(2_000_000)
    fixed.on_attempt(False)
    fixed.on_outcome(False)
    assert fixed.rate_bps() == 2_000_000

    per_attempt = BdmRate()
    per_attempt.on_attempt(True)
    per_attempt.on_outcome(True)
    assert per_attempt.rate_bps() == 2_000_000 and per_attempt.target_free_pct == 4

    chain = ArfRate(granularity="chain")
    chain.on_attempt(True)
    assert chain.rate_bps() == 1_000_000
    chain.on_outcome(True)
    assert chain.rate_bps() == 2_000_000
    with pytest.raises(ValueError):
        ArfRate(granularity="frame")
