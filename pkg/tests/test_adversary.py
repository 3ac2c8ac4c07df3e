"""Misbehaviour policy mapping and the gaming-robustness harness."""

import pytest
from hypothesis import given, strategies as st

from ackpolice.adversary import (BehaviourPolicy, StrategyTrace,
                                 admissible_prefix_sums,
                                 brute_force_best_prefix, mean_goodput,
                                 min_delta, penalty_sequence,
                                 scripted_station_rate)
from ackpolice.dcf import DEFAULT_MAC_PARAMS, DomainError


# ---------------------------------------------------------------------------
# policy catalogue

def test_compliant_maps_to_defaults():
    p = BehaviourPolicy(kind="compliant").mac_params()
    assert (p.cw_min, p.cw_max, p.aifs_slots, p.txop_limit_us) == (32, 1024, 2, 0)


def test_cwmin_halved_keeps_cwmax():
    p = BehaviourPolicy(kind="cwmin_halved").mac_params()
    assert p.cw_min == 16
    assert p.cw_max == 1024          # backoff still exponential, one stage more
    assert p.max_backoff_stage == 6


def test_fixed_cw_disables_backoff():
    p = BehaviourPolicy(kind="fixed_cw", cw=16).mac_params()
    assert p.cw_min == p.cw_max == 16
    assert p.max_backoff_stage == 0


def test_aifs_sifs_zeroes_defer():
    assert BehaviourPolicy(kind="aifs_sifs").mac_params().aifs_slots == 0


def test_large_txop_default():
    p = BehaviourPolicy(kind="large_txop").mac_params()
    assert p.txop_limit_us == pytest.approx(6413.0)


def test_unknown_policy_rejected():
    with pytest.raises(DomainError):
        BehaviourPolicy(kind="stealth").mac_params()


# ---------------------------------------------------------------------------
# penalty recursion and goodput

def T(y, alpha=0.1, **kw):
    return StrategyTrace(y=tuple(y), alpha=alpha, **kw)


def test_penalty_sequence_zero():
    assert penalty_sequence(T([0, 0, 0])) == [0, 0, 0, 0]


def test_penalty_sequence_ramp():
    assert penalty_sequence(T([1, 1, 1])) == pytest.approx([0, 0.1, 0.2, 0.3])


def test_penalty_sequence_clamp():
    assert penalty_sequence(T([1, -1, 1])) == pytest.approx([0, 0.1, 0, 0.1])


def test_penalty_sequence_no_upper_clamp():
    p = penalty_sequence(T([1] * 15))
    assert p[-1] == pytest.approx(1.5)


def test_mean_goodput_fair_baseline():
    assert mean_goodput(T([0] * 7)) == pytest.approx(1.0)


def test_mean_goodput_single_spike_loses():
    s = mean_goodput(T([1] + [0] * 9))
    assert s == pytest.approx(0.99)
    assert s < 1.0


def test_mean_goodput_sustained_aggression_negative_weights():
    """Holding y at its bound accumulates penalty beyond 1; goodput weights
    go negative (taken literally) and the mean drops below fair."""
    trace = T([1.0] * 3, alpha=0.9)
    p = penalty_sequence(trace)
    assert p[-1] > 1.0
    assert mean_goodput(trace) < 1.0
    longer = T([1.0] * 20, alpha=0.3)
    assert mean_goodput(longer) < 0.0        # deep negative-weight regime


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30),
       st.floats(0.05, 0.45))
def test_penalty_scale_consistency(y, alpha):
    """Doubling alpha doubles every p(t) when the zero clamp never bites."""
    base = penalty_sequence(T(y, alpha=alpha))
    doubled = penalty_sequence(T(y, alpha=2 * alpha))
    if all(p > 0 for p in base[1:]):
        for a, b in zip(base[1:], doubled[1:]):
            assert b == pytest.approx(2 * a, rel=1e-9)
    assert all(p >= 0 for p in doubled)


def test_strategy_trace_validates_delta():
    with pytest.raises(DomainError):
        StrategyTrace(y=(0.5,), alpha=0.25, upper_bound=0.5, delta=4)
    ok = StrategyTrace(y=(0.5,), alpha=0.25, upper_bound=0.5)
    assert ok.delta == 5                      # smallest integer > 4.5
    assert min_delta(0.1, 0.5) == 11


# ---------------------------------------------------------------------------
# brute-force search

def test_brute_force_example_t8():
    res = brute_force_best_prefix(horizon=8, delta=5, alpha=0.25,
                                  upper_bound=0.5, grid=(-0.5, 0.0, 0.5))
    assert not res.vacuous
    assert res.prefix_length == 3
    assert res.zero_prefix_holds
    for y in res.best_sequences:
        assert y[:3] == (0.0, 0.0, 0.0)
    assert res.tail_gain > 0                  # end-game aggression still pays


def test_brute_force_vacuous_when_horizon_short():
    res = brute_force_best_prefix(horizon=5, delta=5, alpha=0.25,
                                  upper_bound=0.5, grid=(-0.5, 0.0, 0.5))
    assert res.vacuous
    assert res.zero_prefix_holds              # nothing to constrain


def test_brute_force_trivial_grid():
    res = brute_force_best_prefix(horizon=6, delta=5, alpha=0.25,
                                  upper_bound=0.5, grid=(0.0,))
    assert res.best_goodput == pytest.approx(1.0)
    assert len(res.best_sequences) == 1


def test_brute_force_guards():
    with pytest.raises(DomainError):
        brute_force_best_prefix(8, 5, 0.25, 0.5, grid=(0.5,))   # missing 0
    with pytest.raises(DomainError):
        brute_force_best_prefix(8, 4, 0.25, 0.5, grid=(0.0, 0.5))  # bad delta
    with pytest.raises(DomainError):
        brute_force_best_prefix(30, 12, 0.25, 0.5, grid=(-0.5, 0.0, 0.5))


def test_admissibility_zero_sum_implies_no_gain():
    """Admissible sequences whose full sum is <= 0 average at or below the
    fair attempt rate (checked over the whole T=6 grid)."""
    from itertools import product
    grid = (-0.5, 0.0, 0.5)
    for y in product(grid, repeat=6):
        if admissible_prefix_sums(y) and sum(y) <= 0:
            mean_rate = sum(1 + v for v in y) / 6
            assert mean_rate <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# scripted rate targeting

def test_scripted_identity_at_zero_failure():
    p = scripted_station_rate(0.0, 2 / 33, DEFAULT_MAC_PARAMS)
    assert p.cw_min == 32
    assert p.max_backoff_stage == 0


def test_scripted_double_rate_rounds_half_even():
    # target 4/33 -> W = 15.5 exactly; round-half-to-even gives 16
    p = scripted_station_rate(1.0, 2 / 33, DEFAULT_MAC_PARAMS)
    assert p.cw_min == 16


def test_scripted_with_nonzero_failure_hits_target():
    from ackpolice.dcf import _g
    target_fair = 0.05
    p = scripted_station_rate(0.5, target_fair, DEFAULT_MAC_PARAMS,
                              estimated_failure=0.15)
    achieved = _g(0.15, p.cw_min, 0, p.retry_limit)
    assert achieved == pytest.approx(1.5 * target_fair, rel=0.05)


def test_scripted_saturation_errors():
    with pytest.raises(DomainError):
        scripted_station_rate(20.0, 0.5, DEFAULT_MAC_PARAMS)   # target >= 1
    with pytest.raises(DomainError):
        scripted_station_rate(0.5, 0.9, DEFAULT_MAC_PARAMS)
