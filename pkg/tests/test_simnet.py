"""Frozen examples and properties for the simulator: offsets, delivery, runs."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from viewsync.simnet import (
    Corruption,
    SimConfig,
    Simulation,
    check_dagger,
    check_dagger_quantified,
    default_resilience,
    delivery_time,
    generate_initial_offsets,
    run,
    subseed,
)
from viewsync.trace import to_jsonl

GAMMA = 6  # matches delta_cap=2, x=3


def sim_config(**kw):
    base = dict(n=4, delta_cap=2, gst=0, offsets="all_zero", network="worst_case_max_delay")
    base.update(kw)
    return SimConfig(**base)


# -- resilience and dispersion check ------------------------------------------


def test_default_resilience_values():
    assert [default_resilience(n) for n in (4, 7, 10, 31)] == [1, 2, 3, 10]


def test_check_dagger_frozen_examples():
    assert check_dagger([0, 0, 0, 0], 1, 1)
    assert check_dagger([0, 10, Fraction(21, 2), 11], 1, 1)
    assert not check_dagger([0, 0, 0, 11], 1, 1)
    # fewer than t+1 clocks cannot witness the condition
    assert not check_dagger([5], 1, 1)
    assert check_dagger([], 1, 1)


@given(
    clocks=st.lists(st.integers(min_value=0, max_value=40), min_size=1, max_size=8),
    gamma=st.integers(min_value=0, max_value=12),
    t=st.integers(min_value=0, max_value=3),
)
def test_check_dagger_matches_quantified_form(clocks, gamma, t):
    assert check_dagger(clocks, gamma, t) == check_dagger_quantified(clocks, gamma, t)


# -- initial offset generators -------------------------------------------------


def test_offsets_all_zero():
    assert generate_initial_offsets(4, 1, GAMMA, "all_zero", 0) == [0, 0, 0, 0]


def test_offsets_two_cluster_places_top_correct_ahead():
    offs = generate_initial_offsets(4, 1, GAMMA, "two_cluster", 0, gap=7)
    assert offs == [0, 0, 7, 7]
    # corrupted processors do not count towards the leading cluster
    offs = generate_initial_offsets(4, 1, GAMMA, "two_cluster", 0, gap=7, correct=[0, 1, 2])
    assert offs == [0, 7, 7, 0]


def test_offsets_two_cluster_avoids_boundary_lattice():
    # a gap that is a multiple of the boundary period gets nudged off it
    offs = generate_initial_offsets(4, 1, GAMMA, "two_cluster", 0, gap=3 * GAMMA)
    assert offs[-1] % (3 * GAMMA) != 0


def test_offsets_two_cluster_requires_gap():
    with pytest.raises(ValueError):
        generate_initial_offsets(4, 1, GAMMA, "two_cluster", 0)


def test_offsets_unknown_mode():
    with pytest.raises(ValueError):
        generate_initial_offsets(4, 1, GAMMA, "sideways", 0)


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=40)
def test_offsets_adversarial_spread_admissible(seed):
    n, t = 7, 2
    offs = generate_initial_offsets(n, t, GAMMA, "adversarial_spread", seed, correct=list(range(5)))
    assert len(offs) == n
    assert check_dagger([offs[p] for p in range(5)], GAMMA, t)
    # deterministic in the seed
    assert offs == generate_initial_offsets(
        n, t, GAMMA, "adversarial_spread", seed, correct=list(range(5))
    )


# -- delivery schedule ---------------------------------------------------------


def test_delivery_worst_case_before_stabilisation():
    assert delivery_time("worst_case_max_delay", 5, gst=100, delta_cap=2) == 102


def test_delivery_fixed_delta_after_stabilisation():
    got = delivery_time(
        "fixed_delta", 200, gst=100, delta_cap=1, delta_actual=Fraction(1, 10)
    )
    assert got == Fraction(2001, 10)


def test_delivery_outside_final_window_never_arrives():
    windows = ((100, 150),)
    assert delivery_time("fixed_delta", 160, gst=100, delta_cap=2, sync_windows=windows) is None
    assert delivery_time("fixed_delta", 120, gst=100, delta_cap=2, sync_windows=windows) == 122


def test_delivery_unknown_strategy():
    with pytest.raises(ValueError):
        delivery_time("pigeon", 0, gst=0, delta_cap=1)


@given(
    send=st.integers(min_value=0, max_value=300),
    gst=st.integers(min_value=0, max_value=200),
    seed=st.integers(min_value=0, max_value=999),
)
def test_delivery_uniform_random_respects_bounds(send, gst, seed):
    import random

    delta_cap, delta_actual = 10, 3
    got = delivery_time(
        "uniform_random",
        send,
        gst=gst,
        delta_cap=delta_cap,
        delta_actual=delta_actual,
        rng=random.Random(seed),
    )
    assert got > send
    if send >= gst:
        assert got <= send + delta_actual
    else:
        assert got <= gst + delta_cap


# -- deterministic runs --------------------------------------------------------


def test_run_twice_is_byte_identical():
    cfg = sim_config(n=7, network="uniform_random", offsets="adversarial_spread", gst=13, seed=5)
    a = to_jsonl(Simulation(cfg).run())
    b = to_jsonl(Simulation(cfg).run())
    assert a == b


def test_run_seed_changes_trace():
    base = dict(n=7, network="uniform_random", offsets="adversarial_spread", gst=13)
    a = to_jsonl(Simulation(sim_config(seed=1, **base)).run())
    b = to_jsonl(Simulation(sim_config(seed=2, **base)).run())
    assert a != b


def test_run_helper_overrides_horizon():
    cfg = sim_config(stop="horizon", horizon=30)
    records, metrics = run(cfg, horizon=12)
    assert records[0]["config"]["horizon"] == "12"
    assert records[-1]["kind"] == "end"
    assert metrics.violations == []


def test_silent_first_leader_pushes_first_qc_to_next_group():
    cfg = sim_config(corruptions=(Corruption(0, "silent"),))
    records = Simulation(cfg).run()
    qcs = [r for r in records if r["kind"] == "form_qc"]
    # views 0..2 belong to the silent leader; the first certificate is the
    # next group's boundary view, formed by processor 1
    assert qcs[0]["view"] == 3
    assert qcs[0]["proc"] == 1


def test_too_many_corruptions_rejected():
    with pytest.raises(ValueError):
        Simulation(sim_config(corruptions=tuple(Corruption(i, "silent") for i in range(2)))).run()


def test_horizon_must_clear_gst():
    with pytest.raises(ValueError):
        Simulation(sim_config(gst=50, stop="horizon", horizon=40))


def test_subseed_is_stable_and_label_sensitive():
    assert subseed(7, "net") == subseed(7, "net")
    assert subseed(7, "net") != subseed(7, "offsets")
    assert subseed(7, "net") != subseed(8, "net")
