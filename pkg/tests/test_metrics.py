"""Planted-fault detection and oracle cross-checks for the trace analyzer."""

import copy
import math
from fractions import Fraction

import pytest

from viewsync.core import PermutationSchedule, ProtocolParams, RoundRobinSchedule
from viewsync.metrics import (
    TraceAnalysisError,
    analyze,
    assert_invariants,
    compute_f_star,
    compute_t_star,
    count_words,
)
from viewsync.simnet import Corruption, SimConfig, Simulation, subseed
from viewsync.timeutil import to_frac


def run_records(**kw):
    base = dict(n=7, delta_cap=2, gst=0, offsets="all_zero", network="worst_case_max_delay")
    base.update(kw)
    return Simulation(SimConfig(**base)).run()


def params_from(records) -> ProtocolParams:
    cfg = records[0]["config"]
    if cfg["leaders"] == "round_robin":
        schedule = RoundRobinSchedule(cfg["n"])
    else:
        schedule = PermutationSchedule(cfg["n"], subseed(cfg["seed"], "leaders"))
    return ProtocolParams(cfg["n"], cfg["t"], cfg["k"], to_frac(cfg["gamma"]), schedule)


def mutated(records, index, **changes):
    out = copy.deepcopy(list(records))
    out[index].update(changes)
    return out


def duplicated(records, index):
    out = copy.deepcopy(list(records))
    out.insert(index + 1, copy.deepcopy(out[index]))
    for i, r in enumerate(out):
        r["seq"] = i
    return out


def find(records, pred):
    for i, r in enumerate(records):
        if pred(r):
            return i
    raise AssertionError("no matching record")


def rfind(records, pred):
    for i in range(len(records) - 1, -1, -1):
        if pred(records[i]):
            return i
    raise AssertionError("no matching record")


def ids(records):
    return {v.invariant for v in analyze(records).violations}


@pytest.fixture(scope="module")
def base():
    return run_records(stop="horizon", horizon=60)


# -- conforming runs -----------------------------------------------------------


def test_conforming_run_is_clean(base):
    assert assert_invariants(base) == []


def test_conforming_run_with_faults_is_clean():
    records = run_records(
        corruptions=(Corruption(0, "silent"), Corruption(4, "vote_stuffer")),
        network="uniform_random",
        gst=13,
        seed=3,
    )
    assert assert_invariants(records) == []


# -- planted faults ------------------------------------------------------------


def test_backward_clock_detected(base):
    i = rfind(base, lambda r: r["kind"] == "deliver")
    bad = mutated(base, i, proc_clock="-5")
    found = analyze(bad).violations
    assert any(v.invariant == "clock_monotonicity" and v.seq == i for v in found)


def test_backward_view_detected(base):
    i = rfind(
        base, lambda r: r["kind"] == "deliver" and r["proc_view"] > 0
    )
    bad = mutated(base, i, proc_view=0)
    found = analyze(bad).violations
    assert any(v.invariant == "view_monotonicity" and v.seq == i for v in found)


def test_dispersed_initial_clocks_detected(base):
    bad = copy.deepcopy(list(base))
    bad[0]["config"]["offsets"][-1] = "100"
    assert "dagger" in ids(bad)


def test_premature_view_message_detected(base):
    i = find(
        base,
        lambda r: r["kind"] == "send" and r["payload"]["type"] == "view_message",
    )
    bad = copy.deepcopy(list(base))
    bad[i]["payload"]["view"] += 30
    found = analyze(bad).violations
    assert any(v.invariant == "signing_clock" and v.seq == i for v in found)


def test_vote_outside_current_view_detected(base):
    i = find(base, lambda r: r["kind"] == "send" and r["payload"]["type"] == "vote")
    bad = copy.deepcopy(list(base))
    bad[i]["payload"]["view"] += 17
    found = analyze(bad).violations
    assert any(v.invariant == "vote_view" and v.seq == i for v in found)


def test_duplicate_view_message_detected(base):
    i = find(
        base,
        lambda r: r["kind"] == "send" and r["payload"]["type"] == "view_message",
    )
    assert "duplicate_view_message" in ids(duplicated(base, i))


def test_duplicate_vote_detected(base):
    i = find(base, lambda r: r["kind"] == "send" and r["payload"]["type"] == "vote")
    assert "duplicate_vote" in ids(duplicated(base, i))


def test_late_delivery_detected(base):
    i = rfind(
        base,
        lambda r: r["kind"] == "deliver"
        and r["sender"] != r["recipient"]
        and to_frac(r["time"]) > 3,
    )
    bad = mutated(base, i, send_time="0")
    found = analyze(bad).violations
    assert any(v.invariant == "delivery_bound" and v.seq == i for v in found)


def test_delayed_self_delivery_detected(base):
    i = find(base, lambda r: r["kind"] == "deliver" and r["sender"] == r["recipient"])
    bad = mutated(base, i, send_time=str(to_frac(base[i]["time"]) - 1))
    found = analyze(bad).violations
    assert any(v.invariant == "delivery_bound" and v.seq == i for v in found)


def test_off_boundary_threshold_detected(base):
    i = find(base, lambda r: r["kind"] == "threshold")
    bad = mutated(base, i, boundary_clock="7")
    assert "threshold_alignment" in ids(bad)


def test_malformed_certificate_detected(base):
    i = find(base, lambda r: r["kind"] == "form_qc")
    signers = list(base[i]["signers"])
    bad = mutated(base, i, signers=[signers[0]] + signers[:-1])
    found = analyze(bad).violations
    assert any(v.invariant == "certificate_signatures" and v.seq == i for v in found)


def test_unsigned_certificate_detected(base):
    i = find(base, lambda r: r["kind"] == "form_vc")
    bad = mutated(base, i, view=base[i]["view"] + 99)
    found = analyze(bad).violations
    assert any(v.invariant == "certificate_signatures" and v.seq == i for v in found)


def test_certificate_without_correct_signer_detected(base):
    i = find(base, lambda r: r["kind"] == "form_vc")
    signers = base[i]["signers"]
    bad = copy.deepcopy(list(base))
    bad[0]["config"]["corruptions"] = [
        {"proc": s, "strategy": "silent", "time": "0"} for s in signers
    ]
    found = analyze(bad).violations
    assert any(v.invariant == "vc_honesty" and v.seq == i for v in found)


def test_quorum_without_enough_correct_signers_detected(base):
    i = find(base, lambda r: r["kind"] == "form_qc")
    bad = copy.deepcopy(list(base))
    bad[i]["signers"] = [0, 1, 2, 3, 4]
    bad[0]["config"]["corruptions"] = [
        {"proc": p, "strategy": "silent", "time": "0"} for p in (0, 1, 2)
    ]
    found = analyze(bad).violations
    assert any(v.invariant == "qc_honesty" and v.seq == i for v in found)


# -- structural rejection ------------------------------------------------------


def test_headerless_trace_rejected(base):
    with pytest.raises(TraceAnalysisError):
        analyze(base[1:])


def test_unknown_record_kind_rejected(base):
    bad = mutated(base, 3, kind="telemetry")
    with pytest.raises(TraceAnalysisError):
        analyze(bad)


def test_config_mismatch_rejected(base):
    other = SimConfig(n=4, delta_cap=2)
    with pytest.raises(TraceAnalysisError):
        assert_invariants(base, config=other)


# -- headline metrics and standalone oracles -----------------------------------


def test_first_sync_is_strictly_after_stabilisation(base):
    params = params_from(base)
    forms = [
        (to_frac(r["time"]), r["view"])
        for r in base
        if r["kind"] == "form_qc"
    ]
    t0 = forms[0][0]
    later = compute_t_star(base, t0, params)
    assert later > t0
    assert later == min(when for when, _ in forms if when > t0)


def test_analyzer_matches_standalone_oracles():
    cases = [
        dict(),
        dict(corruptions=(Corruption(0, "silent"),), gst=11),
        dict(network="uniform_random", seed=9, gst=7),
        dict(leaders="random_permutations", seed=4, offsets="adversarial_spread"),
    ]
    for kw in cases:
        records = run_records(**kw)
        cfg = records[0]["config"]
        params = params_from(records)
        m = analyze(records)
        t_star = compute_t_star(records, cfg["gst"], params)
        if m.t_star is None:
            assert t_star == math.inf
        else:
            assert t_star == m.t_star
        assert m.words_counted == count_words(
            records, cfg["gst"], cfg["delta_cap"], m.t_star
        )
        assert m.f_star == compute_f_star(records, params)
        assert m.violations == []


def test_f_star_param_mismatch_rejected(base):
    params = ProtocolParams(4, 1, 3, 6, RoundRobinSchedule(4))
    with pytest.raises(TraceAnalysisError):
        compute_f_star(base, params)


def test_f_star_counts_corrupted_leader_groups():
    records = run_records(corruptions=(Corruption(0, "silent"),), gst=0)
    assert compute_f_star(records, params_from(records)) == 1
    clean = run_records()
    assert compute_f_star(clean, params_from(clean)) == 0
