import json
from fractions import Fraction

import pytest

from lidarp.errors import BadCapacity, BadPartition, InvalidThreePartition
from lidarp.exact import solve_fpt
from lidarp.feasibility import verify_solution
from lidarp.model import Kind, ThreePartitionInstance, instance_to_dict, load_instance, validate_instance
from lidarp.multicover import solve_xp_no_tw
from lidarp.reductions import (
    GAP,
    SHORTCUT,
    certify_no,
    gen_gap,
    gen_service_time,
    gen_shortcut,
    gen_time_windows,
    reduction_to_files,
    solve_3partition,
    witness_solution,
)

from instances import two_group_sets

ONES = ThreePartitionInstance((1,) * 6, 2, 3)
NO = ThreePartitionInstance((4, 4, 4, 4, 4, 6), 2, 13)
YES13 = ThreePartitionInstance((4, 4, 5, 4, 4, 5), 2, 13)
NINE = ThreePartitionInstance((3, 1, 1, 2, 2, 2, 1, 1, 2), 3, 5)  # outside the strict bounds


def role_counts(red):
    counts = {}
    for tag in red.role_tags.values():
        counts[tag.role] = counts.get(tag.role, 0) + 1
    return counts


def ride_delays(sol, inst, ids):
    out = {}
    for tour in sol.tours:
        pick = {}
        for w in tour.waypoints:
            if w.kind is Kind.PICKUP:
                pick[w.request] = w.time
            elif w.request in ids:
                r = inst.by_id[w.request]
                out[w.request] = w.time - pick[w.request] - inst.t_s - inst.dist(r.o, r.d)
    return out


# -- 3-Partition search ----------------------------------------------------------

def test_solve_3partition():
    groups = solve_3partition(ONES)
    assert sorted(len(g) for g in groups) == [3, 3]
    assert solve_3partition(NO) is None
    groups = solve_3partition(YES13)
    assert all(sum(YES13.S[i] for i in g) == 13 for g in groups)
    assert sorted(i for g in groups for i in g) == list(range(6))


def test_search_agrees_with_triple_check():
    yes, no = two_group_sets(16)
    for S, T in yes:
        assert solve_3partition(ThreePartitionInstance(S, 2, T)) is not None
    for S, T in no:
        assert solve_3partition(ThreePartitionInstance(S, 2, T)) is None


# -- service-time construction -------------------------------------------------------

def test_service_time_sizes():
    red = gen_service_time(ONES, 1, 2)
    inst = red.instance
    assert inst.h == 76
    assert inst.alpha == 1 + Fraction(20, 75)
    assert (inst.t_s, inst.t_turn, inst.has_time_windows) == (1, 0, False)
    assert inst.line.shortcut_free
    assert role_counts(red) == {"Value": 6, "LongPlug": 6, "ShortPlug": 6, "Promise": 2, "Filter": 2}
    assert red.expected_tau_yes == 3 and red.expected_tau_no_lower_bound == 5
    assert validate_instance(instance_to_dict(inst)) == inst


def test_service_time_promise_count_scales():
    assert role_counts(gen_service_time(ONES, 2, 2))["Promise"] == 6
    assert role_counts(gen_service_time(ONES, 1, 3))["Promise"] == 4
    assert gen_service_time(ONES, 1, 3).instance.h == 77


def test_service_time_request_layout():
    red = gen_service_time(NINE, 1, 2, strict=False)
    inst = red.instance
    values = {}
    for rid in red.ids_with("Value"):
        values[red.role_tags[rid].i] = values.get(red.role_tags[rid].i, 0) + 1
    assert values[1] == 3 and values[9] == 2
    for rid in red.ids_with("Filter"):
        assert (inst.by_id[rid].o, inst.by_id[rid].d) == (1, 2)
    for rid in red.ids_with("Promise"):
        assert (inst.by_id[rid].o, inst.by_id[rid].d) == (0, inst.h - 1)
    with pytest.raises(InvalidThreePartition):
        gen_service_time(NINE, 1, 2)


def test_alpha_below_two():
    for gen in (gen_service_time, gen_shortcut):
        for tp in (ONES, NO, YES13):
            assert 1 < gen(tp, 1, 2).instance.alpha < 2


@pytest.mark.parametrize("k, c", [(1, 2), (1, 3), (2, 2), (2, 3)])
def test_service_time_witness(k, c):
    red = gen_service_time(ONES, k, c)
    sol = witness_solution(red, solve_3partition(ONES))
    report = verify_solution(sol, red.instance)
    assert report.ok, report.violations
    assert report.served == red.instance.n
    assert sol.max_turns == 3
    if k == 1:
        (tour,) = sol.tours
        assert [s.artificial for s in tour.subroutes] == [False, True, False]
        b = 2 * (1 + ONES.T + ONES.n) + (c - 2)
        delays = ride_delays(sol, red.instance, set(red.ids_with("Promise")))
        assert set(delays.values()) == {b}


# -- shortcut construction -------------------------------------------------------------

def test_shortcut_sizes():
    red = gen_shortcut(ONES, 1, 2)
    inst = red.instance
    assert inst.h == 29
    assert inst.alpha == 1 + Fraction(6, 20)
    assert not inst.line.shortcut_free
    assert (inst.t_s, inst.t_turn) == (0, 0)
    assert role_counts(red) == {"Promise": 2, "Filter": 2, "Value": 6}


def test_shortcut_detour_is_twice_the_value():
    red = gen_shortcut(YES13, 1, 2)
    inst = red.instance
    for rid in red.ids_with("Value"):
        r = inst.by_id[rid]
        h1, h4 = r.o - 1, r.d + 1
        detour = inst.dist(h1, r.o) + inst.dist(r.o, r.d) + inst.dist(r.d, h4) - inst.dist(h1, h4)
        assert detour == 2 * YES13.S[red.role_tags[rid].i - 1]


@pytest.mark.parametrize("k, c", [(1, 2), (2, 3)])
def test_shortcut_witness(k, c):
    red = gen_shortcut(YES13, k, c)
    sol = witness_solution(red, solve_3partition(YES13))
    report = verify_solution(sol, red.instance)
    assert report.ok and report.served == red.instance.n
    assert sol.max_turns == 3
    if k == 1:
        delays = ride_delays(sol, red.instance, set(red.ids_with("Promise")))
        assert set(delays.values()) == {2 * YES13.T}


def test_shortcut_turns_by_search():
    assert solve_xp_no_tw(gen_shortcut(ONES, 1, 2).instance).tau == 3
    assert solve_xp_no_tw(gen_shortcut(NO, 1, 2).instance).tau == 5


# -- time-window construction ------------------------------------------------------------

def test_time_window_layout():
    red = gen_time_windows(ONES, 1, 1)
    inst = red.instance
    assert inst.h == 2 and inst.horizon == 16
    assert inst.alpha is None and (inst.t_s, inst.t_turn) == (0, 0)
    windows = sorted((inst.by_id[r].e, inst.by_id[r].l) for r in red.ids_with("Separator"))
    assert windows == [(6, 7), (14, 15)]
    for rid in red.ids_with("Separator"):
        r = inst.by_id[rid]
        assert r.l - r.e == inst.dist(r.o, r.d)  # no slack
    assert red.expected_tau_yes == 15 and red.expected_tau_no_lower_bound is None


def test_time_window_areas_and_copies():
    red = gen_time_windows(ONES, 2, 2)
    inst = red.instance
    assert inst.h == 4
    assert inst.dist(1, 2) == 2 * 2 * 3 + 2 * 2
    assert role_counts(red) == {"Value": 24, "Separator": 8}
    second = [inst.by_id[r] for r, tag in red.role_tags.items() if tag.area == 2]
    assert second and all(r.o == 2 for r in second)


@pytest.mark.parametrize("k, c", [(1, 1), (2, 1), (1, 2)])
def test_time_window_witness(k, c):
    red = gen_time_windows(ONES, k, c)
    sol = witness_solution(red, solve_3partition(ONES))
    report = verify_solution(sol, red.instance)
    assert report.ok, report.violations
    assert report.served == red.instance.n
    assert sol.max_turns == 15


def test_time_window_search_yes_and_no():
    res = solve_fpt(gen_time_windows(ONES, 1, 1).instance)
    assert (res.max_served, res.tau) == (8, 15)
    res = solve_fpt(gen_time_windows(NO, 1, 1).instance)
    assert res.max_served < NO.n + NO.m


# -- gap construction -----------------------------------------------------------------------

@pytest.mark.parametrize("base", ["service_time", SHORTCUT])
def test_gap_pair(base):
    yes = gen_gap(ONES, 2, base)
    assert yes.kind == GAP and yes.instance.k == 2
    assert (yes.expected_tau_yes, yes.expected_tau_no_lower_bound) == (1, 3)
    sol = witness_solution(yes, solve_3partition(ONES))
    report = verify_solution(sol, yes.instance)
    assert report.ok and report.served == yes.instance.n and sol.max_turns == 1
    assert certify_no(gen_gap(NO, 2, base)).confirmed
    assert not certify_no(yes).confirmed


def test_gap_turns_by_search():
    assert solve_xp_no_tw(gen_gap(ONES, 2, SHORTCUT).instance).tau == 1
    assert solve_xp_no_tw(gen_gap(NO, 2, SHORTCUT).instance).tau == 3


# -- no-certificates and errors -----------------------------------------------------------------

def test_certify_no():
    for gen in (gen_service_time, gen_shortcut):
        cert = certify_no(gen(NO, 1, 2))
        assert cert.confirmed and cert.assignment is None
        cert = certify_no(gen(YES13, 1, 2))
        assert not cert.confirmed and cert.assignment is not None
    assert certify_no(gen_shortcut(NO, 1, 2)).budget == 13
    assert certify_no(gen_service_time(NO, 1, 2)).weights == NO.S


def test_certify_no_rejects_windows():
    with pytest.raises(ValueError):
        certify_no(gen_time_windows(ONES))


def test_capacity_and_partition_errors():
    with pytest.raises(BadCapacity):
        gen_service_time(ONES, 1, 1)
    with pytest.raises(BadCapacity):
        gen_shortcut(ONES, 1, 1)
    with pytest.raises(BadCapacity):
        gen_gap(ONES, 1)
    red = gen_service_time(YES13)
    with pytest.raises(BadPartition):
        witness_solution(red, ((0, 1, 3), (2, 4, 5)))  # sums 12 and 14
    with pytest.raises(BadPartition):
        witness_solution(red, ((0, 1, 2), (2, 4, 5)))  # index 2 twice


def test_metadata_files(tmp_path):
    red = gen_service_time(ONES, 2, 3)
    out, meta = tmp_path / "inst.json", tmp_path / "meta.json"
    reduction_to_files(red, out, meta)
    assert load_instance(out) == red.instance
    doc = json.loads(meta.read_text())
    assert doc["kind"] == "service_time" and doc["k"] == 2 and doc["c"] == 3
    assert doc["expected_tau_yes"] == 3
    assert doc["tp"] == {"S": [1] * 6, "m": 2, "T": 3}
    assert set(doc["role_tags"]) == {str(r.id) for r in red.instance.requests}
    assert doc["role_tags"]["0"] == {"role": "Value", "i": 1, "j": 1}


@pytest.mark.parametrize("gen", [gen_service_time, gen_shortcut, gen_time_windows])
def test_every_request_has_one_tag(gen):
    red = gen(YES13, 2, 2)
    assert sorted(red.role_tags) == [r.id for r in red.instance.requests]
