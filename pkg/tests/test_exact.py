import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidarp.errors import BudgetExceeded, InfiniteHorizon
from lidarp.exact import (
    EnumBudget,
    best_collections,
    dedup_kernel,
    default_budget,
    enumerate_feasible_routes,
    solve_fpt,
)
from lidarp.feasibility import check_route, verify_solution
from lidarp.model import Instance, Kind, Line, Request, ThreePartitionInstance
from lidarp.oracle import brute_solve
from lidarp.reductions import gen_time_windows

from instances import rand_instance


def line(h, gap=1):
    return Line.from_gaps([gap] * (h - 1))


def test_kernel_caps_copies():
    reqs = tuple(Request(i, 0, 1, 0, 1) for i in range(100))
    inst = Instance(line(2), reqs, k=1, c=1)
    assert inst.horizon == 2
    res = dedup_kernel(inst)
    assert res.instance.n == 2
    assert res.dropped == tuple(range(2, 100))


def test_kernel_leaves_distinct_requests():
    inst = Instance(line(3), (Request(0, 0, 1, 0, 4), Request(1, 1, 2, 0, 4), Request(2, 2, 0, 0, 4)))
    res = dedup_kernel(inst)
    assert res.instance is inst and res.dropped == ()


def test_kernel_needs_finite_horizon():
    with pytest.raises(InfiniteHorizon):
        dedup_kernel(Instance(line(2), (Request(0, 0, 1),)))


def test_budget_from_horizon():
    inst = Instance(line(2), (Request(0, 0, 1, 0, 4),), k=2, c=3)
    b = EnumBudget.for_instance(inst)
    assert (b.max_waypoints, b.max_requests_per_route, b.max_per_collection) == (30, 15, 30)


def with_duplicates(rng):
    base = rand_instance(rng, n=(1, 2), h=(2, 3), windows=True, horizon=(2, 3), k=(1, 1), c=(1, 1))
    reqs = list(base.requests)
    for r in list(reqs):
        for _ in range(rng.randint(1, 3)):
            reqs.append(Request(len(reqs), r.o, r.d, r.e, r.l))
    return base.replace(requests=tuple(reqs[:5]))


@pytest.mark.parametrize("seed", range(20))
def test_kernel_preserves_optimum(seed):
    inst = with_duplicates(random.Random(seed))
    kern = dedup_kernel(inst).instance
    full, small = brute_solve(inst), brute_solve(kern)
    assert (full.max_served, full.tau) == (small.max_served, small.tau)


def test_kernel_actually_drops_in_the_random_suite():
    dropped = sum(bool(dedup_kernel(with_duplicates(random.Random(s))).dropped) for s in range(20))
    assert dropped >= 5


def test_single_request_single_route():
    inst = Instance(line(3), (Request(0, 0, 2, 0, 10),))
    cat = enumerate_feasible_routes(inst)
    assert len(cat.routes) == 1
    (fr,) = cat.routes
    assert fr.counts == (1,) and fr.turns == 1


def test_two_sequential_requests_share_a_subroute():
    inst = Instance(line(4), (Request(0, 0, 1, 0, 10), Request(1, 2, 3, 0, 10)), c=1)
    cat = enumerate_feasible_routes(inst)
    both = [fr for fr in cat.routes if fr.size == 2 and fr.turns == 1]
    assert both
    res = best_collections(cat, 1)
    assert (res.max_served, res.tau) == (2, 1)
    assert all(check_route(t.untimed(), inst) for t in res.solution.tours)


def test_far_apart_tight_windows_never_combine():
    inst = Instance(line(11), (Request(0, 0, 1, 0, 1), Request(1, 10, 9, 0, 1)), c=1)
    cat = enumerate_feasible_routes(inst)
    assert cat.routes and all(fr.size == 1 for fr in cat.routes)
    assert best_collections(cat, 1).max_served == 1
    res = best_collections(cat, 2)
    assert (res.max_served, res.tau) == (2, 1)


def test_no_windows_means_infinite_horizon():
    with pytest.raises(InfiniteHorizon):
        solve_fpt(Instance(line(2), (Request(0, 0, 1),)))


def test_forced_pickup_time():
    inst = Instance(line(4, 2), (Request(0, 0, 3, 5, 11),))
    res = solve_fpt(inst)
    assert res.max_served == 1
    (tour,) = res.solution.tours
    assert tour.waypoints[0].time == 5


def test_route_cap_reported():
    rng = random.Random(3)
    inst = rand_instance(rng, n=(6, 6), h=(4, 4), windows=True, horizon=(20, 20), c=(2, 2), alphas=[None])
    with pytest.raises(BudgetExceeded) as info:
        enumerate_feasible_routes(inst, max_routes=5)
    assert info.value.cap == 5


def test_budget_env(monkeypatch):
    monkeypatch.setenv("LIDARP_BUDGET", "17")
    assert default_budget() == 17
    monkeypatch.delenv("LIDARP_BUDGET")
    assert default_budget() == 200_000


def test_time_window_construction_yes_instance():
    red = gen_time_windows(ThreePartitionInstance((1,) * 6, 2, 3), k=1, c=1)
    res = solve_fpt(red.instance)
    assert (res.max_served, res.tau) == (8, 15)
    assert verify_solution(res.solution, red.instance).ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_fpt_matches_oracle(seed):
    inst = rand_instance(random.Random(seed), n=(1, 4), h=(2, 4), windows=True,
                         horizon=(3, 8), k=(1, 2), c=(1, 2))
    got, want = solve_fpt(inst), brute_solve(inst)
    assert (got.max_served, got.tau) == (want.max_served, want.tau)
    report = verify_solution(got.solution, inst)
    assert report.ok and report.served == got.max_served
    assert got.solution.max_turns == got.tau
    assert len(got.solution.tours) <= inst.k


def test_unit_capacity_two_vehicles_four_requests():
    for seed in range(10):
        inst = rand_instance(random.Random(seed), n=(4, 4), h=(2, 4), windows=True,
                             horizon=(4, 4), k=(2, 2), c=(1, 1))
        got, want = solve_fpt(inst), brute_solve(inst)
        assert (got.max_served, got.tau) == (want.max_served, want.tau)


def test_pickups_are_before_dropoffs_in_witness():
    inst = rand_instance(random.Random(11), n=(3, 3), windows=True, horizon=(8, 8))
    for tour in solve_fpt(inst).solution.tours:
        seen = set()
        for w in tour.waypoints:
            if w.kind is Kind.PICKUP:
                seen.add(w.request)
            else:
                assert w.request in seen
