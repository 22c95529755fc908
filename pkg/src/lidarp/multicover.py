"""Exact turn minimisation without time windows via multiset multicover.

Without windows a request class is just its (origin, destination) pair, and
the subroutes of one direction are independent of each other. Each distinct
feasible subroute is reduced to the number of copies of every class it
serves. The fewest subroutes covering all copies of one direction is a
multiset multicover problem; the two per-direction minima then give the
answer through ``tau_formula``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import BudgetExceeded
from .exact import default_budget, fifo_slot
from .feasibility import Event, check_route, schedule
from .model import Direction, Instance, Kind, Route, Solution, Subroute, Waypoint
from .polycase import _require_no_windows, build_min_turn_collection, tau_formula


@dataclass(frozen=True)
class DemandVector:
    direction: Direction
    classes: tuple[tuple[int, int], ...]  # (origin, destination)
    counts: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]  # request indices per class, input order


@dataclass(frozen=True)
class CoverMultiset:
    counts: tuple[int, ...]
    witness: tuple[Event, ...]  # one feasible subroute, sub index 0

    @property
    def size(self) -> int:
        return sum(self.counts)


def demand_vector(instance: Instance, direction: Direction) -> DemandVector:
    groups: dict[tuple[int, int], list[int]] = {}
    for i, r in enumerate(instance.requests):
        if r.direction is direction:
            groups.setdefault((r.o, r.d), []).append(i)
    classes = tuple(groups)
    return DemandVector(
        direction, classes, tuple(len(groups[c]) for c in classes),
        tuple(tuple(groups[c]) for c in classes),
    )


def enumerate_distinct_subroutes(
    instance: Instance, direction: Direction, max_covers: int | None = None
) -> list[CoverMultiset]:
    """All feasible single subroutes of ``direction``, one per count vector.

    Stops are visited in driving order, drop-offs before pick-ups at a shared
    stop, and every class order among pick-ups at one stop is tried.
    """
    _require_no_windows(instance)
    if max_covers is None:
        max_covers = default_budget()
    demand = demand_vector(instance, direction)
    reqs = instance.requests
    members = demand.members
    n_cls = len(members)
    cls_of = {i: ci for ci, mem in enumerate(members) for i in mem}
    c = instance.c
    sign = 1 if direction is Direction.ASC else -1
    used = [0] * n_cls
    events: list[Event] = []
    on_board: list[int] = []
    found: dict[tuple[int, ...], tuple[Event, ...]] = {}

    def candidates() -> list[Event]:
        out = []
        last = events[-1] if events else None
        nearest = None
        if on_board:
            nearest = min((reqs[i].d for i in on_board), key=lambda s: sign * s)
            seen = set()
            for ri in on_board:
                ci = cls_of[ri]
                if reqs[ri].d != nearest or ci in seen:
                    continue
                seen.add(ci)
                if not (last.kind is Kind.PICKUP and last.stop == nearest):
                    out.append(Event(nearest, Kind.DROPOFF, ri, 0))
        if len(on_board) < c:
            for ci in range(n_cls):
                if used[ci] >= len(members[ci]):
                    continue
                ri = members[ci][used[ci]]
                o = reqs[ri].o
                if last is not None and sign * o < sign * last.stop:
                    continue
                if nearest is not None and sign * o >= sign * nearest:
                    continue
                out.append(Event(o, Kind.PICKUP, ri, 0))
        return out

    def dfs():
        for ev in candidates():
            events.append(ev)
            ci = cls_of[ev.req]
            if ev.kind is Kind.PICKUP:
                used[ci] += 1
                on_board.append(ev.req)
            else:
                on_board.remove(ev.req)
            if schedule(events, instance, lookahead=True) is not None:
                if not on_board:
                    # copies of a class are interchangeable, so served == picked
                    key = tuple(used)
                    if key not in found:
                        if len(found) >= max_covers:
                            raise BudgetExceeded(
                                f"more than {max_covers} distinct subroutes", cap=max_covers
                            )
                        found[key] = tuple(events)
                dfs()
            events.pop()
            if ev.kind is Kind.PICKUP:
                used[ci] -= 1
                on_board.remove(ev.req)
            else:
                on_board.insert(fifo_slot(ev, on_board, events, reqs), ev.req)

    dfs()
    return [CoverMultiset(k, w) for k, w in found.items()]


def _drop_dominated(covers: Sequence[tuple[int, ...]]) -> list[int]:
    """Indices of covers not componentwise dominated by another cover."""
    keep = []
    distinct = sorted(set(covers), key=lambda v: -sum(v))
    maximal: list[tuple[int, ...]] = []
    for v in distinct:
        if not any(all(x <= y for x, y in zip(v, w)) for w in maximal):
            maximal.append(v)
    first = {}
    for i, v in enumerate(covers):
        first.setdefault(v, i)
    for v in maximal:
        keep.append(first[v])
    return sorted(keep)


def multiset_multicover(
    demand: Sequence[int], covers: Sequence[Sequence[int]]
) -> tuple[int, list[int]]:
    """Fewest covers (repetition allowed) whose sum meets ``demand``.

    Returns the count and the chosen cover indices. Memoised search over the
    residual demand: the first class still needed must be hit by some cover,
    so only covers touching it are branched on.
    """
    demand = tuple(demand)
    vecs = [tuple(v) for v in covers]
    useful = _drop_dominated(vecs)
    memo: dict[tuple[int, ...], tuple[int, int | None]] = {}

    def best(res: tuple[int, ...]) -> int:
        if res in memo:
            return memo[res][0]
        first = next((i for i, x in enumerate(res) if x > 0), None)
        if first is None:
            memo[res] = (0, None)
            return 0
        top, arg = float("inf"), None
        for ci in useful:
            v = vecs[ci]
            if v[first] == 0:
                continue
            nxt = tuple(max(0, r - x) for r, x in zip(res, v))
            cand = 1 + best(nxt)
            if cand < top:
                top, arg = cand, ci
        if arg is None:
            raise ValueError(f"no cover serves class {first}")
        memo[res] = (top, arg)
        return top

    count = best(demand)
    chosen = []
    res = demand
    while memo[res][1] is not None:
        ci = memo[res][1]
        chosen.append(ci)
        res = tuple(max(0, r - x) for r, x in zip(res, vecs[ci]))
    return count, chosen


def _subroutes_from(
    demand: DemandVector, picked: Sequence[CoverMultiset], instance: Instance
) -> list[Subroute]:
    """Concrete subroutes for the chosen covers, surplus copies removed.

    Classes are filled in id order. Dropping a request from a window-free
    subroute never makes it infeasible, so trimming is safe.
    """
    reqs = instance.requests
    cls_of = {i: ci for ci, mem in enumerate(demand.members) for i in mem}
    next_copy = [0] * len(demand.members)
    subs = []
    for cover in picked:
        rename: dict[int, int] = {}
        for ev in cover.witness:
            if ev.kind is Kind.PICKUP:
                ci = cls_of[ev.req]
                if next_copy[ci] < demand.counts[ci]:
                    rename[ev.req] = demand.members[ci][next_copy[ci]]
                    next_copy[ci] += 1
        wps = tuple(
            Waypoint(reqs[rename[ev.req]].id, ev.kind)
            for ev in cover.witness if ev.req in rename
        )
        subs.append(Subroute(demand.direction, wps))
    return subs


@dataclass(frozen=True)
class XpResult:
    max_served: int
    tau: int
    a: int  # fewest ascending subroutes
    b: int  # fewest descending subroutes
    solution: Solution
    covers: tuple[int, int] = (0, 0)  # distinct subroutes per direction


def solve_xp_no_tw(instance: Instance, max_covers: int | None = None) -> XpResult:
    """Minimum turns when every request must be served and nothing has windows."""
    _require_no_windows(instance)
    counts = {}
    subs = {}
    n_covers = []
    for direction in (Direction.ASC, Direction.DESC):
        demand = demand_vector(instance, direction)
        if not demand.classes:
            counts[direction], subs[direction] = 0, []
            n_covers.append(0)
            continue
        covers = enumerate_distinct_subroutes(instance, direction, max_covers)
        n_covers.append(len(covers))
        count, chosen = multiset_multicover(demand.counts, [cv.counts for cv in covers])
        counts[direction] = count
        subs[direction] = _subroutes_from(demand, [covers[i] for i in chosen], instance)
    a, b = counts[Direction.ASC], counts[Direction.DESC]
    tours = []
    if a or b:
        for route in build_min_turn_collection(subs[Direction.ASC], subs[Direction.DESC], instance.k):
            check = check_route(route, instance)
            if not check:
                raise AssertionError(f"combined route infeasible: {check.reason}")
            tours.append(check.tour)
    return XpResult(instance.n, tau_formula(a, b, instance.k), a, b,
                    Solution(tuple(tours)), tuple(n_covers))
