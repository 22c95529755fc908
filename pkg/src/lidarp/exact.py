"""Exact solver for instances with a finite horizon.

Every feasible route is enumerated by depth-first extension over pick-up /
drop-off events (the event-based graph, generated lazily), pruning with the
timing check at each step. Routes are enumerated over request *classes*
(copies with identical origin, destination and window), so permutations of
copies are never revisited; copies ride first-in first-out. A search over
collections of at most ``k`` routes then maximises the number of served
requests and, among those, minimises the largest turn count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import BudgetExceeded, InfiniteHorizon
from .feasibility import Event, check_route, schedule
from .model import Direction, Instance, Kind, Route, Solution, Subroute, Waypoint

DEFAULT_MAX_ROUTES = 200_000


def default_budget() -> int:
    raw = os.environ.get("LIDARP_BUDGET")
    return int(raw) if raw else DEFAULT_MAX_ROUTES


@dataclass(frozen=True)
class EnumBudget:
    max_waypoints: int
    max_requests_per_route: int
    max_per_collection: int

    @classmethod
    def for_instance(cls, instance: Instance) -> EnumBudget:
        t = instance.horizon
        if t is None:
            raise InfiniteHorizon("instance has requests without a latest drop-off")
        return cls(2 * t * instance.c, t * instance.c, t * instance.c * instance.k)


@dataclass(frozen=True)
class KernelResult:
    instance: Instance
    dropped: tuple = ()


def dedup_kernel(instance: Instance) -> KernelResult:
    """Keep at most ``t*c*k`` copies of each distinct request.

    ``k`` vehicles cannot serve more than ``t*c*k`` requests before the
    horizon ``t``, so surplus copies never change the optimum. The first
    copies (in input order) are kept.
    """
    cap = EnumBudget.for_instance(instance).max_per_collection
    seen: dict[tuple, int] = {}
    kept, dropped = [], []
    for r in instance.requests:
        n = seen.get(r.signature, 0)
        if n < cap:
            kept.append(r)
            seen[r.signature] = n + 1
        else:
            dropped.append(r.id)
    if not dropped:
        return KernelResult(instance)
    return KernelResult(instance.replace(requests=tuple(kept)), tuple(dropped))


def request_classes(instance: Instance) -> list[list[int]]:
    """Request indices grouped by signature, in order of first appearance."""
    groups: dict[tuple, list[int]] = {}
    for i, r in enumerate(instance.requests):
        groups.setdefault(r.signature, []).append(i)
    return list(groups.values())


@dataclass(frozen=True)
class FeasibleRoute:
    counts: tuple[int, ...]  # copies served per request class
    turns: int
    events: tuple[Event, ...]
    times: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.counts)


@dataclass
class RouteCatalog:
    instance: Instance
    classes: list[list[int]]
    routes: list[FeasibleRoute] = field(default_factory=list)
    nodes: int = 0

    @property
    def multiplicity(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)


def events_to_route(events: Sequence[Event], instance: Instance, times=None) -> Route:
    """Rebuild a :class:`Route` from events, filling skipped subroute slots."""
    if not events:
        return Route(())
    reqs = instance.requests
    by_sub: dict[int, list[Waypoint]] = {}
    dirs: dict[int, Direction] = {}
    for pos, ev in enumerate(events):
        t = None if times is None else times[pos]
        by_sub.setdefault(ev.sub, []).append(Waypoint(reqs[ev.req].id, ev.kind, t))
        dirs[ev.sub] = reqs[ev.req].direction
    last = events[-1].sub
    subs = []
    direction = dirs[0]
    for si in range(last + 1):
        direction = dirs.get(si, direction.opposite if si else direction)
        subs.append(Subroute(direction, tuple(by_sub.get(si, ()))))
    return Route(tuple(subs))


def iter_feasible_routes(
    instance: Instance, catalog: RouteCatalog, max_routes: int
) -> Iterator[FeasibleRoute]:
    reqs = instance.requests
    classes = catalog.classes
    cls_of = {}
    for ci, members in enumerate(classes):
        for i in members:
            cls_of[i] = ci
    budget = EnumBudget.for_instance(instance)
    c = instance.c
    n_cls = len(classes)
    used = [0] * n_cls
    events: list[Event] = []
    on_board: list[int] = []  # request indices, pick-up order

    def candidates() -> list[Event]:
        out = []
        if on_board:
            last = events[-1]
            direction = reqs[on_board[0]].direction
            nearest = min((reqs[i].d for i in on_board),
                          key=lambda s: s if direction is Direction.ASC else -s)
            seen_cls = set()
            for ri in on_board:  # drop-offs, first copy of each class
                ci = cls_of[ri]
                if ci in seen_cls or reqs[ri].d != nearest:
                    continue
                seen_cls.add(ci)
                if nearest == last.stop and last.kind is Kind.PICKUP:
                    continue
                out.append(Event(nearest, Kind.DROPOFF, ri, last.sub))
            if len(on_board) < c:
                for ci in range(n_cls):
                    if used[ci] >= len(classes[ci]):
                        continue
                    r = reqs[classes[ci][used[ci]]]
                    if r.direction is not direction:
                        continue
                    if not direction.ahead(last.stop, r.o) or r.o == nearest:
                        continue
                    if not direction.ahead(r.o, nearest):
                        continue
                    out.append(Event(r.o, Kind.PICKUP, classes[ci][used[ci]], last.sub))
        else:
            last = events[-1] if events else None
            for ci in range(n_cls):
                if used[ci] >= len(classes[ci]):
                    continue
                ri = classes[ci][used[ci]]
                r = reqs[ri]
                if last is None:
                    sub = 0
                else:
                    cur_dir = reqs[last.req].direction
                    if r.direction is not cur_dir:
                        sub = last.sub + 1
                    elif cur_dir.ahead(last.stop, r.o):
                        sub = last.sub
                    else:
                        sub = last.sub + 2
                out.append(Event(r.o, Kind.PICKUP, ri, sub))
        return out

    emitted = 0

    def dfs() -> Iterator[FeasibleRoute]:
        nonlocal emitted
        for ev in candidates():
            catalog.nodes += 1
            events.append(ev)
            ci = cls_of[ev.req]
            if ev.kind is Kind.PICKUP:
                used[ci] += 1
                on_board.append(ev.req)
            else:
                on_board.remove(ev.req)
            times = None
            if len(events) <= budget.max_waypoints:
                times = schedule(events, instance, lookahead=True)
            if times is not None:
                if not on_board:
                    emitted += 1
                    if emitted > max_routes:
                        raise BudgetExceeded(
                            f"more than {max_routes} feasible routes", cap=max_routes
                        )
                    yield FeasibleRoute(tuple(used), events[-1].sub + 1,
                                        tuple(events), tuple(times))
                yield from dfs()
            events.pop()
            if ev.kind is Kind.PICKUP:
                used[ci] -= 1
                on_board.remove(ev.req)
            else:
                on_board.insert(fifo_slot(ev, on_board, events, reqs), ev.req)

    yield from dfs()


def fifo_slot(ev: Event, on_board: list[int], events: list[Event], reqs) -> int:
    """Position to re-insert a request into the on-board list after backtracking."""
    pick_pos = {e.req: p for p, e in enumerate(events) if e.kind is Kind.PICKUP}
    mine = pick_pos[ev.req]
    for slot, ri in enumerate(on_board):
        if pick_pos[ri] > mine:
            return slot
    return len(on_board)


def enumerate_feasible_routes(instance: Instance, max_routes: int | None = None) -> RouteCatalog:
    """All feasible non-empty routes, up to copy symmetry and equal-stop order.

    Within a subroute drop-offs precede pick-ups at a shared stop. A vehicle
    that is empty and continues in its direction to a stop ahead stays in the
    same subroute; doubling back costs an artificial subroute.
    """
    if max_routes is None:
        max_routes = default_budget()
    catalog = RouteCatalog(instance, request_classes(instance))
    catalog.routes.extend(iter_feasible_routes(instance, catalog, max_routes))
    return catalog


@dataclass(frozen=True)
class CollectionResult:
    max_served: int
    tau: int
    solution: Solution


def _max_served(items, k: int, caps: tuple[int, ...]) -> tuple[int, list[int]]:
    """Best total size of at most ``k`` items (repeats allowed) within ``caps``."""
    order = sorted(range(len(items)), key=lambda i: (-items[i][1], items[i][2]))
    best = [0, []]
    chosen: list[int] = []

    def go(start: int, k_left: int, residual: list[int], served: int):
        if served > best[0]:
            best[0], best[1] = served, list(chosen)
        if k_left == 0:
            return
        for pos in range(start, len(order)):
            counts, size, _ = items[order[pos]]
            if served + k_left * size <= best[0]:
                return
            if all(x <= r for x, r in zip(counts, residual)):
                for j, x in enumerate(counts):
                    residual[j] -= x
                chosen.append(order[pos])
                go(pos, k_left - 1, residual, served + size)
                chosen.pop()
                for j, x in enumerate(counts):
                    residual[j] += x

    go(0, k, list(caps), 0)
    return best[0], best[1]


def best_collections(catalog: RouteCatalog, k: int) -> CollectionResult:
    """Maximise served requests over collections of at most ``k`` disjoint
    routes, then minimise the largest turn count among the maximisers."""
    instance = catalog.instance
    best_by_counts: dict[tuple[int, ...], FeasibleRoute] = {}
    for fr in catalog.routes:
        cur = best_by_counts.get(fr.counts)
        if cur is None or fr.turns < cur.turns:
            best_by_counts[fr.counts] = fr
    routes = list(best_by_counts.values())
    items = [(fr.counts, fr.size, fr.turns) for fr in routes]
    caps = catalog.multiplicity
    top, _ = _max_served(items, k, caps)
    if top == 0:
        return CollectionResult(0, 0, Solution(()))
    for limit in sorted({fr.turns for fr in routes}):
        idx = [i for i, it in enumerate(items) if it[2] <= limit]
        served, chosen = _max_served([items[i] for i in idx], k, caps)
        if served == top:
            picked = [routes[idx[i]] for i in chosen]
            return CollectionResult(top, limit, instantiate(picked, catalog))
    raise AssertionError("unreachable: the unrestricted search attains the optimum")


def instantiate(picked: Sequence[FeasibleRoute], catalog: RouteCatalog) -> Solution:
    """Give the chosen class-level routes concrete, disjoint request ids."""
    instance = catalog.instance
    reqs = instance.requests
    cls_of = {i: ci for ci, members in enumerate(catalog.classes) for i in members}
    next_copy = [0] * len(catalog.classes)
    tours = []
    for fr in picked:
        rename: dict[int, int] = {}
        for ev in fr.events:
            if ev.kind is Kind.PICKUP:
                ci = cls_of[ev.req]
                rename[ev.req] = catalog.classes[ci][next_copy[ci]]
                next_copy[ci] += 1
        events = [ev._replace(req=rename[ev.req]) for ev in fr.events]
        route = events_to_route(events, instance)
        check = check_route(route, instance)
        if not check:
            raise AssertionError(f"instantiated route infeasible: {check.reason}")
        tours.append(check.tour)
    return Solution(tuple(tours))


@dataclass(frozen=True)
class ExactResult:
    max_served: int
    tau: int
    solution: Solution
    routes_explored: int = 0
    dropped: tuple = ()


def solve_fpt(instance: Instance, max_routes: int | None = None) -> ExactResult:
    """Kernelise, enumerate feasible routes, search collections."""
    kernel = dedup_kernel(instance)
    catalog = enumerate_feasible_routes(kernel.instance, max_routes)
    res = best_collections(catalog, instance.k)
    return ExactResult(res.max_served, res.tau, res.solution, len(catalog.routes), kernel.dropped)
