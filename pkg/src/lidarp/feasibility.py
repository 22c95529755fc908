"""Route feasibility: minimum waypoint gaps, timestamping and verification.

A route is flattened into a list of :class:`Event` records. Consecutive
events must be separated by at least the gap ``travel + t_s + turns*t_turn``
where ``turns`` is the number of subroute boundaries crossed. With time
windows the remaining timing constraints (earliest pick-up, latest
drop-off, maximum ride time) are difference constraints; their earliest
solution is the longest-path labelling from a time-zero node, found by
Bellman-Ford style relaxation. A positive cycle means no schedule exists.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import DuplicateRequest, MalformedRoute
from .model import Direction, Instance, Kind, Route, RequestId, Solution, Subroute

CAPACITY = "Capacity"
WINDOW = "Window"
PROMISE = "Promise"
DOUBLE_SERVICE = "DoubleService"


class Event(NamedTuple):
    stop: int
    kind: Kind
    req: int  # index into instance.requests
    sub: int  # index of the subroute holding this waypoint


@dataclass(frozen=True)
class GapSpec:
    travel: int
    service: int
    turns: int
    turn_time: int

    @property
    def total(self) -> int:
        return self.travel + self.service + self.turns * self.turn_time


def gap(prev: Event, nxt: Event, instance: Instance) -> GapSpec:
    """Minimum time between the starts of two consecutive waypoints.

    ``turns`` counts the subroute boundaries between the two waypoints: 0
    inside a subroute, 1 across a direction change, 2 when an artificial
    subroute sits in between (the vehicle drives back).
    """
    return GapSpec(
        travel=instance.dist(prev.stop, nxt.stop),
        service=instance.t_s,
        turns=nxt.sub - prev.sub,
        turn_time=instance.t_turn,
    )


def gap_total(prev: Event, nxt: Event, instance: Instance) -> int:
    """``gap(prev, nxt, instance).total`` without building the breakdown."""
    return (instance.line.dist[prev.stop][nxt.stop] + instance.t_s
            + (nxt.sub - prev.sub) * instance.t_turn)


def route_events(route: Route, instance: Instance) -> list[Event]:
    """Flatten ``route`` and check its structural invariants.

    Raises :class:`MalformedRoute` for unknown requests, broken alternation,
    non-monotone stops, direction mismatches, or pick-up/drop-off pairs that
    do not sit in one subroute in the right order.
    """
    index_of = instance.index_of
    requests = instance.requests
    events: list[Event] = []
    for si, sub in enumerate(route.subroutes):
        if si and route.subroutes[si - 1].direction is sub.direction:
            raise MalformedRoute(f"subroutes {si - 1} and {si} share a direction")
        sign = 1 if sub.direction is Direction.ASC else -1
        on_board: set[int] = set()
        last_stop = None
        for w in sub.waypoints:
            ri = index_of.get(w.request)
            if ri is None:
                raise MalformedRoute(f"unknown request {w.request!r}")
            req = requests[ri]
            if (req.d - req.o) * sign < 0:
                raise MalformedRoute(
                    f"request {w.request!r} is {req.direction.value} but rides in a "
                    f"{sub.direction.value} subroute"
                )
            stop = req.o if w.kind is Kind.PICKUP else req.d
            if last_stop is not None and (stop - last_stop) * sign < 0:
                raise MalformedRoute(f"subroute {si} is not monotone at request {w.request!r}")
            if w.kind is Kind.PICKUP:
                if ri in on_board:
                    raise MalformedRoute(f"request {w.request!r} picked up twice")
                on_board.add(ri)
            else:
                if ri not in on_board:
                    raise MalformedRoute(
                        f"request {w.request!r} dropped off without a prior pick-up "
                        f"in subroute {si}"
                    )
                on_board.discard(ri)
            events.append(Event(stop, w.kind, ri, si))
            last_stop = stop
        if on_board:
            ids = sorted(repr(instance.requests[i].id) for i in on_board)
            raise MalformedRoute(f"subroute {si} ends with passengers on board: {', '.join(ids)}")
    return events


def gaps_of(events: Sequence[Event], instance: Instance) -> list[int]:
    return [gap_total(events[i - 1], events[i], instance) for i in range(1, len(events))]


def earliest_times(events: Sequence[Event], instance: Instance) -> list[int]:
    """Timestamps with no waiting: first waypoint at 0, then minimum gaps."""
    times = []
    t = 0
    for i, ev in enumerate(events):
        if i:
            t += gap_total(events[i - 1], ev, instance)
        times.append(t)
    return times


def _pairs(events: Sequence[Event]) -> list[tuple[int, int]]:
    """(pick-up position, drop-off position) for every closed request."""
    open_at: dict[int, int] = {}
    pairs = []
    for pos, ev in enumerate(events):
        if ev.kind is Kind.PICKUP:
            open_at[ev.req] = pos
        elif ev.req in open_at:
            pairs.append((open_at.pop(ev.req), pos))
    return pairs


def _capacity_ok(events: Sequence[Event], c: int) -> bool:
    load = 0
    for ev in events:
        load += 1 if ev.kind is Kind.PICKUP else -1
        if load > c:
            return False
    return True


def schedule(
    events: Sequence[Event], instance: Instance, *, promise: bool = True,
    lookahead: bool = False,
) -> list[int] | None:
    """Earliest integer timestamps meeting all timing constraints, or ``None``.

    Open requests (picked up but not yet dropped off) only contribute their
    earliest pick-up, which makes the check usable on route prefixes. With
    ``lookahead`` each open request also gets a virtual drop-off reached
    straight from the last waypoint; it must still meet the deadline and the
    promise.
    """
    m = len(events)
    if m == 0:
        return []
    reqs = instance.requests
    pairs = _pairs(events)
    open_at: dict[int, int] = {}
    if lookahead:
        for pos, ev in enumerate(events):
            if ev.kind is Kind.PICKUP:
                open_at[ev.req] = pos
            else:
                open_at.pop(ev.req, None)
    use_promise = promise and instance.alpha is not None
    windowed = any(reqs[ev.req].windowed for ev in events)
    if not windowed:
        times = earliest_times(events, instance)
        if use_promise:
            for p, d in pairs:
                bound = instance.max_ride(reqs[events[p].req])
                if times[d] - times[p] - instance.t_s > bound:
                    return None
            last = events[-1]
            for ri, p in open_at.items():
                r = reqs[ri]
                arrive = times[-1] + instance.dist(last.stop, r.d) + instance.t_s
                if arrive - times[p] - instance.t_s > instance.max_ride(r):
                    return None
        return times

    # x_v >= x_u + w ; node m is the time origin, virtual drop-offs follow it
    z = m
    edges = [(i - 1, i, g) for i, g in enumerate(gaps_of(events, instance), start=1)]
    for pos, ev in enumerate(events):
        r = reqs[ev.req]
        if ev.kind is Kind.PICKUP and r.e:
            edges.append((z, pos, r.e))
    closing = [(p, d) for p, d in pairs]
    last = events[-1]
    for v, (ri, p) in enumerate(open_at.items(), start=m + 1):
        edges.append((m - 1, v, instance.dist(last.stop, reqs[ri].d) + instance.t_s))
        closing.append((p, v))
    for p, d in closing:
        r = reqs[events[p].req]
        if r.l is not None:
            edges.append((d, z, -r.l))
        if use_promise:
            edges.append((d, p, -(instance.max_ride(r) + instance.t_s)))
    size = m + 1 + len(open_at)
    x = [0] * size
    for _ in range(size + 1):
        changed = False
        for u, v, w in edges:
            if x[u] + w > x[v]:
                x[v] = x[u] + w
                changed = True
        if x[z] > 0:
            return None
        if not changed:
            return x[:m]
    return None


@dataclass(frozen=True)
class RouteCheck:
    feasible: bool
    tour: Route | None = None
    reason: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.feasible


def check_route(route: Route, instance: Instance) -> RouteCheck:
    """Decide feasibility of ``route`` and return a witness tour if feasible.

    Timestamps in the input are ignored. The reason for infeasibility is the
    first violated class in the order DoubleService, Capacity, Window, Promise.
    """
    picks = Counter(w.request for w in route.waypoints if w.kind is Kind.PICKUP)
    twice = [rid for rid, n in picks.items() if n > 1]
    if twice:
        return RouteCheck(False, reason=DOUBLE_SERVICE, detail=f"served twice: {twice!r}")
    events = route_events(route, instance)
    if not _capacity_ok(events, instance.c):
        return RouteCheck(False, reason=CAPACITY, detail=f"more than {instance.c} on board")
    times = schedule(events, instance)
    if times is None:
        if instance.has_time_windows and schedule(events, instance, promise=False) is None:
            return RouteCheck(False, reason=WINDOW, detail="time windows cannot all be met")
        return RouteCheck(False, reason=PROMISE, detail="a ride exceeds the service promise")
    return RouteCheck(True, tour=route.with_times(times))


def earliest_tour(route: Route, instance: Instance) -> Route:
    """Timestamp ``route`` greedily, ignoring windows and the promise."""
    return route.with_times(earliest_times(route_events(route, instance), instance))


def join_routes(routes: Sequence[Route]) -> Route:
    """Concatenate routes into one.

    Where two subroutes of the same direction would become neighbours, an
    artificial subroute of the opposite direction is placed between them so
    directions keep alternating; the vehicle turns twice there.
    """
    seen: set[RequestId] = set()
    subs: list[Subroute] = []
    for r in routes:
        for rid in r.served:
            if rid in seen:
                raise DuplicateRequest(f"request {rid!r} appears in more than one route")
            seen.add(rid)
        for s in r.subroutes:
            if subs and subs[-1].direction is s.direction:
                subs.append(Subroute(s.direction.opposite))
            subs.append(s)
    return Route(tuple(subs))


# --------------------------------------------------------------------------
# Independent verification of timed solutions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    tour: int | None
    detail: str


@dataclass
class VerifyReport:
    served: int = 0
    max_turns: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "served": self.served,
            "max_turns": self.max_turns,
            "violations": [
                {"kind": v.kind, "tour": v.tour, "detail": v.detail} for v in self.violations
            ],
        }


def verify_solution(solution: Solution, instance: Instance) -> VerifyReport:
    """Check a timed solution against every constraint, using its own timestamps.

    Never raises; every problem found is listed in the report.
    """
    report = VerifyReport(served=solution.served, max_turns=solution.max_turns)
    bad = report.violations.append
    if len(solution.tours) > instance.k:
        bad(Violation("TooManyTours", None,
                      f"{len(solution.tours)} tours for {instance.k} vehicles"))
    owner: dict[RequestId, int] = {}
    for ti, tour in enumerate(solution.tours):
        wps = tour.waypoints
        ids = [w.request for w in wps]
        unknown = sorted({repr(x) for x in ids if x not in instance.index_of})
        if unknown:
            bad(Violation("UnknownRequest", ti, f"unknown requests {', '.join(unknown)}"))
            continue
        dup_here = False
        for rid in (w.request for w in wps if w.kind is Kind.PICKUP):
            if rid in owner:
                bad(Violation(DOUBLE_SERVICE, ti, f"request {rid!r} already served"
                              + ("" if owner[rid] == ti else f" by tour {owner[rid]}")))
                dup_here = dup_here or owner[rid] == ti
            owner.setdefault(rid, ti)
        if dup_here:
            continue
        try:
            events = route_events(tour, instance)
        except MalformedRoute as exc:
            bad(Violation("Structure", ti, str(exc)))
            continue
        times = [w.time for w in wps]
        if any(t is None for t in times):
            bad(Violation("MissingTimestamp", ti, "every waypoint needs a time"))
            continue
        if any(not isinstance(t, int) or t < 0 for t in times):
            bad(Violation("Time", ti, "timestamps must be non-negative integers"))
            continue
        if not _capacity_ok(events, instance.c):
            bad(Violation(CAPACITY, ti, f"more than {instance.c} passengers on board"))
        for i in range(1, len(events)):
            g = gap_total(events[i - 1], events[i], instance)
            if times[i] - times[i - 1] < g:
                bad(Violation("Gap", ti, f"waypoints {i - 1}->{i}: "
                              f"{times[i] - times[i - 1]} < minimum {g}"))
        for p, d in _pairs(events):
            r = instance.requests[events[p].req]
            if times[p] < r.e:
                bad(Violation(WINDOW, ti, f"request {r.id!r} picked up at {times[p]} < {r.e}"))
            if r.l is not None and times[d] > r.l:
                bad(Violation(WINDOW, ti, f"request {r.id!r} dropped off at {times[d]} > {r.l}"))
            if instance.alpha is not None:
                ride = times[d] - times[p] - instance.t_s
                if ride > instance.max_ride(r):  # integer ride, so floor is exact
                    bad(Violation(PROMISE, ti, f"request {r.id!r} rides {ride} > "
                                  f"{instance.alpha} * {instance.dist(r.o, r.d)}"))
    return report
