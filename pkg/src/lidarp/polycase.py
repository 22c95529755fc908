"""Polynomial cases without time windows.

Without windows every request can be served by one vehicle (join single
request routes). For turn minimisation, once the minimum numbers ``a`` and
``b`` of ascending and descending subroutes are known the answer is
``max(ceil((a+b)/k), 2*ceil(max(a,b)/k) - 1)``; when subroute feasibility is
decided by capacity alone those minima come from interval colouring.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .errors import NotPolyCase, Windowed
from .feasibility import earliest_tour
from .model import Direction, Instance, Kind, Request, Route, Solution, Subroute, Waypoint


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _require_no_windows(instance: Instance):
    windowed = [r.id for r in instance.requests if r.windowed]
    if windowed:
        raise Windowed(f"requests with time windows: {windowed[:5]!r}")


def single_request_subroute(req: Request) -> Subroute:
    return Subroute(req.direction, (Waypoint(req.id, Kind.PICKUP), Waypoint(req.id, Kind.DROPOFF)))


def serve_all_no_tw(instance: Instance) -> Solution:
    """One tour serving every request, each alone in its own subroute.

    Same result as ``earliest_tour(join_routes(...))`` over single-request
    routes, built in one pass since the structure is valid by construction.
    """
    _require_no_windows(instance)
    if not instance.requests:
        return Solution(())
    dist, t_s, t_turn = instance.line.dist, instance.t_s, instance.t_turn
    subs: list[Subroute] = []
    t = 0
    prev_stop = prev_sub = None
    for r in instance.requests:
        direction = r.direction
        if subs and subs[-1].direction is direction:
            subs.append(Subroute(direction.opposite))
        si = len(subs)
        if prev_stop is not None:
            t += dist[prev_stop][r.o] + t_s + (si - prev_sub) * t_turn
        pick = t
        t += dist[r.o][r.d] + t_s
        subs.append(Subroute(direction, (Waypoint(r.id, Kind.PICKUP, pick),
                                         Waypoint(r.id, Kind.DROPOFF, t))))
        prev_stop, prev_sub = r.d, si
    return Solution((Route(tuple(subs)),))


# --------------------------------------------------------------------------
# interval overlap
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapProfile:
    a: int
    b: int
    clique_asc: tuple
    clique_desc: tuple


def _span(r: Request) -> tuple[int, int]:
    return (r.o, r.d) if r.o < r.d else (r.d, r.o)


def max_overlap(requests: Sequence[Request], direction: Direction) -> tuple[int, list]:
    """Largest set of pairwise overlapping requests of one direction.

    Sweep over interval endpoints; at equal coordinates intervals close
    before others open, since overlap is about open intervals.
    """
    events = []
    for pos, r in enumerate(requests):
        if r.direction is not direction:
            continue
        lo, hi = _span(r)
        events.append((lo, 1, pos))
        events.append((hi, 0, pos))
    events.sort()
    active: set[int] = set()
    best: list[int] = []
    for _, is_open, pos in events:
        if is_open:
            active.add(pos)
            if len(active) > len(best):
                best = sorted(active)
        else:
            active.discard(pos)
    return len(best), [requests[p].id for p in best]


def overlap_profile(requests: Sequence[Request]) -> OverlapProfile:
    a, ca = max_overlap(requests, Direction.ASC)
    b, cb = max_overlap(requests, Direction.DESC)
    return OverlapProfile(a, b, tuple(ca), tuple(cb))


def color_intervals(requests: Sequence[Request]) -> list[int]:
    """Greedy colouring by left endpoint; uses exactly the maximum overlap."""
    order = sorted(range(len(requests)), key=lambda i: (_span(requests[i]), i))
    colors = [0] * len(requests)
    busy: list[tuple[int, int]] = []  # (right end, color)
    free: list[int] = []
    next_color = 0
    for i in order:
        lo, hi = _span(requests[i])
        while busy and busy[0][0] <= lo:
            heapq.heappush(free, heapq.heappop(busy)[1])
        if free:
            col = heapq.heappop(free)
        else:
            col = next_color
            next_color += 1
        colors[i] = col
        heapq.heappush(busy, (hi, col))
    return colors


def subroute_waypoints(requests: Sequence[Request], direction: Direction) -> tuple[Waypoint, ...]:
    """Order a same-direction request group into a monotone waypoint list.

    Stops in driving order, drop-offs before pick-ups at a shared stop, then
    by position in ``requests``.
    """
    sign = 1 if direction is Direction.ASC else -1
    keyed = []
    for pos, r in enumerate(requests):
        keyed.append(((sign * r.o, 1, pos), Waypoint(r.id, Kind.PICKUP)))
        keyed.append(((sign * r.d, 0, pos), Waypoint(r.id, Kind.DROPOFF)))
    keyed.sort(key=lambda kv: kv[0])
    return tuple(w for _, w in keyed)


def min_subroutes(
    requests: Sequence[Request], direction: Direction, c: int
) -> tuple[int, list[Subroute]]:
    """``ceil(chi/c)`` subroutes serving every request of ``direction``.

    Only valid when subroute feasibility is decided by capacity alone.
    """
    group = [r for r in requests if r.direction is direction]
    if not group:
        return 0, []
    colors = color_intervals(group)
    count = _ceil_div(max(colors) + 1, c)
    buckets: list[list[Request]] = [[] for _ in range(count)]
    for r, col in zip(group, colors):
        buckets[col // c].append(r)
    return count, [Subroute(direction, subroute_waypoints(b, direction)) for b in buckets]


def tau_formula(a: int, b: int, k: int) -> int:
    if a < b:
        a, b = b, a
    if a == 0:
        return 0
    return max(_ceil_div(a + b, k), 2 * _ceil_div(a, k) - 1)


def build_min_turn_collection(
    asc: Sequence[Subroute], desc: Sequence[Subroute], k: int
) -> list[Route]:
    """Combine subroutes into ``k`` routes with ``tau_formula`` turns at most.

    With ``q = ceil(a/k)`` for the larger side ``a``: if ``ceil((a+b)/k)``
    reaches ``2q`` every route gets ``q`` slots of each direction; otherwise
    every route gets ``q-1`` of each plus one extra slot, major slots first.
    Slots with no real subroute become artificial ones.
    """
    if len(asc) >= len(desc):
        major, minor, dmaj = list(asc), list(desc), Direction.ASC
    else:
        major, minor, dmaj = list(desc), list(asc), Direction.DESC
    a, b = len(major), len(minor)
    if a == 0:
        return [Route(()) for _ in range(k)]
    q = _ceil_div(a, k)
    if _ceil_div(a + b, k) == 2 * q:
        slots = [(q, q)] * k
    else:
        extra_major = a - k * (q - 1)
        slots = [(q, q - 1) if i < extra_major else (q - 1, q) for i in range(k)]
    major_it, minor_it = iter(major), iter(minor)
    routes = []
    for n_major, n_minor in slots:
        majors = [next(major_it, None) or Subroute(dmaj) for _ in range(n_major)]
        minors = [next(minor_it, None) or Subroute(dmaj.opposite) for _ in range(n_minor)]
        first, second = (majors, minors) if n_major >= n_minor else (minors, majors)
        seq = []
        for i in range(len(first)):
            seq.append(first[i])
            if i < len(second):
                seq.append(second[i])
        routes.append(Route(tuple(seq)))
    return routes


# --------------------------------------------------------------------------
# dispatcher
# --------------------------------------------------------------------------

def poly_case(instance: Instance) -> int | None:
    """Which polynomial case (1, 2 or 3) covers ``instance``, if any."""
    if instance.has_time_windows:
        return None
    if instance.alpha is None:
        return 1
    if instance.line.shortcut_free and instance.t_s == 0:
        return 2
    if instance.c == 1:
        return 3
    return None


@dataclass(frozen=True)
class PolyResult:
    case: int
    tau: int
    a: int
    b: int
    profile: OverlapProfile
    solution: Solution

    @property
    def served(self) -> int:
        return self.solution.served


def solve_minturn_poly(instance: Instance) -> PolyResult:
    """Exact turn minimisation for the three capacity-determined cases.

    Raises :class:`NotPolyCase` for any other instance.
    """
    case = poly_case(instance)
    if case is None:
        raise NotPolyCase("instance is not covered by a polynomial case")
    profile = overlap_profile(instance.requests)
    a, asc = min_subroutes(instance.requests, Direction.ASC, instance.c)
    b, desc = min_subroutes(instance.requests, Direction.DESC, instance.c)
    routes = build_min_turn_collection(asc, desc, instance.k)
    tours = tuple(earliest_tour(r, instance) for r in routes)
    return PolyResult(case, tau_formula(a, b, instance.k), a, b, profile, Solution(tours))
