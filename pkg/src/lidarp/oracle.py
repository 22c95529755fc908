"""Brute-force reference solver for tiny instances.

For each subset of requests the cheapest (fewest turns) feasible route
serving exactly that subset is found by trying every ordered split of the
subset into same-direction subroutes and every waypoint order allowed
inside a subroute. Collections of at most ``k`` disjoint subsets are then
compared directly on (served, max turns).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import LimitsExceeded
from .feasibility import check_route
from .model import Direction, Instance, Kind, Request, Route, Solution, Subroute, Waypoint


@dataclass(frozen=True)
class OracleLimits:
    max_requests: int = 6
    max_vehicles: int = 2
    max_horizon: int = 20


@dataclass(frozen=True)
class OracleResult:
    max_served: int
    tau: int
    solution: Solution
    routes_checked: int = 0


def _ordered_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """Every sequence of non-empty disjoint blocks covering ``items``."""
    if not items:
        yield []
        return
    n = len(items)
    for mask in range(1, 1 << n):
        block = [items[i] for i in range(n) if mask >> i & 1]
        rest = [items[i] for i in range(n) if not mask >> i & 1]
        for tail in _ordered_partitions(rest):
            yield [block] + tail


def _block_orders(block: Sequence[Request], direction: Direction) -> Iterator[tuple[Waypoint, ...]]:
    """Monotone waypoint orders for one subroute.

    Stops are visited in driving order with drop-offs first at a stop; every
    permutation inside a (stop, kind) group is tried.
    """
    sign = 1 if direction is Direction.ASC else -1
    groups: dict[tuple[int, int], list[Waypoint]] = {}
    for r in block:
        groups.setdefault((sign * r.o, 1), []).append(Waypoint(r.id, Kind.PICKUP))
        groups.setdefault((sign * r.d, 0), []).append(Waypoint(r.id, Kind.DROPOFF))
    keys = sorted(groups)
    for perms in itertools.product(*(itertools.permutations(groups[key]) for key in keys)):
        yield tuple(w for p in perms for w in p)


def _routes_for(subset: Sequence[Request]) -> Iterator[Route]:
    for blocks in _ordered_partitions(list(range(len(subset)))):
        dirs = []
        ok = True
        for b in blocks:
            ds = {subset[i].direction for i in b}
            if len(ds) != 1:
                ok = False
                break
            dirs.append(ds.pop())
        if not ok:
            continue
        per_block = [list(_block_orders([subset[i] for i in b], d)) for b, d in zip(blocks, dirs)]
        for orders in itertools.product(*per_block):
            subs = []
            for d, wps in zip(dirs, orders):
                if subs and subs[-1].direction is d:
                    subs.append(Subroute(d.opposite))
                subs.append(Subroute(d, wps))
            yield Route(tuple(subs))


def brute_solve(instance: Instance, limits: OracleLimits = OracleLimits()) -> OracleResult:
    n = instance.n
    if n > limits.max_requests:
        raise LimitsExceeded(f"{n} requests > oracle limit {limits.max_requests}")
    if instance.k > limits.max_vehicles:
        raise LimitsExceeded(f"{instance.k} vehicles > oracle limit {limits.max_vehicles}")
    t = instance.horizon
    if t is not None and t > limits.max_horizon:
        raise LimitsExceeded(f"horizon {t} > oracle limit {limits.max_horizon}")

    reqs = instance.requests
    checked = 0
    best: dict[int, tuple[int, Route]] = {}  # mask -> (turns, tour)
    for mask in range(1, 1 << n):
        subset = [reqs[i] for i in range(n) if mask >> i & 1]
        for route in _routes_for(subset):
            if mask in best and route.turns >= best[mask][0]:
                continue
            checked += 1
            res = check_route(route, instance)
            if res:
                best[mask] = (route.turns, res.tour)

    masks = sorted(best)
    top = (0, 0, ())  # (served, -max_turns, chosen masks)

    def go(start: int, k_left: int, used: int, served: int, turns: int, chosen: tuple):
        nonlocal top
        if (served, -turns) > top[:2]:
            top = (served, -turns, chosen)
        if k_left == 0:
            return
        for pos in range(start, len(masks)):
            m = masks[pos]
            if m & used:
                continue
            go(pos + 1, k_left - 1, used | m, served + bin(m).count("1"),
               max(turns, best[m][0]), chosen + (m,))

    go(0, instance.k, 0, 0, 0, ())
    served, neg_turns, chosen = top
    return OracleResult(served, -neg_turns, Solution(tuple(best[m][1] for m in chosen)), checked)
