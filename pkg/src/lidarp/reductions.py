"""Instance generators that encode 3-Partition into turn minimisation.

Each generator returns the instance together with a role tag for every
request and the turn counts a yes-instance attains and a no-instance must
exceed. ``witness_solution`` turns a partition into the matching optimal
solution and ``certify_no`` checks, for the two construction families
without windows, that no assignment of value blocks to subroutes fits the
delay budget encoded by the service promise.

Stops are 0-based. Request ids are consecutive integers.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import BadCapacity, BadPartition
from .feasibility import check_route, join_routes
from .model import (
    Direction,
    Instance,
    Line,
    Request,
    Route,
    Solution,
    Subroute,
    ThreePartitionInstance,
    dump_instance,
)
from .polycase import subroute_waypoints

SERVICE_TIME = "service_time"
SHORTCUT = "shortcut"
TIME_WINDOWS = "time_windows"
GAP = "gap"

Partition = tuple[tuple[int, ...], ...]  # groups of indices into S


@dataclass(frozen=True)
class RoleTag:
    role: str  # Value, LongPlug, ShortPlug, Promise, Filter, Separator
    i: int | None = None  # 1-based value index
    j: int | None = None  # 1-based position (value copy, filter or separator number)
    area: int | None = None
    copy: int | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class ReductionOutput:
    instance: Instance
    role_tags: dict[int, RoleTag]
    expected_tau_yes: int
    expected_tau_no_lower_bound: int | None
    kind: str
    tp: ThreePartitionInstance
    base: str | None = None  # construction used by a gap instance
    meta: dict = field(default_factory=dict)

    def ids_with(self, role: str) -> list[int]:
        return [rid for rid, tag in self.role_tags.items() if tag.role == role]

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "base": self.base,
            "tp": {"S": list(self.tp.S), "m": self.tp.m, "T": self.tp.T},
            "k": self.instance.k,
            "c": self.instance.c,
            "expected_tau_yes": self.expected_tau_yes,
            "expected_tau_no_lower_bound": self.expected_tau_no_lower_bound,
            "role_tags": {str(rid): tag.as_dict() for rid, tag in self.role_tags.items()},
            **self.meta,
        }

    def write_metadata(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.metadata(), indent=1) + "\n")


class _Builder:
    def __init__(self):
        self.requests: list[Request] = []
        self.tags: dict[int, RoleTag] = {}

    def add(self, o: int, d: int, tag: RoleTag, e: int = 0, l: int | None = None, times: int = 1):
        for _ in range(times):
            rid = len(self.requests)
            self.requests.append(Request(rid, o, d, e, l))
            self.tags[rid] = tag


def _checked(tp: ThreePartitionInstance, strict: bool) -> ThreePartitionInstance:
    tp.check(strict=strict)
    return tp


def _need_capacity(c: int):
    if c < 2:
        raise BadCapacity(f"construction needs capacity >= 2, got {c}")


# --------------------------------------------------------------------------
# 3-Partition by search
# --------------------------------------------------------------------------

def _fill_bins(weights: Sequence[int], m: int, cap: int, max_nodes: int) -> tuple[list[int] | None, int, bool]:
    """Assign every weight to one of ``m`` bins of capacity ``cap``.

    Returns (bin per weight or None, nodes visited, hit_cap). Heaviest
    weights go first and bins with equal load are treated as one.
    """
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    load = [0] * m
    where = [0] * len(weights)
    nodes = 0

    def go(pos: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise _CapHit
        if pos == len(order):
            return True
        w = weights[order[pos]]
        tried = set()
        for b in range(m):
            if load[b] in tried or load[b] + w > cap:
                continue
            tried.add(load[b])
            load[b] += w
            where[order[pos]] = b
            if go(pos + 1):
                return True
            load[b] -= w
        return False

    try:
        found = go(0)
    except _CapHit:
        return None, nodes, True
    return (list(where) if found else None), nodes, False


class _CapHit(Exception):
    pass


def solve_3partition(tp: ThreePartitionInstance, max_nodes: int = 10_000_000) -> Partition | None:
    """A partition of ``S`` into ``m`` groups summing to ``T``, or ``None``."""
    if sum(tp.S) != tp.m * tp.T:
        return None
    where, _, hit = _fill_bins(tp.S, tp.m, tp.T, max_nodes)
    if hit:
        raise RuntimeError("3-Partition search exceeded its node cap")
    if where is None:
        return None
    groups = [[] for _ in range(tp.m)]
    for i, b in enumerate(where):
        groups[b].append(i)
    return tuple(tuple(g) for g in groups)


def _check_partition(tp: ThreePartitionInstance, partition: Sequence[Sequence[int]]) -> Partition:
    groups = tuple(tuple(g) for g in partition)
    flat = sorted(i for g in groups for i in g)
    if len(groups) != tp.m or flat != list(range(tp.n)):
        raise BadPartition(f"need {tp.m} disjoint groups covering indices 0..{tp.n - 1}")
    for g in groups:
        if sum(tp.S[i] for i in g) != tp.T:
            raise BadPartition(f"group {list(g)} sums to {sum(tp.S[i] for i in g)}, not {tp.T}")
    return groups


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _promise_count(m: int, k: int, c: int) -> int:
    return (c - 1) * m + (k - 1) * m * c


def gen_service_time(tp: ThreePartitionInstance, k: int = 1, c: int = 2, *, strict: bool = True) -> ReductionOutput:
    """Unit-gap line where service times make value requests expensive."""
    _checked(tp, strict)
    _need_capacity(c)
    S, m, T, n = tp.S, tp.m, tp.T, tp.n
    h = 4 + 4 * T * n + (c - 2)
    a = h - 1
    b = 2 * (1 + T + n) + (c - 2)
    B = _Builder()
    for i, s in enumerate(S, start=1):
        base = 3 + T * (i - 1)
        for j in range(1, s + 1):
            B.add(base + j - 1, base + j, RoleTag("Value", i, j))
        B.add(base, base + T, RoleTag("LongPlug", i), times=m - 1)
        B.add(base + s, base + T, RoleTag("ShortPlug", i))
    B.add(0, h - 1, RoleTag("Promise"), times=_promise_count(m, k, c))
    for j in range(1, m + 1):
        B.add(1, 2, RoleTag("Filter", j=j))
    inst = Instance(Line.from_gaps([1] * (h - 1)), tuple(B.requests), k=k, c=c,
                    t_s=1, t_turn=0, alpha=1 + Fraction(b, a))
    return ReductionOutput(inst, B.tags, 2 * m - 1, 2 * m + 1, SERVICE_TIME, tp,
                           meta={"a": a, "b": b})


def _shortcut_stops(m: int, n: int) -> dict:
    first = m + 2
    return {
        "start": 0,
        "filter": {j: j for j in range(1, m + 1)},
        "filter_end": m + 1,
        "value": {(i, q): first + 4 * (i - 1) + q - 1 for i in range(1, n + 1) for q in range(1, 5)},
        "end": first + 4 * n,
    }


def _forward_shortest(gaps: Sequence[int], shortcuts: dict[tuple[int, int], int]) -> list[list[int]]:
    h = len(gaps) + 1
    into: dict[int, list[tuple[int, int]]] = {}
    for (u, v), w in shortcuts.items():
        into.setdefault(v, []).append((u, w))
    dist = [[0] * h for _ in range(h)]
    for x in range(h):
        best = {x: 0}
        for y in range(x + 1, h):
            cand = [best[y - 1] + gaps[y - 1]]
            cand += [best[u] + w for u, w in into.get(y, ()) if u >= x]
            best[y] = min(cand)
            dist[x][y] = dist[y][x] = best[y]
    return dist


def gen_shortcut(tp: ThreePartitionInstance, k: int = 1, c: int = 2, *, strict: bool = True) -> ReductionOutput:
    """Line with detours that a subroute skips unless it serves the value there."""
    _checked(tp, strict)
    _need_capacity(c)
    S, m, T, n = tp.S, tp.m, tp.T, tp.n
    st = _shortcut_stops(m, n)
    h = st["end"] + 1
    gaps = [1] * (h - 1)
    for i, s in enumerate(S, start=1):
        gaps[st["value"][i, 1]] = s
        gaps[st["value"][i, 3]] = s
    gaps[st["value"][n, 4]] = 2 * T
    shortcuts = {}
    for j in range(1, m + 1):
        shortcuts[0, st["filter"][j]] = 1
        shortcuts[st["filter"][j], st["filter_end"]] = 1
    for i in range(1, n + 1):
        shortcuts[st["value"][i, 1], st["value"][i, 4]] = 1
    dist = _forward_shortest(gaps, shortcuts)
    a = dist[0][st["end"]]
    b = 2 * T
    assert a == 2 + 2 * n + 2 * T
    B = _Builder()
    B.add(0, st["end"], RoleTag("Promise"), times=_promise_count(m, k, c))
    for j in range(1, m + 1):
        B.add(st["filter"][j], st["filter_end"], RoleTag("Filter", j=j))
    for i in range(1, n + 1):
        B.add(st["value"][i, 2], st["value"][i, 3], RoleTag("Value", i))
    inst = Instance(Line.from_matrix(dist), tuple(B.requests), k=k, c=c,
                    t_s=0, t_turn=0, alpha=1 + Fraction(b, a))
    return ReductionOutput(inst, B.tags, 2 * m - 1, 2 * m + 1, SHORTCUT, tp,
                           meta={"a": a, "b": b})


def gen_time_windows(tp: ThreePartitionInstance, k: int = 1, c: int = 1, *, strict: bool = True) -> ReductionOutput:
    """Windows carve ``m`` slots of length ``2T`` that value requests must fill."""
    _checked(tp, strict)
    S, m, T, n = tp.S, tp.m, tp.T, tp.n
    width = max(S) + 1
    far = 2 * m * T + 2 * m
    gaps = []
    for area in range(k):
        if area:
            gaps.append(far)
        gaps += [1] * (width - 1)
    B = _Builder()
    for area in range(k):
        off = area * width
        for i, s in enumerate(S, start=1):
            for cp in range(1, c + 1):
                B.add(off, off + s, RoleTag("Value", i, area=area + 1, copy=cp), 0, far - 1)
        for j in range(1, m + 1):
            e, l = 2 * j * T + 2 * (j - 1), 2 * j * T + 2 * j - 1
            for cp in range(1, c + 1):
                B.add(off, off + 1, RoleTag("Separator", j=j, area=area + 1, copy=cp), e, l)
    inst = Instance(Line.from_gaps(gaps), tuple(B.requests), k=k, c=c, t_s=0, t_turn=0, alpha=None)
    return ReductionOutput(inst, B.tags, 2 * m + 2 * n - 1, None, TIME_WINDOWS, tp,
                           meta={"area_width": width})


def gen_gap(tp: ThreePartitionInstance, c: int = 2, kind: str = SERVICE_TIME, *, strict: bool = True) -> ReductionOutput:
    """Single-vehicle construction handed to ``m`` vehicles: 1 turn iff yes."""
    makers = {SERVICE_TIME: gen_service_time, SHORTCUT: gen_shortcut}
    if kind not in makers:
        raise ValueError(f"gap construction must be one of {sorted(makers)}")
    red = makers[kind](tp, 1, c, strict=strict)
    red.instance = red.instance.replace(k=tp.m)
    red.kind, red.base = GAP, kind
    red.expected_tau_yes, red.expected_tau_no_lower_bound = 1, 3
    return red


def _base_kind(red: ReductionOutput) -> str:
    return red.base if red.kind == GAP else red.kind


# --------------------------------------------------------------------------
# yes direction
# --------------------------------------------------------------------------

def _asc(requests: Sequence[Request]) -> Subroute:
    return Subroute(Direction.ASC, subroute_waypoints(requests, Direction.ASC))


def _chunks(items: list, size: int) -> list[list]:
    return [items[x:x + size] for x in range(0, len(items), size)]


def _no_window_witness(red: ReductionOutput, groups: Partition) -> list[Route]:
    inst, tp, c = red.instance, red.tp, red.instance.c
    reqs = inst.by_id
    m = tp.m
    promise = red.ids_with("Promise")
    filters = sorted(red.ids_with("Filter"), key=lambda r: red.role_tags[r].j)
    mine, spare = promise[: (c - 1) * m], promise[(c - 1) * m:]
    by_i: dict[int, dict[str, list[int]]] = {}
    for rid, tag in red.role_tags.items():
        if tag.i is not None:
            by_i.setdefault(tag.i, {}).setdefault(tag.role, []).append(rid)
    long_left = {i: list(roles.get("LongPlug", [])) for i, roles in by_i.items()}
    subs = []
    for j, group in enumerate(groups):
        ids = mine[j * (c - 1):(j + 1) * (c - 1)] + [filters[j]]
        members = {i + 1 for i in group}
        for i in sorted(by_i):
            roles = by_i[i]
            if i in members:
                ids += roles.get("Value", []) + roles.get("ShortPlug", [])
            elif long_left[i]:
                ids.append(long_left[i].pop(0))
        subs.append(_asc([reqs[r] for r in sorted(ids)]))
    extra = [_asc([reqs[r] for r in chunk]) for chunk in _chunks(spare, c)]
    if red.kind == GAP:
        return [Route((s,)) for s in subs]
    routes = [join_routes([Route((s,)) for s in subs])]
    for chunk in _chunks(extra, m):
        routes.append(join_routes([Route((s,)) for s in chunk]))
    return routes


def _time_window_witness(red: ReductionOutput, groups: Partition) -> list[Route]:
    inst, tp = red.instance, red.tp
    reqs = inst.by_id
    k = inst.k
    routes = []
    for area in range(1, k + 1):
        tags = {rid: t for rid, t in red.role_tags.items() if t.area == area}
        value = {}
        sep = {}
        for rid, t in tags.items():
            (value.setdefault(t.i, []) if t.role == "Value" else sep.setdefault(t.j, [])).append(rid)
        parts = []
        for j, group in enumerate(groups, start=1):
            for i in sorted(group):
                parts.append(Route((_asc([reqs[r] for r in value[i + 1]]),)))
            parts.append(Route((_asc([reqs[r] for r in sep[j]]),)))
        routes.append(join_routes(parts))
    return routes


def witness_solution(red: ReductionOutput, partition: Sequence[Sequence[int]]) -> Solution:
    """The optimal solution that a valid partition induces."""
    groups = _check_partition(red.tp, partition)
    if red.kind == TIME_WINDOWS:
        routes = _time_window_witness(red, groups)
    else:
        routes = _no_window_witness(red, groups)
    tours = []
    for route in routes:
        check = check_route(route, red.instance)
        if not check:
            raise AssertionError(f"witness route infeasible: {check.reason} {check.detail}")
        tours.append(check.tour)
    return Solution(tuple(tours))


# --------------------------------------------------------------------------
# no direction
# --------------------------------------------------------------------------

class Verdict(str, Enum):
    CONFIRMED = "confirmed"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class NoCertificate:
    verdict: Verdict
    weights: tuple[int, ...]  # cost of each value block
    budget: int  # per-subroute allowance for value blocks
    assignment: tuple[int, ...] | None = None  # subroute per block, when one fits
    nodes: int = 0

    @property
    def confirmed(self) -> bool:
        return self.verdict is Verdict.CONFIRMED


def _delay_allowance(red: ReductionOutput) -> int:
    """Extra ride time the promise grants a promise request."""
    inst = red.instance
    p = inst.by_id[red.ids_with("Promise")[0]]
    direct = inst.dist(p.o, p.d)
    extra = (inst.alpha - 1) * direct
    if extra.denominator != 1:
        raise ValueError("promise allowance is not integral; not a generated instance")
    return int(extra)


def certify_no(red: ReductionOutput, max_nodes: int = 1_000_000) -> NoCertificate:
    """Check that no split of the value blocks over ``m`` subroutes fits.

    Every one of the ``m`` filter-carrying subroutes holds one promise ride
    whose delay is capped by the service promise; each value block
    contributes a fixed share of that delay. If no assignment of all blocks
    respects the cap in every subroute, ``m`` ascending subroutes cannot
    serve everything, so at least ``m + 1`` are needed.
    """
    inst, m = red.instance, red.tp.m
    kind = _base_kind(red)
    if kind not in (SERVICE_TIME, SHORTCUT):
        raise ValueError(f"no certificate for {red.kind} constructions")
    allowance = _delay_allowance(red)
    blocks: dict[int, int] = {}
    if kind == SERVICE_TIME:
        for rid in red.ids_with("Value"):
            i = red.role_tags[rid].i
            blocks[i] = blocks.get(i, 0) + 1
        n = len({red.role_tags[r].i for r in red.ids_with("ShortPlug")})
        # filter and one plug per block cost 2 each, other promise riders 1 each
        budget = allowance - 2 * (1 + n) - (inst.c - 2)
        if budget % 2:
            raise ValueError("odd value budget; not a generated instance")
        budget //= 2
    else:
        for rid in red.ids_with("Value"):
            r = inst.by_id[rid]
            # the detour is the gap into the value origin, driven twice
            blocks[red.role_tags[rid].i] = inst.dist(r.o - 1, r.o)
        budget = allowance // 2
    weights = tuple(blocks[i] for i in sorted(blocks))
    where, nodes, hit = _fill_bins(weights, m, budget, max_nodes)
    if where is None and not hit:
        return NoCertificate(Verdict.CONFIRMED, weights, budget, None, nodes)
    return NoCertificate(Verdict.INCONCLUSIVE, weights, budget,
                         None if where is None else tuple(where), nodes)


def reduction_to_files(red: ReductionOutput, out: str | Path, meta: str | Path | None = None) -> None:
    dump_instance(red.instance, out)
    if meta is not None:
        red.write_metadata(meta)
