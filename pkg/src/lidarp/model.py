"""Domain types for line-based dial-a-ride instances and their JSON formats.

Stops are 0-based indices along the line. Distances are integer time units
held in a full symmetric matrix. The service promise factor ``alpha`` is an
exact :class:`fractions.Fraction` (``None`` means no promise); a latest
drop-off of ``None`` means no deadline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Hashable, Iterator, Sequence

from .errors import (
    BadAlpha,
    BadStopIndex,
    BadWindow,
    DuplicateRequestId,
    InvalidThreePartition,
    MalformedInstance,
    MalformedSolution,
    MonotoneViolation,
    NonSymmetricDistances,
    ZeroDistance,
)

RequestId = Hashable


class Direction(str, Enum):
    ASC = "asc"
    DESC = "desc"

    @property
    def opposite(self) -> Direction:
        return Direction.DESC if self is Direction.ASC else Direction.ASC

    def ahead(self, a: int, b: int) -> bool:
        """True if stop ``b`` is not behind stop ``a`` when driving this way."""
        return b >= a if self is Direction.ASC else b <= a


class Kind(str, Enum):
    PICKUP = "pickup"
    DROPOFF = "dropoff"


@dataclass(frozen=True)
class Line:
    h: int
    dist: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        _check_line(self.h, self.dist)

    @classmethod
    def from_gaps(cls, gaps: Sequence[int]) -> Line:
        """Shortcut-free line whose distances are sums of consecutive gaps."""
        h = len(gaps) + 1
        prefix = [0]
        for g in gaps:
            prefix.append(prefix[-1] + g)
        dist = tuple(tuple(abs(prefix[j] - prefix[i]) for j in range(h)) for i in range(h))
        return cls(h, dist)

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[int]]) -> Line:
        return cls(len(matrix), tuple(tuple(row) for row in matrix))

    @property
    def gaps(self) -> tuple[int, ...]:
        return tuple(self.dist[i][i + 1] for i in range(self.h - 1))

    @cached_property
    def shortcut_free(self) -> bool:
        return _path_additive(self.h, self.dist)


def _path_additive(h, dist) -> bool:
    for i in range(h):
        acc = 0
        for j in range(i + 1, h):
            acc += dist[j - 1][j]
            if dist[i][j] != acc:
                return False
    return True


def _check_line(h, dist):
    if not isinstance(h, int) or h < 2:
        raise MalformedInstance(f"a line needs at least 2 stops, got {h!r}")
    if len(dist) != h or any(len(row) != h for row in dist):
        raise MalformedInstance("distance matrix must be h x h")
    for i in range(h):
        for j in range(h):
            v = dist[i][j]
            if not isinstance(v, int) or isinstance(v, bool):
                raise MalformedInstance(f"distance [{i}][{j}] is not an integer")
            if i == j:
                if v != 0:
                    raise MalformedInstance(f"diagonal distance [{i}][{i}] must be 0")
            elif v < 1:
                raise ZeroDistance(f"distance [{i}][{j}] = {v} must be >= 1")
            if v != dist[j][i]:
                raise NonSymmetricDistances(f"distance [{i}][{j}] != [{j}][{i}]")
    if _path_additive(h, dist):
        return
    for i in range(h):
        for j in range(i + 2, h):
            for l in range(i + 1, j):
                if dist[i][j] > dist[i][l] + dist[l][j]:
                    raise MonotoneViolation(
                        f"dist[{i}][{j}] = {dist[i][j]} exceeds the path through stop {l}"
                    )


@dataclass(frozen=True)
class Request:
    id: RequestId
    o: int
    d: int
    e: int = 0
    l: int | None = None

    @property
    def direction(self) -> Direction:
        return Direction.ASC if self.o < self.d else Direction.DESC

    @property
    def windowed(self) -> bool:
        return self.e > 0 or self.l is not None

    @property
    def signature(self) -> tuple[int, int, int, int | None]:
        """Copies of a request share the same signature."""
        return (self.o, self.d, self.e, self.l)

    def stop(self, kind: Kind) -> int:
        return self.o if kind is Kind.PICKUP else self.d


def direction_of(request: Request) -> Direction:
    return request.direction


def overlaps(p: Request, q: Request) -> bool:
    """Same direction and the open intervals between origin and destination meet."""
    if p.direction is not q.direction:
        return False
    lo_p, hi_p = sorted((p.o, p.d))
    lo_q, hi_q = sorted((q.o, q.d))
    return max(lo_p, lo_q) < min(hi_p, hi_q)


@dataclass(frozen=True)
class Instance:
    line: Line
    requests: tuple[Request, ...]
    k: int = 1
    c: int = 1
    t_s: int = 0
    t_turn: int = 0
    alpha: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        if self.alpha is not None and not isinstance(self.alpha, Fraction):
            object.__setattr__(self, "alpha", Fraction(self.alpha))
        _check_instance(self)

    @property
    def h(self) -> int:
        return self.line.h

    @property
    def n(self) -> int:
        return len(self.requests)

    @cached_property
    def by_id(self) -> dict[RequestId, Request]:
        return {r.id: r for r in self.requests}

    @cached_property
    def index_of(self) -> dict[RequestId, int]:
        return {r.id: i for i, r in enumerate(self.requests)}

    def dist(self, a: int, b: int) -> int:
        return self.line.dist[a][b]

    @property
    def has_time_windows(self) -> bool:
        return any(r.windowed for r in self.requests)

    @property
    def horizon(self) -> int | None:
        """``max l + 1`` when every request has a deadline, else ``None``."""
        if any(r.l is None for r in self.requests):
            return None
        return max((r.l for r in self.requests), default=-1) + 1

    def max_ride(self, request: Request) -> int | None:
        """Largest integer ride time allowed by the service promise."""
        if self.alpha is None:
            return None
        a = self.alpha
        return (a.numerator * self.dist(request.o, request.d)) // a.denominator

    def replace(self, **changes) -> Instance:
        fields = dict(
            line=self.line, requests=self.requests, k=self.k, c=self.c,
            t_s=self.t_s, t_turn=self.t_turn, alpha=self.alpha,
        )
        fields.update(changes)
        return Instance(**fields)


def _check_instance(inst: Instance):
    for name in ("k", "c"):
        v = getattr(inst, name)
        if not isinstance(v, int) or v < 1:
            raise MalformedInstance(f"{name} must be a positive integer, got {v!r}")
    for name in ("t_s", "t_turn"):
        v = getattr(inst, name)
        if not isinstance(v, int) or v < 0:
            raise MalformedInstance(f"{name} must be a non-negative integer, got {v!r}")
    if inst.alpha is not None and inst.alpha < 1:
        raise BadAlpha(f"alpha = {inst.alpha} must be >= 1")
    seen = set()
    for r in inst.requests:
        if r.id in seen:
            raise DuplicateRequestId(f"request id {r.id!r} used twice")
        seen.add(r.id)
        for s in (r.o, r.d):
            if not isinstance(s, int) or not 0 <= s < inst.h:
                raise BadStopIndex(f"request {r.id!r}: stop {s!r} outside 0..{inst.h - 1}")
        if r.o == r.d:
            raise BadStopIndex(f"request {r.id!r}: origin equals destination")
        if not isinstance(r.e, int) or r.e < 0:
            raise BadWindow(f"request {r.id!r}: earliest pick-up {r.e!r} must be >= 0")
        if r.l is not None and (not isinstance(r.l, int) or r.l < r.e):
            raise BadWindow(f"request {r.id!r}: window [{r.e}, {r.l}] is empty")


@dataclass(frozen=True)
class Waypoint:
    request: RequestId
    kind: Kind
    time: int | None = None

    def timed(self, t: int | None) -> Waypoint:
        return Waypoint(self.request, self.kind, t)


@dataclass(frozen=True)
class Subroute:
    direction: Direction
    waypoints: tuple[Waypoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))

    @property
    def artificial(self) -> bool:
        return not self.waypoints


@dataclass(frozen=True)
class Route:
    """A vehicle's itinerary; a *tour* when every waypoint carries a time."""

    subroutes: tuple[Subroute, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "subroutes", tuple(self.subroutes))

    @property
    def turns(self) -> int:
        return len(self.subroutes)

    def placed(self) -> Iterator[tuple[int, Subroute, Waypoint]]:
        """Waypoints in order, with the index of their subroute."""
        for si, sub in enumerate(self.subroutes):
            for w in sub.waypoints:
                yield si, sub, w

    @property
    def waypoints(self) -> list[Waypoint]:
        return [w for _, _, w in self.placed()]

    @property
    def served(self) -> list[RequestId]:
        return [w.request for w in self.waypoints if w.kind is Kind.PICKUP]

    @property
    def is_tour(self) -> bool:
        return all(w.time is not None for w in self.waypoints)

    def untimed(self) -> Route:
        return Route(tuple(
            Subroute(s.direction, tuple(w.timed(None) for w in s.waypoints))
            for s in self.subroutes
        ))

    def with_times(self, times: Sequence[int]) -> Route:
        it = iter(times)
        return Route(tuple(
            Subroute(s.direction, tuple(w.timed(next(it)) for w in s.waypoints))
            for s in self.subroutes
        ))


@dataclass(frozen=True)
class Solution:
    tours: tuple[Route, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tours", tuple(self.tours))

    @property
    def served(self) -> int:
        return len({rid for t in self.tours for rid in t.served})

    @property
    def max_turns(self) -> int:
        return max((t.turns for t in self.tours), default=0)


@dataclass(frozen=True)
class ThreePartitionInstance:
    S: tuple[int, ...]
    m: int
    T: int

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(self.S))

    @property
    def n(self) -> int:
        return len(self.S)

    def check(self, strict: bool = True) -> None:
        """Raise :class:`InvalidThreePartition` unless the classic invariants hold.

        ``strict=False`` skips the per-value bounds ``T/4 < s < T/2``.
        """
        if self.m < 1 or len(self.S) != 3 * self.m:
            raise InvalidThreePartition(f"need 3m = {3 * self.m} values, got {len(self.S)}")
        if any(not isinstance(s, int) or s <= 0 for s in self.S):
            raise InvalidThreePartition("values must be positive integers")
        if sum(self.S) != self.m * self.T:
            raise InvalidThreePartition(
                f"sum of values {sum(self.S)} != m*T = {self.m * self.T}"
            )
        for s in self.S if strict else ():
            # T/4 < s < T/2, kept in integers
            if not (self.T < 4 * s and 2 * s < self.T):
                raise InvalidThreePartition(f"value {s} not strictly between T/4 and T/2")


# --------------------------------------------------------------------------
# JSON formats
# --------------------------------------------------------------------------

def validate_instance(raw: dict[str, Any]) -> Instance:
    """Build a validated :class:`Instance` from parsed instance JSON."""
    if not isinstance(raw, dict):
        raise MalformedInstance("instance must be a JSON object")
    try:
        h = raw["stops"]
        distances = raw["distances"]
        if not isinstance(distances, dict):
            raise MalformedInstance("'distances' must be an object")
        if "consecutive" in distances:
            gaps = distances["consecutive"]
            if not isinstance(h, int) or len(gaps) != h - 1:
                raise MalformedInstance("'consecutive' must list stops-1 gaps")
            if any(not isinstance(g, int) or isinstance(g, bool) for g in gaps):
                raise MalformedInstance("gaps must be integers")
            if any(g < 1 for g in gaps):
                raise ZeroDistance("consecutive gaps must be >= 1")
            line = Line.from_gaps(gaps)
        elif "matrix" in distances:
            line = Line.from_matrix(distances["matrix"])
            if line.h != h:
                raise MalformedInstance(f"matrix has {line.h} rows but stops = {h}")
        else:
            raise MalformedInstance("'distances' needs 'consecutive' or 'matrix'")
        alpha = raw.get("alpha")
        if alpha is not None:
            num, den = alpha["num"], alpha["den"]
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in (num, den)):
                raise MalformedInstance("alpha num/den must be integers")
            if den <= 0:
                raise BadAlpha("alpha denominator must be positive")
            alpha = Fraction(num, den)
        requests = []
        for rr in raw.get("requests", []):
            requests.append(Request(
                id=_hashable_id(rr["id"]), o=rr["o"], d=rr["d"],
                e=rr.get("e", 0), l=rr.get("l"),
            ))
        return Instance(
            line=line,
            requests=tuple(requests),
            k=raw.get("vehicles", 1),
            c=raw.get("capacity", 1),
            t_s=raw.get("service_time", 0),
            t_turn=raw.get("turn_time", 0),
            alpha=alpha,
        )
    except KeyError as exc:
        raise MalformedInstance(f"missing field {exc}") from None
    except TypeError as exc:
        raise MalformedInstance(str(exc)) from None


def _hashable_id(x):
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return x
    raise MalformedInstance(f"request id {x!r} must be an integer or a string")


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    if inst.line.shortcut_free:
        distances = {"consecutive": list(inst.line.gaps)}
    else:
        distances = {"matrix": [list(row) for row in inst.line.dist]}
    alpha = None
    if inst.alpha is not None:
        alpha = {"num": inst.alpha.numerator, "den": inst.alpha.denominator}
    return {
        "stops": inst.h,
        "distances": distances,
        "vehicles": inst.k,
        "capacity": inst.c,
        "service_time": inst.t_s,
        "turn_time": inst.t_turn,
        "alpha": alpha,
        "requests": [
            {"id": r.id, "o": r.o, "d": r.d, "e": r.e, "l": r.l} for r in inst.requests
        ],
    }


def solution_to_dict(sol: Solution) -> dict[str, Any]:
    return {"tours": [
        {"subroutes": [
            {
                "direction": s.direction.value,
                "waypoints": [
                    {"req": w.request, "kind": w.kind.value, "time": w.time}
                    for w in s.waypoints
                ],
            }
            for s in t.subroutes
        ]}
        for t in sol.tours
    ]}


def solution_from_dict(raw: dict[str, Any]) -> Solution:
    try:
        tours = []
        for t in raw["tours"]:
            subs = []
            for s in t["subroutes"]:
                wps = tuple(
                    Waypoint(_solution_id(w["req"]), Kind(w["kind"]), w.get("time"))
                    for w in s["waypoints"]
                )
                subs.append(Subroute(Direction(s["direction"]), wps))
            tours.append(Route(tuple(subs)))
        return Solution(tuple(tours))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSolution(f"bad solution document: {exc}") from None


def _solution_id(x):
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return x
    raise MalformedSolution(f"request reference {x!r} must be an integer or a string")


def load_instance(path: str | Path) -> Instance:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedInstance(f"{path}: not valid JSON ({exc})") from None
    return validate_instance(raw)


def dump_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_solution(path: str | Path) -> Solution:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedSolution(f"{path}: not valid JSON ({exc})") from None
    return solution_from_dict(raw)


def dump_solution(sol: Solution, path: str | Path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(sol), indent=1) + "\n")
