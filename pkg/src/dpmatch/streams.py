"""Insertion streams: parsing and order validation.

Text format, one update per line: ``E u v`` (edge), ``N v`` (node arrival)
or ``-`` (empty update). An optional first line ``n <count>`` fixes the
vertex count; otherwise it is one more than the largest id seen.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

EDGE, NODE, EMPTY = "E", "N", "-"


class StreamError(ValueError):
    def __init__(self, msg: str, t: int | None = None):
        super().__init__(msg if t is None else f"timestep {t}: {msg}")
        self.t = t


@dataclass(frozen=True)
class Update:
    kind: str
    u: int = -1
    v: int = -1

    def to_line(self) -> str:
        if self.kind == EDGE:
            return f"E {self.u} {self.v}"
        if self.kind == NODE:
            return f"N {self.u}"
        return "-"


@dataclass
class Stream:
    n: int
    updates: list[Update]

    def __len__(self) -> int:
        return len(self.updates)

    def dumps(self) -> str:
        return "\n".join([f"n {self.n}"] + [u.to_line() for u in self.updates]) + "\n"


def parse_stream(text: str) -> Stream:
    ups: list[Update] = []
    n = None
    top = -1
    t = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "n" and len(parts) == 2 and not ups and n is None:
                n = int(parts[1])
                continue
            t += 1
            if parts == ["-"]:
                ups.append(Update(EMPTY))
            elif parts[0] == "E" and len(parts) == 3:
                u, v = int(parts[1]), int(parts[2])
                ups.append(Update(EDGE, u, v))
                top = max(top, u, v)
            elif parts[0] == "N" and len(parts) == 2:
                u = int(parts[1])
                ups.append(Update(NODE, u))
                top = max(top, u)
            else:
                raise ValueError
        except ValueError:
            raise StreamError(f"line {lineno}: cannot parse {raw.strip()!r}", t) from None
    if n is None:
        n = top + 1
    for t, x in enumerate(ups, start=1):
        ids = (x.u, x.v) if x.kind == EDGE else (x.u,) if x.kind == NODE else ()
        for v in ids:
            if not 0 <= v < n:
                raise StreamError(f"vertex {v} outside [0, {n})", t)
    return Stream(n, ups)


def validate_edge_order(stream: Stream) -> None:
    """Edge-order streams: only edges and empty updates, no self-loops or repeats."""
    seen: set[tuple[int, int]] = set()
    for t, x in enumerate(stream.updates, start=1):
        if x.kind == NODE:
            raise StreamError("node arrival in an edge-order stream", t)
        if x.kind == EDGE:
            _check_edge(x, stream.n, seen, t)


def _check_edge(x: Update, n: int, seen: set, t: int) -> tuple[int, int]:
    if x.u == x.v:
        raise StreamError(f"self-loop at {x.u}", t)
    if not (0 <= x.u < n and 0 <= x.v < n):
        raise StreamError(f"edge ({x.u}, {x.v}) outside n={n}", t)
    key = (min(x.u, x.v), max(x.u, x.v))
    if key in seen:
        raise StreamError(f"edge {key} inserted twice", t)
    seen.add(key)
    return key


class AdjacencyValidator:
    """Online check of adjacency-list order.

    ``lists="back"``: each edge appears once, under its later endpoint, and
    joins the current node to one that already arrived. ``lists="both"``: each
    edge appears under both endpoints. Either way every edge must touch the
    most recent arrival.
    """

    def __init__(self, n: int, lists: str = "back"):
        if lists not in ("back", "both"):
            raise ValueError(f"unknown list mode {lists!r}")
        self.n, self.lists = n, lists
        self.arrived: set[int] = set()
        self.w: int | None = None
        self.listed: set[tuple[int, int]] = set()  # (owner, other)
        self.t = 0

    def feed(self, x: Update) -> None:
        self.t += 1
        t = self.t
        if x.kind == EMPTY:
            return
        if x.kind == NODE:
            if not 0 <= x.u < self.n:
                raise StreamError(f"node {x.u} outside n={self.n}", t)
            if x.u in self.arrived:
                raise StreamError(f"node {x.u} arrives twice", t)
            self.arrived.add(x.u)
            self.w = x.u
            return
        if self.w is None:
            raise StreamError("edge before any node arrival", t)
        if self.w not in (x.u, x.v) or x.u == x.v:
            raise StreamError(f"edge ({x.u}, {x.v}) is not adjacent to current node {self.w}", t)
        other = x.v if x.u == self.w else x.u
        if not 0 <= other < self.n:
            raise StreamError(f"edge ({x.u}, {x.v}) outside n={self.n}", t)
        if (self.w, other) in self.listed:
            raise StreamError(f"edge ({x.u}, {x.v}) listed twice under {self.w}", t)
        if self.lists == "back":
            if other not in self.arrived:
                raise StreamError(f"edge ({x.u}, {x.v}) names node {other}, which has not arrived", t)
            if (other, self.w) in self.listed:
                raise StreamError(f"edge ({x.u}, {x.v}) already listed under {other}", t)
        self.listed.add((self.w, other))


def validate_adjacency_order(stream: Stream, lists: str = "back") -> None:
    val = AdjacencyValidator(stream.n, lists)
    for x in stream.updates:
        val.feed(x)


def edge_stream(n: int, edges: Iterable[tuple[int, int]]) -> Stream:
    return Stream(n, [Update(EDGE, int(u), int(v)) for u, v in edges])


def adjacency_stream(n: int, order: Iterable[int], adj, lists: str = "back") -> Stream:
    """Build an adjacency-list stream from adjacency lists and an arrival order."""
    ups: list[Update] = []
    pos: dict[int, int] = {}
    for i, v in enumerate(order):
        pos[v] = i
    for v in sorted(pos, key=pos.get):
        ups.append(Update(NODE, v))
        for u in adj[v]:
            if lists == "both" or pos.get(u, len(pos)) < pos[v]:
                ups.append(Update(EDGE, v, u))
    return Stream(n, ups)
