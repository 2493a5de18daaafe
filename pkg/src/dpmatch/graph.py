"""Static undirected graphs, edge-list I/O and small b-matching containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge-list text or invalid edge sets."""


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``adj[v]`` is the ascending tuple of neighbours of ``v``.
    """

    n: int
    adj: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        if n < 0:
            raise GraphFormatError(f"vertex count must be non-negative, got {n}")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            if v in nbrs[u]:
                raise GraphFormatError(f"duplicate edge ({min(u, v)}, {max(u, v)})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, tuple(() for _ in range(n)))

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adj), dtype=np.int64, count=self.n)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    @cached_property
    def edge_array(self) -> np.ndarray:
        """``(m, 2)`` int64 array of edges with ``u < v``, lexicographically sorted."""
        e = self.edges()
        if not e:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(e, dtype=np.int64)

    @cached_property
    def _edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges())

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self._edge_set

    def subgraph_edges(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Graph on the same vertex set restricted to ``edges``."""
        return Graph.from_edges(self.n, edges)

    def without_vertex_edges(self, v: int) -> "Graph":
        """Node-neighbour of this graph: ``v`` kept but isolated."""
        return Graph.from_edges(self.n, [(a, b) for a, b in self.edges() if v not in (a, b)])

    def check(self) -> None:
        """Structural audit: symmetry, simplicity, sorted lists."""
        for v, nb in enumerate(self.adj):
            if list(nb) != sorted(set(nb)):
                raise GraphFormatError(f"adjacency of {v} is not strictly ascending")
            for u in nb:
                if u == v:
                    raise GraphFormatError(f"self-loop at vertex {v}")
                if v not in self.adj[u]:
                    raise GraphFormatError(f"asymmetric adjacency between {v} and {u}")


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class BMatching:
    """Edge set with a degree cap (uniform int or per-vertex sequence)."""

    edges: set[tuple[int, int]] = field(default_factory=set)
    b_cap: int | Sequence[int] = 1

    def __post_init__(self) -> None:
        self.edges = {_norm(u, v) for u, v in self.edges}

    @property
    def size(self) -> int:
        return len(self.edges)

    def cap(self, v: int) -> int:
        return self.b_cap if isinstance(self.b_cap, int) else int(self.b_cap[v])

    def degree_map(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for u, v in self.edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        return deg

    def is_valid(self, g: Graph) -> bool:
        if any(not g.has_edge(u, v) for u, v in self.edges):
            return False
        return all(d <= self.cap(v) for v, d in self.degree_map().items())

    def is_maximal(self, g: Graph) -> bool:
        deg = self.degree_map()
        for u, v in g.edges():
            if (u, v) in self.edges:
                continue
            if deg.get(u, 0) < self.cap(u) and deg.get(v, 0) < self.cap(v):
                return False
        return True


def load_edge_list(text: str) -> Graph:
    """Parse ``"n"`` followed by ``"u v"`` lines. Blank lines and ``#`` comments are skipped."""
    g, _ = _parse(text, allow_sides=False)
    return g


def load_bipartite_edge_list(text: str) -> tuple[Graph, int]:
    """Parse the bipartite variant whose header is ``"n n_left"``.

    Vertices ``0..n_left-1`` are items, the rest bidders. Every edge must cross sides.
    """
    g, n_left = _parse(text, allow_sides=True)
    if n_left is None:
        raise GraphFormatError("line 1: bipartite header must be 'n n_left'")
    for u, v in g.edges():
        if (u < n_left) == (v < n_left):
            raise GraphFormatError(f"edge ({u}, {v}) does not cross the bipartition")
    return g, n_left


def _parse(text: str, allow_sides: bool) -> tuple[Graph, int | None]:
    header: list[int] | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected integers, got {raw!r}") from None
        if header is None:
            if len(vals) == 1 or (allow_sides and len(vals) == 2):
                header = vals
                if vals[0] < 0 or (len(vals) == 2 and not 0 <= vals[1] <= vals[0]):
                    raise GraphFormatError(f"line {lineno}: bad header {raw!r}")
                continue
            raise GraphFormatError(f"line {lineno}: bad header {raw!r}")
        if len(vals) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        u, v = vals
        n = header[0]
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {lineno}: vertex out of range [0, {n})")
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
        key = _norm(u, v)
        if key in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge {key[0]} {key[1]}")
        seen.add(key)
        edges.append(key)
    if header is None:
        raise GraphFormatError("line 1: missing vertex-count header")
    n_left = header[1] if len(header) == 2 else None
    return Graph.from_edges(header[0], edges), n_left


def dump_edge_list(g: Graph, n_left: int | None = None) -> str:
    head = f"{g.n}" if n_left is None else f"{g.n} {n_left}"
    return "\n".join([head] + [f"{u} {v}" for u, v in g.edges()]) + "\n"
