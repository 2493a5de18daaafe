"""Exact and greedy baselines used to score private runs.

Nothing here is private. These functions see the whole graph and exist to
measure the mechanisms, never to feed them (except ``MatchingTracker``, whose
value is a private input to the continual-release SVT).
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .graph import BMatching, Graph


class OracleSizeError(ValueError):
    """Input exceeds what an exact oracle is allowed to handle."""


MAX_EXACT_N = 5000
MAX_EXHAUSTIVE_N = 16


# ---------------------------------------------------------------- matching


def _augment_from(adj: Sequence[Sequence[int]], match: list[int], root: int) -> bool:
    """One Edmonds search from ``root``; augments ``match`` in place if a path exists."""
    n = len(adj)
    used = [False] * n
    parent = [-1] * n
    base = list(range(n))
    used[root] = True
    q = deque([root])

    def lca(a: int, b: int) -> int:
        seen = set()
        while True:
            a = base[a]
            seen.add(a)
            if match[a] == -1:
                break
            a = parent[match[a]]
        while True:
            b = base[b]
            if b in seen:
                return b
            b = parent[match[b]]

    def mark(v: int, b: int, child: int, blossom: set[int]) -> None:
        while base[v] != b:
            blossom.add(base[v])
            blossom.add(base[match[v]])
            parent[v] = child
            child = match[v]
            v = parent[match[v]]

    while q:
        v = q.popleft()
        for to in adj[v]:
            if base[v] == base[to] or match[v] == to:
                continue
            if to == root or (match[to] != -1 and parent[match[to]] != -1):
                cur = lca(v, to)
                blossom: set[int] = set()
                mark(v, cur, to, blossom)
                mark(to, cur, v, blossom)
                for i in range(n):
                    if base[i] in blossom:
                        base[i] = cur
                        if not used[i]:
                            used[i] = True
                            q.append(i)
            elif parent[to] == -1:
                parent[to] = v
                if match[to] == -1:
                    # flip the alternating path ending at `to`
                    x = to
                    while x != -1:
                        px = parent[x]
                        nxt = match[px]
                        match[x] = px
                        match[px] = x
                        x = nxt
                    return True
                used[match[to]] = True
                q.append(match[to])
    return False


def _pairs(match: Sequence[int]) -> set[tuple[int, int]]:
    return {(v, m) for v, m in enumerate(match) if m > v}


def max_matching_exact(g: Graph) -> tuple[int, set[tuple[int, int]]]:
    """Maximum-cardinality matching by Edmonds' blossom algorithm."""
    if g.n > MAX_EXACT_N:
        raise OracleSizeError(f"n={g.n} exceeds exact-matching limit {MAX_EXACT_N}")
    match = [-1] * g.n
    for u, v in g.edges():  # greedy warm start
        if match[u] == -1 and match[v] == -1:
            match[u], match[v] = v, u
    for v in range(g.n):
        if match[v] == -1 and g.adj[v]:
            _augment_from(g.adj, match, v)
    pairs = _pairs(match)
    return len(pairs), pairs


def max_matching_bruteforce(g: Graph) -> int:
    """Exhaustive maximum matching for tiny graphs; independent of the blossom code."""
    if g.n > MAX_EXHAUSTIVE_N:
        raise OracleSizeError(f"n={g.n} exceeds exhaustive limit {MAX_EXHAUSTIVE_N}")
    memo: dict[int, int] = {}

    def best(free: int) -> int:
        if free in memo:
            return memo[free]
        if free == 0:
            return 0
        v = (free & -free).bit_length() - 1
        rest = free & ~(1 << v)
        out = best(rest)
        for u in g.adj[v]:
            if rest >> u & 1:
                out = max(out, 1 + best(rest & ~(1 << u)))
        memo[free] = out
        return out

    return best((1 << g.n) - 1)


class MatchingTracker:
    """Maximum matching size under edge insertions.

    After inserting ``{u, v}`` into a graph whose matching was maximum, any
    augmenting path uses the new edge, so it suffices to search from ``u`` or
    ``v`` if one is free, and otherwise from free vertices in their component.
    """

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.match = [-1] * n
        self.size = 0

    def insert(self, u: int, v: int) -> int:
        self.adj[u].append(v)
        self.adj[v].append(u)
        m = self.match
        if m[u] == -1 and m[v] == -1:
            m[u], m[v] = v, u
            self.size += 1
            return self.size
        roots = [x for x in (u, v) if m[x] == -1]
        if not roots:
            roots = [x for x in self._component(u) if m[x] == -1 and self.adj[x]]
        for r in roots:
            if _augment_from(self.adj, m, r):
                self.size += 1
                break
        return self.size

    def _component(self, s: int) -> list[int]:
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in self.adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return sorted(seen)


# -------------------------------------------------------------- b-matching


def _caps(g: Graph, b: int | Sequence[int]) -> list[int]:
    if isinstance(b, (int, np.integer)):
        return [int(b)] * g.n
    if len(b) != g.n:
        raise ValueError("per-vertex b must have one entry per vertex")
    return [int(x) for x in b]


def bipartition(g: Graph) -> list[int] | None:
    """Two-colouring as a 0/1 list, or ``None`` if ``g`` has an odd cycle."""
    color = [-1] * g.n
    for s in range(g.n):
        if color[s] != -1:
            continue
        color[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for y in g.adj[x]:
                if color[y] == -1:
                    color[y] = 1 - color[x]
                    q.append(y)
                elif color[y] == color[x]:
                    return None
    return color


def b_matching_exhaustive(g: Graph, b: int | Sequence[int]) -> int:
    """Branch and bound over edge subsets with degree caps. Small graphs only."""
    if g.n > MAX_EXHAUSTIVE_N:
        raise OracleSizeError(f"n={g.n} exceeds exhaustive limit {MAX_EXHAUSTIVE_N}")
    caps = _caps(g, b)
    edges = g.edges()
    m = len(edges)
    best = [0]

    def rec(i: int, size: int, res: list[int]) -> None:
        if size > best[0]:
            best[0] = size
        if i == m:
            return
        # neither remaining edges nor half the residual capacity can be exceeded
        if size + min(m - i, sum(res) // 2) <= best[0]:
            return
        u, v = edges[i]
        if res[u] > 0 and res[v] > 0:
            res[u] -= 1
            res[v] -= 1
            rec(i + 1, size + 1, res)
            res[u] += 1
            res[v] += 1
        rec(i + 1, size, res)

    rec(0, 0, caps)
    return best[0]


def b_matching_flow(g: Graph, b: int | Sequence[int], left: Sequence[int] | None = None) -> int:
    """Maximum b-matching of a bipartite graph via integral max-flow.

    ``left`` is a 0/1 side label per vertex; computed by two-colouring if omitted.
    """
    caps = _caps(g, b)
    side = list(left) if left is not None else bipartition(g)
    if side is None:
        raise OracleSizeError("flow oracle needs a bipartite graph")
    n = g.n
    src, snk = n, n + 1
    rows, cols, vals = [], [], []
    for v in range(n):
        if side[v] == 0:
            rows.append(src)
            cols.append(v)
        else:
            rows.append(v)
            cols.append(snk)
        vals.append(caps[v])
    for u, v in g.edges():
        a, c = (u, v) if side[u] == 0 else (v, u)
        rows.append(a)
        cols.append(c)
        vals.append(1)
    mat = csr_matrix((np.asarray(vals, dtype=np.int32), (rows, cols)), shape=(n + 2, n + 2))
    return int(maximum_flow(mat, src, snk).flow_value)


def b_matching_gadget(g: Graph, b: int | Sequence[int]) -> int:
    """Exact maximum b-matching on general graphs through the classic vertex-copy gadget.

    Each vertex gets ``b(v)`` copies; each edge ``uv`` becomes a path
    ``copies(u) - e_u - e_v - copies(v)``. The gadget's maximum matching
    equals ``|E|`` plus the maximum b-matching.
    """
    caps = _caps(g, b)
    offs = np.concatenate([[0], np.cumsum(caps)]).astype(int)
    base = int(offs[-1])
    edges = g.edges()
    gad: list[tuple[int, int]] = []
    for i, (u, v) in enumerate(edges):
        eu, ev = base + 2 * i, base + 2 * i + 1
        gad.append((eu, ev))
        gad.extend((c, eu) for c in range(offs[u], offs[u + 1]))
        gad.extend((c, ev) for c in range(offs[v], offs[v + 1]))
    h = Graph.from_edges(base + 2 * len(edges), gad)
    size, _ = max_matching_exact(h)
    return size - len(edges)


def max_b_matching_exact_small(g: Graph, b: int | Sequence[int]) -> int:
    """Maximum b-matching size: exhaustive for n <= 16, flow for bipartite n <= 2000."""
    if g.n <= MAX_EXHAUSTIVE_N:
        return b_matching_exhaustive(g, b)
    if g.n <= 2000:
        side = bipartition(g)
        if side is not None:
            return b_matching_flow(g, b, side)
    raise OracleSizeError(
        f"n={g.n}: exact b-matching needs n <= {MAX_EXHAUSTIVE_N} or a bipartite graph with n <= 2000"
    )


def greedy_maximal_b_matching(g: Graph, bprime: int, order: Sequence[int] | None = None) -> BMatching:
    """Vertex-order greedy: each vertex in turn grabs neighbours (ascending ID) while both have room."""
    if bprime < 1:
        raise ValueError("b' must be at least 1")
    order = range(g.n) if order is None else order
    deg = [0] * g.n
    out: set[tuple[int, int]] = set()
    for v in order:
        for u in g.adj[v]:
            if deg[v] >= bprime:
                break
            key = (min(u, v), max(u, v))
            if deg[u] < bprime and key not in out:
                out.add(key)
                deg[u] += 1
                deg[v] += 1
    return BMatching(out, bprime)


# ------------------------------------------------------------ vertex cover


def min_vertex_cover_exact(g: Graph) -> int:
    """Minimum vertex cover size by branching on a max-degree vertex (n <= 20)."""
    if g.n > 20:
        raise OracleSizeError(f"n={g.n} exceeds the exhaustive vertex-cover limit 20")
    nbr = [0] * g.n
    for v in range(g.n):
        for u in g.adj[v]:
            nbr[v] |= 1 << u
    best = [g.n]

    def rec(alive: int, size: int) -> None:
        if size >= best[0]:
            return
        pick, pdeg = -1, 0
        a = alive
        while a:
            v = (a & -a).bit_length() - 1
            a &= a - 1
            d = bin(nbr[v] & alive).count("1")
            if d > pdeg:
                pick, pdeg = v, d
        if pdeg == 0:
            best[0] = size
            return
        rec(alive & ~(1 << pick), size + 1)
        others = nbr[pick] & alive
        rec(alive & ~others & ~(1 << pick), size + bin(others).count("1"))

    rec((1 << g.n) - 1, 0)
    return best[0]


def cover_is_valid(g: Graph, cover: set[int]) -> bool:
    return all(u in cover or v in cover for u, v in g.edges())


# ---------------------------------------------------------------- audits


def maximality_violations(g: Graph, matched: Sequence[set[int]], bprime: int) -> list[int]:
    """Vertices below ``b'`` that still have an unmatched neighbour below ``b'``."""
    bad = []
    for v in range(g.n):
        if len(matched[v]) >= bprime:
            continue
        if any(u not in matched[v] and len(matched[u]) < bprime for u in g.adj[v]):
            bad.append(v)
    return bad
