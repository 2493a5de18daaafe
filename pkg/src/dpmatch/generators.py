"""Seeded graph families for experiments, plus degeneracy."""

from __future__ import annotations

import heapq
from dataclasses import asdict, dataclass, fields

import numpy as np

from .graph import Graph

KINDS = ("perfect-matching", "star", "erdos-renyi", "forest-union", "random-bipartite", "path")


@dataclass(frozen=True)
class GraphFamilySpec:
    kind: str
    n: int = 0
    p: float = 0.0
    alpha: int = 1
    n_left: int = 0
    n_right: int = 0
    seed: int = 0

    def to_config(self) -> dict[str, str]:
        return {k: str(v) for k, v in asdict(self).items()}

    @classmethod
    def from_config(cls, cfg: dict[str, str]) -> "GraphFamilySpec":
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown generator key {k!r}")
            out[key] = v if key == "kind" else (float(v) if key == "p" else int(v))
        return cls(**out)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _random_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform labelled spanning tree of K_n via a random Pruefer sequence."""
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def generate(spec: GraphFamilySpec) -> Graph:
    """Build the graph described by ``spec``; same spec and seed give the same graph."""
    k, n = spec.kind, spec.n
    rng = _rng(spec.seed)
    if k == "perfect-matching":
        if n < 0 or n % 2:
            raise ValueError("perfect-matching needs an even n >= 0")
        perm = rng.permutation(n)
        return Graph.from_edges(n, [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(n // 2)])
    if k == "star":
        if n < 1:
            raise ValueError("star needs n >= 1")
        return Graph.from_edges(n, [(0, v) for v in range(1, n)])
    if k == "path":
        if n < 1:
            raise ValueError("path needs n >= 1")
        return Graph.from_edges(n, [(v, v + 1) for v in range(n - 1)])
    if k == "erdos-renyi":
        if n < 1 or not 0.0 <= spec.p <= 1.0:
            raise ValueError("erdos-renyi needs n >= 1 and p in [0, 1]")
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(iu.size) < spec.p
        return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
    if k == "forest-union":
        if n < 1 or spec.alpha < 1:
            raise ValueError("forest-union needs n >= 1 and alpha >= 1")
        es: set[tuple[int, int]] = set()
        for _ in range(spec.alpha):
            for u, v in _random_tree(n, rng):
                es.add((min(u, v), max(u, v)))
        return Graph.from_edges(n, sorted(es))
    if k == "random-bipartite":
        nl, nr = spec.n_left, spec.n_right
        if nl < 0 or nr < 0 or not 0.0 <= spec.p <= 1.0:
            raise ValueError("random-bipartite needs n_left, n_right >= 0 and p in [0, 1]")
        keep = rng.random((nl, nr)) < spec.p
        ii, jj = np.nonzero(keep)
        return Graph.from_edges(nl + nr, zip(ii.tolist(), (jj + nl).tolist()))
    raise ValueError(f"unknown graph kind {k!r}; expected one of {KINDS}")


def degeneracy(g: Graph) -> int:
    """Largest k with a non-empty k-core, by bucketed min-degree peeling."""
    n = g.n
    if n == 0:
        return 0
    deg = [len(a) for a in g.adj]
    maxd = max(deg)
    buckets: list[set[int]] = [set() for _ in range(maxd + 1)]
    for v, d in enumerate(deg):
        buckets[d].add(v)
    removed = [False] * n
    best = 0
    d = 0
    for _ in range(n):
        d = max(0, d - 1)
        while not buckets[d]:
            d += 1
        v = buckets[d].pop()
        removed[v] = True
        best = max(best, d)
        for u in g.adj[v]:
            if not removed[u]:
                du = deg[u]
                buckets[du].discard(u)
                deg[u] = du - 1
                buckets[du - 1].add(u)
    return best
