"""Degree-capped contraction sparsifiers and their thresholds.

Every vertex marks its first ``min(deg, lam)`` incident edges under a total
order on pairs; an edge survives when both endpoints marked it. Outputs are
for internal use only and never go into a transcript.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class SparsifyConfig:
    """``rank`` maps a normalised pair ``(lo, hi)`` to its position; ``None`` is lexicographic."""

    lam: int
    rank: Mapping[tuple[int, int], int] | None = None

    def __post_init__(self) -> None:
        if int(self.lam) != self.lam or self.lam < 1:
            raise ValueError(f"threshold must be a positive integer, got {self.lam}")


def _check_eta(eta: float) -> None:
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")


def lambda_matching(alpha: float, eta: float) -> int:
    _check_eta(eta)
    if alpha < 1:
        raise ValueError("arboricity bound must be at least 1")
    return int(np.ceil(10 * alpha * (1 + 5 / eta) - 1e-9))


def lambda_b_matching(alpha: float, eta: float, b: int) -> int:
    if b < 1:
        raise ValueError("b must be at least 1")
    return lambda_matching(alpha, eta) + (int(b) - 1)


def lambda_vc(alpha: float, eta: float) -> int:
    _check_eta(eta)
    if alpha < 1:
        raise ValueError("arboricity bound must be at least 1")
    return int(np.ceil(2 * alpha * (1 + 1 / eta) - 1e-9))


def _marked(g: Graph, cfg: SparsifyConfig) -> list[set[int]]:
    lam = int(cfg.lam)
    out = []
    for v, nb in enumerate(g.adj):
        if len(nb) <= lam:
            out.append(set(nb))
        elif cfg.rank is None:
            out.append(set(nb[:lam]))  # lexicographic on (min, max) is neighbour-ID order
        else:
            ranked = sorted(nb, key=lambda u: cfg.rank[(min(u, v), max(u, v))])
            out.append(set(ranked[:lam]))
    return out


def contraction_sparsify(g: Graph, cfg: SparsifyConfig | int) -> Graph:
    if not isinstance(cfg, SparsifyConfig):
        cfg = SparsifyConfig(int(cfg))
    marks = _marked(g, cfg)
    return Graph.from_edges(g.n, [(u, v) for u, v in g.edges() if v in marks[u] and u in marks[v]])


def edge_edit_distance(h1: Graph, h2: Graph) -> int:
    if h1.n != h2.n:
        raise ValueError(f"vertex sets differ: {h1.n} vs {h2.n}")
    return len(set(h1.edges()) ^ set(h2.edges()))


def high_degree_vertices(g: Graph, lam: int) -> set[int]:
    """``{v : deg(v) > lam}``."""
    return set(np.flatnonzero(g.degrees > lam).tolist())


def stability_bound(g: Graph, v: int, lam: int) -> int:
    """Edit-distance bound between the sparsifiers of ``g`` and ``g`` minus ``v``'s edges.

    Dropping ``v`` removes at most ``min(lam, deg v)`` kept edges, and each
    neighbour whose mark window slides past ``v`` can gain one new kept edge.
    """
    nb = g.adj[v]
    return min(lam, len(nb)) + sum(1 for w in nb if len(g.adj[w]) > lam)


class OnlineSparsifier:
    """Incremental sparsifier under arrival order.

    An arriving edge is marked by an endpoint that has seen fewer than
    ``lam`` incident edges so far, so the kept set equals the batch sparsifier
    with arrival rank as the pair order.
    """

    def __init__(self, n: int, lam: int):
        if lam < 1:
            raise ValueError("threshold must be at least 1")
        self.lam = int(lam)
        self.seen = np.zeros(n, dtype=np.int64)
        self.kept: list[tuple[int, int]] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    @property
    def n(self) -> int:
        return self.seen.size

    def grow(self, n: int) -> None:
        if n > self.n:
            self.seen = np.concatenate([self.seen, np.zeros(n - self.n, dtype=np.int64)])
            self.adj.extend([] for _ in range(n - len(self.adj)))

    def insert(self, u: int, v: int) -> bool:
        """Process one edge; returns whether it was kept."""
        keep = self.seen[u] < self.lam and self.seen[v] < self.lam
        self.seen[u] += 1
        self.seen[v] += 1
        if keep:
            self.kept.append((min(u, v), max(u, v)))
            self.adj[u].append(v)
            self.adj[v].append(u)
        return bool(keep)

    def graph(self) -> Graph:
        return Graph.from_edges(self.n, self.kept)
