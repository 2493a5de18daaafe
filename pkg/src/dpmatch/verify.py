"""Post-hoc audits of decoded solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .billboard import ImplicitSolution
from .graph import Graph
from .oracles import maximality_violations


@dataclass
class VerifyReport:
    ok: bool
    problems: list[str] = field(default_factory=list)
    pair: tuple[int, int] | None = None
    vertex: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def _decoded(sol: ImplicitSolution | Sequence[set[int]], g: Graph) -> list[set[int]]:
    if isinstance(sol, ImplicitSolution):
        return sol.decode_all(g.adj)
    return [set(m) for m in sol]


def verify_b_matching(sol: ImplicitSolution | Sequence[set[int]], g: Graph, b: float) -> VerifyReport:
    """Check decoded sets lie inside N(v), agree across endpoints, and respect the cap ``b``.

    Reports the first offending pair or vertex.
    """
    M = _decoded(sol, g)
    if len(M) != g.n:
        return VerifyReport(False, [f"decoded {len(M)} vertices, graph has {g.n}"])
    rep = VerifyReport(True)
    for v, mv in enumerate(M):
        for u in sorted(mv):
            if not (0 <= u < g.n) or not g.has_edge(u, v):
                rep.ok = False
                rep.pair = rep.pair or (min(u, v), max(u, v))
                rep.problems.append(f"pair ({min(u, v)}, {max(u, v)}) is not an edge")
            elif v not in M[u]:
                rep.ok = False
                rep.pair = rep.pair or (min(u, v), max(u, v))
                rep.problems.append(f"pair ({min(u, v)}, {max(u, v)}) decoded by {v} only")
    for v, mv in enumerate(M):
        if len(mv) > b:
            rep.ok = False
            rep.vertex = v if rep.vertex is None else rep.vertex
            rep.problems.append(f"vertex {v} has degree {len(mv)} > b={b}")
    return rep


def verify_maximality(sol: ImplicitSolution | Sequence[set[int]], g: Graph, bprime: int) -> VerifyReport:
    M = _decoded(sol, g)
    bad = maximality_violations(g, M, bprime)
    if not bad:
        return VerifyReport(True)
    return VerifyReport(False, [f"vertex {v} below b'={bprime} with a free neighbour below b'" for v in bad],
                        vertex=bad[0])


def matching_size(sol: ImplicitSolution | Sequence[set[int]], g: Graph) -> int:
    return sum(len(m) for m in _decoded(sol, g)) // 2
