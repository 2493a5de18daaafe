"""Node-private matching and vertex cover: sparsify, then run an edge-private routine at a group-privacy budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .billboard import ImplicitSolution, Transcript
from .generators import degeneracy
from .graph import Graph
from .ledger import BudgetLedger
from .noise import NoiseSource
from .sequential import SequentialParams, run_sequential
from .sparsify import SparsifyConfig, contraction_sparsify, lambda_b_matching, lambda_vc


@dataclass(frozen=True)
class ArboricityEstimate:
    alpha: int
    eps_used: float
    mode: str  # "public-bound" or "private-estimate"


def private_arboricity_bound(g: Graph, eps: float, c: float, src: NoiseSource) -> ArboricityEstimate:
    """``ceil(degeneracy + Lap(1/eps) + c ln(n)/eps)``, at least 1.

    Degeneracy already upper-bounds arboricity and moves by at most one when
    a vertex is added or removed.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    offset = c * math.log(g.n) / eps if g.n > 1 else 0.0
    val = degeneracy(g) + src.laplace(1.0 / eps) + offset
    return ArboricityEstimate(max(1, math.ceil(val - 1e-9)), eps, "private-estimate")


def _resolve_alpha(g, eps, alpha, c, src) -> tuple[ArboricityEstimate, float]:
    """Returns the estimate and the budget left for the main routine."""
    if alpha is not None:
        if alpha < 1:
            raise ValueError("arboricity bound must be at least 1")
        return ArboricityEstimate(int(math.ceil(alpha)), 0.0, "public-bound"), eps
    est = private_arboricity_bound(g, eps / 2, c, src)
    return est, eps / 2


class SparsifiedSolution(ImplicitSolution):
    """An edge-private solution computed on the sparsifier.

    The curator rebuilds the sparsifier from the full adjacency to decode.
    """

    def __init__(self, inner: ImplicitSolution, lam: int):
        super().__init__(inner.transcript)
        self.inner = inner
        self.lam = lam

    def decode_all(self, adjacency_lists: Sequence[Sequence[int]]) -> list[set[int]]:
        g = Graph.from_edges(len(adjacency_lists), [(u, v) for u, nb in enumerate(adjacency_lists) for v in nb if u < v])
        return self.inner.decode_all(contraction_sparsify(g, self.lam).adj)

    def decode(self, v: int, adjacency: Sequence[int]) -> set[int]:
        raise TypeError("decoding on the sparsifier needs every adjacency list; use decode_all")


def node_dp_matching(
    g: Graph,
    eps: float,
    eta: float = 0.5,
    bprime: int = 1,
    alpha: float | None = None,
    seed: int = 0,
    *,
    c: float = 3.0,
    b: float | None = None,
    strict: bool = True,
    noise_mode: str = "real",
) -> tuple[Transcript, SparsifiedSolution]:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    src = NoiseSource(seed, noise_mode)
    est, eps_main = _resolve_alpha(g, eps, alpha, c, src.spawn("arboricity"))
    lam = lambda_b_matching(est.alpha, eta, bprime)
    h = contraction_sparsify(g, SparsifyConfig(lam))
    inner_eps = eps_main / (2 * lam)
    params = SequentialParams(inner_eps, eta if eta < 1 else 0.5, bprime, c, b, strict)
    tr, sol = run_sequential(h, params, seed, noise_mode=noise_mode)
    tr.header.update(alg="seq", node_dp=True, lam=lam, alpha=est.alpha)
    led = BudgetLedger(cap=eps)
    if est.mode == "private-estimate":
        led.charge(est.eps_used, "arboricity estimate")
    led.charge(2 * lam * inner_eps, f"edge-DP run x group size {2 * lam}")
    out = SparsifiedSolution(sol, lam)
    out.meta.update(sol.meta, ledger=led, lam=lam, alpha=est, inner_eps=inner_eps,
                    conditional_utility="utility holds only if the arboricity bound is at least the true arboricity")
    return tr, out


# ------------------------------------------------------------ vertex cover


def edge_private_vc(g: Graph, eps: float, src: NoiseSource) -> list[int]:
    """Randomised ordering whose earlier-endpoint cover has expected size ``(2 + 16/eps) OPT``.

    Step ``i`` picks a remaining vertex with probability proportional to its
    remaining degree plus ``(4/eps) sqrt(n / (n - i + 1))``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = g.n
    deg = g.degrees.astype(np.float64).copy()
    alive = np.ones(n, dtype=bool)
    order = []
    u = src.uniform(n)
    for i in range(1, n + 1):
        w = (4.0 / eps) * math.sqrt(n / (n - i + 1))
        score = np.where(alive, deg + w, 0.0)
        cum = np.cumsum(score)
        v = int(np.searchsorted(cum, u[i - 1] * cum[-1], side="right"))
        v = min(v, n - 1)
        while not alive[v]:  # guard against float ties at block edges
            v -= 1
        order.append(v)
        alive[v] = False
        for x in g.adj[v]:
            if alive[x]:
                deg[x] -= 1
        deg[v] = 0
    return order


def implied_cover(pi: Sequence[int], g: Graph) -> set[int]:
    """Earlier endpoint of every edge."""
    pos = np.empty(g.n, dtype=np.int64)
    pos[np.asarray(pi, dtype=np.int64)] = np.arange(g.n)
    return {u if pos[u] < pos[v] else v for u, v in g.edges()}


def decode_cover_edge(u: int, v: int, pi_pos: Any, lam: int, deg_u: int, deg_v: int) -> int:
    """Covering endpoint: a degree > lam endpoint if any, ties and the rest by earlier position."""
    hu, hv = deg_u > lam, deg_v > lam
    if hu != hv:
        return u if hu else v
    return u if pi_pos[u] < pi_pos[v] else v


@dataclass
class ImplicitVertexCover:
    pi: list[int]
    lam: int
    meta: dict[str, Any] = field(default_factory=dict)

    def position(self) -> np.ndarray:
        pos = np.empty(len(self.pi), dtype=np.int64)
        pos[np.asarray(self.pi, dtype=np.int64)] = np.arange(len(self.pi))
        return pos

    def cover_of(self, g: Graph) -> dict[tuple[int, int], int]:
        pos, deg = self.position(), g.degrees
        return {(u, v): decode_cover_edge(u, v, pos, self.lam, int(deg[u]), int(deg[v])) for u, v in g.edges()}

    def cover(self, g: Graph) -> set[int]:
        return set(self.cover_of(g).values())

    def to_record(self) -> dict:
        return {"kind": "vertex-cover", "n": len(self.pi), "lam": self.lam, "pi": list(self.pi)}


def node_dp_vertex_cover(
    g: Graph,
    eps: float,
    alpha: float | None = None,
    seed: int = 0,
    *,
    eta: float = 1.0,
    c: float = 3.0,
    noise_mode: str = "real",
) -> ImplicitVertexCover:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    src = NoiseSource(seed, noise_mode)
    est, eps_main = _resolve_alpha(g, eps, alpha, c, src.spawn("arboricity"))
    lam = lambda_vc(est.alpha, eta)
    h = contraction_sparsify(g, SparsifyConfig(lam))
    inner_eps = eps_main / (2 * lam)
    pi = edge_private_vc(h, inner_eps, src.spawn("vc"))
    led = BudgetLedger(cap=eps)
    if est.mode == "private-estimate":
        led.charge(est.eps_used, "arboricity estimate")
    led.charge(2 * lam * inner_eps, f"edge-private cover x group size {2 * lam}")
    return ImplicitVertexCover(pi, lam, {"ledger": led, "alpha": est, "inner_eps": inner_eps, "eta": eta})
