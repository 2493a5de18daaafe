"""Continual release of implicit b-matchings over insertion streams.

Edge-order streams recompute a static solution only when a sparse-vector
check sees the matching size grow by a ``1+rho`` factor. Adjacency-list
streams run one proposal turn per completed node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .billboard import CoinOracle, ImplicitSolution, ProposalSolution, Transcript, log_ceil
from .generators import degeneracy
from .graph import Graph
from .ledger import BudgetLedger
from .mechanisms import ABOVE, mat_new, mat_sweep, svt_new, svt_process
from .noise import NoiseSource, derive_seed
from .oracles import MatchingTracker, b_matching_gadget
from .sequential import SequentialParams, run_sequential, sequential_b_bound, sequential_ledger
from .sparsify import OnlineSparsifier, lambda_b_matching
from .streams import EDGE, EMPTY, AdjacencyValidator, Stream, validate_edge_order


@dataclass(frozen=True)
class CrOutput:
    t: int
    version: int
    j: int
    estimate: float | None
    scale: int | None = None

    def to_record(self) -> dict:
        rec = {"t": self.t, "j": self.j, "estimate": self.estimate, "version": self.version}
        if self.scale is not None:
            rec["scale"] = self.scale
        return rec


@dataclass
class Version:
    """A released solution and the graph it decodes against."""

    t: int
    graph: Graph
    solution: ImplicitSolution | None


@dataclass
class CrRun:
    outputs: list[CrOutput]
    versions: list[Version]
    ledger: BudgetLedger
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def changes(self) -> int:
        """Number of times the released solution was replaced."""
        return sum(a.version != b.version for a, b in zip(self.outputs, self.outputs[1:]))

    def decode_at(self, t: int) -> list[set[int]]:
        ver = self.versions[self.outputs[t].version]
        if ver.solution is None:
            return [set() for _ in range(ver.graph.n)]
        return ver.solution.decode_all(ver.graph.adj)

    def size_at(self, t: int) -> int:
        return sum(len(m) for m in self.decode_at(t)) // 2


class _Growing:
    """Adjacency of the stream prefix."""

    def __init__(self, n: int):
        self.n = n
        self.edges: list[tuple[int, int]] = []

    def add(self, u: int, v: int) -> None:
        self.edges.append((min(u, v), max(u, v)))

    def graph(self) -> Graph:
        return Graph.from_edges(self.n, self.edges)


def _nu_b(g: Graph, bprime: int, tracker: MatchingTracker) -> int:
    return tracker.size if bprime == 1 else b_matching_gadget(g, bprime)


def run_edge_cr(
    stream: Stream,
    eps: float,
    rho: float = 1.0,
    bprime: int = 1,
    eta: float = 0.25,
    seed: int = 0,
    *,
    b: float | None = None,
    strict: bool = True,
    c_seq: float = 3.0,
    noise_mode: str = "real",
) -> CrRun:
    """Edge-private continual release over an edge-order stream.

    Output 0 is the empty solution on the empty graph; it reads no data, so
    only the at most ``c`` recomputations are charged.
    """
    validate_edge_order(stream)
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = stream.n
    if n < 2:
        raise ValueError("need at least two vertices")
    c = max(1, log_ceil(n, 1 + rho))
    eps_each = eps / (3 * c)
    src = NoiseSource(seed, noise_mode)
    svt = svt_new(eps / 3, 1.0, c, src.spawn("svt"))
    est_src = src.spawn("estimate")
    tracker, grow = MatchingTracker(n), _Growing(n)

    versions = [Version(0, Graph.empty(n), None)]
    outputs = [CrOutput(0, 0, 0, 0.0)]
    j = 0
    estimate = 0.0
    for t, x in enumerate(stream.updates, start=1):
        if x.kind == EDGE:
            tracker.insert(x.u, x.v)
            grow.add(x.u, x.v)
        j_prev = j
        while svt_process(svt, tracker.size, (1 + rho) ** j) == ABOVE:
            j += 1
        if j > j_prev:
            g_t = grow.graph()
            k = len(versions)
            params = SequentialParams(eps_each, eta, bprime, c_seq, b, strict)
            _, sol = run_sequential(g_t, params, derive_seed(seed, f"solution/{k}"), noise_mode=noise_mode)
            versions.append(Version(t, g_t, sol))
            estimate = _nu_b(g_t, bprime, tracker) + est_src.laplace(1.0 / eps_each)
        outputs.append(CrOutput(t, len(versions) - 1, j, estimate))

    led = BudgetLedger(cap=eps)
    led.charge(eps / 3, "growth test (SVT)")
    led.charge(c * eps_each, f"solutions ({c} x eps/(3c))")
    led.charge(c * eps_each, f"estimates ({c} x eps/(3c))")
    return CrRun(outputs, versions, led, {"c": c, "rho": rho, "eps_each": eps_each})


def run_node_cr(
    stream: Stream,
    eps: float,
    eta: float = 0.5,
    bprime: int = 1,
    alpha: float | None = None,
    seed: int = 0,
    *,
    b: float | None = None,
    strict: bool = True,
    c_seq: float = 3.0,
    margin: float = 0.0,
    noise_mode: str = "real",
) -> CrRun:
    """Node-private continual release: solutions come from an online sparsifier.

    Without ``alpha`` one sparsifier per scale ``2^k`` is kept, and a private
    degeneracy track picks which scale's solution is shown. A scale switch
    replaces the released solution too, so in that mode the number of changes
    may exceed ``c``.
    """
    validate_edge_order(stream)
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = stream.n
    if n < 2:
        raise ValueError("need at least two vertices")
    c = max(1, log_ceil(n, 1 + eta))
    eta_seq = eta if eta < 1 else 0.5
    multi = alpha is None
    share = eps / 4 if multi else eps / 3
    scales = list(range(1, max(1, math.ceil(math.log2(n))) + 1)) if multi else [0]
    lams = [lambda_b_matching(2**k if multi else alpha, eta, bprime) for k in scales]
    sparsifiers = [OnlineSparsifier(n, lam) for lam in lams]

    src = NoiseSource(seed, noise_mode)
    svt = svt_new(share, float(bprime), c, src.spawn("svt"))
    est_src = src.spawn("estimate")
    track = svt_new(share, 1.0, len(scales), src.spawn("arboricity")) if multi else None
    tracker, grow = MatchingTracker(n), _Growing(n)

    versions = [Version(0, Graph.empty(n), None)]
    outputs = [CrOutput(0, 0, 0, 0.0, scales[0] if multi else None)]
    current: list[int] = [0] * len(scales)  # version index per scale
    k_star = 0
    j = 0
    estimate = 0.0
    for t, x in enumerate(stream.updates, start=1):
        if x.kind == EDGE:
            tracker.insert(x.u, x.v)
            grow.add(x.u, x.v)
            for sp in sparsifiers:
                sp.insert(x.u, x.v)
        if multi:
            d = degeneracy(grow.graph())
            while k_star < len(scales) - 1 and svt_process(track, d, 2 ** scales[k_star] - margin) == ABOVE:
                k_star += 1
        j_prev = j
        while svt_process(svt, tracker.size, (1 + eta) ** j) == ABOVE:
            j += 1
        if j > j_prev:
            g_t = grow.graph()
            for i, (sp, lam) in enumerate(zip(sparsifiers, lams)):
                h = sp.graph()
                params = SequentialParams(share / (2 * c * lam), eta_seq, bprime, c_seq, b, strict)
                _, sol = run_sequential(h, params, derive_seed(seed, f"solution/{len(versions)}"),
                                        noise_mode=noise_mode)
                current[i] = len(versions)
                versions.append(Version(t, h, sol))
            estimate = _nu_b(g_t, bprime, tracker) + est_src.laplace(bprime * c / share)
        outputs.append(CrOutput(t, current[k_star], j, estimate, scales[k_star] if multi else None))

    led = BudgetLedger(cap=eps)
    if multi:
        led.charge(share, "arboricity track (SVT)")
    led.charge(share, "growth test (SVT)")
    # c recomputations, each eps-share/(2 c lam) inflated by the group size 2 lam
    led.charge(c * 2 * lams[0] * (share / (2 * c * lams[0])), "solutions")
    led.charge(c * (share / c), "estimates")
    return CrRun(outputs, versions, led, {"c": c, "lams": lams, "scales": scales, "multi": multi})


def run_adjlist_cr(
    stream: Stream,
    eps: float,
    b: float | None = None,
    seed: int = 0,
    *,
    eta: float = 0.5,
    lists: str = "back",
    c: float = 3.0,
    nested: bool = False,
    noise_mode: str = "real",
) -> CrRun:
    """Adjacency-list continual release: a node proposes once its list is complete.

    With ``lists="back"`` each edge is listed under its later endpoint and the
    node offers to earlier arrivals; with ``"both"`` lists are full and the
    node offers to nodes that have not arrived yet.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    n = stream.n
    if n < 2:
        raise ValueError("need at least two vertices")
    val = AdjacencyValidator(n, lists)
    eta_p = eta / 5
    eps_p = eps * eta_p / (2 + 4 * eta_p)
    if b is None:
        b = float(math.ceil(sequential_b_bound(n, eps, eta_p, 1, c)))
    elif b < 1:
        raise ValueError("b must be at least 1")
    ln = math.log(n)
    src = NoiseSource(seed, noise_mode)
    mat_src, sub_src = src.spawn("mat"), src.spawn("subset")
    coin_seed = derive_seed(seed, "coins")
    coins = CoinOracle(coin_seed, eta_p, n, "adj", nested)
    direction = "earlier" if lists == "back" else "later"
    tr = Transcript({"alg": "cr-adj", "n": n, "eps": eps, "eta": eta_p, "b": b, "c": c, "seed": int(seed),
                     "channel": "adj", "direction": direction, "lists": lists})
    tr.append("coin-seed", seed=coin_seed, eta=eta_p, nested=nested, channel="adj")

    mat = mat_new(np.full(n, b - 20.0 * ln / eps_p), 2.0, eps_p, mat_src)
    guard = c * ln / eps_p
    count = np.zeros(n, dtype=np.int64)
    matched: list[set[int]] = [set() for _ in range(n)]
    arrived = np.zeros(n, dtype=bool)
    grow = _Growing(n)
    grow_set: set[tuple[int, int]] = set()
    K: list[int] = []
    w: int | None = None
    done = 0
    graphs = [Graph.empty(n)]
    outputs = [CrOutput(0, 0, 0, None)]
    cuts = [len(tr)]  # transcript length per version

    def complete(w: int, new: int) -> None:
        nonlocal done
        done += 1
        i = done
        for u in mat_sweep(mat, count).tolist():
            tr.append("condition", vertex=u, iteration=i)
        tr.append("turn", vertex=w, iteration=i)
        if mat.stopped[w]:
            return
        others = np.asarray(sorted(set(K)), dtype=np.int64)
        if lists == "back":
            side = arrived[others] & (others != new)
        else:
            # the node that just arrived has not had its turn yet
            side = ~arrived[others] | (others == new)
        cand = others[side & ~mat.stopped[others]] if others.size else others
        noise_w = sub_src.laplace_array(2.0 / eps_p, coins.r_max + 1)
        base = count[w] + sub_src.laplace(2.0 / eps_p) + guard
        owner = np.full(cand.size, w)
        for r in range(coins.r_max + 1):
            heads = coins.coins(cand, owner, r) if cand.size else np.zeros(0, dtype=bool)
            if base + heads.sum() + noise_w[r] <= b or r == coins.r_max:
                break
        tr.append("subgraph-index", vertex=w, iteration=i, r=r)
        for u in cand[heads].tolist():
            matched[w].add(u)
            matched[u].add(w)
            count[w] += 1
            count[u] += 1

    version = 0
    for t, x in enumerate(stream.updates, start=1):
        val.feed(x)
        if x.kind == EDGE:
            other = x.v if x.u == w else x.u
            K.append(other)
            key = (min(x.u, x.v), max(x.u, x.v))
            if lists == "back" or key not in grow_set:
                grow.add(*key)
                grow_set.add(key)
        elif x.kind != EMPTY:
            v = x.u
            arrived[v] = True
            if w is not None:
                complete(w, v)
                version += 1
                cuts.append(len(tr))
                graphs.append(grow.graph())
            K = []
            w = v
        outputs.append(CrOutput(t, version, 0, None))
    tr.append("end")

    versions = [
        Version(0, graphs[0], None)
    ] + [Version(0, graphs[k], ProposalSolution(tr.prefix(cuts[k]))) for k in range(1, len(cuts))]
    led = sequential_ledger(eps, eps_p, coins.probs)
    run = CrRun(outputs, versions, led, {"b": b, "eps_prime": eps_p, "internal_matches": matched,
                                          "transcript": tr})
    return run

