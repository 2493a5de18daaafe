"""Round-synchronous proposer/receiver b-matching with an O(log n) round cap."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billboard import CoinOracle, DistributedSolution, Transcript
from .graph import Graph
from .ledger import BudgetLedger
from .mechanisms import mat_new, mat_sweep
from .noise import NoiseSource, derive_seed
from .pvsm import select_index, subgraph_guard
from .sequential import ParameterBoundError

ETA = 0.5
ROUND_CONSTANT = 512


@dataclass(frozen=True)
class DistributedParams:
    n: int
    eps: float
    bprime: int = 1
    c: float = 1.0
    round_constant: float = ROUND_CONSTANT

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("need at least two vertices")
        if not 0 < self.eps:
            raise ValueError("eps must be positive")
        if self.bprime < 1:
            raise ValueError("b' must be at least 1")
        if self.c < 1:
            raise ValueError("c must be at least 1")
        if not self.round_constant > 0:
            raise ValueError("round constant must be positive")

    @property
    def eta(self) -> float:
        return ETA

    @property
    def rounds(self) -> int:
        return max(1, math.ceil(self.round_constant * self.c * math.log(self.n) / math.log(16 / 15)))

    @property
    def eps_prime(self) -> float:
        # six per-round spends of eps' per edge, so R rounds cost exactly eps/6 * 6
        return self.eps / (6 * self.rounds)

    @property
    def eps_mat(self) -> float:
        return self.eps / 3

    @property
    def log_eta_n(self) -> float:
        return math.log(self.n) / math.log1p(ETA)


def distributed_b_bound(p: DistributedParams) -> float:
    eta = ETA
    return (1 + eta) ** 2 / (1 - eta) * p.bprime + 518.0 * p.log_eta_n / (eta**4 * p.eps_prime)


def distributed_ledger(p: DistributedParams) -> BudgetLedger:
    led = BudgetLedger(cap=p.eps)
    led.charge(p.eps_mat, "matching-condition (MAT)")
    # per round: sum_r 2 p_r eps'/4 <= 3 eps'/2 for each of the two subset releases
    led.charge(p.rounds * 1.5 * p.eps_prime, "proposal subsets")
    led.charge(p.rounds * 1.5 * p.eps_prime, "match subsets")
    led.charge(p.rounds * p.eps_prime, "noisy matched counts")
    return led


def _choose(sizes: np.ndarray, count: np.ndarray, noise_m: np.ndarray, noise_w: np.ndarray,
            guard: float, b: float) -> np.ndarray:
    """Row-wise smallest passing index, last index when none pass."""
    ok = count[:, None] + noise_m[:, None] + sizes + noise_w + guard <= b
    r = np.argmax(ok, axis=1)
    r[~ok.any(axis=1)] = sizes.shape[1] - 1
    return r


def hopeful_mask(edges: np.ndarray, active: np.ndarray, count: np.ndarray, bprime: int,
                 matched_edge: np.ndarray) -> np.ndarray:
    """Vertices that are active, below b', and have such a neighbour they are not matched to."""
    low = active & (count < bprime)
    e = edges[(~matched_edge) & low[edges[:, 0]] & low[edges[:, 1]]]
    out = np.zeros(active.size, dtype=bool)
    out[e.ravel()] = True
    return out


def run_distributed(
    g: Graph,
    eps: float,
    bprime: int = 1,
    c: float = 1.0,
    seed: int = 0,
    *,
    b: float | None = None,
    strict: bool = True,
    round_constant: float = ROUND_CONSTANT,
    max_rounds: int | None = None,
    stop_when_unhopeful: bool = False,
    engine: str = "vector",
    vertex_order: Sequence[int] | None = None,
    nested: bool = False,
    noise_mode: str = "real",
) -> tuple[Transcript, DistributedSolution, int]:
    """Run the round engine; returns the transcript, its decoder and the rounds used.

    ``stop_when_unhopeful`` ends the run once no hopeful vertex is left. That
    test reads the private graph, so it is for evaluation only.
    """
    if engine not in ("vector", "loop"):
        raise ValueError(f"unknown engine {engine!r}")
    p = DistributedParams(g.n, eps, bprime, c, round_constant)
    bound = distributed_b_bound(p)
    if b is None:
        b = float(math.ceil(bound))
    elif b < 1:
        raise ValueError("b must be at least 1")
    elif strict and b < bound:
        raise ParameterBoundError(f"b={b} is below the strict bound {bound:.6g}")
    n, eps_p = g.n, p.eps_prime
    cap = p.rounds if max_rounds is None else min(p.rounds, int(max_rounds))

    src = NoiseSource(seed, noise_mode)
    mat_src, role_src = src.spawn("mat"), src.spawn("roles")
    prop_src, recv_src = src.spawn("proposal"), src.spawn("match")
    coin_seed = derive_seed(seed, "coins")
    coin_p = CoinOracle(coin_seed, ETA, n, "proposal", nested)
    coin_m = coin_p.with_channel("match")
    R1 = coin_p.r_max + 1
    guard = subgraph_guard(c, n, ETA, eps_p)

    tr = Transcript({"alg": "dist", "n": n, "eps": eps, "eta": ETA, "b": b, "bprime": bprime, "c": c,
                     "seed": int(seed), "rounds_cap": p.rounds})
    tr.append("coin-seed", seed=coin_seed, eta=ETA, nested=nested, channel="proposal")

    mat = mat_new(np.full(n, b - 259.0 * c * p.log_eta_n / eps_p), 2.0, p.eps_mat, mat_src)
    count = np.zeros(n, dtype=np.int64)
    matched: list[set[int]] = [set() for _ in range(n)]
    E = g.edge_array
    both = np.concatenate([E, E[:, ::-1]]) if E.size else np.zeros((0, 2), dtype=np.int64)
    matched_edge = np.zeros(len(E), dtype=bool)
    eid = {(int(u), int(v)): k for k, (u, v) in enumerate(E.tolist())}
    order = list(range(n)) if vertex_order is None else [int(v) for v in vertex_order]
    if sorted(order) != list(range(n)):
        raise ValueError("vertex_order must be a permutation of the vertices")

    rounds_used = 0
    first_unhopeful = None
    for rnd in range(1, cap + 1):
        active = ~mat.stopped
        if stop_when_unhopeful and not hopeful_mask(E, active, count, bprime, matched_edge).any():
            first_unhopeful = rnd - 1
            break
        if not active.any():
            break
        rounds_used = rnd
        for u in mat_sweep(mat, count).tolist():
            tr.append("condition", vertex=u, round=rnd)
        active = ~mat.stopped
        proposer = active & (role_src.uniform(n) < 0.5)
        receiver = active & ~proposer
        nw_p = prop_src.laplace_array(4.0 / eps_p, n * R1).reshape(n, R1)
        nm_p = prop_src.laplace_array(2.0 / eps_p, n)
        nw_r = recv_src.laplace_array(4.0 / eps_p, n * R1).reshape(n, R1)
        nm_r = recv_src.laplace_array(2.0 / eps_p, n)

        if engine == "vector":
            r_prop, r_recv, new = _round_vector(both, proposer, receiver, count, nw_p, nm_p, nw_r, nm_r,
                                                coin_p, coin_m, guard, b, rnd)
        else:
            r_prop, r_recv, new = _round_loop(g, order, proposer, receiver, count, nw_p, nm_p, nw_r, nm_r,
                                              coin_p, coin_m, guard, b, rnd)
        pv = np.flatnonzero(proposer)
        rv = np.flatnonzero(receiver)
        tr.append("subgraph-index", round=rnd, channel="proposal", vertices=pv.tolist(), r=r_prop[pv].tolist())
        tr.append("subgraph-index", round=rnd, channel="match", vertices=rv.tolist(), r=r_recv[rv].tolist())
        for u, v in new:
            if v not in matched[u]:
                matched[u].add(v)
                matched[v].add(u)
                count[u] += 1
                count[v] += 1
                matched_edge[eid[(min(u, v), max(u, v))]] = True
    else:
        if stop_when_unhopeful and not hopeful_mask(E, ~mat.stopped, count, bprime, matched_edge).any():
            first_unhopeful = rounds_used
    tr.append("end")

    sol = DistributedSolution(tr)
    sol.meta.update(b=b, eps_prime=eps_p, rounds_cap=p.rounds, ledger=distributed_ledger(p),
                    internal_matches=matched, rounds_to_unhopeful=first_unhopeful)
    return tr, sol, rounds_used


def _round_vector(both, proposer, receiver, count, nw_p, nm_p, nw_r, nm_r, coin_p, coin_m, guard, b, rnd):
    n, R1 = nw_p.shape
    # directed pairs (w, u): w proposes to receiver u
    pe = both[proposer[both[:, 0]] & receiver[both[:, 1]]]
    w, u = pe[:, 0], pe[:, 1]
    sizes = np.zeros((n, R1))
    heads = np.empty((R1, len(pe)), dtype=bool)
    for r in range(R1):
        heads[r] = coin_p.coins(u, w, r, rnd)
        sizes[:, r] = np.bincount(w[heads[r]], minlength=n)
    r_prop = _choose(sizes, count, nm_p, nw_p, guard, b)
    offered = heads[r_prop[w], np.arange(len(pe))] if len(pe) else np.zeros(0, dtype=bool)
    # receiver u picks among the proposers that offered to it
    w2, u2 = w[offered], u[offered]
    sizes = np.zeros((n, R1))
    heads = np.empty((R1, len(w2)), dtype=bool)
    for r in range(R1):
        heads[r] = coin_m.coins(w2, u2, r, rnd)
        sizes[:, r] = np.bincount(u2[heads[r]], minlength=n)
    r_recv = _choose(sizes, count, nm_r, nw_r, guard, b)
    acc = heads[r_recv[u2], np.arange(len(u2))] if len(u2) else np.zeros(0, dtype=bool)
    r_prop[~proposer] = -1
    r_recv[~receiver] = -1
    return r_prop, r_recv, list(zip(w2[acc].tolist(), u2[acc].tolist()))


def _round_loop(g, order, proposer, receiver, count, nw_p, nm_p, nw_r, nm_r, coin_p, coin_m, guard, b, rnd):
    """Per-vertex reference engine; phases only read the previous phase's releases."""
    n = g.n
    r_prop = np.full(n, -1, dtype=np.int64)
    r_recv = np.full(n, -1, dtype=np.int64)
    for w in order:
        if not proposer[w]:
            continue
        cand = [u for u in g.adj[w] if receiver[u]]
        size_at = lambda r, w=w, cand=cand: sum(coin_p.coin(u, w, r, rnd) for u in cand)
        r_prop[w] = select_index(size_at, count[w], b, guard, nw_p[w], nm_p[w])
    for u in order:
        if not receiver[u]:
            continue
        R = [w for w in g.adj[u] if proposer[w] and coin_p.coin(u, w, int(r_prop[w]), rnd)]
        size_at = lambda r, u=u, R=R: sum(coin_m.coin(w, u, r, rnd) for w in R)
        r_recv[u] = select_index(size_at, count[u], b, guard, nw_r[u], nm_r[u])
    new = []
    for w in order:
        if not proposer[w]:
            continue
        for u in g.adj[w]:
            if receiver[u] and coin_p.coin(u, w, int(r_prop[w]), rnd) and coin_m.coin(w, u, int(r_recv[u]), rnd):
                new.append((w, u))
    new.sort()
    return r_prop, r_recv, new
