"""Sequential local edge-DP b-matching: one proposal turn per vertex."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billboard import CoinOracle, ProposalSolution, Transcript
from .graph import Graph
from .ledger import BudgetLedger, amplified
from .mechanisms import mat_new, mat_sweep
from .noise import NoiseSource, derive_seed


class ParameterBoundError(ValueError):
    """Strict mode refused a cap below the utility bound."""


def sequential_b_bound(n: int, eps: float, eta: float, bprime: int, c: float = 3.0) -> float:
    """``(1+eta)^2/(1-eta) b' + 576 c ln(n) / (eta^2 eps)``."""
    return (1 + eta) ** 2 / (1 - eta) * bprime + 576.0 * c * math.log(n) / (eta**2 * eps)


@dataclass(frozen=True)
class SequentialParams:
    eps: float
    eta: float = 0.25
    bprime: int = 1
    c: float = 3.0
    b: float | None = None
    strict: bool = True
    nested: bool = False

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.bprime < 1:
            raise ValueError("b' must be at least 1")
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.b is not None and self.b < 1:
            raise ValueError("b must be at least 1")

    @property
    def eps_prime(self) -> float:
        return self.eps / (2 * (1 + 2 * self.eta) / self.eta)

    def resolve_b(self, n: int) -> float:
        bound = sequential_b_bound(n, self.eps, self.eta, self.bprime, self.c)
        if self.b is None:
            return float(math.ceil(bound))
        if self.strict and self.b < bound:
            raise ParameterBoundError(f"b={self.b} is below the strict bound {bound:.6g}")
        return float(self.b)


def sequential_ledger(eps: float, eps_p: float, probs: np.ndarray) -> BudgetLedger:
    led = BudgetLedger(cap=eps)
    led.charge(eps_p, "matching-condition (MAT)")
    led.charge(eps_p, "noisy matched count")
    amp = amplified if eps_p <= 1 else (lambda p, e: 2.0 * p * e)
    for r, p in enumerate(probs):
        led.charge(amp(float(p), eps_p), f"noisy subset size r={r}")
    return led


def run_sequential(
    g: Graph,
    params: SequentialParams,
    seed: int,
    *,
    order: Sequence[int] | None = None,
    noise_mode: str = "real",
    scale_factor: float = 1.0,
) -> tuple[Transcript, ProposalSolution]:
    n = g.n
    if n < 2:
        raise ValueError("need at least two vertices")
    b = params.resolve_b(n)
    eps_p = params.eps_prime
    c = params.c
    order = list(range(n)) if order is None else [int(v) for v in order]
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the vertices")

    src = NoiseSource(seed, noise_mode, scale_factor)
    mat_src, sub_src = src.spawn("mat"), src.spawn("subset")
    coin_seed = derive_seed(seed, "coins")
    coins = CoinOracle(coin_seed, params.eta, n, "main", params.nested)
    ln = math.log(n)

    tr = Transcript(
        {"alg": "seq", "n": n, "eps": params.eps, "eta": params.eta, "b": b, "bprime": params.bprime,
         "c": c, "seed": int(seed), "direction": "later"}
    )
    tr.append("coin-seed", seed=coin_seed, eta=params.eta, nested=params.nested, channel="main")
    tr.append("order", order=order)

    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    mat = mat_new(np.full(n, b - 36.0 * c * ln / eps_p), 2.0, eps_p, mat_src)
    guard = 12.0 * c * ln / eps_p
    count = np.zeros(n, dtype=np.int64)
    matched: list[set[int]] = [set() for _ in range(n)]
    adj = [np.asarray(a, dtype=np.int64) for a in g.adj]

    for i, v in enumerate(order, start=1):
        for u in mat_sweep(mat, count).tolist():
            tr.append("condition", vertex=u, iteration=i)
        if mat.stopped[v]:
            continue
        nb = adj[v]
        cand = nb[(pos[nb] > pos[v]) & ~mat.stopped[nb]]
        noise_w = sub_src.laplace_array(2.0 / eps_p, coins.r_max + 1)
        noise_m = sub_src.laplace(2.0 / eps_p)
        base = count[v] + noise_m + guard
        owner = np.full(cand.size, v)
        chosen = coins.r_max
        picked = None
        for r in range(coins.r_max + 1):
            heads = coins.coins(cand, owner, r) if cand.size else np.zeros(0, dtype=bool)
            if base + heads.sum() + noise_w[r] <= b or r == coins.r_max:
                chosen, picked = r, heads
                break
        tr.append("subgraph-index", vertex=v, iteration=i, r=chosen)
        W = cand[picked]
        if W.size:
            matched[v].update(W.tolist())
            for u in W.tolist():
                matched[u].add(v)
            count[v] += W.size
            count[W] += 1
    tr.append("end")

    sol = ProposalSolution(tr)
    sol.meta.update(
        b=b, eps_prime=eps_p, ledger=sequential_ledger(params.eps, eps_p, coins.probs), internal_matches=matched
    )
    return tr, sol
