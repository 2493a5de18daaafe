"""Public vertex subset mechanism: release one index r whose coins pick a neighbour subset."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .billboard import CoinOracle
from .noise import NoiseSource


@dataclass
class SubsetChoice:
    owner: int
    channel: str
    round: int
    r: int
    W: set[int] = field(default_factory=set, repr=False)

    def to_record(self) -> dict:
        """The public part only: who released, where, and which index."""
        return {"vertex": self.owner, "channel": self.channel, "round": self.round, "r": self.r}


def materialize_W(
    w: int, S: Iterable[int], coins: CoinOracle, r: int, adjacency: Sequence[int], rnd: int = 0
) -> set[int]:
    """``{u in S & N(w) : coin(u, w, r) = heads}``."""
    cand = np.asarray(sorted(set(S).intersection(adjacency)), dtype=np.int64)
    if cand.size == 0:
        return set()
    keep = coins.coins(cand, np.full(cand.size, w), r, rnd)
    return set(cand[keep].tolist())


def select_index(
    size_at: Callable[[int], int],
    matched: float,
    b: float,
    guard: float,
    noise_w: Sequence[float],
    noise_m: float,
) -> int:
    """Smallest r with ``matched + noise_m + size_at(r) + noise_w[r] + guard <= b``.

    Sizes are evaluated lazily in increasing r. Falls back to the last index
    when nothing passes.
    """
    m = matched + noise_m
    r_max = len(noise_w) - 1
    for r in range(r_max + 1):
        if m + size_at(r) + noise_w[r] + guard <= b:
            return r
    return r_max


def subgraph_guard(c: float, n: int, eta: float, eps_p: float) -> float:
    """``27 c log_{1+eta}(n) / eps'``."""
    return 27.0 * c * (math.log(n) / math.log1p(eta) if n > 1 else 0.0) / eps_p


def private_subgraph(
    adjacency: Sequence[int],
    eps_p: float,
    b: float,
    w: int,
    S: Iterable[int],
    coins: CoinOracle,
    matched_count: int,
    src: NoiseSource,
    *,
    c: float = 1.0,
    rnd: int = 0,
) -> SubsetChoice:
    """One PrivateSubgraph call for owner ``w`` over candidates ``S``.

    Subset sizes get ``Lap(4/eps')`` per index and the matched count gets
    ``Lap(2/eps')``. All noise is drawn up front, so stopping at the first
    passing index is distributionally the same as evaluating every index.
    """
    if not eps_p > 0:
        raise ValueError("eps' must be positive")
    cand = np.asarray(sorted(set(S).intersection(adjacency) - {w}), dtype=np.int64)
    noise_w = src.laplace_array(4.0 / eps_p, coins.r_max + 1)
    noise_m = src.laplace(2.0 / eps_p)
    owner = np.full(cand.size, w)
    heads = {}

    def size_at(r: int) -> int:
        heads[r] = coins.coins(cand, owner, r, rnd) if cand.size else np.zeros(0, dtype=bool)
        return int(heads[r].sum())

    guard = subgraph_guard(c, coins.n, coins.eta, eps_p)
    r = select_index(size_at, matched_count, b, guard, noise_w, noise_m)
    if r not in heads:
        size_at(r)
    return SubsetChoice(w, coins.channel, rnd, r, set(cand[heads[r]].tolist()))
