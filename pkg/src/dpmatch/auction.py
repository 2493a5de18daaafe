"""Node-private ascending auction for one-sided s-matchings on bipartite graphs.

Items are the left side, bidders the right side. Only per-round price levels
and window starts are released; each bidder replays its own bids from them.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billboard import IncompleteTranscriptError, Transcript
from .graph import Graph
from .ledger import BudgetLedger
from .noise import NoiseSource
from .oracles import b_matching_flow
from .sequential import ParameterBoundError


@dataclass(frozen=True)
class AuctionParams:
    eps: float
    eta: float = 0.5
    s: int | None = None
    c: float = 1.0
    strict: bool = True
    opt_mode: str = "surrogate"  # or "oracle"

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.s is not None and self.s < 1:
            raise ValueError("supply s must be at least 1")
        if self.opt_mode not in ("surrogate", "oracle"):
            raise ValueError(f"unknown OPT mode {self.opt_mode!r}")

    @property
    def T(self) -> int:
        return math.ceil(73.0 / self.eta**2 - 1e-9)

    @property
    def eps_prime(self) -> float:
        return self.eps * self.eta / (3 * self.T)

    @property
    def max_level(self) -> int:
        """Largest price level k with ``k * eta <= 1``."""
        return int(math.floor(1.0 / self.eta + 1e-9))


def auction_s_bound(n: int, p: AuctionParams) -> float:
    return (1 + 2 / p.eta) * 72.0 * p.c * math.log(max(n, 2)) / p.eps_prime


def auction_ledger(p: AuctionParams) -> BudgetLedger:
    led = BudgetLedger(cap=p.eps)
    led.charge(p.T * p.eps_prime / p.eta, "price thresholds")
    led.charge(p.T * p.eps_prime, "window unmatching")
    led.charge(p.T * p.eps_prime, "termination test")
    return led


def opt_s(g: Graph, n_left: int, s: int) -> int:
    """Maximum one-sided s-matching: item caps s, bidder caps 1."""
    caps = [s] * n_left + [1] * (g.n - n_left)
    side = [0] * n_left + [1] * (g.n - n_left)
    return b_matching_flow(g, caps, side)


def _check_bipartite(g: Graph, n_left: int) -> None:
    if not 0 <= n_left <= g.n:
        raise ValueError(f"item count {n_left} outside [0, {g.n}]")
    for u, v in g.edges():
        if (u < n_left) == (v < n_left):
            raise ValueError(f"edge ({u}, {v}) does not cross the item/bidder sides")


def _advance_window(ts: list[int], start: int, end: int, s_tilde: float, scale: float, src: NoiseSource) -> int:
    """Run the unmatching loop; ``ts`` are this item's bid timestamps, sorted."""
    if start >= end:
        return end
    # usual case: the very first test fails, so take it with one scalar draw
    if len(ts) - bisect_left(ts, start) + src.laplace(scale) < s_tilde:
        return start
    start += 1
    chunk = 64
    while start < end:
        k = min(chunk, end - start)
        starts = np.arange(start, start + k)
        live = len(ts) - np.searchsorted(ts, starts, side="left")
        cont = live + src.laplace_array(scale, k) >= s_tilde
        if not cont.all():
            return start + int(np.argmin(cont))
        start += k
        chunk = min(chunk * 2, 1 << 16)
    return end


def run_auction(
    g: Graph,
    n_left: int,
    params: AuctionParams,
    seed: int = 0,
    *,
    noise_mode: str = "real",
    scale_factor: float = 1.0,
) -> tuple[Transcript, "AuctionSolution"]:
    _check_bipartite(g, n_left)
    nl, nr = n_left, g.n - n_left
    n = max(nr, 2)
    T, eps_p, eta, c = params.T, params.eps_prime, params.eta, params.c
    bound = auction_s_bound(n, params)
    if params.s is None:
        s = math.ceil(bound)
    else:
        if params.strict and params.s < bound:
            raise ParameterBoundError(f"s={params.s} is below the strict bound {bound:.6g}")
        s = int(params.s)
    if params.opt_mode == "oracle":
        opt = opt_s(g, nl, s)
    else:
        opt = min(nr, s * nl)
    ln = math.log(n)

    src = NoiseSource(seed, noise_mode, scale_factor)
    thr_src, cnt_src = src.spawn("threshold"), src.spawn("count")
    win_src, term_src = src.spawn("window"), src.spawn("terminate")
    tr = Transcript({"alg": "auction", "n": g.n, "n_left": nl, "eps": params.eps, "eta": eta, "s": s,
                     "c": c, "T": T, "seed": int(seed), "opt_mode": params.opt_mode})

    level = np.ones(nl, dtype=np.int64)
    bids = np.zeros(nl, dtype=np.int64)
    start = np.zeros(nl, dtype=np.int64)
    end = nr * T
    thresh = level * s + thr_src.laplace_array(2.0 / eps_p, nl)
    item_ts: list[list[int]] = [[] for _ in range(nl)]  # appended in increasing order
    # one window stream per item, so an item's draws never depend on another item's loop
    item_src = [win_src.spawn(f"item/{u}") for u in range(nl)]
    cur = np.full(nr, -1, dtype=np.int64)  # current item per bidder
    cur_ts = np.full(nr, -1, dtype=np.int64)
    nbrs = [np.asarray(g.adj[nl + j], dtype=np.int64) for j in range(nr)]
    rounds = 0
    for t in range(1, T + 1):
        rounds = t
        c0 = 0
        for j in range(nr):
            if cur[j] >= 0 or nbrs[j].size == 0:
                continue
            lv = level[nbrs[j]]
            u = int(nbrs[j][np.argmin(lv)])
            if level[u] <= params.max_level:
                ts = (t - 1) * nr + j
                cur[j], cur_ts[j] = u, ts
                bids[u] += 1
                item_ts[u].append(ts)
                c0 += 1
        tr.append("price", round=t, levels=level.tolist())
        bump = (level <= params.max_level) & (bids + cnt_src.laplace_array(4.0 / eps_p, nl) >= thresh)
        level[bump] += 1
        if bump.any():
            thresh[bump] = level[bump] * s + thr_src.laplace_array(2.0 / eps_p, int(bump.sum()))
        s_tilde = s + win_src.laplace_array(2.0 / eps_p, nl) - 18.0 * c * ln / eps_p
        for u in range(nl):
            start[u] = _advance_window(item_ts[u], int(start[u]), end, s_tilde[u],
                                       4.0 / eps_p, item_src[u])
        tr.append("window-start", round=t, start=start.tolist())
        dropped = (cur >= 0) & (cur_ts < start[np.maximum(cur, 0)])
        cur[dropped] = -1
        if c0 + term_src.laplace(1.0 / eps_p) <= eta * opt / 3 - 3.0 * c * ln / eps_p:
            tr.append("terminate", round=t)
            break
    tr.append("end")
    sol = AuctionSolution(tr)
    sol.meta.update(s=s, opt=opt, rounds=rounds, ledger=auction_ledger(params),
                    internal=[int(x) if x >= 0 else None for x in cur])
    return tr, sol


class AuctionSolution:
    """Decoder: bidders replay their bids from released prices and window starts."""

    def __init__(self, tr: Transcript):
        if not tr.complete:
            raise IncompleteTranscriptError("auction transcript does not end with an 'end' record")
        self.transcript = tr
        h = tr.header
        self.n, self.n_left, self.eta = int(h["n"]), int(h["n_left"]), float(h["eta"])
        self.max_level = int(math.floor(1.0 / self.eta + 1e-9))
        self.levels = [np.asarray(r["levels"], dtype=np.int64) for r in tr.of_kind("price")]
        self.starts = [np.asarray(r["start"], dtype=np.int64) for r in tr.of_kind("window-start")]
        if len(self.levels) != len(self.starts):
            raise IncompleteTranscriptError("price and window-start records do not pair up")
        self.meta: dict = {}

    def decode(self, v: int, adjacency: Sequence[int]) -> int | None:
        nr = self.n - self.n_left
        j = v - self.n_left
        if not 0 <= j < nr:
            raise ValueError(f"vertex {v} is not a bidder")
        nb = np.asarray(sorted(adjacency), dtype=np.int64)
        if nb.size == 0:
            return None
        item, ts = -1, -1
        for t, (lv, st) in enumerate(zip(self.levels, self.starts), start=1):
            if item < 0:
                u = int(nb[np.argmin(lv[nb])])
                if lv[u] <= self.max_level:
                    item, ts = u, (t - 1) * nr + j
            if item >= 0 and ts < st[item]:
                item = -1
        return item if item >= 0 else None

    def decode_all(self, adjacency_lists: Sequence[Sequence[int]]) -> list[int | None]:
        return [self.decode(v, adjacency_lists[v]) for v in range(self.n_left, self.n)]

    def loads(self, adjacency_lists: Sequence[Sequence[int]]) -> np.ndarray:
        load = np.zeros(self.n_left, dtype=np.int64)
        for u in self.decode_all(adjacency_lists):
            if u is not None:
                load[u] += 1
        return load

    def size(self, adjacency_lists: Sequence[Sequence[int]]) -> int:
        return sum(u is not None for u in self.decode_all(adjacency_lists))


def decode_allocation(v: int, transcript: Transcript, adjacency: Sequence[int]) -> int | None:
    return AuctionSolution(transcript).decode(v, adjacency)
