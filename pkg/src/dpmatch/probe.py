"""Empirical privacy probe: compare event frequencies on two neighbouring inputs.

This can refute a privacy claim, never prove one. A FAIL needs the lower
confidence bound on some event's log-ratio to clear ``eps + 0.1``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from .auction import AuctionParams, run_auction
from .graph import Graph
from .noise import NoiseSource, derive_seed
from .sequential import SequentialParams, run_sequential

MAX_CELLS = 64
Z = 4.0
SLACK = 0.1
MIN_TRIALS = 10_000


def wilson(k: int, n: int, z: float = Z) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass
class PrivacyProbeReport:
    mechanism: str
    events: str
    eps: float
    trials: int
    freqs: dict[Hashable, tuple[int, int]]
    max_log_ratio: float
    max_lower_bound: float
    worst_event: Hashable | None
    fail: bool
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "FAIL" if self.fail else "no FAIL"

    def summary(self) -> str:
        return (f"{self.mechanism}: {self.verdict} (eps={self.eps}, trials={self.trials}, "
                f"max log-ratio={self.max_log_ratio:.3f}, lower bound={self.max_lower_bound:.3f}, "
                f"worst event={self.worst_event!r})")


def _edge_diff(g1: Graph, g2: Graph) -> set[tuple[int, int]]:
    if g1.n != g2.n:
        raise ValueError("neighbouring inputs must share the vertex set")
    return set(g1.edges()) ^ set(g2.edges())


def check_neighbours(g1: Graph, g2: Graph, relation: str) -> None:
    diff = _edge_diff(g1, g2)
    if relation == "edge":
        if len(diff) > 1:
            raise ValueError(f"inputs differ in {len(diff)} edges, not an edge-neighbouring pair")
    elif relation == "node":
        if diff and not set.intersection(*({u, v} for u, v in diff)):
            raise ValueError("differing edges share no common vertex, not a node-neighbouring pair")
    else:
        raise ValueError(f"unknown neighbour relation {relation!r}")


@dataclass(frozen=True)
class ProbeMechanism:
    name: str
    relation: str
    run: Callable[[Graph, int], Any]
    event: Callable[[Any], Hashable]
    events: str


def seq_mechanism(eps: float = 0.5, scale_factor: float = 1.0, vertex: int = 0) -> ProbeMechanism:
    params = SequentialParams(eps, 0.25, b=3, c=0.0, strict=False)

    def run(g: Graph, s: int):
        return run_sequential(g, params, s, scale_factor=scale_factor)[0]

    def event(tr) -> Hashable:
        for rec in tr.of_kind("subgraph-index"):
            if rec["vertex"] == vertex:
                return rec["r"]
        return "stopped"

    return ProbeMechanism("seq", "edge", run, event, f"released index r of vertex {vertex}, or 'stopped'")


def auction_mechanism(eps: float = 0.5, scale_factor: float = 1.0) -> ProbeMechanism:
    """One item; the probed pair adds or removes the single bidder's edge."""
    params = AuctionParams(eps, eta=1.0, s=1, c=0.0, strict=False)

    def run(g: Graph, s: int):
        return run_auction(g, 1, params, s, scale_factor=scale_factor)[0]

    def event(tr) -> Hashable:
        prices = list(tr.of_kind("price"))
        starts = list(tr.of_kind("window-start"))
        return (min(len(prices), 8), prices[-1]["levels"][0], min(starts[-1]["start"][0], 3))

    return ProbeMechanism("auction", "node", run, event, "(termination round capped at 8, final price level, final start capped at 3)")


def laplace_count_mechanism(eps: float = 0.5, scale_factor: float = 1.0) -> ProbeMechanism:
    """Edge count plus ``Lap(1/eps)``; a reference point for the fault-injection check."""

    def run(g: Graph, s: int):
        return g.edge_count + NoiseSource(s, scale_factor=scale_factor).laplace(1.0 / eps)

    def event(x) -> Hashable:
        return max(-12, min(12, math.floor(x * eps)))

    return ProbeMechanism("laplace-count", "edge", run, event, "floor(eps * noisy count) clipped to [-12, 12]")


MECHANISMS = {"seq": seq_mechanism, "auction": auction_mechanism, "laplace-count": laplace_count_mechanism}


def privacy_probe(
    mech: ProbeMechanism,
    g1: Graph,
    g2: Graph,
    eps: float,
    trials: int = 100_000,
    seed: int = 0,
    event_map: Callable[[Any], Hashable] | None = None,
) -> PrivacyProbeReport:
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    check_neighbours(g1, g2, mech.relation)
    ev = event_map or mech.event
    c1: Counter = Counter()
    c2: Counter = Counter()
    for i in range(trials):
        c1[ev(mech.run(g1, derive_seed(seed, f"a/{i}")))] += 1
        c2[ev(mech.run(g2, derive_seed(seed, f"b/{i}")))] += 1
    cells = set(c1) | set(c2)
    if len(cells) > MAX_CELLS:
        raise ValueError(f"event map produced {len(cells)} cells, at most {MAX_CELLS} allowed")
    freqs = {k: (c1[k], c2[k]) for k in sorted(cells, key=repr)}
    best, lower, worst = 0.0, 0.0, None
    for k, (a, b) in freqs.items():
        if a and b:
            best = max(best, abs(math.log(a / b)))
        elif a or b:
            best = math.inf
        l1, u1 = wilson(a, trials)
        l2, u2 = wilson(b, trials)
        lb = max(math.log(l1 / u2) if l1 > 0 else -math.inf, math.log(l2 / u1) if l2 > 0 else -math.inf, 0.0)
        if worst is None or lb > lower:
            lower, worst = lb, k
    return PrivacyProbeReport(mech.name, mech.events, eps, trials, freqs, best, lower, worst, lower > eps + SLACK)
