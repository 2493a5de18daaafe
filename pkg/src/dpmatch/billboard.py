"""Public transcript, public coins and per-vertex decoding.

Coins are a keyed hash of ``(seed, channel, round, min(u,v), max(u,v), r)``.
Publishing the seed is the same as publishing every flip, since flips never
depend on the graph.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

FORMAT = "dpmatch-transcript/1"
CHANNELS = {"main": 0, "proposal": 1, "match": 2, "adj": 3}
_MASK = (1 << 64) - 1
_INF = np.iinfo(np.int64).max


class IncompleteTranscriptError(ValueError):
    pass


# --------------------------------------------------------------- coins


def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


_G = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z + _G
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def log_ceil(n: int, base: float) -> int:
    """``ceil(log_base n)``, robust to float error at exact powers."""
    if n <= 1:
        return 0
    x = math.log(n) / math.log(base)
    return max(0, math.ceil(x - 1e-9))


class CoinOracle:
    """Public Bernoulli coins with ``Pr[heads] = (1+eta)^-r``.

    In ``nested`` mode a pair reuses one uniform for every r, so heads at
    level r implies heads at all lower levels.
    """

    def __init__(self, seed: int, eta: float, n: int, channel: str = "main", nested: bool = False):
        if channel not in CHANNELS:
            raise ValueError(f"unknown coin channel {channel!r}")
        if not eta > 0:
            raise ValueError("eta must be positive")
        self.seed = int(seed) & _MASK
        self.eta = float(eta)
        self.n = int(n)
        self.channel = channel
        self.nested = bool(nested)
        self.r_max = log_ceil(self.n, 1.0 + self.eta)
        self.probs = (1.0 + self.eta) ** -np.arange(self.r_max + 1, dtype=np.float64)

    def with_channel(self, channel: str) -> "CoinOracle":
        return CoinOracle(self.seed, self.eta, self.n, channel, self.nested)

    def p(self, r: int) -> float:
        return float(self.probs[r])

    def _check(self, r: int) -> None:
        if not 0 <= r <= self.r_max:
            raise ValueError(f"subgraph index r={r} outside [0, {self.r_max}]")

    def uniform(self, u: int, v: int, r: int, rnd: int = 0) -> float:
        lo, hi = (u, v) if u < v else (v, u)
        h = _mix(self.seed)
        h = _mix(h ^ CHANNELS[self.channel])
        h = _mix(h ^ (int(rnd) & _MASK))
        h = _mix(h ^ lo)
        h = _mix(h ^ hi)
        h = _mix(h ^ (0 if self.nested else int(r)))
        return (h >> 11) / float(2**53)

    def coin(self, u: int, v: int, r: int, rnd: int = 0) -> bool:
        if u == v:
            raise ValueError("coins are defined for distinct endpoints")
        self._check(r)
        return r == 0 or self.uniform(u, v, r, rnd) < self.probs[r]

    def uniforms(self, us, vs, r, rnd=0) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        lo = np.minimum(us, vs).astype(np.uint64)
        hi = np.maximum(us, vs).astype(np.uint64)
        rr = np.zeros(1, dtype=np.uint64) if self.nested else np.asarray(r, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = np.uint64(_mix(_mix(self.seed) ^ CHANNELS[self.channel]))
            h = _mix_np(h ^ np.asarray(rnd, dtype=np.int64).astype(np.uint64))
            h = _mix_np(h ^ lo)
            h = _mix_np(h ^ hi)
            h = _mix_np(h ^ rr)
        return (h >> np.uint64(11)).astype(np.float64) / float(2**53)

    def coins(self, us, vs, r, rnd=0) -> np.ndarray:
        """Vectorised ``coin``; ``r`` and ``rnd`` broadcast against the endpoints."""
        r_arr = np.asarray(r, dtype=np.int64)
        if r_arr.size and (r_arr.min() < 0 or r_arr.max() > self.r_max):
            raise ValueError(f"subgraph index outside [0, {self.r_max}]")
        u = self.uniforms(us, vs, r_arr, rnd)
        return (u < self.probs[r_arr]) | (r_arr == 0)


# ---------------------------------------------------------- transcript


class Transcript:
    """Append-only list of JSON records behind a header line."""

    def __init__(self, header: dict[str, Any], records: list[dict[str, Any]] | None = None):
        self.header = dict(header)
        self.header.setdefault("format", FORMAT)
        self.records: list[dict[str, Any]] = [] if records is None else records
        self._cache: dict[Any, Any] = {}

    def append(self, kind: str, **fields: Any) -> None:
        rec = {"kind": kind}
        rec.update(fields)
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def of_kind(self, kind: str) -> Iterable[dict[str, Any]]:
        return (r for r in self.records if r["kind"] == kind)

    @property
    def complete(self) -> bool:
        return bool(self.records) and self.records[-1]["kind"] == "end"

    def prefix(self, k: int) -> "Transcript":
        return Transcript(self.header, self.records[:k])

    def dumps(self) -> str:
        enc = lambda obj: json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
        return "\n".join([enc(self.header)] + [enc(r) for r in self.records]) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise IncompleteTranscriptError("empty transcript file")
        header = json.loads(lines[0])
        if header.get("format") != FORMAT:
            raise ValueError(f"unrecognised transcript format {header.get('format')!r}")
        return cls(header, [json.loads(ln) for ln in lines[1:]])

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "Transcript":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def coins_from_transcript(tr: Transcript, channel: str = "main") -> CoinOracle:
    rec = next(tr.of_kind("coin-seed"), None)
    if rec is None:
        raise IncompleteTranscriptError("transcript has no coin-seed record")
    return CoinOracle(rec["seed"], rec["eta"], tr.header["n"], channel, rec.get("nested", False))


# ----------------------------------------------------- implicit solutions


class ImplicitSolution:
    """Public selections plus the rule each vertex uses to decode its matches.

    ``decode`` receives one vertex's neighbour list and nothing else about
    the graph.
    """

    alg = ""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.n = int(transcript.header["n"])
        self.meta: dict[str, Any] = {}

    @staticmethod
    def from_transcript(tr: Transcript, require_complete: bool = True) -> "ImplicitSolution":
        if require_complete and not tr.complete:
            raise IncompleteTranscriptError("transcript does not end with an 'end' record")
        alg = tr.header.get("alg")
        if alg in ("seq", "cr-adj"):
            return ProposalSolution(tr)
        if alg == "dist":
            return DistributedSolution(tr)
        raise ValueError(f"no matching decoder for algorithm {alg!r}")

    def decode(self, v: int, adjacency: Sequence[int]) -> set[int]:
        raise NotImplementedError

    def decode_all(self, adjacency_lists: Sequence[Sequence[int]]) -> list[set[int]]:
        return [self.decode(v, adjacency_lists[v]) for v in range(self.n)]

    def edges(self, adjacency_lists: Sequence[Sequence[int]]) -> set[tuple[int, int]]:
        out = set()
        for v, m in enumerate(self.decode_all(adjacency_lists)):
            out.update((min(u, v), max(u, v)) for u in m)
        return out


class ProposalSolution(ImplicitSolution):
    """Decoder for one-proposal-per-vertex runs (sequential and adjacency-list streams).

    Vertex ``x`` at turn ``i`` offers to neighbours on the ``direction`` side of
    it in the turn order that were still active at turn ``i``; the offered set
    is fixed by the released index and the public coins.
    """

    def __init__(self, tr: Transcript):
        super().__init__(tr)
        n = self.n
        self.coins = coins_from_transcript(tr, tr.header.get("channel", "main"))
        self.direction = tr.header.get("direction", "later")
        self.turn = np.full(n, _INF, dtype=np.int64)
        self.cond = np.full(n, _INF, dtype=np.int64)
        self.r = np.full(n, -1, dtype=np.int64)
        for rec in tr.records:
            k = rec["kind"]
            if k == "order":
                for i, v in enumerate(rec["order"], start=1):
                    self.turn[v] = i
            elif k == "turn":
                self.turn[rec["vertex"]] = rec["iteration"]
            elif k == "condition":
                self.cond[rec["vertex"]] = rec["iteration"]
            elif k == "subgraph-index":
                self.r[rec["vertex"]] = rec["r"]

    def _offered(self, x: int, ys: np.ndarray) -> np.ndarray:
        """Mask of ``ys`` inside x's released subset (x must have released)."""
        i = self.turn[x]
        side = self.turn[ys] > i if self.direction == "later" else self.turn[ys] < i
        ok = side & (self.cond[ys] > i)
        if ok.any():
            ok[ok] = self.coins.coins(np.full(int(ok.sum()), x), ys[ok], int(self.r[x]))
        return ok

    def decode(self, v: int, adjacency: Sequence[int]) -> set[int]:
        nb = np.asarray(adjacency, dtype=np.int64)
        if nb.size == 0:
            return set()
        out: set[int] = set()
        if self.r[v] >= 0:
            out.update(nb[self._offered(v, nb)].tolist())
        rel = nb[self.r[nb] >= 0]
        if rel.size:
            iu = self.turn[rel]
            side = self.turn[v] > iu if self.direction == "later" else self.turn[v] < iu
            ok = side & (self.cond[v] > iu)
            if ok.any():
                ok[ok] = self.coins.coins(rel[ok], np.full(int(ok.sum()), v), self.r[rel[ok]])
            out.update(rel[ok].tolist())
        return out


class DistributedSolution(ImplicitSolution):
    """Decoder for the proposer/receiver rounds: a pair matches when each lies in the other's subset."""

    def __init__(self, tr: Transcript):
        super().__init__(tr)
        self.coin_p = coins_from_transcript(tr, "proposal")
        self.coin_m = coins_from_transcript(tr, "match")
        rounds = sorted({rec["round"] for rec in tr.records if "round" in rec})
        self.rounds = np.asarray(rounds, dtype=np.int64)
        idx = {r: k for k, r in enumerate(rounds)}
        self.prop = np.full((len(rounds), self.n), -1, dtype=np.int64)
        self.recv = np.full((len(rounds), self.n), -1, dtype=np.int64)
        for rec in tr.of_kind("subgraph-index"):
            tab = self.prop if rec["channel"] == "proposal" else self.recv
            tab[idx[rec["round"]], rec["vertices"]] = rec["r"]

    def decode(self, v: int, adjacency: Sequence[int]) -> set[int]:
        nb = np.asarray(adjacency, dtype=np.int64)
        if nb.size == 0 or self.rounds.size == 0:
            return set()
        out: set[int] = set()
        # rounds where v proposed: partner u must be a receiver that round
        k = np.flatnonzero(self.prop[:, v] >= 0)
        if k.size:
            ru = self.recv[np.ix_(k, nb)]
            kk, jj = np.nonzero(ru >= 0)
            if kk.size:
                rnd = self.rounds[k[kk]]
                u = nb[jj]
                ok = self.coin_p.coins(u, v, self.prop[k[kk], v], rnd)
                ok &= self.coin_m.coins(v, u, ru[kk, jj], rnd)
                out.update(u[ok].tolist())
        k = np.flatnonzero(self.recv[:, v] >= 0)
        if k.size:
            pu = self.prop[np.ix_(k, nb)]
            kk, jj = np.nonzero(pu >= 0)
            if kk.size:
                rnd = self.rounds[k[kk]]
                u = nb[jj]
                ok = self.coin_p.coins(v, u, pu[kk, jj], rnd)
                ok &= self.coin_m.coins(u, v, self.recv[k[kk], v], rnd)
                out.update(u[ok].tolist())
        return out


def decode_matches(v: int, transcript: Transcript, adjacency: Sequence[int]) -> set[int]:
    sol = transcript._cache.get(("sol", len(transcript)))
    if sol is None:
        sol = ImplicitSolution.from_transcript(transcript)
        transcript._cache[("sol", len(transcript))] = sol
    return sol.decode(v, adjacency)


def implicit_degree(sol: ImplicitSolution, adjacency_lists: Sequence[Sequence[int]]) -> int:
    return max((len(m) for m in sol.decode_all(adjacency_lists)), default=0)
