"""Command-line entry point.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines;
flags given on the command line win. Output files go to ``--out``, else
``$DPMATCH_OUT``, else the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .auction import AuctionParams, opt_s, run_auction
from .billboard import IncompleteTranscriptError
from .continual import CrRun, run_adjlist_cr, run_edge_cr, run_node_cr
from .distributed import run_distributed
from .generators import KINDS, GraphFamilySpec, generate
from .graph import Graph, GraphFormatError, dump_edge_list, load_bipartite_edge_list, load_edge_list
from .metrics import RunMetrics, emit_plot_data
from .nodedp import node_dp_matching, node_dp_vertex_cover
from .oracles import (
    MAX_EXACT_N,
    OracleSizeError,
    max_b_matching_exact_small,
    max_matching_exact,
    min_vertex_cover_exact,
)
from .probe import MECHANISMS, privacy_probe
from .sequential import ParameterBoundError, SequentialParams, run_sequential
from .sparsify import SparsifyConfig, contraction_sparsify, lambda_b_matching
from .streams import StreamError, adjacency_stream, edge_stream, parse_stream

OUT_ENV = "DPMATCH_OUT"


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers


def read_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _spec_from_args(args, default_kind: str | None = None) -> GraphFamilySpec | None:
    kind = args.kind or default_kind
    if kind is None:
        return None
    seed = args.graph_seed
    if seed is None:
        seed = args.seed if args.command == "gen" else 0
    return GraphFamilySpec(kind, n=args.n or 0, p=args.p or 0.0, alpha=args.alpha_gen or 1,
                           n_left=args.n_left or 0, n_right=args.n_right or 0, seed=seed)


def load_graph(args, default_kind: str | None = None) -> Graph:
    if args.graph:
        return load_edge_list(Path(args.graph).read_text())
    spec = _spec_from_args(args, default_kind)
    if spec is None:
        raise UsageError("no input graph: pass -g FILE or a generator via --kind")
    return generate(spec)


def load_bipartite(args) -> tuple[Graph, int]:
    if args.graph:
        return load_bipartite_edge_list(Path(args.graph).read_text())
    spec = _spec_from_args(args, "random-bipartite" if args.kind is None else None)
    if spec.kind != "random-bipartite":
        raise UsageError("the auction needs a bipartite graph: -g FILE or --kind random-bipartite")
    return generate(spec), spec.n_left


def opt_bprime(g: Graph, bprime: int) -> int | None:
    try:
        if bprime == 1:
            return max_matching_exact(g)[0] if g.n <= MAX_EXACT_N else None
        return max_b_matching_exact_small(g, bprime)
    except OracleSizeError:
        return None


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _finish(args, m: RunMetrics, extra: str = "") -> int:
    out = _out_dir(args)
    _write_json(out / "metrics.json", m.to_dict(with_time=args.timing))
    ratio = "n/a" if m.ratio is None else f"{m.ratio:.3f}"
    print(f"{m.alg}: size={m.decoded_size} opt={m.opt} ratio={ratio} b={m.b} "
          f"ledger={m.ledger_total} seed={m.seed}{extra}")
    return 0


# ------------------------------------------------------------- subcommands


def cmd_gen(args) -> int:
    _require(args, "kind")
    spec = _spec_from_args(args)
    g = generate(spec)
    text = dump_edge_list(g, spec.n_left if spec.kind == "random-bipartite" else None)
    if args.output:
        Path(args.output).write_text(text)
        print(f"gen: {spec.kind} n={g.n} m={g.edge_count} -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _seq_metrics(g, args, eps=None, eta=None, bprime=None, b=None, c=None, seed=None, write=True):
    eps = args.eps if eps is None else eps
    eta = args.eta if eta is None else eta
    bprime = args.bprime if bprime is None else bprime
    seed = args.seed if seed is None else seed
    params = SequentialParams(eps, eta, bprime, args.c if c is None else c, args.b if b is None else b, args.strict)
    t0 = time.perf_counter()
    tr, sol = run_sequential(g, params, seed, noise_mode=args.noise)
    dec = sol.decode_all(g.adj)
    wall = time.perf_counter() - t0
    if write:
        tr.write(_out_dir(args) / "transcript.jsonl")
    return RunMetrics("seq", seed, sum(map(len, dec)) // 2, opt_bprime(g, bprime), sol.meta["b"],
                      max(map(len, dec), default=0), None, sol.meta["ledger"].total, eps, wall,
                      params={"eta": eta, "bprime": bprime})


def cmd_run_seq(args) -> int:
    _require(args, "eps")
    g = load_graph(args)
    return _finish(args, _seq_metrics(g, args))


def _dist_metrics(g, args, eps=None, bprime=None, seed=None, write=True):
    eps = args.eps if eps is None else eps
    bprime = args.bprime if bprime is None else bprime
    seed = args.seed if seed is None else seed
    t0 = time.perf_counter()
    tr, sol, rounds = run_distributed(g, eps, bprime, args.c_dist, seed, b=args.b, strict=args.strict,
                                      round_constant=args.round_constant, max_rounds=args.max_rounds,
                                      stop_when_unhopeful=args.stop_when_unhopeful, noise_mode=args.noise)
    dec = sol.decode_all(g.adj)
    wall = time.perf_counter() - t0
    if write:
        tr.write(_out_dir(args) / "transcript.jsonl")
    return RunMetrics("dist", seed, sum(map(len, dec)) // 2, opt_bprime(g, bprime), sol.meta["b"],
                      max(map(len, dec), default=0), rounds, sol.meta["ledger"].total, eps, wall,
                      params={"bprime": bprime, "rounds_cap": sol.meta["rounds_cap"]})


def cmd_run_dist(args) -> int:
    _require(args, "eps")
    g = load_graph(args)
    return _finish(args, _dist_metrics(g, args))


def _node_metrics(g, args, eps=None, eta=None, bprime=None, seed=None, write=True):
    eps = args.eps if eps is None else eps
    eta = args.eta_node if eta is None else eta
    bprime = args.bprime if bprime is None else bprime
    seed = args.seed if seed is None else seed
    t0 = time.perf_counter()
    tr, sol = node_dp_matching(g, eps, eta, bprime, args.alpha, seed, c=args.c, b=args.b, strict=args.strict,
                               noise_mode=args.noise)
    dec = sol.decode_all(g.adj)
    wall = time.perf_counter() - t0
    if write:
        tr.write(_out_dir(args) / "transcript.jsonl")
    return RunMetrics("node", seed, sum(map(len, dec)) // 2, opt_bprime(g, bprime), sol.meta["b"],
                      max(map(len, dec), default=0), None, sol.meta["ledger"].total, eps, wall,
                      conditional_utility=True, params={"eta": eta, "bprime": bprime, "lam": sol.meta["lam"]})


def cmd_run_node(args) -> int:
    _require(args, "eps")
    g = load_graph(args)
    return _finish(args, _node_metrics(g, args))


def cmd_run_vc(args) -> int:
    _require(args, "eps")
    g = load_graph(args)
    t0 = time.perf_counter()
    vc = node_dp_vertex_cover(g, args.eps, args.alpha, args.seed, eta=args.eta_node, c=args.c,
                              noise_mode=args.noise)
    cover = vc.cover(g)
    wall = time.perf_counter() - t0
    _write_json(_out_dir(args) / "cover.json", vc.to_record())
    opt = min_vertex_cover_exact(g) if g.n <= 20 else None
    m = RunMetrics("vc", args.seed, len(cover), opt, None, None, None, vc.meta["ledger"].total, args.eps, wall,
                   conditional_utility=True, params={"lam": vc.lam})
    return _finish(args, m)


def _auction_metrics(g, nl, args, eps=None, eta=None, seed=None, write=True):
    eps = args.eps if eps is None else eps
    eta = args.eta_auction if eta is None else eta
    seed = args.seed if seed is None else seed
    params = AuctionParams(eps, eta, args.s, args.c_dist, args.strict, args.opt_mode)
    t0 = time.perf_counter()
    tr, sol = run_auction(g, nl, params, seed, noise_mode=args.noise)
    size = sol.size(g.adj)
    wall = time.perf_counter() - t0
    if write:
        tr.write(_out_dir(args) / "transcript.jsonl")
    load = sol.loads(g.adj)
    return RunMetrics("auction", seed, size, opt_s(g, nl, sol.meta["s"]), sol.meta["s"],
                      int(load.max(initial=0)), sol.meta["rounds"], sol.meta["ledger"].total, eps, wall,
                      params={"eta": eta, "opt_mode": args.opt_mode})


def cmd_run_auction(args) -> int:
    _require(args, "eps")
    g, nl = load_bipartite(args)
    return _finish(args, _auction_metrics(g, nl, args))


def _load_stream(args, adjacency: bool):
    if args.stream:
        return parse_stream(Path(args.stream).read_text())
    g = load_graph(args)
    rng = np.random.default_rng(args.graph_seed or 0)
    if adjacency:
        return adjacency_stream(g.n, rng.permutation(g.n).tolist(), g.adj, args.lists)
    edges = g.edges()
    return edge_stream(g.n, [edges[i] for i in rng.permutation(len(edges))])


def _finish_cr(args, run: CrRun, name: str, eps: float, transcripts) -> int:
    out = _out_dir(args)
    with open(out / "outputs.jsonl", "w") as fh:
        for o in run.outputs:
            fh.write(json.dumps(o.to_record(), sort_keys=True) + "\n")
    for k, tr in transcripts:
        tr.write(out / f"transcript-v{k}.jsonl")
    last = len(run.outputs) - 1
    g_last = run.versions[run.outputs[last].version].graph
    m = RunMetrics(name, args.seed, run.size_at(last), opt_bprime(g_last, 1), run.meta.get("b"), None, None,
                   run.ledger.total, eps, None, params={"changes": run.changes, "updates": last})
    return _finish(args, m, extra=f" changes={run.changes}")


def cmd_run_cr_edge(args) -> int:
    _require(args, "eps")
    st = _load_stream(args, adjacency=False)
    run = run_edge_cr(st, args.eps, args.rho, args.bprime, args.eta, args.seed, b=args.b, strict=args.strict,
                      c_seq=args.c, noise_mode=args.noise)
    trs = [(k, v.solution.transcript) for k, v in enumerate(run.versions) if v.solution is not None]
    return _finish_cr(args, run, "cr-edge", args.eps, trs)


def cmd_run_cr_node(args) -> int:
    _require(args, "eps")
    st = _load_stream(args, adjacency=False)
    run = run_node_cr(st, args.eps, args.eta_node, args.bprime, args.alpha, args.seed, b=args.b,
                      strict=args.strict, c_seq=args.c, noise_mode=args.noise)
    trs = [(k, v.solution.transcript) for k, v in enumerate(run.versions) if v.solution is not None]
    return _finish_cr(args, run, "cr-node", args.eps, trs)


def cmd_run_cr_adj(args) -> int:
    _require(args, "eps")
    st = _load_stream(args, adjacency=True)
    run = run_adjlist_cr(st, args.eps, args.b, args.seed, eta=args.eta_node if args.eta_node < 1 else 0.5,
                         lists=args.lists, c=args.c, noise_mode=args.noise)
    return _finish_cr(args, run, "cr-adj", args.eps, [(0, run.meta["transcript"])])


def cmd_sparsify(args) -> int:
    g = load_graph(args)
    if args.lam is None:
        _require(args, "alpha")
        lam = lambda_b_matching(args.alpha, args.eta_node, args.bprime)
    else:
        lam = args.lam
    h = contraction_sparsify(g, SparsifyConfig(lam))
    path = Path(args.output) if args.output else _out_dir(args) / "sparsified.el"
    path.write_text(dump_edge_list(h))
    print(f"sparsify: lam={lam} m(G)={g.edge_count} m(H)={h.edge_count} max_deg(H)={int(h.degrees.max(initial=0))} -> {path}")
    return 0


def _parse_sweep(items: Sequence[str]) -> list[tuple[str, list[float]]]:
    out = []
    for item in items:
        if "=" not in item:
            raise UsageError(f"--sweep expects key=v1,v2,..., got {item!r}")
        k, vals = item.split("=", 1)
        try:
            out.append((k.strip(), [float(v) for v in vals.split(",") if v.strip()]))
        except ValueError:
            raise UsageError(f"--sweep {item!r}: values must be numbers") from None
    return out


def cmd_eval(args) -> int:
    sweep = _parse_sweep(args.sweep or [])
    grid: list[dict[str, float]] = [{}]
    for k, vals in sweep:
        if k not in ("eps", "eta", "bprime", "b", "c"):
            raise UsageError(f"cannot sweep {k!r}; choose from eps, eta, bprime, b, c")
        grid = [dict(d, **{k: v}) for d in grid for v in vals]
    if args.alg == "auction":
        g, nl = load_bipartite(args)
    else:
        if not args.graph and args.kind is None:
            args.kind, args.n = "perfect-matching", args.n or 64
        g, nl = load_graph(args), None
    rows = []
    for point in grid:
        for i in range(args.seeds):
            seed = args.seed + i
            kw = {k: (int(v) if k == "bprime" else v) for k, v in point.items()}
            if args.eps is None and "eps" not in kw:
                raise UsageError("missing required option(s): --eps (or sweep it)")
            if args.alg == "seq":
                m = _seq_metrics(g, args, seed=seed, write=False, **kw)
            elif args.alg == "dist":
                m = _dist_metrics(g, args, seed=seed, write=False,
                                  **{k: v for k, v in kw.items() if k in ("eps", "bprime")})
            elif args.alg == "node":
                m = _node_metrics(g, args, seed=seed, write=False,
                                  **{k: v for k, v in kw.items() if k in ("eps", "eta", "bprime")})
            else:
                m = _auction_metrics(g, nl, args, seed=seed, write=False,
                                     **{k: v for k, v in kw.items() if k in ("eps", "eta")})
            if not args.timing:
                m.wall_time = None
            m.params.update({f"sweep.{k}": v for k, v in point.items()})
            rows.append(m)
    path = _out_dir(args) / "eval.csv"
    path.write_text(emit_plot_data(rows))
    ratios = [m.ratio for m in rows if m.ratio is not None]
    mean = f"{np.mean(ratios):.3f}" if ratios else "n/a"
    print(f"eval: alg={args.alg} points={len(grid)} seeds={args.seeds} rows={len(rows)} mean_ratio={mean} -> {path}")
    return 0


def cmd_probe(args) -> int:
    eps = 0.5 if args.eps is None else args.eps
    mech = MECHANISMS[args.mechanism](eps, 0.5 if args.fault else 1.0)
    # vertex 0 is the auction's item, so one pair serves both relations
    g1, g2 = Graph.from_edges(2, [(0, 1)]), Graph.empty(2)
    rep = privacy_probe(mech, g1, g2, eps, args.trials, args.seed)
    _write_json(_out_dir(args) / "probe.json", {
        "mechanism": rep.mechanism, "events": rep.events, "eps": rep.eps, "trials": rep.trials,
        "max_log_ratio": None if rep.max_log_ratio == float("inf") else rep.max_log_ratio,
        "max_lower_bound": rep.max_lower_bound, "fail": rep.fail,
        "freqs": {repr(k): list(v) for k, v in rep.freqs.items()},
    })
    print(rep.summary())
    return 0


# ------------------------------------------------------------------ parser


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    p.add_argument("--config", help="flat key = value file supplying defaults")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=("real", "zero"), default="real")
    p.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="refuse caps below the utility bound (default)")
    p.add_argument("--exploratory", dest="strict", action="store_false", help="allow any cap >= 1")
    p.add_argument("--timing", action="store_true", help="record wall time in metrics")
    if graph:
        p.add_argument("-g", "--graph", help="edge-list file")
        p.add_argument("--kind", choices=KINDS)
        p.add_argument("--n", type=int)
        p.add_argument("--p", type=float)
        p.add_argument("--alpha-gen", type=int, help="forest count for --kind forest-union")
        p.add_argument("--n-left", type=int)
        p.add_argument("--n-right", type=int)
        p.add_argument("--graph-seed", type=int, help="generator seed (gen falls back to --seed, others to 0)")


def _algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float)
    p.add_argument("--eta", type=float, default=0.25, help="sequential eta in (0, 1)")
    p.add_argument("--eta-node", type=float, default=0.5, help="sparsifier eta in (0, 1]")
    p.add_argument("--eta-auction", type=float, default=0.5)
    p.add_argument("--bprime", type=int, default=1)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float, default=3.0, help="failure-probability constant for sequential runs")
    p.add_argument("--c-dist", type=float, default=1.0, help="constant for distributed and auction runs")
    p.add_argument("--alpha", type=float, help="public arboricity bound; estimated privately if omitted")
    p.add_argument("--round-constant", type=float, default=512.0)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--stop-when-unhopeful", action="store_true", help="evaluation only: reads the private graph")
    p.add_argument("--s", type=int, help="auction supply")
    p.add_argument("--opt-mode", choices=("surrogate", "oracle"), default="surrogate")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--lists", choices=("back", "both"), default="back")
    p.add_argument("--stream", help="stream file")


COMMANDS: dict[str, tuple[Callable, str]] = {
    "gen": (cmd_gen, "generate a graph family instance"),
    "run-seq": (cmd_run_seq, "sequential local edge-DP b-matching"),
    "run-dist": (cmd_run_dist, "round-based distributed b-matching"),
    "run-node": (cmd_run_node, "node-DP matching through the sparsifier"),
    "run-vc": (cmd_run_vc, "node-DP implicit vertex cover"),
    "run-auction": (cmd_run_auction, "node-DP ascending auction on a bipartite graph"),
    "run-cr-edge": (cmd_run_cr_edge, "edge-DP continual release, edge-order stream"),
    "run-cr-node": (cmd_run_cr_node, "node-DP continual release, edge-order stream"),
    "run-cr-adj": (cmd_run_cr_adj, "continual release, adjacency-list stream"),
    "sparsify": (cmd_sparsify, "write the contraction sparsifier of a graph"),
    "eval": (cmd_eval, "seed and parameter sweeps to CSV"),
    "probe": (cmd_probe, "empirical privacy probe"),
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="dpmatch", description="Private matchings in the billboard model.")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}
    for name, (fn, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        _common(p, graph=True)
        if name == "gen":
            p.add_argument("-o", "--output")
        elif name == "probe":
            p.add_argument("--mechanism", choices=sorted(MECHANISMS), default="seq")
            p.add_argument("--eps", type=float)
            p.add_argument("--trials", type=int, default=10_000)
            p.add_argument("--fault", action="store_true", help="halve every noise scale")
        else:
            _algo_flags(p)
            if name == "sparsify":
                p.add_argument("--lam", type=int)
                p.add_argument("-o", "--output")
            if name == "eval":
                p.add_argument("--alg", choices=("seq", "dist", "node", "auction"), default="seq")
                p.add_argument("--sweep", action="append", help="key=v1,v2,... (repeatable)")
                p.add_argument("--seeds", type=int, default=10)
        subs[name] = p
    return parser, subs


def _apply_config(p: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    actions = {a.dest: a for a in p._actions}
    out: dict[str, Any] = {}
    for k, v in cfg.items():
        if k not in actions or k in ("help", "config", "func"):
            raise UsageError(f"unknown config key {k!r}")
        a = actions[k]
        if a.nargs == 0:  # store_true / store_false
            out[k] = v.lower() in ("1", "true", "yes", "on")
        elif isinstance(a, argparse._AppendAction):
            out[k] = [s.strip() for s in v.split(";")]
        else:
            out[k] = a.type(v) if a.type else v
    p.set_defaults(**out)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(subs[args.command], read_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        subs_p = subs.get(argv[0]) if argv else None
        (subs_p or parser).print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, GraphFormatError, StreamError, ParameterBoundError, OracleSizeError,
            IncompleteTranscriptError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # argparse
        return int(e.code) if isinstance(e.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
