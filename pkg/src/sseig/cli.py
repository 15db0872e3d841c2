"""Command-line entry point: ``sseig {generate,solve,validate,profile}``.

Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DigestMismatchError, NumericalError, ParseError, SseigError
from .graph import (
    build_knn_graph,
    embed_seed,
    generate_grid,
    generate_preferential_attachment,
    generate_ring_lattice,
)
from .io import read_graph, write_edge_list, write_vectors
from .kernels import ProjectionBasis, d_inner

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(SseigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str, flag: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated list of numbers, got '{text}'") from None


def _thread_limit():
    raw = os.environ.get("SSEIG_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = max(1, int(raw))
    except ValueError:
        raise UsageError(f"SSEIG_THREADS must be a positive integer, got '{raw}'") from None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _manifest(command: str, params: dict, graph=None, seconds=None) -> dict:
    out = {"command": command, "params": params, "tool_version": __version__}
    if graph is not None:
        out["graph_digest"] = graph.digest
        out["graph_nodes"] = graph.n
    if seconds is not None:
        out["seconds"] = seconds
    return out


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# generate -------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.kind == "ring":
        if args.n is None or args.z is None:
            raise UsageError("generate ring needs --n and --z (even, 2 <= z < n)")
        graph = generate_ring_lattice(args.n, args.z, args.p, args.seed)
        params = {"kind": "ring", "n": args.n, "z": args.z, "p": args.p, "seed": args.seed}
    elif args.kind == "grid":
        if args.rows is None or args.cols is None:
            raise UsageError("generate grid needs --rows and --cols (both >= 1)")
        graph = generate_grid(args.rows, args.cols)
        params = {"kind": "grid", "rows": args.rows, "cols": args.cols}
    elif args.kind == "knn":
        if args.points is None or args.k is None:
            raise UsageError("generate knn needs --points FILE and --k (>= 1)")
        points = np.loadtxt(args.points, ndmin=2)
        graph = build_knn_graph(points, args.k)
        params = {"kind": "knn", "points": str(args.points), "k": args.k}
    else:
        if args.n is None or args.m is None:
            raise UsageError("generate preferential needs --n and --m (1 <= m < n)")
        graph = generate_preferential_attachment(args.n, args.m, args.seed)
        params = {"kind": "preferential", "n": args.n, "m": args.m, "seed": args.seed}
    write_edge_list(args.out, graph)
    manifest = _manifest("generate", params, graph)
    manifest.update(edges=graph.edge_count, diagnostics=graph.diagnostics)
    _write_json(Path(str(args.out) + ".manifest.json"), manifest)
    print(f"wrote {args.out}: {graph.n} nodes, {graph.edge_count} edges")
    return EXIT_OK


# solve ----------------------------------------------------------------------

def _parse_seed(args, graph):
    if (args.seed_node is None) == (args.seed_file is None):
        raise UsageError("give exactly one of --seed-node IDS or --seed-file FILE")
    if args.seed_node is not None:
        try:
            support = [int(v) for v in args.seed_node.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--seed-node expects comma-separated node ids, got '{args.seed_node}'") from None
        if any(not 0 <= v < graph.n for v in support):
            raise UsageError(f"--seed-node ids must lie in [0, {graph.n - 1}]")
    else:
        support = []
        with open(args.seed_file) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].split()
                if not text:
                    continue
                try:
                    support.append((int(text[0]), float(text[1]) if len(text) > 1 else 1.0))
                except ValueError:
                    raise ParseError("expected 'node [weight]'", args.seed_file, lineno) from None
    return support


def _parse_kappa(text: str, k: int):
    values = _float_list(text, "--kappa")
    if len(values) == 1:
        if not 0.0 <= values[0] <= 1.0:
            raise UsageError(f"--kappa must lie in [0, 1], got {values[0]}")
        return (values[0] / k,) * k
    if len(values) != k:
        raise UsageError(f"--kappa has {len(values)} entries but --k is {k}")
    if any(not 0 <= v <= 1 for v in values) or sum(values) > 1.0 + 1e-12:
        raise UsageError("--kappa entries must lie in [0, 1] and sum to at most 1")
    return tuple(values)


def cmd_solve(args) -> int:
    from .solver import SolverConfig, solve

    graph = read_graph(args.graph, args.format)
    support = _parse_seed(args, graph)
    seed = embed_seed(graph, support)
    d = graph.degrees
    params = {"graph": str(args.graph), "seed": support, "method": args.method}
    t0 = time.perf_counter()
    caught = []

    if args.method == "push":
        from .push import push_solve

        if args.kappa is not None:
            raise UsageError("--method push takes --gammas, not --kappa: the diffusion path only reaches "
                             "gamma in (-inf, 0), so it cannot bisect for a requested correlation")
        if args.gammas is None:
            raise UsageError("--method push needs --gammas G1,G2,... (each < 0)")
        gammas = _float_list(args.gammas, "--gammas")
        if any(g >= 0 for g in gammas):
            raise UsageError("--gammas must all be negative: the diffusion path is defined only for gamma in (-inf, 0)")
        if args.k is not None and args.k != len(gammas):
            raise UsageError(f"--k={args.k} disagrees with the {len(gammas)} values in --gammas")
        X, infos = push_solve(graph, seed, gammas, args.epsilon)
        params.update(gammas=gammas, epsilon=args.epsilon)
        meta = {
            "gammas": gammas,
            "achieved_correlations": [i["correlation"] for i in infos],
            "pushes": [i["pushes"] for i in infos],
            "touched": [i["touched"] for i in infos],
        }
    else:
        if args.k is None or args.kappa is None:
            raise UsageError(f"--method {args.method} needs --k and --kappa")
        if args.k < 1:
            raise UsageError("--k must be >= 1")
        kappa = _parse_kappa(args.kappa, args.k)
        config = SolverConfig(k=args.k, kappa=kappa, epsilon=args.bisect_epsilon, cg_tol=args.cg_tol,
                              eager_bound=args.eager_bound)
        backend = None
        params.update(k=args.k, kappa=list(kappa), epsilon=args.bisect_epsilon, cg_tol=args.cg_tol,
                      eager_bound=args.eager_bound)
        if args.method == "nystrom":
            from .nystrom import NystromBackend, build_nystrom

            if args.m is None:
                raise UsageError(f"--method nystrom needs --m (1 <= m <= {graph.n})")
            model = build_nystrom(graph, args.m, args.rng_seed)
            backend = NystromBackend(model, seed)
            params.update(m=args.m, rng_seed=args.rng_seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sol = solve(graph, seed, config, backend=backend)
        X = sol.vectors
        meta = {
            # gamma is -inf when the seed limit itself was returned; JSON has no infinity
            "gammas": [g if math.isfinite(g) else None for g in sol.gammas],
            "achieved_correlations": sol.achieved_correlations,
            "upper_bounds": sol.upper_bounds,
            "iterations": [dg["solver_iterations"] for dg in sol.diagnostics],
            "bisections": [dg["bisections"] for dg in sol.diagnostics],
            "status": [dg["status"] for dg in sol.diagnostics],
        }
    seconds = time.perf_counter() - t0
    gram = X.T @ (d[:, None] * X)
    meta["max_orthonormality_error"] = float(np.abs(gram - np.eye(X.shape[1])).max())
    meta["trivial_overlap"] = float(np.abs(X.T @ d).max())
    meta["warnings"] = [str(w.message) for w in caught]
    meta["wall_time"] = seconds
    meta["manifest"] = _manifest("solve", params, graph, seconds)
    write_vectors(args.out, X, meta)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for t, c in enumerate(meta["achieved_correlations"]):
        g = meta["gammas"][t]
        print(f"x{t + 1}: gamma={'-inf' if g is None else f'{g:.8g}'} correlation={c:.6g}")
    return EXIT_OK


# validate -------------------------------------------------------------------

def cmd_validate(args) -> int:
    from .validate import run_validation

    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    if args.size_limit < 10 or args.size_limit > 100:
        raise UsageError("--size-limit must lie in [10, 100]")
    report = run_validation(args.size_limit, args.trials, args.rng_seed, perturb=args.perturb)
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["passed"] else EXIT_NUMERICAL


# profile --------------------------------------------------------------------

def cmd_profile(args) -> int:
    from .push import alpha_grid, correlation_decay_profile, exact_baseline

    graph = read_graph(args.graph, args.format)
    seed = embed_seed(graph, _parse_seed(args, graph))
    if args.alphas:
        alphas = _float_list(args.alphas, "--alphas")
    else:
        lo, hi, count = _float_list(args.alpha_grid, "--alpha-grid")
        alphas = alpha_grid(lo, hi, int(count))
    if any(not 0 < a < 1 for a in alphas):
        raise UsageError("teleportation values must lie in (0, 1)")
    epsilons = _float_list(args.epsilons, "--epsilons")
    if any(e <= 0 for e in epsilons):
        raise UsageError("--epsilons must be positive")
    rows = correlation_decay_profile(graph, seed, alphas, epsilons)
    fields = ["alpha", "epsilon", "correlation", "touched", "seconds"]
    if graph.n <= args.baseline_cap:
        base = {b["alpha"]: b for b in exact_baseline(graph, seed, alphas, cg_tol=args.cg_tol)}
        for row in rows:
            b = base[row["alpha"]]
            row.update(exact_correlation=b["correlation"], exact_seconds=b["seconds"],
                       speedup=b["seconds"] / row["seconds"] if row["seconds"] > 0 else float("inf"))
        fields += ["exact_correlation", "exact_seconds", "speedup"]
    else:
        print(f"notice: n={graph.n} exceeds --baseline-cap={args.baseline_cap}; "
              "CG baseline skipped, absolute timings only", file=sys.stderr)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sseig", description="Semi-supervised eigenvectors of graph Laplacians.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a synthetic graph as an edge list")
    gen.add_argument("kind", choices=["ring", "grid", "knn", "preferential"])
    gen.add_argument("--n", type=int)
    gen.add_argument("--z", type=int, help="ring: even neighbourhood size")
    gen.add_argument("--p", type=float, default=0.0, help="ring: rewiring probability in [0, 1]")
    gen.add_argument("--m", type=int, help="preferential: edges per new node")
    gen.add_argument("--rows", type=int)
    gen.add_argument("--cols", type=int)
    gen.add_argument("--points", type=Path, help="knn: whitespace-separated feature rows")
    gen.add_argument("--k", type=int, help="knn: neighbours per point")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed")
    gen.add_argument("--out", type=Path, required=True)
    gen.set_defaults(func=cmd_generate)

    def graph_and_seed(p):
        p.add_argument("--graph", type=Path, required=True)
        p.add_argument("--format", choices=["auto", "edgelist", "mtx"], default="auto")
        p.add_argument("--seed-node", help="comma-separated seed node ids")
        p.add_argument("--seed-file", type=Path, help="lines of 'node [weight]'")

    sol = sub.add_parser("solve", help="compute semi-supervised eigenvectors")
    graph_and_seed(sol)
    sol.add_argument("--method", choices=["exact", "nystrom", "push"], default="exact")
    sol.add_argument("--k", type=int)
    sol.add_argument("--kappa", help="total correlation (split evenly) or k comma-separated values")
    sol.add_argument("--bisect-epsilon", type=float, default=1e-4, help="tolerance on squared correlation")
    sol.add_argument("--cg-tol", type=float, default=1e-8)
    sol.add_argument("--eager-bound", action="store_true", help="recompute the gamma upper bound every vector")
    sol.add_argument("--m", type=int, help="nystrom: number of sampled columns")
    sol.add_argument("--rng-seed", type=int, default=0, help="nystrom: sampling seed")
    sol.add_argument("--gammas", help="push: comma-separated negative gamma values")
    sol.add_argument("--epsilon", type=float, default=1e-8, help="push: residual threshold")
    sol.add_argument("--out", type=Path, required=True)
    sol.set_defaults(func=cmd_solve)

    val = sub.add_parser("validate", help="run oracle and identity self-checks")
    val.add_argument("--size-limit", type=int, default=50)
    val.add_argument("--trials", type=int, default=3)
    val.add_argument("--rng-seed", type=int, default=0)
    val.add_argument("--perturb", action="store_true", help="negative control: corrupt one weight")
    val.add_argument("--report", type=Path)
    val.set_defaults(func=cmd_validate)

    prof = sub.add_parser("profile", help="correlation decay of the push path versus teleportation")
    graph_and_seed(prof)
    prof.add_argument("--alphas", help="comma-separated standard teleportation values in (0, 1)")
    prof.add_argument("--alpha-grid", default="0.01,0.99,8", help="LO,HI,COUNT log-spaced grid")
    prof.add_argument("--epsilons", default="1e-4")
    prof.add_argument("--baseline-cap", type=int, default=20000, help="largest n for the CG baseline")
    prof.add_argument("--cg-tol", type=float, default=1e-6)
    prof.add_argument("--out", type=Path)
    prof.set_defaults(func=cmd_profile)
    return parser


_LIST_FLAGS = ("--gammas", "--alphas", "--kappa", "--epsilons", "--alpha-grid")


def _join_negative_lists(argv):
    """``--gammas -0.5,-0.2`` reads as a flag to argparse; rewrite it as ``--gammas=-0.5,-0.2``."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_lists(argv))
    try:
        with _thread_limit():
            return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"sseig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"sseig {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ParseError, DigestMismatchError) as exc:
        print(f"sseig {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SseigError as exc:
        print(f"sseig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
