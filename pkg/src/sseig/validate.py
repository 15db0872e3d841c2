"""Self-check suites run by ``sseig validate``.

Every suite returns plain dicts so the report serializes straight to JSON.
Failures are recorded in the report, never raised.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graph import Graph, embed_seed, random_connected_graph
from .kernels import (
    ProjectionBasis,
    d_inner,
    dense_oracle_solve,
    laplacian_operator,
    identities_check,
    normalized_adjacency_operator,
    projected_shifted_operator,
)
from .solver import ExactBackend, recompute_upper_bound


def perturb_one_weight(graph: Graph, rng) -> Graph:
    """Negative control: scale a single directed entry so the matrix is no longer symmetric."""
    adj = graph.adjacency.tolil(copy=True)
    coo = graph.adjacency.tocoo()
    k = int(rng.integers(coo.nnz))
    i, j = int(coo.row[k]), int(coo.col[k])
    adj[i, j] = adj[i, j] * 2.0 + 1.0
    return Graph(sp.csr_matrix(adj), dict(graph.diagnostics))


def _trial_graph(rng, size_limit):
    n = int(rng.integers(10, max(size_limit, 10) + 1))
    return random_connected_graph(n, 0.2, rng_seed=rng)


def structure_suite(graph: Graph) -> dict:
    issues = graph.validate()
    probes = {
        "laplacian": laplacian_operator(graph).symmetry_defect(),
        "normalized_adjacency": normalized_adjacency_operator(graph).symmetry_defect(),
        "projected_shifted": projected_shifted_operator(graph, ProjectionBasis.trivial(graph), -0.5).symmetry_defect(),
    }
    sym_ok = all(v <= 1e-8 for v in probes.values())
    return {"issues": issues, "symmetry_defects": probes, "passed": not issues and sym_ok}


def seed_suite(graph: Graph, node: int) -> dict:
    seed = embed_seed(graph, [node])
    d = graph.degrees
    ortho = abs(d_inner(d, seed.embedded, np.ones(graph.n)))
    norm = abs(d_inner(d, seed.embedded, seed.embedded) - 1.0)
    return {"trivial_overlap": ortho, "norm_error": norm, "passed": ortho <= 1e-10 and norm <= 1e-10}


def oracle_suite(graph: Graph, rng, tol=1e-6) -> dict:
    """CG path against the dense pseudoinverse at a random admissible gamma."""
    seed = embed_seed(graph, [int(rng.integers(graph.n))])
    basis = ProjectionBasis.trivial(graph)
    top = recompute_upper_bound(graph, basis)
    # log-uniform distance below the bound, from 1e-3 up to the full bracket
    span = top + graph.volume
    gamma = top - span * 10.0 ** rng.uniform(np.log10(1e-3 / span), 0.0) * (1 - 1e-12)
    x, iters = ExactBackend(graph, seed).solve(gamma, basis)
    ref = dense_oracle_solve(graph, basis, gamma, seed)
    diff = x - ref
    err = float(np.sqrt(d_inner(graph.degrees, diff, diff)))
    return {"n": graph.n, "gamma": gamma, "top": top, "d_norm_error": err, "cg_iterations": iters,
            "passed": err <= tol}


def run_validation(size_limit: int = 50, trials: int = 3, rng_seed: int = 0, perturb: bool = False) -> dict:
    rng = np.random.default_rng(rng_seed)
    report = {"size_limit": size_limit, "trials": trials, "rng_seed": rng_seed, "perturb": perturb, "suites": []}
    for t in range(trials):
        graph = _trial_graph(rng, size_limit)
        if perturb:
            tampered = perturb_one_weight(graph, rng)
            entry = {"trial": t, "structure": structure_suite(tampered)}
        else:
            entry = {"trial": t, "structure": structure_suite(graph)}
        entry["seed"] = seed_suite(graph, int(rng.integers(graph.n)))
        entry["oracle"] = oracle_suite(graph, rng)
        entry["identities"] = identities_check(min(20, size_limit), rng_seed=int(rng.integers(2**31)))
        entry["passed"] = all(v["passed"] for k, v in entry.items() if isinstance(v, dict))
        report["suites"].append(entry)
    report["passed"] = all(e["passed"] for e in report["suites"])
    return report
