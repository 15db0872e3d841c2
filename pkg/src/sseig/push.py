"""Diffusion path: approximate personalized PageRank by residual pushing.

The lazy walk ``W = (I + A D^{-1}) / 2`` with teleportation ``alpha'`` has
``pr(alpha', s) = alpha' s + (1 - alpha') W pr(alpha', s)``, and for
``gamma < 0`` with ``alpha' = gamma / (gamma - 2)``

    (L - gamma D)^{-1} D s  is proportional to  D^{-1} pr(alpha', D s).
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, IllPosedError
from .graph import Graph, SeedVector
from .kernels import ProjectionBasis, d_inner, d_normalize, sign_normalize


def gamma_to_alpha(gamma: float) -> float:
    """Lazy-walk teleportation ``alpha' = gamma / (gamma - 2)``; only ``gamma < 0`` is admissible."""
    if not gamma < 0:
        raise ValueError(f"gamma must be negative (the diffusion series diverges for gamma > 0), got {gamma}")
    return gamma / (gamma - 2.0)


def alpha_to_gamma(alpha_prime: float) -> float:
    if not 0.0 < alpha_prime < 1.0:
        raise ValueError(f"alpha' must lie in (0, 1) to map to a finite gamma < 0, got {alpha_prime}")
    return 2.0 * alpha_prime / (alpha_prime - 1.0)


def lazy_to_standard_alpha(alpha_prime: float) -> float:
    return 2.0 * alpha_prime / (1.0 + alpha_prime)


def standard_to_lazy_alpha(alpha: float) -> float:
    return alpha / (2.0 - alpha)


@dataclass(frozen=True)
class PushConfig:
    alpha_prime: float
    epsilon: float
    max_pushes: int = 50_000_000

    def __post_init__(self):
        if not 0.0 < self.alpha_prime <= 1.0:
            raise ValueError(f"alpha' must lie in (0, 1], got {self.alpha_prime}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class PushState:
    p: np.ndarray
    r: np.ndarray
    queue: deque = field(default_factory=deque)
    pushes: int = 0
    touched: int = 0


def push_pagerank(graph: Graph, s_pr, config: PushConfig, on_push=None) -> PushState:
    """FIFO residual push.

    ``s_pr`` is a dense nonnegative vector or a mapping ``{node: mass}``.
    On return every node satisfies ``r[u] < epsilon * d[u]``. ``on_push`` is
    called as ``on_push(p, r)`` with the (list-valued) state after each push.
    """
    n = graph.n
    deg = graph.degrees.tolist()
    nbrs = graph.neighbor_lists
    a = config.alpha_prime
    keep = 0.5 * (1.0 - a)
    thresh = [config.epsilon * du for du in deg]

    if isinstance(s_pr, dict):
        start = sorted(s_pr.items())
    else:
        dense = np.asarray(s_pr, dtype=np.float64)
        start = [(int(u), float(dense[u])) for u in np.flatnonzero(dense)]
    r = [0.0] * n
    p = [0.0] * n
    touched = set()
    for u, mass in start:
        if mass < 0:
            raise ValueError("push seed must be nonnegative")
        r[u] += mass
        touched.add(u)
    in_queue = [False] * n
    queue = deque()
    for u, _ in start:
        if r[u] >= thresh[u] and not in_queue[u]:
            in_queue[u] = True
            queue.append(u)

    pushes = 0
    limit = config.max_pushes
    while queue:
        u = queue.popleft()
        in_queue[u] = False
        ru = r[u]
        if ru < thresh[u]:
            continue
        if pushes >= limit:
            raise ConvergenceError(f"push exceeded {limit} operations",
                                   residual=max(ri / di for ri, di in zip(r, deg)))
        pushes += 1
        p[u] += a * ru
        spread = keep * ru
        r[u] = spread
        share = spread / deg[u]
        for v, w in nbrs[u]:
            rv = r[v] + share * w
            r[v] = rv
            if rv >= thresh[v] and not in_queue[v]:
                in_queue[v] = True
                queue.append(v)
            touched.add(v)
        if r[u] >= thresh[u] and not in_queue[u]:
            in_queue[u] = True
            queue.append(u)
        if on_push is not None:
            on_push(p, r)
    return PushState(np.array(p), np.array(r), queue, pushes, len(touched))


def dense_pagerank(graph: Graph, alpha_prime: float, s) -> np.ndarray:
    """Exact ``pr(alpha', s)`` by a dense linear solve (reference for small graphs)."""
    n = graph.n
    W = 0.5 * (np.eye(n) + graph.adjacency.toarray() / graph.degrees[None, :])
    return np.linalg.solve(np.eye(n) - (1.0 - alpha_prime) * W, alpha_prime * np.asarray(s, dtype=np.float64))


def _seed_parts(graph: Graph, seed: SeedVector):
    d = graph.degrees
    sqd = np.sqrt(d)
    s_pr = {}
    for node, weight in seed.support:
        s_pr[node] = s_pr.get(node, 0.0) + sqd[node] * weight
    # D^{-1/2} v0 v0^T s0 is the constant vector (sum_i sqrt(d_i) s0_i) / vol
    shift = sum(sqd[node] * weight for node, weight in seed.support) / graph.volume
    return s_pr, shift


def _diffusion_vector(graph: Graph, seed: SeedVector, gamma: float, epsilon: float, pagerank=None):
    """``D^{-1} pr(alpha', D^{1/2} s0) - D^{-1/2} v0 v0^T s0`` (unnormalized)."""
    alpha_prime = gamma_to_alpha(gamma)
    s_pr, shift = _seed_parts(graph, seed)
    if pagerank is None:
        state = push_pagerank(graph, s_pr, PushConfig(alpha_prime, epsilon))
        pr = state.p
        info = {"pushes": state.pushes, "touched": state.touched, "alpha_prime": alpha_prime}
    else:
        pr = pagerank(alpha_prime, s_pr)
        info = {"alpha_prime": alpha_prime}
    return pr / graph.degrees - shift, info


def leading_vector_via_push(graph: Graph, seed: SeedVector, gamma: float, epsilon: float):
    """Leading semi-supervised vector at fixed ``gamma < 0`` from a sparse push."""
    return peel_next_vector(graph, ProjectionBasis.trivial(graph), seed, gamma, epsilon)


def peel_next_vector(graph: Graph, basis: ProjectionBasis, seed: SeedVector, gamma: float, epsilon: float,
                     used_gammas=(), separation: float = 1e-3, pagerank=None):
    """Project the single-gamma diffusion solution away from the accepted vectors.

    Returns ``(x, info)``; ``x`` is D-normalized and D-orthogonal to ``basis``.
    """
    for prev in used_gammas:
        if abs(gamma - prev) < separation * abs(gamma):
            raise IllPosedError(
                f"gamma={gamma:.6g} is within {separation:g}*|gamma| of an earlier gamma={prev:.6g}; "
                "the peeled component is ill-posed")
    d = graph.degrees
    z, info = _diffusion_vector(graph, seed, gamma, epsilon, pagerank)
    perp = basis.d_project(z)
    znorm = np.sqrt(d_inner(d, z, z))
    pnorm = np.sqrt(d_inner(d, perp, perp))
    if znorm == 0 or pnorm < 1e-8 * znorm:
        raise IllPosedError(f"component orthogonal to the basis collapsed (relative norm {pnorm / max(znorm, 1e-300):.2e})")
    x = sign_normalize(d, d_normalize(d, perp), seed.embedded)
    info["correlation"] = d_inner(d, x, seed.embedded) ** 2
    return x, info


def push_solve(graph: Graph, seed: SeedVector, gammas, epsilon: float):
    """Sequence of peeled vectors, one per user-supplied ``gamma < 0``."""
    graph.require_connected()
    basis = ProjectionBasis.trivial(graph)
    vectors, infos = [], []
    for t, gamma in enumerate(gammas):
        t0 = time.perf_counter()
        x, info = peel_next_vector(graph, basis, seed, gamma, epsilon, used_gammas=gammas[:t])
        info["seconds"] = time.perf_counter() - t0
        vectors.append(x)
        infos.append(info)
        basis = basis.append(x)
    return np.column_stack(vectors), infos


def correlation_decay_profile(graph: Graph, seed: SeedVector, alphas, epsilons):
    """Rows of (alpha, epsilon, correlation, touched, seconds) for standard-PageRank ``alpha``."""
    graph.neighbor_lists  # one-time adjacency conversion, kept out of the timings
    rows = []
    for alpha in alphas:
        gamma = alpha_to_gamma(standard_to_lazy_alpha(alpha))
        for eps in epsilons:
            t0 = time.perf_counter()
            _, info = leading_vector_via_push(graph, seed, gamma, eps)
            rows.append({
                "alpha": float(alpha),
                "epsilon": float(eps),
                "correlation": info["correlation"],
                "touched": info["touched"],
                "seconds": time.perf_counter() - t0,
            })
    return rows


def alpha_grid(lo: float, hi: float, count: int):
    """Log-spaced standard teleportation values from ``hi`` down to ``lo``."""
    return [math.exp(v) for v in np.linspace(math.log(hi), math.log(lo), count)]


def exact_baseline(graph: Graph, seed: SeedVector, alphas, cg_tol: float = 1e-6):
    """Leading vector by CG at the same ``gamma`` as each ``alpha``; rows of (alpha, correlation, seconds)."""
    from .solver import ExactBackend

    backend = ExactBackend(graph, seed, cg_tol=cg_tol)
    basis = ProjectionBasis.trivial(graph)
    d = graph.degrees
    rows = []
    for alpha in alphas:
        gamma = alpha_to_gamma(standard_to_lazy_alpha(alpha))
        t0 = time.perf_counter()
        x, iters = backend.solve(gamma, basis)
        seconds = time.perf_counter() - t0
        rows.append({"alpha": float(alpha), "correlation": d_inner(d, x, seed.embedded) ** 2,
                     "iterations": iters, "seconds": seconds})
    return rows
