"""Semi-supervised eigenvectors by bisection on the regularization parameter gamma.

Each vector ``x_t`` solves the projected system
``FF^T (L - gamma_t D) FF^T x = FF^T D s`` for the gamma_t whose D-normalized
solution carries squared seed correlation ``kappa_t``. The correlation falls
monotonically as gamma rises from ``-vol(G)`` towards the bound ``top``
(the smallest normalized-Laplacian eigenvalue on the admissible subspace).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, GraphError
from .graph import Graph, SeedVector
from .kernels import (
    Operator,
    ProjectionBasis,
    cg_solve,
    d_inner,
    d_normalize,
    largest_algebraic_eigenvalue,
    projected_shifted_operator,
    sign_normalize,
)


class PartialCorrelationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    k: int
    kappa: tuple
    epsilon: float = 1e-4
    gamma_tol: float = 1e-8
    max_bisections: int = 80
    cg_tol: float = 1e-8
    cg_max_iter: int | None = None
    lanczos_tol: float = 1e-10
    eager_bound: bool = False

    def __post_init__(self):
        kappa = tuple(float(v) for v in np.atleast_1d(self.kappa))
        object.__setattr__(self, "kappa", kappa)
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if len(kappa) != self.k:
            raise ValueError(f"kappa has {len(kappa)} entries, expected k={self.k}")
        if any(not 0.0 <= v <= 1.0 for v in kappa):
            raise ValueError(f"each kappa_t must lie in [0, 1], got {kappa}")
        if sum(kappa) > 1.0 + 1e-12:
            raise ValueError(f"kappa must sum to at most 1, got {sum(kappa):.6g}")
        if self.epsilon <= 0 or self.gamma_tol <= 0:
            raise ValueError("epsilon and gamma_tol must be positive")

    @classmethod
    def evenly(cls, k: int, kappa: float, **kw) -> "SolverConfig":
        """Spread a total correlation budget evenly over ``k`` vectors."""
        return cls(k=k, kappa=(kappa / k,) * k, **kw)


@dataclass
class SsEigenSolution:
    vectors: np.ndarray
    gammas: list
    achieved_correlations: list
    upper_bounds: list
    diagnostics: list = field(default_factory=list)
    bound_history: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


class ExactBackend:
    """Projected CG solves and Lanczos bounds on the full graph."""

    name = "exact"

    def __init__(self, graph: Graph, seed: SeedVector, cg_tol=1e-8, cg_max_iter=None, lanczos_tol=1e-10):
        self.graph = graph
        self.seed = seed
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.lanczos_tol = lanczos_tol
        self._ds = graph.degrees * seed.embedded

    def upper_bound(self, basis: ProjectionBasis) -> float:
        return recompute_upper_bound(self.graph, basis, tol=self.lanczos_tol)

    def solve(self, gamma: float, basis: ProjectionBasis):
        op = projected_shifted_operator(self.graph, basis, gamma)
        res = cg_solve(op, basis.project(self._ds), tol=self.cg_tol, max_iter=self.cg_max_iter)
        d = self.graph.degrees
        x = sign_normalize(d, d_normalize(d, res.x), self.seed.embedded)
        return x, res.iterations


def recompute_upper_bound(graph: Graph, basis: ProjectionBasis, tol: float = 1e-10) -> float:
    """``1 - lambda_LA`` of the normalized adjacency compressed to the complement of ``Y``.

    The basis directions are shifted to -2, below the spectrum of the
    normalized adjacency, so the largest algebraic eigenvalue belongs to the
    admissible subspace.
    """
    Y = basis.normalized
    A = graph.adjacency
    isq = 1.0 / np.sqrt(graph.degrees)

    def apply(v):
        c = Y.T @ v
        w = v - Y @ c
        w = isq * (A @ (isq * w))
        w -= Y @ (Y.T @ w)
        return w - 2.0 * (Y @ c)

    op = Operator(graph.n, apply)
    start = np.random.default_rng(0).standard_normal(graph.n)
    start -= Y @ (Y.T @ start)
    lam, _ = largest_algebraic_eigenvalue(op, tol=tol, v0=start)
    return 1.0 - lam


def _check_inputs(graph: Graph, config: SolverConfig):
    graph.require_connected()
    if config.k > graph.n - 1:
        raise GraphError(f"k={config.k} exceeds n-1={graph.n - 1}")


def solve(graph: Graph, seed: SeedVector, config: SolverConfig, backend=None) -> SsEigenSolution:
    """Compute ``config.k`` semi-supervised eigenvectors.

    ``backend`` supplies ``upper_bound(basis)`` and ``solve(gamma, basis)``;
    the default runs projected conjugate gradient on the full graph.
    """
    _check_inputs(graph, config)
    if backend is None:
        backend = ExactBackend(graph, seed, config.cg_tol, config.cg_max_iter, config.lanczos_tol)
    d = graph.degrees
    s = seed.embedded
    lower_limit = -graph.volume
    basis = ProjectionBasis.trivial(graph)
    top = None
    vectors, gammas, corrs, bounds, diags, history = [], [], [], [], [], []

    for t, kappa in enumerate(config.kappa):
        t0 = time.perf_counter()
        recomputed = False
        if top is None or config.eager_bound:
            top = backend.upper_bound(basis)
            history.append(top)
            recomputed = True
        lo, hi = lower_limit, top
        best = None
        bisections = 0
        solver_iters = 0
        status = "partial"
        # below -vol the solution tends to the seed D-projected off the basis,
        # which carries the largest achievable correlation
        limit = basis.d_project(s)
        limit_corr = d_inner(d, limit, limit)
        if limit_corr > 0 and kappa >= limit_corr - 1e-12:
            # only the limit vector itself meets (or comes closest to) kappa
            best = (sign_normalize(d, limit / np.sqrt(limit_corr), s), -math.inf, limit_corr)
            if abs(limit_corr - kappa) <= config.epsilon:
                status = "saturated"
        search = best is None
        while search:
            hit_top = True
            gamma = None
            while bisections < config.max_bisections:
                gamma = 0.5 * (lo + hi)
                bisections += 1
                try:
                    x, iters = backend.solve(gamma, basis)
                except ConvergenceError as exc:
                    solver_iters += exc.iterations or 0
                    hi = gamma
                    continue
                solver_iters += iters
                corr = d_inner(d, x, s) ** 2
                if best is None or abs(corr - kappa) < abs(best[2] - kappa):
                    best = (x, gamma, corr)
                if abs(corr - kappa) <= config.epsilon:
                    status = "saturated"
                    break
                if corr > kappa:
                    lo = gamma
                else:
                    hi = gamma
                    hit_top = False
                if abs(0.5 * (lo + hi) - gamma) <= config.gamma_tol:
                    break
            if status == "saturated" or recomputed or not hit_top or bisections >= config.max_bisections:
                break
            # stale bound is an underestimate: widen the bracket once and resume
            new_top = backend.upper_bound(basis)
            history.append(new_top)
            recomputed = True
            if new_top <= top:
                top = max(top, new_top)
                break
            top = new_top
            hi = top

        if status != "saturated" and limit_corr > 0 and (best is None or best[2] < kappa):
            if best is None or abs(limit_corr - kappa) < abs(best[2] - kappa):
                best = (sign_normalize(d, limit / np.sqrt(limit_corr), s), -math.inf, limit_corr)
                if abs(limit_corr - kappa) <= config.epsilon:
                    status = "saturated"
        if best is None:
            raise ConvergenceError(f"no admissible gamma found for vector {t + 1}")
        x, gamma, corr = best
        if status != "saturated":
            warnings.warn(
                f"vector {t + 1}: requested correlation {kappa:.4g} not reached "
                f"(achieved {corr:.4g}); remainder left unused",
                PartialCorrelationWarning, stacklevel=2)
        vectors.append(x)
        gammas.append(gamma)
        corrs.append(corr)
        bounds.append(top)
        diags.append({
            "status": status,
            "bisections": bisections,
            "solver_iterations": solver_iters,
            "bound_recomputed": recomputed,
            "kappa_gap": corr - kappa,
            "seconds": time.perf_counter() - t0,
        })
        basis = basis.append(x)

    return SsEigenSolution(np.column_stack(vectors), gammas, corrs, bounds, diags, history)


def correlation_curve(graph: Graph, seed: SeedVector, basis: ProjectionBasis | None, gammas,
                      top: float | None = None, cg_tol: float = 1e-8):
    """Squared seed correlation of the projected solution at each gamma below the bound."""
    graph.require_connected()
    basis = ProjectionBasis.trivial(graph) if basis is None else basis
    backend = ExactBackend(graph, seed, cg_tol=cg_tol)
    top = backend.upper_bound(basis) if top is None else top
    d = graph.degrees
    out = []
    for gamma in gammas:
        if gamma >= top:
            warnings.warn(f"gamma={gamma:.6g} is not below the bound {top:.6g}; skipped", stacklevel=2)
            continue
        x, _ = backend.solve(gamma, basis)
        out.append((float(gamma), d_inner(d, x, seed.embedded) ** 2))
    return out


def gamma_grid(lower: float, top: float, count: int):
    """Points spaced geometrically in the distance to ``top``, densest near the bound."""
    span = top - lower
    return [top - span * math.pow(10.0, -6.0 * i / max(count - 1, 1)) * (1 - 1e-9) for i in range(count)]
