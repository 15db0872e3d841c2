"""Matrix-free operators, projections, CG, Lanczos and dense reference solvers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, SizeGuardError
from .graph import Graph, SeedVector, random_connected_graph

DENSE_LIMIT = 200
PINV_RCOND = 1e-12


@dataclass(frozen=True)
class Operator:
    """Square linear map given only through its action on vectors."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    symmetric: bool = True

    def __call__(self, v):
        return self.apply(np.asarray(v, dtype=np.float64))

    def symmetry_defect(self, probes: int = 8, rng_seed=0) -> float:
        """Largest ``|u.Av - v.Au| / (|u||v|)`` over random probe pairs."""
        rng = np.random.default_rng(rng_seed)
        worst = 0.0
        for _ in range(probes):
            u = rng.standard_normal(self.dim)
            v = rng.standard_normal(self.dim)
            gap = abs(u @ self(v) - v @ self(u)) / (np.linalg.norm(u) * np.linalg.norm(v))
            worst = max(worst, gap)
        return worst

    def to_scipy(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.dim, self.dim), matvec=lambda v: self(np.ravel(v)), dtype=np.float64)

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_LIMIT * 10:
            raise SizeGuardError(f"refusing to densify a {self.dim}-dimensional operator")
        return np.column_stack([self(e) for e in np.eye(self.dim)])


def matrix_operator(M, symmetric=True) -> Operator:
    return Operator(M.shape[0], lambda v: M @ v, symmetric)


def laplacian_operator(graph: Graph) -> Operator:
    A, d = graph.adjacency, graph.degrees
    return Operator(graph.n, lambda v: d * v - A @ v)


def degree_operator(graph: Graph) -> Operator:
    d = graph.degrees
    return Operator(graph.n, lambda v: d * v)


def adjacency_operator(graph: Graph) -> Operator:
    A = graph.adjacency
    return Operator(graph.n, lambda v: A @ v)


def normalized_adjacency_operator(graph: Graph) -> Operator:
    A, isq = graph.adjacency, 1.0 / np.sqrt(graph.degrees)
    return Operator(graph.n, lambda v: isq * (A @ (isq * v)))


def normalized_laplacian_operator(graph: Graph) -> Operator:
    N = normalized_adjacency_operator(graph)
    return Operator(graph.n, lambda v: v - N(v))


def d_inner(d, x, y) -> float:
    return float(x @ (d * y))


def d_normalize(d, x):
    return x / np.sqrt(d_inner(d, x, x))


def d_cosine(d, x, y) -> float:
    return d_inner(d, x, y) / np.sqrt(d_inner(d, x, x) * d_inner(d, y, y))


def sign_normalize(d, x, s):
    """Flip ``x`` so that its D-correlation with ``s`` is nonnegative."""
    return -x if d_inner(d, x, s) < 0 else x


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Previously accepted vectors ``X = [1, x_1, ...]`` plus the induced projections.

    ``project`` is the Euclidean-orthogonal projector ``FF^T`` onto
    ``{z : X^T D z = 0}``; ``d_project`` is the D-orthogonal projector
    ``I - X (X^T D X)^{-1} X^T D`` onto the same subspace.
    """

    degrees: np.ndarray
    columns: np.ndarray

    @classmethod
    def trivial(cls, graph: Graph) -> "ProjectionBasis":
        return cls(graph.degrees, np.ones((graph.n, 1)))

    @property
    def size(self) -> int:
        return self.columns.shape[1]

    def append(self, x) -> "ProjectionBasis":
        return ProjectionBasis(self.degrees, np.column_stack([self.columns, np.asarray(x, dtype=np.float64)]))

    @cached_property
    def _dx(self):
        return self.degrees[:, None] * self.columns

    @cached_property
    def gram_factor(self):
        return la.cho_factor(self._dx.T @ self._dx)

    @cached_property
    def _d_gram_factor(self):
        return la.cho_factor(self.columns.T @ self._dx)

    def project(self, z):
        return z - self._dx @ la.cho_solve(self.gram_factor, self._dx.T @ z)

    def d_project(self, z):
        return z - self.columns @ la.cho_solve(self._d_gram_factor, self._dx.T @ z)

    def d_residual(self, z):
        """``X^T D z``; zero exactly when ``z`` is admissible."""
        return self._dx.T @ z

    @cached_property
    def normalized(self) -> np.ndarray:
        """Orthonormal ``Y`` spanning ``D^{1/2} X``."""
        Q, _ = np.linalg.qr(np.sqrt(self.degrees)[:, None] * self.columns)
        return Q

    def projector_operator(self) -> Operator:
        return Operator(len(self.degrees), self.project)


def projected_shifted_operator(graph: Graph, basis: ProjectionBasis, gamma: float) -> Operator:
    """``FF^T (L - gamma D) FF^T`` applied matrix-free."""
    A, d = graph.adjacency, graph.degrees
    shifted = (1.0 - gamma) * d

    def apply(v):
        w = basis.project(v)
        return basis.project(shifted * w - A @ w)

    return Operator(graph.n, apply)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def cg_solve(op, rhs, tol: float = 1e-8, max_iter: int | None = None) -> CGResult:
    """Conjugate gradient for a symmetric positive semidefinite operator.

    Stops once ``|op(x) - rhs| <= tol |rhs|`` holds for the true residual. A
    nonpositive curvature direction means the operator is not PSD on the
    Krylov space, which is reported as a convergence failure.
    """
    b = np.asarray(rhs, dtype=np.float64)
    n = b.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(x, 0, 0.0)
    target = tol * bnorm
    r = b.copy()
    p = r.copy()
    rr = r @ r
    it = 0
    while it < max_iter:
        Ap = op(p)
        pAp = p @ Ap
        if pAp <= 0:
            raise ConvergenceError(
                f"nonpositive curvature at iteration {it}: operator not PSD on this subspace",
                residual=float(np.sqrt(rr)), iterations=it)
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rr_new = r @ r
        if np.sqrt(rr_new) <= target:
            r = b - op(x)
            rr_new = r @ r
            if np.sqrt(rr_new) <= target:
                return CGResult(x, it, float(np.sqrt(rr_new)))
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise ConvergenceError(
        f"CG did not reach relative residual {tol:g} in {max_iter} iterations "
        f"(final {np.sqrt(rr) / bnorm:.3e}); gamma may be too close to an eigenvalue",
        residual=float(np.sqrt(rr)), iterations=it)


def largest_algebraic_eigenvalue(op: Operator, tol: float = 1e-10, v0=None, rng_seed=0, max_iter=None):
    """Largest algebraic (not largest magnitude) eigenpair of a symmetric operator."""
    n = op.dim
    if n < 2:
        raise ValueError("operator dimension must be >= 2")
    if n <= 16:
        M = op.dense()
        M = 0.5 * (M + M.T)
        vals, vecs = np.linalg.eigh(M)
        return float(vals[-1]), vecs[:, -1]
    if v0 is None:
        v0 = np.random.default_rng(rng_seed).standard_normal(n)
    try:
        vals, vecs = spla.eigsh(op.to_scipy(), k=1, which="LA", tol=tol, v0=v0, maxiter=max_iter)
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            v = exc.eigenvectors[:, 0]
            res = float(np.linalg.norm(op(v) - exc.eigenvalues[0] * v))
        else:
            res = float("nan")
        raise ConvergenceError(f"Lanczos did not converge (Ritz residual {res:.3e})", residual=res) from None
    return float(vals[0]), vecs[:, 0]


# dense references ---------------------------------------------------------

def _guard(n):
    if n > DENSE_LIMIT:
        raise SizeGuardError(f"dense oracle limited to {DENSE_LIMIT} nodes, graph has {n}")


def dense_laplacian(graph: Graph):
    A = graph.adjacency.toarray()
    return np.diag(graph.degrees) - A


def dense_projector(graph: Graph, basis: ProjectionBasis):
    DX = graph.degrees[:, None] * basis.columns
    return np.eye(graph.n) - DX @ np.linalg.solve(DX.T @ DX, DX.T)


def dense_oracle_solve(graph: Graph, basis: ProjectionBasis, gamma: float, seed: SeedVector):
    """Reference solution by explicit pseudoinverse of the projected shifted Laplacian."""
    _guard(graph.n)
    d = graph.degrees
    FF = dense_projector(graph, basis)
    M = FF @ (dense_laplacian(graph) - gamma * np.diag(d)) @ FF
    M = 0.5 * (M + M.T)
    x = la.pinvh(M, rtol=PINV_RCOND) @ (d * seed.embedded)
    return sign_normalize(d, d_normalize(d, x), seed.embedded)


def dense_generalized_eigh(graph: Graph):
    """All pairs of ``L v = lambda D v`` with ``V^T D V = I``."""
    _guard(graph.n)
    return la.eigh(dense_laplacian(graph), np.diag(graph.degrees))


def dense_normalized_laplacian(graph: Graph):
    isq = 1.0 / np.sqrt(graph.degrees)
    return np.eye(graph.n) - isq[:, None] * graph.adjacency.toarray() * isq[None, :]


def dense_upper_bound(graph: Graph, basis: ProjectionBasis) -> float:
    """Smallest eigenvalue of the normalized Laplacian restricted to the complement of ``Y``."""
    _guard(graph.n)
    Y = basis.normalized
    Q = la.null_space(Y.T)
    return float(np.linalg.eigvalsh(Q.T @ dense_normalized_laplacian(graph) @ Q)[0])


# identity checks ------------------------------------------------------------

def _pinv_sym(M, rcond=1e-15):
    return la.pinvh(0.5 * (M + M.T), rtol=rcond)


def identities_check(size: int = 20, rng_seed=0, omega: float = 1e10) -> dict:
    """Evaluate the four pseudoinverse / eigenvalue identities the solver relies on.

    Returns residuals and pass flags; never raises on a failed identity.
    """
    if size > 100:
        raise SizeGuardError(f"identity checks limited to 100 nodes, got {size}")
    rng = np.random.default_rng(rng_seed)
    g = random_connected_graph(size, min(1.0, 4.0 / size + 0.1), rng_seed=rng)
    Lnorm = dense_normalized_laplacian(g)
    report = {"size": size, "rng_seed": rng_seed}

    # (i) large rank-one penalty vs explicit projection, on the shifted
    # operator Lnorm + I/2 that the low-rank solves invert
    x = rng.standard_normal(size)
    x /= np.linalg.norm(x)
    report["penalty_limit"] = penalty_limit_residual(Lnorm + 0.5 * np.eye(size), x, omega)

    # (ii) eigenvalues never decrease under added PSD rank-one terms
    M = Lnorm
    violations = 0
    base = np.linalg.eigvalsh(M)
    for _ in range(5):
        v = rng.standard_normal(size)
        v /= np.linalg.norm(v)
        M = M + rng.uniform(0.1, 10.0) * np.outer(v, v)
        new = np.linalg.eigvalsh(M)
        violations += int(np.sum(new < base - 1e-10))
        base = new
    report["rank_one_monotone"] = {"violations": violations, "passed": violations == 0}

    # (iii) seed correlations over a D-orthonormal set sum to at most one
    d = g.degrees
    s = rng.standard_normal(size)
    s = d_normalize(d, s)
    Z = rng.standard_normal((size, min(size, 8)))
    # D-orthonormalize: Q = D^{-1/2} qr(D^{1/2} Z)
    Q, _ = np.linalg.qr(np.sqrt(d)[:, None] * Z)
    Xd = Q / np.sqrt(d)[:, None]
    total = float(np.sum((Xd.T @ (d * s)) ** 2))
    report["correlation_budget"] = {"total": total, "threshold": 1 + 1e-10, "passed": total <= 1 + 1e-10}

    # (iv) resolvent identity for shifted normalized Laplacians
    eig = np.linalg.eigvalsh(Lnorm)
    gam, gam_hat = _off_spectrum(rng, eig), _off_spectrum(rng, eig)
    report["resolvent_identity"] = resolvent_residual(Lnorm, gam, gam_hat)
    report["resolvent_identity"].update(gamma=gam, gamma_hat=gam_hat)
    report["passed"] = all(v["passed"] for v in report.values() if isinstance(v, dict))
    return report


def _off_spectrum(rng, eig, margin=1e-2):
    while True:
        g = rng.uniform(-2.0, 2.0)
        if np.min(np.abs(eig - g)) > margin:
            return float(g)


def penalty_limit_residual(M, x, omega=1e10, threshold=1e-4) -> dict:
    """``|(M + w xx^T)^+ - ((I - xx^T) M (I - xx^T))^+|`` at a large finite penalty ``w``."""
    P = np.eye(len(x)) - np.outer(x, x)
    lhs = _pinv_sym(M + omega * np.outer(x, x))
    rhs = _pinv_sym(P @ M @ P, rcond=PINV_RCOND)
    r = float(np.linalg.norm(lhs - rhs, 2))
    return {"residual": r, "threshold": threshold, "passed": r <= threshold}


def resolvent_residual(Lnorm, gamma, gamma_hat, threshold=1e-8) -> dict:
    """``|P_g^+ - P_h^+ - (g - h) P_h^+ P_g^+|`` for ``P_g = Lnorm - g I``."""
    n = Lnorm.shape[0]
    Pg = _pinv_sym(Lnorm - gamma * np.eye(n), rcond=PINV_RCOND)
    Ph = _pinv_sym(Lnorm - gamma_hat * np.eye(n), rcond=PINV_RCOND)
    r = float(np.linalg.norm(Pg - Ph - (gamma - gamma_hat) * Ph @ Pg, 2))
    return {"residual": r, "threshold": threshold, "passed": r <= threshold}
