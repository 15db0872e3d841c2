"""Column-sampled low-rank path.

The normalized adjacency ``D^{-1/2} A D^{-1/2}`` is replaced by a Nystrom
approximation ``V diag(lam) V^T`` with orthonormal ``V``. With
``L_norm ~ I - V diag(lam) V^T`` the shifted inverse has the closed form
``P_gamma^+ = (I + V Sigma V^T) / (1 - gamma)`` with
``Sigma_ii = lam_i / ((1 - gamma) - lam_i)``, so every solve costs a few
``n x m`` products.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBasisError, DigestMismatchError, PoleError, ResampleError
from .graph import Graph, SeedVector
from .kernels import ProjectionBasis, d_inner, sign_normalize

COND_LIMIT = 1e12
EIG_FLOOR = 1e-10
POLE_TOL = 1e-10


class DroppedModesWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class NystromModel:
    sample_indices: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    source_graph_digest: str
    degrees: np.ndarray
    approx_degrees: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.eigvals)

    def reconstruct(self) -> np.ndarray:
        V = self.eigvecs
        return (V * self.eigvals) @ V.T

    def sigma(self, gamma: float) -> np.ndarray:
        shift = 1.0 - gamma
        denom = shift - self.eigvals
        live = self.eigvals != 0
        bad = live & (np.abs(denom) <= POLE_TOL)
        if bad.any():
            lam = self.eigvals[np.flatnonzero(bad)[0]]
            raise PoleError(f"gamma={gamma:.12g} sits on the pole of mode lambda={lam:.12g}")
        out = np.zeros_like(self.eigvals)
        out[live] = self.eigvals[live] / denom[live]
        return out

    def shifted_pinv_apply(self, gamma: float, Z):
        """``P_gamma^+ Z`` via the Woodbury form."""
        V = self.eigvecs
        S = self.sigma(gamma)
        coeff = V.T @ Z
        coeff = S[:, None] * coeff if coeff.ndim == 2 else S * coeff
        return (Z + V @ coeff) / (1.0 - gamma)

    def check_graph(self, graph: Graph):
        if graph.digest != self.source_graph_digest:
            raise DigestMismatchError("Nystrom model was built for a different graph")


def _sym_inv_sqrt(M, floor):
    theta, E = np.linalg.eigh(0.5 * (M + M.T))
    keep = np.abs(theta) > floor
    return theta, E, keep


def build_nystrom(graph: Graph, m: int, rng_seed=0, cond_limit: float = COND_LIMIT) -> NystromModel:
    """Sample ``m`` columns uniformly and diagonalize the normalized approximation."""
    N = graph.n
    if not 1 <= m <= N:
        raise ValueError(f"sample count m must lie in [1, {N}], got {m}")
    rng = np.random.default_rng(rng_seed)
    S = np.sort(rng.choice(N, size=m, replace=False))
    R = np.setdiff1d(np.arange(N), S)
    W = graph.adjacency
    A = W[S][:, S].toarray()
    B = W[S][:, R].toarray()

    # degrees of the approximated matrix, the C block never formed
    if len(R):
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > cond_limit:
            raise ResampleError(
                f"sampled block is ill-conditioned (cond={cond:.3g} > {cond_limit:.0e}); "
                "increase m or choose a different rng seed")
        d_s = A.sum(axis=1) + B.sum(axis=1)
        d_r = B.T @ np.ones(m) + B.T @ np.linalg.solve(A, B @ np.ones(len(R)))
    else:
        d_s = A.sum(axis=1)
        d_r = np.zeros(0)
    d_hat = np.concatenate([d_s, d_r])
    if np.any(d_hat <= 0):
        raise ResampleError("approximated degrees are not all positive; increase m or resample")
    isq_s = 1.0 / np.sqrt(d_s)
    isq_r = 1.0 / np.sqrt(d_r) if len(R) else np.zeros(0)
    At = isq_s[:, None] * A * isq_s[None, :]
    Bt = isq_s[:, None] * B * isq_r[None, :]

    theta, E, keep = _sym_inv_sqrt(At, EIG_FLOOR)
    diag = {"m": m, "rng_seed": rng_seed}
    if (~keep).any() and len(R):
        warnings.warn(f"dropped {int((~keep).sum())} near-singular modes of the sampled block",
                      DroppedModesWarning, stacklevel=2)
    diag["dropped_block_modes"] = int((~keep).sum())
    stacked = np.vstack([At, Bt.T])

    if keep.all() and np.all(theta > 0):
        # positive definite block: diagonalize At + At^{-1/2} Bt Bt^T At^{-1/2}
        inv_sqrt = (E / np.sqrt(theta)) @ E.T
        M = At + inv_sqrt @ Bt @ Bt.T @ inv_sqrt
        lam, U = np.linalg.eigh(0.5 * (M + M.T))
        pos = lam > EIG_FLOOR
        if (~pos).any():
            warnings.warn(f"dropped {int((~pos).sum())} nonpositive modes", DroppedModesWarning, stacklevel=2)
        lam, U = lam[pos], U[:, pos]
        V = stacked @ inv_sqrt @ U / np.sqrt(lam)
        diag["route"] = "psd"
    else:
        # indefinite block: H J H^T with J = sign(theta) carries the negative modes exactly
        Ek, th = E[:, keep], theta[keep]
        H = stacked @ (Ek / np.sqrt(np.abs(th)))
        Q, Rf = np.linalg.qr(H)
        core = (Rf * np.sign(th)) @ Rf.T
        lam, U = np.linalg.eigh(0.5 * (core + core.T))
        V = Q @ U
        diag["route"] = "signed"
        diag["negative_mass"] = float(-lam[lam < 0].sum())

    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    perm = np.concatenate([S, R])
    V_full = np.empty_like(V)
    V_full[perm] = V
    d_full = np.empty(N)
    d_full[perm] = d_hat
    return NystromModel(S, V_full, lam, graph.digest, np.asarray(graph.degrees), d_full, diag)


def _rhs(model: NystromModel, seed: SeedVector):
    return np.sqrt(model.degrees) * seed.embedded


def _finish(model: NystromModel, seed: SeedVector, y):
    y = y / np.linalg.norm(y)
    x = y / np.sqrt(model.degrees)
    return sign_normalize(model.degrees, x, seed.embedded)


def woodbury_leading_solve(model: NystromModel, seed: SeedVector, gamma: float):
    """Leading vector ``x = D^{-1/2} y`` with ``y ~ (I + V Sigma V^T) D^{1/2} s``; ``y^T y = 1``."""
    return _finish(model, seed, model.shifted_pinv_apply(gamma, _rhs(model, seed)))


def lagrangian_project_solve(model: NystromModel, seed: SeedVector, gamma: float, Y):
    """Solution exactly orthogonal to the columns of ``Y`` (the infinite-penalty limit)."""
    Y = np.asarray(Y, dtype=np.float64).reshape(model.eigvecs.shape[0], -1)
    b = _rhs(model, seed)
    Pb = model.shifted_pinv_apply(gamma, b)
    PY = model.shifted_pinv_apply(gamma, Y)
    G = Y.T @ PY
    if np.linalg.cond(G) > 1e12:
        raise DegenerateBasisError("Y^T P^+ Y is numerically singular for this basis and gamma")
    y = Pb - PY @ np.linalg.solve(G, Y.T @ Pb)
    return _finish(model, seed, y)


def penalized_solve(model: NystromModel, seed: SeedVector, gamma: float, Y, omega: float):
    """Finite-penalty version: ``(P + omega Y Y^T)^{-1} D^{1/2} s``."""
    Y = np.asarray(Y, dtype=np.float64).reshape(model.eigvecs.shape[0], -1)
    b = _rhs(model, seed)
    Pb = model.shifted_pinv_apply(gamma, b)
    PY = model.shifted_pinv_apply(gamma, Y)
    inner = np.eye(Y.shape[1]) / omega + Y.T @ PY
    y = Pb - PY @ np.linalg.solve(inner, Y.T @ Pb)
    return _finish(model, seed, y)


def lowrank_upper_bound(model: NystromModel, Y) -> float:
    """Smallest eigenvalue of ``I - V lam V^T`` compressed to the complement of ``Y``.

    Only the ``m``-dimensional span of ``FF^T V`` carries nonunit eigenvalues,
    so the work is an ``m x m`` eigenproblem.
    """
    V, lam = model.eigvecs, model.eigvals
    Y = np.asarray(Y, dtype=np.float64).reshape(V.shape[0], -1)
    FV = V - Y @ (Y.T @ V)
    U, sv, _ = np.linalg.svd(FV, full_matrices=False)
    live = sv > 1e-10 * max(sv.max(initial=0.0), 1.0)
    Q = U[:, live]
    core = (Q.T @ V) * lam @ (V.T @ Q)
    top_eig = np.linalg.eigvalsh(0.5 * (core + core.T))[-1] if Q.shape[1] else -np.inf
    if V.shape[0] - Y.shape[1] > Q.shape[1]:
        # directions outside span(V) keep eigenvalue 1 of the Laplacian
        top_eig = max(top_eig, 0.0)
    return float(1.0 - top_eig)


class NystromBackend:
    """Bisection backend running the closed-form solves of a Nystrom model."""

    name = "nystrom"

    def __init__(self, model: NystromModel, seed: SeedVector):
        self.model = model
        self.seed = seed

    def upper_bound(self, basis: ProjectionBasis) -> float:
        return lowrank_upper_bound(self.model, basis.normalized)

    def solve(self, gamma: float, basis: ProjectionBasis):
        return lagrangian_project_solve(self.model, self.seed, gamma, basis.normalized), 0


def save_model(path, model: NystromModel):
    np.savez(path, sample_indices=model.sample_indices, eigvecs=model.eigvecs, eigvals=model.eigvals,
             degrees=model.degrees, approx_degrees=model.approx_degrees,
             digest=np.array(model.source_graph_digest))


def load_model(path, graph: Graph) -> NystromModel:
    with np.load(path) as data:
        digest = str(data["digest"])
        if digest != graph.digest:
            raise DigestMismatchError(f"{path}: model digest does not match the supplied graph")
        return NystromModel(data["sample_indices"], data["eigvecs"], data["eigvals"], digest,
                            data["degrees"], data["approx_degrees"])


def correlation(model: NystromModel, seed: SeedVector, x) -> float:
    return d_inner(model.degrees, x, seed.embedded) ** 2
