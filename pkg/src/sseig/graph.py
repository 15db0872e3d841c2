"""Weighted undirected graphs, generators and seed embedding."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order
from scipy.spatial import cKDTree

from .errors import DegenerateSeedError, DisconnectedGraphError, DuplicatePointError, GraphError

__all__ = [
    "Graph",
    "SeedVector",
    "build_knn_graph",
    "generate_ring_lattice",
    "generate_grid",
    "generate_preferential_attachment",
    "random_connected_graph",
    "embed_seed",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph stored as a symmetric CSR weight matrix.

    Instances are treated as immutable; derived quantities (degrees, volume,
    connectivity) are computed once on first access.
    """

    adjacency: sp.csr_matrix
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        adj = self.adjacency
        if not sp.isspmatrix_csr(adj):
            adj = sp.csr_matrix(adj)
        adj = adj.astype(np.float64)
        adj.sum_duplicates()
        adj.sort_indices()
        adj.eliminate_zeros()
        if adj.shape[0] != adj.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {adj.shape}")
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n, u, v, w=None, *, allow_self_loops=False, diagnostics=None) -> "Graph":
        """Build from undirected edge triples; each pair contributes ``w`` to both directions."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.ones(len(u)) if w is None else np.asarray(w, dtype=np.float64)
        if len(u) and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= n):
            raise GraphError(f"edge endpoint out of range [0, {n})")
        if np.any(w < 0):
            raise GraphError("edge weights must be nonnegative")
        loops = u == v
        if loops.any() and not allow_self_loops:
            raise GraphError(f"self-loop at node {int(u[loops][0])} (pass allow_self_loops=True)")
        off = ~loops
        rows = np.concatenate([u[off], v[off], u[loops]])
        cols = np.concatenate([v[off], u[off], v[loops]])
        vals = np.concatenate([w[off], w[off], w[loops]])
        adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(adj, dict(diagnostics or {}))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.asarray(self.adjacency.sum(axis=1)).ravel()
        d.setflags(write=False)
        return d

    @cached_property
    def volume(self) -> float:
        return float(self.degrees.sum())

    @cached_property
    def edge_count(self) -> int:
        upper = sp.triu(self.adjacency, k=0)
        return int(upper.nnz)

    @cached_property
    def connected(self) -> bool:
        if self.n == 0:
            return False
        order = breadth_first_order(self.adjacency, 0, directed=False, return_predecessors=False)
        return len(order) == self.n

    @cached_property
    def neighbor_lists(self) -> list:
        """Per-node ``[(neighbor, weight), ...]`` as Python lists for scalar loops."""
        adj = self.adjacency
        ip, ix, w = adj.indptr.tolist(), adj.indices.tolist(), adj.data.tolist()
        return [list(zip(ix[ip[u]:ip[u + 1]], w[ip[u]:ip[u + 1]])) for u in range(self.n)]

    @cached_property
    def digest(self) -> str:
        adj = self.adjacency
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(adj.indptr.astype(np.int64).tobytes())
        h.update(adj.indices.astype(np.int64).tobytes())
        h.update(adj.data.tobytes())
        return h.hexdigest()

    def edges(self):
        """Return (u, v, w) arrays for the upper triangle including the diagonal."""
        upper = sp.triu(self.adjacency, k=0).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def require_connected(self):
        if not self.connected:
            raise DisconnectedGraphError("graph is not connected; solvers require a connected graph")

    def validate(self) -> list[str]:
        """Check structural invariants, returning a list of problems (empty when valid)."""
        issues = []
        adj = self.adjacency
        asym = abs(adj - adj.T)
        if asym.nnz and asym.max() > 0:
            issues.append(f"asymmetric weights (max |w_ij - w_ji| = {asym.max():.3g})")
        if adj.nnz and adj.data.min() < 0:
            issues.append("negative weights")
        loops = adj.diagonal()
        if np.any(loops != 0) and not self.diagnostics.get("self_loops", False):
            issues.append("self-loops present")
        rowsum = np.asarray(adj.sum(axis=1)).ravel()
        if not np.array_equal(rowsum, self.degrees):
            issues.append("degrees differ from row sums")
        return issues


@dataclass(frozen=True, eq=False)
class SeedVector:
    """Sparse seed indicator together with its degree-orthogonalized embedding."""

    support: tuple
    embedded: np.ndarray

    def raw(self, n: int) -> np.ndarray:
        s0 = np.zeros(n)
        for node, weight in self.support:
            s0[node] += weight
        return s0


def embed_seed(graph: Graph, support) -> SeedVector:
    """Project a sparse indicator away from the trivial direction and scale to unit D-norm.

    ``support`` is a sequence of ``(node, weight)`` pairs or a bare sequence of
    node ids (unit weights).
    """
    pairs = []
    for item in support:
        if isinstance(item, (tuple, list)):
            node, weight = item
        else:
            node, weight = item, 1.0
        pairs.append((int(node), float(weight)))
    if not pairs:
        raise DegenerateSeedError("seed support is empty")
    n = graph.n
    for node, _ in pairs:
        if not 0 <= node < n:
            raise GraphError(f"seed node {node} out of range [0, {n})")
    graph.require_connected()

    d = graph.degrees
    s0 = np.zeros(n)
    for node, weight in pairs:
        s0[node] += weight
    v0 = np.sqrt(d) / np.sqrt(graph.volume)
    resid = s0 - v0 * (v0 @ s0)
    if np.linalg.norm(resid) <= 1e-12 * np.linalg.norm(s0):
        raise DegenerateSeedError("seed lies along the trivial direction D^{1/2} 1 and projects to zero")
    s = resid / np.sqrt(d)
    s /= np.sqrt(s @ (d * s))
    anchor = max(pairs, key=lambda p: abs(p[1]))[0]
    if s[anchor] < 0:
        s = -s
    s.setflags(write=False)
    return SeedVector(tuple(pairs), s)


def generate_ring_lattice(n: int, z: int, p: float = 0.0, rng_seed: int = 0, max_retries: int = 100) -> Graph:
    """Watts-Strogatz small world: ring lattice with far-endpoint rewiring."""
    if z < 2 or z % 2:
        raise GraphError(f"z must be an even integer >= 2, got {z}")
    if n <= z:
        raise GraphError(f"n must exceed z (n={n}, z={z})")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"rewiring probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(rng_seed)
    half = z // 2
    edges = [(i, (i + j) % n) for j in range(1, half + 1) for i in range(n)]
    present = {frozenset(e) for e in edges}
    skipped = 0
    rewired = 0
    if p > 0:
        for idx, (a, b) in enumerate(edges):
            if rng.random() >= p:
                continue
            for _ in range(max_retries):
                c = int(rng.integers(n))
                if c != a and frozenset((a, c)) not in present:
                    break
            else:
                skipped += 1
                continue
            present.discard(frozenset((a, b)))
            present.add(frozenset((a, c)))
            edges[idx] = (a, c)
            rewired += 1
    arr = np.array(edges, dtype=np.int64)
    diag = {"generator": "ring", "n": n, "z": z, "p": p, "seed": rng_seed,
            "rewired": rewired, "rewire_skipped": skipped}
    return Graph.from_edges(n, arr[:, 0], arr[:, 1], diagnostics=diag)


def generate_grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise GraphError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    idx = np.arange(rows * cols).reshape(rows, cols)
    u = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    v = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return Graph.from_edges(rows * cols, u, v, diagnostics={"generator": "grid", "rows": rows, "cols": cols})


def generate_preferential_attachment(n: int, m: int, rng_seed: int = 0) -> Graph:
    """Barabasi-Albert growth; yields a connected graph with a heavy-tailed degree distribution."""
    if m < 1 or n <= m:
        raise GraphError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(rng_seed)
    u, v = [], []
    # start from a star on m+1 nodes so every node has positive degree
    targets_pool = []
    for i in range(1, m + 1):
        u.append(0)
        v.append(i)
        targets_pool += [0, i]
    for new in range(m + 1, n):
        chosen = set()
        while len(chosen) < m:
            chosen.add(targets_pool[int(rng.integers(len(targets_pool)))])
        for t in sorted(chosen):
            u.append(new)
            v.append(t)
            targets_pool += [new, t]
    return Graph.from_edges(n, u, v, diagnostics={"generator": "preferential", "n": n, "m": m, "seed": rng_seed})


def random_connected_graph(n: int, edge_prob: float, rng_seed=None, weighted: bool = True, max_tries: int = 1000) -> Graph:
    """Erdos-Renyi graph with weights in (0, 1], redrawn until connected."""
    rng = np.random.default_rng(rng_seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        keep = rng.random(len(iu)) < edge_prob
        w = 1.0 - rng.random(keep.sum()) if weighted else None
        g = Graph.from_edges(n, iu[keep], ju[keep], w)
        if g.connected:
            return g
    raise GraphError(f"no connected G({n}, {edge_prob}) sample after {max_tries} draws")


def _knn_workers() -> int:
    try:
        return max(1, int(os.environ.get("SSEIG_THREADS", "1")))
    except ValueError:
        return 1


def build_knn_graph(points, k: int) -> Graph:
    """Symmetric kNN graph with Gaussian weights scaled by each point's nearest-neighbour distance.

    Directed weight i->j is ``exp(-4 |x_i - x_j|^2 / sigma_i^2)``; the undirected
    graph takes the union of neighbourhoods and the larger of the two weights.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise GraphError(f"k must be >= 1, got {k}")
    if n < k + 1:
        raise GraphError(f"need at least k+1={k + 1} points, got {n}")
    tree = cKDTree(X)
    dist, nbr = tree.query(X, k=k + 1, workers=_knn_workers())
    # drop self; with duplicates the self match may not be in column 0
    dist_k = np.empty((n, k))
    nbr_k = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = [(dd, jj) for dd, jj in zip(dist[i], nbr[i]) if jj != i][:k]
        if len(row) < k:
            row = list(zip(dist[i][1:], nbr[i][1:]))
        dist_k[i] = [r[0] for r in row]
        nbr_k[i] = [r[1] for r in row]
    sigma = dist_k[:, 0]
    zero = np.flatnonzero(sigma == 0)
    if len(zero):
        i = int(zero[0])
        raise DuplicatePointError(i, int(nbr_k[i, 0]))
    w = np.exp(-4.0 * dist_k**2 / sigma[:, None] ** 2)
    rows = np.repeat(np.arange(n), k)
    directed = sp.csr_matrix((w.ravel(), (rows, nbr_k.ravel())), shape=(n, n))
    adj = directed.maximum(directed.T)
    return Graph(sp.csr_matrix(adj), {"generator": "knn", "k": k})
