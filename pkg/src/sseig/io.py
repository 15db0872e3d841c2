"""Edge-list / Matrix Market readers and vector writers."""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParseError
from .graph import Graph

SCHEMA_VERSION = 1


class AsymmetricInputWarning(UserWarning):
    pass


def _symmetrize(n, rows, cols, vals, path):
    adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    asym = adj - adj.T
    if asym.nnz and abs(asym).max() > 0:
        warnings.warn(f"{path}: directed input symmetrized as (W + W^T)/2", AsymmetricInputWarning, stacklevel=3)
        adj = (adj + adj.T) * 0.5
    return sp.csr_matrix(adj)


def read_edge_list(path, n: int | None = None) -> Graph:
    """Parse ``u v [w]`` lines (0-based ids, ``#`` comments).

    Each line is an undirected edge. If some pair is listed in both
    orientations the file is taken to be a directed listing instead and is
    symmetrized by averaging.
    """
    us, vs, ws = [], [], []
    declared = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text, _, comment = line.partition("#")
            text = text.strip()
            if n is None and lineno == 1 and comment.split()[:1] == ["nodes"]:
                declared = int(comment.split()[1])
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'u v [w]', got {len(parts)} fields", path, lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if u < 0 or v < 0:
                raise ParseError("node ids must be nonnegative", path, lineno)
            if w < 0 or not np.isfinite(w):
                raise ParseError(f"invalid weight {parts[2]}", path, lineno)
            us.append(u)
            vs.append(v)
            ws.append(w)
    size = max(max(us), max(vs)) + 1 if us else 0
    if n is not None or declared is not None:
        size = max(size, n if n is not None else declared)
    seen = set(zip(us, vs))
    directed = any((v, u) in seen for u, v in seen if u != v)
    if directed:
        adj = _symmetrize(size, us, vs, ws, path)
        return Graph(adj, {"source": str(path), "self_loops": any(u == v for u, v in seen)})
    loops = any(u == v for u, v in zip(us, vs))
    return Graph.from_edges(size, us, vs, ws, allow_self_loops=loops,
                            diagnostics={"source": str(path), "self_loops": loops})


def read_matrix_market(path) -> Graph:
    with open(path) as fh:
        header = fh.readline()
        tokens = header.strip().split()
        if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
            raise ParseError("missing %%MatrixMarket header", path, 1)
        obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise ParseError(f"only 'matrix coordinate' is supported, got '{obj} {fmt}'", path, 1)
        if field not in ("real", "integer", "pattern"):
            raise ParseError(f"unsupported field '{field}'", path, 1)
        if symmetry not in ("general", "symmetric"):
            raise ParseError(f"unsupported symmetry '{symmetry}'", path, 1)
        lineno = 1
        size_line = None
        for line in fh:
            lineno += 1
            text = line.strip()
            if text and not text.startswith("%"):
                size_line = text
                break
        if size_line is None:
            raise ParseError("missing size line", path, lineno)
        try:
            nrows, ncols, nnz = (int(t) for t in size_line.split())
        except ValueError:
            raise ParseError(f"bad size line '{size_line}'", path, lineno) from None
        if nrows != ncols:
            raise ParseError(f"adjacency must be square, got {nrows}x{ncols}", path, lineno)
        rows, cols, vals = [], [], []
        for line in fh:
            lineno += 1
            text = line.strip()
            if not text or text.startswith("%"):
                continue
            parts = text.split()
            want = 2 if field == "pattern" else 3
            if len(parts) != want:
                raise ParseError(f"expected {want} fields, got {len(parts)}", path, lineno)
            try:
                i, j = int(parts[0]) - 1, int(parts[1]) - 1
                w = 1.0 if field == "pattern" else float(parts[2])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if not (0 <= i < nrows and 0 <= j < ncols):
                raise ParseError(f"entry ({i + 1}, {j + 1}) outside {nrows}x{ncols}", path, lineno)
            rows.append(i)
            cols.append(j)
            vals.append(w)
        if len(rows) != nnz:
            raise ParseError(f"header declares {nnz} entries, found {len(rows)}", path, lineno)
    loops = any(i == j for i, j in zip(rows, cols))
    if symmetry == "symmetric":
        # one triangle stored; each off-diagonal pair is read once
        return Graph.from_edges(nrows, rows, cols, vals, allow_self_loops=loops,
                                diagnostics={"source": str(path), "self_loops": loops})
    adj = _symmetrize(nrows, rows, cols, vals, path)
    return Graph(adj, {"source": str(path), "self_loops": loops})


def read_graph(path, format: str = "auto") -> Graph:
    path = Path(path)
    if format == "auto":
        with open(path) as fh:
            first = fh.readline()
        format = "mtx" if first.startswith("%%MatrixMarket") else "edgelist"
    if format in ("edgelist", "edge-list"):
        return read_edge_list(path)
    if format in ("mtx", "matrix-market"):
        return read_matrix_market(path)
    raise ValueError(f"unknown graph format '{format}' (expected edgelist or mtx)")


def write_edge_list(path, graph: Graph):
    """Write each undirected edge once with shortest round-trip float formatting."""
    u, v, w = graph.edges()
    with open(path, "w") as fh:
        fh.write(f"# nodes {graph.n} edges {graph.edge_count}\n")
        for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
            fh.write(f"{a} {b} {c!r}\n")


def write_vectors(path, vectors, metadata: dict | None = None):
    """Write an ``n x k`` array as CSV (17 significant digits) plus a JSON sidecar."""
    path = Path(path)
    X = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if X.shape[0] == 1 and X.shape[1] > 1 and np.ndim(vectors) == 1:
        X = X.T
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node"] + [f"x{j + 1}" for j in range(X.shape[1])])
        for i, row in enumerate(X):
            writer.writerow([i] + [f"{val:.17g}" for val in row])
    meta = {"schema_version": SCHEMA_VERSION}
    meta.update(metadata or {})
    sidecar = metadata_path(path)
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path, sidecar


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_vectors(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    X = data[:, 1:]
    sidecar = metadata_path(path)
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return X, meta


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
