import math
import warnings

import numpy as np
import pytest
import scipy.linalg as la

from conftest import cycle, path
from sseig.errors import (
    DegenerateSeedError,
    DisconnectedGraphError,
    DuplicatePointError,
    GraphError,
    ParseError,
)
from sseig.graph import (
    Graph,
    build_knn_graph,
    embed_seed,
    generate_grid,
    generate_preferential_attachment,
    generate_ring_lattice,
    random_connected_graph,
)
from sseig.io import (
    AsymmetricInputWarning,
    read_edge_list,
    read_graph,
    read_matrix_market,
    read_vectors,
    write_edge_list,
    write_vectors,
)


def circulant_eigs(n, z):
    j = np.arange(n)[:, None]
    m = np.arange(1, z // 2 + 1)[None, :]
    return np.sort(1.0 - (2.0 / z) * np.cos(2 * np.pi * j * m / n).sum(axis=1))


# construction ---------------------------------------------------------------

def test_six_cycle_from_ring_generator():
    g = generate_ring_lattice(6, 2, 0.0)
    assert g.edge_count == 6
    assert (g.adjacency.toarray() == cycle(6).adjacency.toarray()).all()


def test_ring_3600_edges_and_degrees():
    g = generate_ring_lattice(3600, 8, 0.0)
    assert g.edge_count == 14400
    assert np.all(g.degrees == 8)
    assert g.volume == 2 * g.edge_count


def test_rewired_ring_keeps_edge_count_and_is_reproducible():
    a = generate_ring_lattice(3600, 8, 0.01, rng_seed=7)
    b = generate_ring_lattice(3600, 8, 0.01, rng_seed=7)
    assert a.edge_count == 14400
    assert a.digest == b.digest
    assert a.diagnostics["rewired"] > 0
    assert not a.validate()


@pytest.mark.parametrize("n,z", [(12, 2), (20, 4), (33, 6), (64, 8)])
def test_ring_spectrum_matches_circulant(n, z):
    g = generate_ring_lattice(n, z, 0.0)
    L = np.diag(g.degrees) - g.adjacency.toarray()
    lam = la.eigh(L, np.diag(g.degrees), eigvals_only=True)
    assert np.max(np.abs(lam - circulant_eigs(n, z))) <= 1e-12


def test_ring_3600_lambda2_closed_form():
    lam2 = 1 - 0.25 * sum(math.cos(2 * math.pi * m / 3600) for m in range(1, 5))
    assert lam2 == pytest.approx(1.1423e-5, rel=1e-3)
    assert round(lam2, 6) == 0.000011


@pytest.mark.parametrize("args", [(4, 3, 0.0), (4, 4, 0.0), (10, 0, 0.0), (10, 2, 1.5)])
def test_ring_rejects_bad_parameters(args):
    with pytest.raises(GraphError):
        generate_ring_lattice(*args)


def test_grid_shapes():
    sq = generate_grid(2, 2)
    assert (sq.n, sq.edge_count) == (4, 4)
    line = generate_grid(1, 5)
    assert line.degrees.tolist() == [1, 2, 2, 2, 1]
    g = generate_grid(3, 3)
    assert g.degrees[4] == 4
    assert [g.degrees[i] for i in (0, 2, 6, 8)] == [2, 2, 2, 2]
    with pytest.raises(GraphError):
        generate_grid(0, 3)


def test_preferential_attachment_heavy_tail():
    g = generate_preferential_attachment(2000, 3, rng_seed=1)
    assert g.connected
    assert g.edge_count == 3 + 3 * (2000 - 4)
    assert g.degrees.max() > 10 * np.median(g.degrees)


def test_random_connected_graph_weights():
    g = random_connected_graph(40, 0.2, rng_seed=0)
    assert g.connected
    w = g.adjacency.data
    assert w.min() > 0 and w.max() <= 1
    assert not g.validate()


def test_from_edges_rejects_self_loops_by_default():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [0, 1], [1, 1])
    g = Graph.from_edges(3, [0, 1], [1, 1], allow_self_loops=True, diagnostics={"self_loops": True})
    assert not g.validate()


def test_validate_flags_asymmetry():
    A = cycle(5).adjacency.toarray()
    A[0, 1] = 3.0
    assert any("asymmetric" in msg for msg in Graph(A).validate())


def test_connectivity_flag():
    g = Graph.from_edges(4, [0, 2], [1, 3])
    assert not g.connected
    with pytest.raises(DisconnectedGraphError):
        g.require_connected()
    assert cycle(4).connected


# kNN ------------------------------------------------------------------------

def test_knn_nearest_weight_is_exp_minus_four():
    pts = np.array([[0.0], [1.0], [3.0], [7.0]])
    g = build_knn_graph(pts, 1)
    # 0's nearest is 1 at distance sigma_0 = 1
    assert g.adjacency[0, 1] == pytest.approx(math.exp(-4), abs=1e-12)
    assert math.exp(-4) == pytest.approx(0.018316, abs=1e-6)


def test_knn_two_clusters_disconnected():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(0, 0.1, (10, 2)), rng.normal(100, 0.1, (10, 2))])
    g = build_knn_graph(pts, 1)
    assert not g.connected


def test_knn_collinear_triangle():
    g = build_knn_graph(np.array([[0.0], [1.0], [2.0]]), 2)
    assert g.edge_count == 3
    assert not g.validate()


def test_knn_union_and_max_symmetrization():
    pts = np.array([[0.0], [1.0], [1.5], [10.0]])
    g = build_knn_graph(pts, 1)
    A = g.adjacency.toarray()
    assert np.allclose(A, A.T)
    # 3 -> 2 is directed only; it survives the union
    assert A[3, 2] == pytest.approx(math.exp(-4))
    # 1 <-> 2 mutual: sigma_1 = sigma_2 = 0.5, weight exp(-4)
    assert A[1, 2] == pytest.approx(math.exp(-4))


def test_knn_duplicate_points_rejected():
    with pytest.raises(DuplicatePointError) as exc:
        build_knn_graph(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]), 1)
    assert set(exc.value.pair) == {0, 2}


# seeds ------------------------------------------------------------------------

def test_seed_on_four_cycle():
    s = embed_seed(cycle(4), [0]).embedded
    c = math.sqrt(2 / 3)
    assert np.allclose(s, c * np.array([0.75, -0.25, -0.25, -0.25]), atol=1e-12)
    assert s[0] == pytest.approx(0.6124, abs=1e-4)


def test_seed_invariants_and_scale_invariance(rand30):
    d = rand30.degrees
    a = embed_seed(rand30, [(3, 1.0), (7, 2.5)])
    b = embed_seed(rand30, [(3, 40.0), (7, 100.0)])
    for s in (a.embedded, b.embedded):
        assert abs(s @ d) <= 1e-10
        assert abs(s @ (d * s) - 1) <= 1e-10
    assert np.max(np.abs(a.embedded - b.embedded)) <= 1e-12
    assert a.embedded[7] > 0


def test_seed_along_trivial_direction_is_degenerate(rand30):
    support = [(i, math.sqrt(di)) for i, di in enumerate(rand30.degrees)]
    with pytest.raises(DegenerateSeedError):
        embed_seed(rand30, support)


def test_seed_requires_connected_graph_and_valid_nodes():
    with pytest.raises(DisconnectedGraphError):
        embed_seed(Graph.from_edges(4, [0, 2], [1, 3]), [0])
    with pytest.raises(GraphError):
        embed_seed(cycle(4), [9])
    with pytest.raises(DegenerateSeedError):
        embed_seed(cycle(4), [])


# I/O -------------------------------------------------------------------------

def test_edge_list_literal(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# path\n0 1 1.0\n1 2 1.0\n")
    g = read_edge_list(p)
    assert g.n == 3
    assert g.degrees.tolist() == [1, 2, 1]


def test_edge_list_round_trip_bit_exact(tmp_path, rand30):
    p = tmp_path / "g.txt"
    write_edge_list(p, rand30)
    back = read_graph(p)
    assert back.digest == rand30.digest
    assert np.array_equal(back.adjacency.data, rand30.adjacency.data)


def test_edge_list_keeps_isolated_trailing_nodes(tmp_path):
    g = Graph.from_edges(5, [0], [1])
    p = tmp_path / "g.txt"
    write_edge_list(p, g)
    assert read_graph(p).n == 5


def test_edge_list_both_orientations_symmetrized(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0 1 2.0\n1 0 4.0\n1 2 1.0\n")
    with pytest.warns(AsymmetricInputWarning):
        g = read_edge_list(p)
    assert g.adjacency[0, 1] == 3.0
    assert g.adjacency[1, 2] == 0.5


def test_edge_list_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1\n1 x\n")
    with pytest.raises(ParseError) as exc:
        read_edge_list(p)
    assert exc.value.line == 2


def test_matrix_market_symmetric_read_once(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 2\n2 1 1.5\n3 2 2.0\n")
    g = read_matrix_market(p)
    assert g.adjacency[0, 1] == 1.5 and g.adjacency[1, 0] == 1.5
    assert g.volume == 2 * (1.5 + 2.0)


def test_matrix_market_general_directed_pair(tmp_path):
    p = tmp_path / "d.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 2.0\n")
    with pytest.warns(AsymmetricInputWarning):
        g = read_graph(p)
    assert g.adjacency[0, 1] == 1.0 and g.adjacency[1, 0] == 1.0


def test_matrix_market_non_square_rejected(tmp_path):
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 2 1.0\n")
    with pytest.raises(ParseError, match="square"):
        read_matrix_market(p)


def test_matrix_market_pattern(tmp_path):
    p = tmp_path / "p.mtx"
    p.write_text("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 2\n")
    assert read_graph(p).degrees.tolist() == [1, 2, 1]


def test_write_vectors_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((7, 3))
    path, sidecar = write_vectors(tmp_path / "x.csv", X, {"gammas": [np.float64(0.5)]})
    Y, meta = read_vectors(path)
    assert np.array_equal(X, Y)
    assert meta["schema_version"] == 1
    assert meta["gammas"] == [0.5]
    assert path.read_text().splitlines()[0] == "node,x1,x2,x3"
