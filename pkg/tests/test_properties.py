import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sseig.graph import embed_seed, random_connected_graph
from sseig.kernels import ProjectionBasis, d_inner
from sseig.push import PushConfig, alpha_to_gamma, dense_pagerank, gamma_to_alpha, push_pagerank, push_solve
from sseig.solver import SolverConfig, solve

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

graphs = st.builds(
    lambda n, seed: random_connected_graph(n, 0.25, rng_seed=seed),
    st.integers(6, 30),
    st.integers(0, 10**6),
)


@SETTINGS
@given(graphs, st.data())
def test_seed_invariants(g, data):
    nodes = data.draw(st.lists(st.integers(0, g.n - 1), min_size=1, max_size=4, unique=True))
    weights = data.draw(st.lists(st.floats(0.1, 10.0), min_size=len(nodes), max_size=len(nodes)))
    seed = embed_seed(g, list(zip(nodes, weights)))
    d = g.degrees
    assert abs(seed.embedded @ d) <= 1e-10
    assert abs(d_inner(d, seed.embedded, seed.embedded) - 1) <= 1e-10
    scaled = embed_seed(g, [(u, 3.7 * w) for u, w in zip(nodes, weights)])
    assert np.max(np.abs(scaled.embedded - seed.embedded)) <= 1e-12


@SETTINGS
@given(graphs, st.integers(0, 10**6))
def test_projection_idempotent_and_admissible(g, rseed):
    rng = np.random.default_rng(rseed)
    X = np.column_stack([np.ones(g.n), rng.standard_normal((g.n, 2))])
    basis = ProjectionBasis(g.degrees, X)
    z = rng.standard_normal(g.n)
    pz = basis.project(z)
    assert np.max(np.abs(X.T @ (g.degrees * pz))) <= 1e-8 * np.linalg.norm(z) * g.degrees.max()
    assert np.linalg.norm(basis.project(pz) - pz) <= 1e-10 * max(np.linalg.norm(pz), 1.0)


@SETTINGS
@given(graphs, st.floats(0.05, 0.95), st.floats(1e-7, 1e-2), st.integers(0, 5))
def test_push_terminates_with_residual_bound(g, a, eps, node):
    node = node % g.n
    st_ = push_pagerank(g, {node: 1.0}, PushConfig(a, eps))
    assert np.max(st_.r / g.degrees) < eps
    # mass is conserved between p and the un-pushed residual in the limit
    s = np.zeros(g.n)
    s[node] = 1.0
    assert np.max(np.abs(st_.p + dense_pagerank(g, a, st_.r) - dense_pagerank(g, a, s))) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(-100.0, -1e-3))
def test_teleportation_round_trip(gamma):
    a = gamma_to_alpha(gamma)
    assert 0 < a < 1
    assert abs(alpha_to_gamma(a) - gamma) <= 1e-14 * abs(gamma)


@SETTINGS
@given(graphs, st.integers(1, 3), st.floats(0.0, 1.0), st.integers(0, 5))
def test_solver_orthonormal_and_budget(g, k, total, node):
    seed = embed_seed(g, [node % g.n])
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve(g, seed, SolverConfig.evenly(k, total))
    d = g.degrees
    Z = np.column_stack([np.ones(g.n) / np.sqrt(g.volume), sol.vectors])
    assert np.max(np.abs(Z.T @ (d[:, None] * Z) - np.eye(k + 1))) <= 1e-6
    assert sum(sol.achieved_correlations) <= 1 + 1e-8
    for dg, c in zip(sol.diagnostics, sol.achieved_correlations):
        if dg["status"] == "saturated":
            assert abs(c - total / k) <= 1e-4


@SETTINGS
@given(graphs, st.lists(st.floats(-5.0, -0.05), min_size=1, max_size=3, unique=True), st.floats(1e-6, 1e-2))
def test_peeling_orthogonal_for_any_epsilon(g, gammas, eps):
    gammas = sorted(gammas)
    if any(abs(b - a) < 1e-3 * abs(b) for a, b in zip(gammas, gammas[1:])):
        return
    seed = embed_seed(g, [0])
    try:
        X, _ = push_solve(g, seed, gammas, eps)
    except Exception as exc:  # collapse of the perpendicular part is a reported error, not a wrong answer
        from sseig.errors import IllPosedError

        assert isinstance(exc, IllPosedError)
        return
    d = g.degrees
    assert np.max(np.abs(X.T @ (d[:, None] * X) - np.eye(len(gammas)))) <= 1e-6
    assert np.max(np.abs(X.T @ d)) <= 1e-6
