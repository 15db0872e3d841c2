"""Semi-supervised eigenvectors of graph Laplacians: exact, Nystrom and push paths."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DegenerateSeedError,
    DisconnectedGraphError,
    GraphError,
    IllPosedError,
    NumericalError,
    SseigError,
)
from .graph import Graph, SeedVector, embed_seed
from .io import read_graph, write_edge_list
from .nystrom import NystromModel, build_nystrom
from .push import PushConfig, leading_vector_via_push, push_pagerank, push_solve
from .solver import SolverConfig, SsEigenSolution, solve

__all__ = [
    "ConvergenceError", "DegenerateSeedError", "DisconnectedGraphError", "Graph", "GraphError",
    "IllPosedError", "NumericalError", "NystromModel", "PushConfig", "SeedVector", "SolverConfig",
    "SseigError", "SsEigenSolution", "__version__", "build_nystrom", "embed_seed",
    "leading_vector_via_push", "push_pagerank", "push_solve", "read_graph", "solve", "write_edge_list",
]
