"""Clustering from member-only data by learning a bipartite k-component graph
under a heavy-tailed (Student-t) model."""

from .data import PriceTable, SynthSpec, estimate_nu, load_returns, synth
from .errors import (
    BipartiteClusteringError,
    DegenerateClusterError,
    InvalidInputError,
    NumericalError,
    UndefinedMetricError,
)
from .metrics import accuracy, ari, chi, modularity, purity
from .model import BlockLaplacian, MemberData, build_block_laplacian, g_matrix, structured_quad_form
from .simplex import project_rows_simplex, project_simplex
from .solver import ClusterResult, SolverConfig, labels_from_b, run

__version__ = "0.1.0"

__all__ = [
    "BipartiteClusteringError", "BlockLaplacian", "ClusterResult", "DegenerateClusterError",
    "InvalidInputError", "MemberData", "NumericalError", "PriceTable", "SolverConfig", "SynthSpec",
    "UndefinedMetricError", "accuracy", "ari", "build_block_laplacian", "chi", "estimate_nu",
    "g_matrix", "labels_from_b", "load_returns", "modularity", "project_rows_simplex",
    "project_simplex", "purity", "run", "structured_quad_form", "synth",
]
