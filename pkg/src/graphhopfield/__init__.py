"""Associative-memory retrieval coupled with graph Laplacian smoothing.

A library and CLI for energy-based node classification: learned pattern
banks retrieved per node, blended through a learned gate, interleaved with
normalized-Laplacian propagation, plus an executable certificate suite for
the convergence theory of the base dynamics.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, GraphHopfieldError, NumericsError
from .graphcore import (
    Graph,
    SparseMatrix,
    laplacian_quadratic,
    load_graph,
    normalized_laplacian,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "GraphHopfieldError",
    "NumericsError",
    "Graph",
    "SparseMatrix",
    "laplacian_quadratic",
    "load_graph",
    "normalized_laplacian",
]
