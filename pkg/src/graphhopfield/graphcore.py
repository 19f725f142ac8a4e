"""Graph ingestion, sparse adjacency, and the symmetric normalized Laplacian.

File formats
------------
edges     one ``u v`` pair per line, whitespace-separated 0-indexed integers;
          ``#`` starts a comment; duplicate and reversed pairs collapse to a
          single undirected edge.  A third column (edge weights) is rejected.
labels    one integer per node per line; ``-1`` marks an unlabeled node.
features  one row of whitespace-separated decimals per node.
splits    one token per node per line, each of ``train``/``val``/``test``/``none``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import DataError

logger = logging.getLogger(__name__)

SPLIT_TOKENS = ("train", "val", "test", "none")


@dataclass(frozen=True)
class Graph:
    """An undirected graph with node features, labels, and evaluation masks.

    ``edges`` holds each undirected edge once, as a canonical (min, max) pair;
    self-loop handling is deferred to Laplacian construction.  Instances are
    immutable after construction and safe to share across concurrent runs.
    """

    num_nodes: int
    edges: np.ndarray  # (E, 2) int64, u < v, lexicographically sorted, unique
    features: np.ndarray  # (N, d0) float64
    labels: np.ndarray  # (N,) int64, -1 for unlabeled
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    def __post_init__(self):
        n = self.num_nodes
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise DataError("edge endpoint out of range")
        if self.features.shape[0] != n:
            raise DataError("feature row count does not match node count")
        if not np.isfinite(self.features).all():
            bad = int(np.where(~np.isfinite(self.features).all(axis=1))[0][0])
            raise DataError(f"non-finite feature value at node {bad}")
        overlap = (
            (self.train_mask & self.val_mask)
            | (self.train_mask & self.test_mask)
            | (self.val_mask & self.test_mask)
        )
        if overlap.any():
            raise DataError(f"masks overlap at node {int(np.where(overlap)[0][0])}")
        masked = self.train_mask | self.val_mask | self.test_mask
        unlabeled_masked = masked & (self.labels < 0)
        if unlabeled_masked.any():
            bad = int(np.where(unlabeled_masked)[0][0])
            raise DataError(f"node {bad} is in a split but has no label")

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if (self.labels >= 0).any() else 0

    def degrees(self) -> np.ndarray:
        """Per-node degree of the symmetrized edge set (no self-loops)."""
        d = np.zeros(self.num_nodes, dtype=np.int64)
        if self.edges.size:
            np.add.at(d, self.edges[:, 0], 1)
            np.add.at(d, self.edges[:, 1], 1)
        return d

    @property
    def num_isolated(self) -> int:
        return int((self.degrees() == 0).sum())

    def replace(self, **kwargs) -> "Graph":
        data = {
            "num_nodes": self.num_nodes,
            "edges": self.edges,
            "features": self.features,
            "labels": self.labels,
            "train_mask": self.train_mask,
            "val_mask": self.val_mask,
            "test_mask": self.test_mask,
        }
        data.update(kwargs)
        return Graph(**data)


def symmetrize_edges(pairs: np.ndarray) -> np.ndarray:
    """Canonicalize to (min, max) pairs, drop duplicates, sort lexicographically."""
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.asarray(pairs, dtype=np.int64)
    canon = np.stack([pairs.min(axis=1), pairs.max(axis=1)], axis=1)
    return np.unique(canon, axis=0)


def _read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _parse_edges(path) -> np.ndarray:
    pairs = []
    for lineno, raw in enumerate(_read_lines(path), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise DataError(
                f"{path}:{lineno}: expected 'u v', got {len(tokens)} columns "
                "(edge weights are not supported)"
            )
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: edge endpoints must be integers")
        if u == v:
            raise DataError(
                f"{path}:{lineno}: self-loop {u}-{v}; self-loops are added during "
                "normalization, not listed as edges"
            )
        pairs.append((u, v))
    return symmetrize_edges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))


def _parse_features(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            row = np.array([float(t) for t in line.split()], dtype=np.float64)
        except ValueError:
            raise DataError(f"{path}:{lineno}: feature values must be decimals")
        if width is None:
            width = row.size
        elif row.size != width:
            raise DataError(
                f"{path}:{lineno}: expected {width} features, got {row.size}"
            )
        if not np.isfinite(row).all():
            raise DataError(f"{path}:{lineno}: non-finite feature in row {lineno - 1}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty feature file")
    return np.stack(rows)


def _parse_labels(path, num_nodes) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise DataError(f"{path}:{lineno}: labels must be integers")
    if len(values) != num_nodes:
        raise DataError(f"{path}: expected {num_nodes} labels, got {len(values)}")
    labels = np.asarray(values, dtype=np.int64)
    if (labels < -1).any():
        raise DataError(f"{path}: labels must be -1 (unlabeled) or class indices")
    return labels


def _parse_splits(path, num_nodes):
    tokens = []
    for lineno, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line:
            continue
        if line not in SPLIT_TOKENS:
            raise DataError(
                f"{path}:{lineno}: split token must be one of {SPLIT_TOKENS}, got {line!r}"
            )
        tokens.append(line)
    if len(tokens) != num_nodes:
        raise DataError(f"{path}: expected {num_nodes} split tokens, got {len(tokens)}")
    tokens = np.asarray(tokens)
    return tokens == "train", tokens == "val", tokens == "test"


def load_graph(edge_path, feature_path, label_path, split_path) -> Graph:
    """Load and validate a graph from the four-file ingestion format."""
    features = _parse_features(feature_path)
    n = features.shape[0]
    edges = _parse_edges(edge_path)
    if edges.size and edges.max() >= n:
        raise DataError(
            f"{edge_path}: edge endpoint {int(edges.max())} out of range for {n} nodes"
        )
    labels = _parse_labels(label_path, n)
    train, val, test = _parse_splits(split_path, n)
    g = Graph(
        num_nodes=n,
        edges=edges,
        features=features,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )
    logger.info(
        "loaded graph: %d nodes, %d undirected edges, %d isolated node(s)",
        g.num_nodes,
        g.num_edges,
        g.num_isolated,
    )
    return g


def save_graph(graph: Graph, edge_path, feature_path, label_path, split_path):
    """Write a graph back out in the ingestion format."""
    with open(edge_path, "w", encoding="utf-8") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")
    with open(feature_path, "w", encoding="utf-8") as fh:
        for row in graph.features:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    with open(label_path, "w", encoding="utf-8") as fh:
        for y in graph.labels:
            fh.write(f"{y}\n")
    with open(split_path, "w", encoding="utf-8") as fh:
        for i in range(graph.num_nodes):
            if graph.train_mask[i]:
                fh.write("train\n")
            elif graph.val_mask[i]:
                fh.write("val\n")
            elif graph.test_mask[i]:
                fh.write("test\n")
            else:
                fh.write("none\n")


# ---------------------------------------------------------------------------
# sparse matrices


@dataclass
class SparseMatrix:
    """Row-compressed real matrix; column indices strictly increase per row.

    Matrix products delegate to scipy's CSR kernels; the class itself owns
    construction, validation, and the power-iteration norm estimate.
    """

    shape: tuple
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _cache: list = field(default_factory=lambda: [None, None], repr=False)

    def __post_init__(self):
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.data = np.asarray(self.data, dtype=np.float64)
        rows, _ = self.shape
        if self.indptr.shape != (rows + 1,):
            raise ValueError("indptr length must be rows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.size:
            raise ValueError("indptr must start at 0 and end at nnz")
        if (np.diff(self.indptr) < 0).any():
            raise ValueError("indptr must be non-decreasing")
        # strictly increasing column indices within each row
        inner = np.ones(self.indices.size, dtype=bool)
        if self.indices.size:
            inner[self.indptr[1:-1]] = False  # row boundaries
            if (np.diff(self.indices)[inner[1:]] <= 0).any():
                raise ValueError("column indices must strictly increase within rows")

    @classmethod
    def from_coo(cls, shape, rows, cols, vals) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            # coalesce duplicates
            keep = np.ones(rows.size, dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(keep) - 1
            summed = np.zeros(int(group[-1]) + 1, dtype=np.float64)
            np.add.at(summed, group, vals)
            rows, cols, vals = rows[keep], cols[keep], summed
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(tuple(shape), indptr, cols, vals)

    def _scipy(self):
        if self._cache[0] is None:
            self._cache[0] = scipy.sparse.csr_matrix(
                (self.data, self.indices, self.indptr), shape=self.shape
            )
        return self._cache[0]

    def _scipy_t(self):
        if self._cache[1] is None:
            self._cache[1] = self._scipy().T.tocsr()
        return self._cache[1]

    def matmul(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.shape[1]:
            raise ValueError(
                f"shape mismatch: {self.shape} @ {x.shape}"
            )
        return np.asarray(self._scipy() @ x)

    def transpose_matmul(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._scipy_t() @ x)

    def to_dense(self) -> np.ndarray:
        return np.asarray(self._scipy().todense())

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def max_asymmetry(self) -> float:
        d = self._scipy() - self._scipy().T
        return float(abs(d).max()) if d.nnz else 0.0


def normalized_laplacian(graph: Graph, self_loops: bool = True) -> SparseMatrix:
    """L = I - D^{-1/2} (A + sI) D^{-1/2} with s = 1 when self-loops are added.

    Degrees are taken from A + sI.  Without self-loops every node must have
    degree >= 1; a zero-degree node is a hard error rather than a silent
    D^{-1/2} = 0 convention.
    """
    n = graph.num_nodes
    deg = graph.degrees().astype(np.float64)
    if self_loops:
        deg += 1.0
    elif (deg == 0).any():
        bad = int(np.where(deg == 0)[0][0])
        raise DataError(
            f"node {bad} has degree 0; enable self-loops or connect every node"
        )
    rows, cols, vals = [], [], []
    diag = np.ones(n, dtype=np.float64)
    if self_loops:
        diag -= 1.0 / deg
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    if graph.num_edges:
        u, v = graph.edges[:, 0], graph.edges[:, 1]
        w = -1.0 / np.sqrt(deg[u] * deg[v])
        rows.extend([u, v])
        cols.extend([v, u])
        vals.extend([w, w])
    return SparseMatrix.from_coo(
        (n, n), np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


def laplacian_quadratic(L: SparseMatrix, X: np.ndarray) -> float:
    """The roughness functional tr(X^T L X)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != L.shape[0]:
        raise ValueError(f"shape mismatch: L is {L.shape}, X has {X.shape[0]} rows")
    return float((X * L.matmul(X)).sum())


def estimate_spectral_norm(
    s: SparseMatrix, tol: float = 1e-10, max_iter: int = 5000, seed: int = 0
) -> float:
    """Power-iteration estimate of the spectral norm of a symmetric matrix."""
    n = s.shape[0]
    if s.shape[0] != s.shape[1]:
        raise ValueError("spectral norm estimate expects a square matrix")
    if s.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = s.matmul(v)
        new_sigma = float(np.linalg.norm(w))
        if new_sigma == 0.0:
            return 0.0
        v = w / new_sigma
        if abs(new_sigma - sigma) <= tol * max(1.0, new_sigma):
            return new_sigma
        sigma = new_sigma
    return sigma
