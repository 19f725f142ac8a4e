"""Shared test oracles: finite differences and small dense references."""

import numpy as np

from graphhopfield.graphcore import Graph, symmetrize_edges


def random_graph(rng, n, p=0.3, d0=3, ensure_degree=True):
    """Erdos-Renyi graph as a Graph, re-drawn until no node is isolated."""
    while True:
        upper = rng.random((n, n)) < p
        iu = np.triu_indices(n, k=1)
        pairs = np.stack([iu[0][upper[iu]], iu[1][upper[iu]]], axis=1)
        g = Graph(
            num_nodes=n,
            edges=symmetrize_edges(pairs),
            features=rng.standard_normal((n, d0)),
            labels=np.zeros(n, dtype=np.int64),
            train_mask=np.zeros(n, dtype=bool),
            val_mask=np.zeros(n, dtype=bool),
            test_mask=np.zeros(n, dtype=bool),
        )
        if not ensure_degree or g.num_isolated == 0:
            return g


def central_difference(f, x, h=1e-5):
    """Dense central-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g


def relative_error(a, b, floor=1.0):
    """Max elementwise |a - b| / max(floor, |b|)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float((np.abs(a - b) / np.maximum(floor, np.abs(b))).max())


def random_simplex_point(rng, k):
    p = rng.exponential(size=k)
    return p / p.sum()


def dense_softmax_rows(z):
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)
