"""Associative-memory retrieval and the learned retrieval gate.

All retrieval functions operate on a whole batch of queries at once (one row
per node) and stay on the differentiation tape, so pattern banks, the inverse
temperature, and the gate all receive gradients during training.

Retrieval modes
---------------
softmax       r_v = M^T softmax(beta M x_v); output lies in the convex hull
              of the pattern rows.
kernel        truncated-quadratic weights relu(1 - (beta/2)||x - m||^2),
              normalized; queries outside every kernel's support pass through
              unchanged.
hierarchical  soft routing over group centroids followed by softmax retrieval
              inside every group, mixed by the routing weights.
multi-head    queries and patterns split into contiguous dimension blocks,
              one independent retrieval per block, outputs concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .errors import ConfigError


@dataclass
class MemoryBank:
    """Learnable pattern matrix with a shared unconstrained log temperature.

    ``groups`` partitions the K patterns into equal contiguous blocks for
    hierarchical retrieval; ``heads`` partitions the feature dimension for
    multi-head retrieval.  The two are mutually exclusive.
    """

    patterns: Value  # (K, d)
    log_beta: Value  # scalar; beta = exp(log_beta) > 0 by construction
    groups: int = 1
    heads: int = 1

    def __post_init__(self):
        k, d = self.patterns.data.shape
        if self.groups < 1 or k % self.groups:
            raise ConfigError(f"pattern count {k} not divisible by {self.groups} groups")
        if self.heads < 1 or d % self.heads:
            raise ConfigError(f"width {d} not divisible by {self.heads} heads")
        if self.groups > 1 and self.heads > 1:
            raise ConfigError("hierarchical routing and multi-head retrieval do not compose")

    @classmethod
    def create(cls, num_patterns, width, rng, beta_init=1.0, groups=1, heads=1):
        if beta_init <= 0:
            raise ConfigError(f"beta must be positive, got {beta_init}")
        patterns = ad.parameter(rng.standard_normal((num_patterns, width)) / np.sqrt(width))
        log_beta = ad.parameter(np.log(beta_init))
        return cls(patterns=patterns, log_beta=log_beta, groups=groups, heads=heads)

    @property
    def num_patterns(self) -> int:
        return self.patterns.data.shape[0]

    @property
    def width(self) -> int:
        return self.patterns.data.shape[1]

    def beta(self) -> Value:
        return ad.exp(self.log_beta)


@dataclass
class Gate:
    """Sigmoid blend between raw retrieval and the current node state."""

    weight: Value  # (2d, d); applied as [x || r] @ weight
    bias: Value  # (d,)

    @classmethod
    def create(cls, width, rng, bias_init=2.0):
        bound = 1.0 / np.sqrt(2 * width)
        weight = ad.parameter(rng.uniform(-bound, bound, size=(2 * width, width)))
        bias = ad.parameter(np.full(width, float(bias_init)))
        return cls(weight=weight, bias=bias)


def _flat_lse(patterns: Value, beta: Value, x: Value) -> tuple:
    logits = ad.matmul(x, patterns, transpose_b=True)
    probs = ad.rowwise_softmax(ad.elementwise_mul(logits, beta))
    return ad.matmul(probs, patterns), probs


def retrieve_lse(bank: MemoryBank, x: Value) -> Value:
    """Softmax retrieval over a flat bank."""
    if bank.groups != 1 or bank.heads != 1:
        raise ConfigError("retrieve_lse expects a flat bank (groups=1, heads=1)")
    out, _ = _flat_lse(bank.patterns, bank.beta(), x)
    return out


def lse_retrieval_weights(bank: MemoryBank, x: Value) -> Value:
    """The softmax weights behind retrieve_lse, exposed for diagnostics."""
    _, probs = _flat_lse(bank.patterns, bank.beta(), x)
    return probs


def _flat_lsr(patterns: Value, beta: Value, x: Value) -> Value:
    # squared distances via ||x||^2 + ||m||^2 - 2 x m^T
    ones_d = ad.Value(np.ones((patterns.data.shape[1], 1)))
    xsq = ad.matmul(ad.elementwise_mul(x, x), ones_d)  # (N, 1)
    msq = ad.matmul(
        ad.Value(np.ones((1, patterns.data.shape[1]))),
        ad.elementwise_mul(patterns, patterns),
        transpose_b=True,
    )  # (1, K)
    cross = ad.matmul(x, patterns, transpose_b=True)
    sqdist = ad.add(ad.add(xsq, msq), ad.scale(cross, -2.0))
    raw = ad.relu(ad.add(1.0, ad.scale(ad.elementwise_mul(sqdist, beta), -0.5)))
    weights = ad.rowwise_normalize(raw)
    out = ad.matmul(weights, patterns)
    # queries outside every kernel's support keep their state (locally constant
    # region of the relu, so treating the indicator as data is exact)
    dead = (raw.data.sum(axis=1) <= 0.0).astype(np.float64)[:, None]
    if dead.any():
        out = ad.add(out, ad.elementwise_mul(x, ad.Value(dead)))
    return out


def retrieve_lsr(bank: MemoryBank, x: Value) -> Value:
    """Normalized truncated-quadratic kernel retrieval over a flat bank."""
    if bank.groups != 1 or bank.heads != 1:
        raise ConfigError("retrieve_lsr expects a flat bank (groups=1, heads=1)")
    return _flat_lsr(bank.patterns, bank.beta(), x)


def lsr_kernel_weights(bank: MemoryBank, x: Value) -> Value:
    """Normalized kernel weights behind retrieve_lsr, for diagnostics."""
    beta = bank.beta()
    patterns = bank.patterns
    diff = x.data[:, None, :] - patterns.data[None, :, :]
    raw = np.maximum(1.0 - 0.5 * float(beta.data) * (diff * diff).sum(-1), 0.0)
    s = raw.sum(axis=1, keepdims=True)
    return ad.Value(np.where(s > 0, raw / np.where(s > 0, s, 1.0), 0.0))


def retrieve_hier(bank: MemoryBank, x: Value) -> Value:
    """Two-stage retrieval: soft routing over group centroids, then softmax
    retrieval within every group, mixed by the routing weights.

    Centroids are recomputed from the current patterns on every call, and the
    routing temperature reuses the bank's learned beta.  G=1 falls back to the
    flat path bit-for-bit.
    """
    g = bank.groups
    if g == 1:
        out, _ = _flat_lse(bank.patterns, bank.beta(), x)
        return out
    k = bank.num_patterns
    per = k // g
    beta = bank.beta()
    averaging = np.zeros((g, k))
    for i in range(g):
        averaging[i, i * per : (i + 1) * per] = 1.0 / per
    centroids = ad.matmul(ad.Value(averaging), bank.patterns)  # (G, d)
    route_logits = ad.matmul(x, centroids, transpose_b=True)
    route = ad.rowwise_softmax(ad.elementwise_mul(route_logits, beta))  # (N, G)
    out = None
    for i in range(g):
        block = ad.slice_rows(bank.patterns, i * per, (i + 1) * per)
        contrib, _ = _flat_lse(block, beta, x)
        weighted = ad.elementwise_mul(contrib, ad.slice_cols(route, i, i + 1))
        out = weighted if out is None else ad.add(out, weighted)
    return out


def retrieve_multihead(bank: MemoryBank, x: Value, kind: str = "lse") -> Value:
    """Split features into contiguous blocks; each head retrieves from its own
    column block of the pattern matrix; outputs are concatenated."""
    h = bank.heads
    d = bank.width
    if x.data.shape[1] != d:
        raise ConfigError(f"query width {x.data.shape[1]} != bank width {d}")
    beta = bank.beta()
    flat = _flat_lse if kind == "lse" else _flat_lsr
    if h == 1:
        out = flat(bank.patterns, beta, x)
        return out[0] if kind == "lse" else out
    per = d // h
    pieces = []
    for i in range(h):
        xb = ad.slice_cols(x, i * per, (i + 1) * per)
        mb = ad.slice_cols(bank.patterns, i * per, (i + 1) * per)
        out = flat(mb, beta, xb)
        pieces.append(out[0] if kind == "lse" else out)
    return ad.concat_rows(*pieces)


def retrieve(bank: MemoryBank, x: Value, variant: str) -> Value:
    """Dispatch on the retrieval variant name."""
    if variant == "hier":
        return retrieve_hier(bank, x)
    if variant not in ("lse", "lsr"):
        raise ConfigError(f"unknown retrieval variant {variant!r}")
    if bank.heads > 1:
        return retrieve_multihead(bank, x, kind=variant)
    return retrieve_lse(bank, x) if variant == "lse" else retrieve_lsr(bank, x)


def gate_values(gate: Gate, x: Value, r: Value) -> Value:
    """Componentwise gate activations sigma(W [x || r] + b), each in (0, 1)."""
    pre = ad.add(ad.matmul(ad.concat_rows(x, r), gate.weight), gate.bias)
    return ad.sigmoid(pre)


def gate_blend(gate: Gate, x: Value, r: Value) -> Value:
    """g . r + (1 - g) . x — a componentwise convex blend of state and retrieval."""
    g = gate_values(gate, x, r)
    keep = ad.add(ad.scale(g, -1.0), 1.0)
    return ad.add(ad.elementwise_mul(g, r), ad.elementwise_mul(keep, x))
