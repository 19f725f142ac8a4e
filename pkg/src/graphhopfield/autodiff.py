"""Reverse-mode differentiation over the fixed kernel set the model needs.

Deliberately small: float64 numpy arrays, one ``Value`` node per intermediate,
one vector-Jacobian closure per operation.  This is not a general autodiff
system; the operator inventory is exactly what the retrieval dynamics, the
gate, and the training loss require (plus a few private kernels used to
express kernel-weight normalization and head/group slicing).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Value",
    "constant",
    "parameter",
    "backward",
    "op_set",
    "matmul",
    "sparse_matmul",
    "add",
    "scale",
    "rowwise_softmax",
    "logsumexp",
    "relu",
    "sigmoid",
    "exp",
    "elementwise_mul",
    "concat_rows",
    "layer_norm",
    "dropout_mask",
    "squared_norm",
    "cross_entropy_with_logits",
    "rowwise_normalize",
    "slice_rows",
    "slice_cols",
]


class Value:
    """One node of the computation graph: data plus an optional VJP closure.

    ``data`` is treated as immutable once the node exists; gradients
    accumulate in ``grad`` and are reset between optimizer steps.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "_consumed")

    def __init__(self, data, requires_grad=False, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        self._vjp = vjp
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Value(shape={self.data.shape}, requires_grad={self.requires_grad})"


def constant(data) -> Value:
    return Value(data, requires_grad=False)


def parameter(data) -> Value:
    return Value(data, requires_grad=True)


def _wrap(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


def _node(data, parents, vjp) -> Value:
    requires = any(p.requires_grad for p in parents)
    if not requires:
        return Value(data)
    return Value(data, requires_grad=True, parents=parents, vjp=vjp)


def _unbroadcast(g, shape):
    """Sum ``g`` back down to ``shape`` after a broadcast forward op."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# operators


def add(a, b) -> Value:
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _node(out, (a, b), vjp)


def scale(a, c: float) -> Value:
    a = _wrap(a)
    c = float(c)

    def vjp(g):
        a._accumulate(c * g)

    return _node(a.data * c, (a,), vjp)


def elementwise_mul(a, b) -> Value:
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _node(out, (a, b), vjp)


def matmul(a, b, transpose_b: bool = False) -> Value:
    a, b = _wrap(a), _wrap(b)
    bd = b.data.T if transpose_b else b.data
    out = a.data @ bd

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g @ (b.data if transpose_b else b.data.T))
        if b.requires_grad:
            gb = (g.T @ a.data) if transpose_b else (a.data.T @ g)
            b._accumulate(gb)

    return _node(out, (a, b), vjp)


def sparse_matmul(s, x) -> Value:
    """``s @ x`` for a constant SparseMatrix ``s`` and dense Value ``x``."""
    x = _wrap(x)
    out = s.matmul(x.data)

    def vjp(g):
        x._accumulate(s.transpose_matmul(g))

    return _node(out, (x,), vjp)


def relu(a) -> Value:
    a = _wrap(a)
    mask = a.data > 0

    def vjp(g):
        a._accumulate(g * mask)

    return _node(a.data * mask, (a,), vjp)


def _sigmoid_raw(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Value:
    a = _wrap(a)
    y = _sigmoid_raw(a.data)

    def vjp(g):
        a._accumulate(g * y * (1.0 - y))

    return _node(y, (a,), vjp)


def exp(a) -> Value:
    a = _wrap(a)
    y = np.exp(a.data)

    def vjp(g):
        a._accumulate(g * y)

    return _node(y, (a,), vjp)


def rowwise_softmax(z) -> Value:
    z = _wrap(z)
    if z.data.ndim != 2:
        raise ValueError("rowwise_softmax expects a 2-D input")
    m = z.data.max(axis=1, keepdims=True)
    e = np.exp(z.data - m)
    p = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        z._accumulate(p * (g - (g * p).sum(axis=1, keepdims=True)))

    return _node(p, (z,), vjp)


def logsumexp(z, beta: float = 1.0) -> Value:
    """Tempered log-sum-exp along the last axis: (1/beta) log sum exp(beta z)."""
    z = _wrap(z)
    if z.data.size == 0:
        raise ValueError("logsumexp over an empty axis")
    beta = float(beta)
    zz = beta * z.data
    m = zz.max(axis=-1, keepdims=True)
    p = np.exp(zz - m)
    s = p.sum(axis=-1, keepdims=True)
    out = ((np.log(s) + m) / beta)[..., 0]
    p = p / s

    def vjp(g):
        z._accumulate(np.asarray(g)[..., None] * p)

    return _node(out, (z,), vjp)


def rowwise_normalize(x) -> Value:
    """Divide each row by its sum; rows summing to zero stay identically zero."""
    x = _wrap(x)
    s = x.data.sum(axis=1, keepdims=True)
    alive = s > 0
    denom = np.where(alive, s, 1.0)
    y = np.where(alive, x.data / denom, 0.0)

    def vjp(g):
        inner = (g * y).sum(axis=1, keepdims=True)
        x._accumulate(np.where(alive, (g - inner) / denom, 0.0))

    return _node(y, (x,), vjp)


def concat_rows(*parts) -> Value:
    """Concatenate matrices along the feature axis, row by row."""
    parts = tuple(_wrap(p) for p in parts)
    out = np.concatenate([p.data for p in parts], axis=1)
    widths = [p.data.shape[1] for p in parts]

    def vjp(g):
        start = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                p._accumulate(g[:, start : start + w])
            start += w

    return _node(out, parts, vjp)


def slice_rows(x, start: int, stop: int) -> Value:
    x = _wrap(x)
    out = x.data[start:stop].copy()

    def vjp(g):
        full = np.zeros_like(x.data)
        full[start:stop] = g
        x._accumulate(full)

    return _node(out, (x,), vjp)


def slice_cols(x, start: int, stop: int) -> Value:
    x = _wrap(x)
    out = x.data[:, start:stop].copy()

    def vjp(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        x._accumulate(full)

    return _node(out, (x,), vjp)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Value:
    x, gain, bias = _wrap(x), _wrap(gain), _wrap(bias)
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def vjp(g):
        if x.requires_grad:
            q = g * gain.data
            gx = inv * (
                q
                - q.mean(axis=1, keepdims=True)
                - xhat * (q * xhat).mean(axis=1, keepdims=True)
            )
            x._accumulate(gx)
        if gain.requires_grad:
            gain._accumulate((g * xhat).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=0))

    return _node(out, (x, gain, bias), vjp)


def dropout_mask(x, rate: float, rng=None, training: bool = True) -> Value:
    """Inverted dropout.  Rate 0 or eval mode returns the input node unchanged."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = _wrap(x)
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)

    def vjp(g):
        x._accumulate(g * mask)

    return _node(x.data * mask, (x,), vjp)


def squared_norm(x) -> Value:
    x = _wrap(x)
    out = np.asarray((x.data * x.data).sum())

    def vjp(g):
        x._accumulate((2.0 * float(g)) * x.data)

    return _node(out, (x,), vjp)


def cross_entropy_with_logits(logits, labels, rows) -> Value:
    """Mean negative log-likelihood of ``labels`` over the given row indices."""
    logits = _wrap(logits)
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cross entropy needs at least one row")
    labels = np.asarray(labels, dtype=np.int64)
    y = labels[rows]
    if (y < 0).any():
        raise ValueError("cross entropy rows must carry non-negative labels")
    z = logits.data[rows]
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    s = e.sum(axis=1, keepdims=True)
    logp = z - m - np.log(s)
    out = np.asarray(-logp[np.arange(rows.size), y].mean())
    p = e / s

    def vjp(g):
        gz = p.copy()
        gz[np.arange(rows.size), y] -= 1.0
        full = np.zeros_like(logits.data)
        full[rows] = gz * (float(g) / rows.size)
        logits._accumulate(full)

    return _node(out, (logits,), vjp)


def op_set():
    """The operator inventory the training path is allowed to use."""
    return {
        "matmul": matmul,
        "sparse_matmul": sparse_matmul,
        "add": add,
        "scale": scale,
        "rowwise_softmax": rowwise_softmax,
        "logsumexp": logsumexp,
        "relu": relu,
        "sigmoid": sigmoid,
        "elementwise_mul": elementwise_mul,
        "concat_rows": concat_rows,
        "layer_norm": layer_norm,
        "dropout_mask": dropout_mask,
        "squared_norm": squared_norm,
        "cross_entropy_with_logits": cross_entropy_with_logits,
    }


# ---------------------------------------------------------------------------
# backward pass


def _topological_order(root):
    order = []
    state = {}  # id -> 1 while open, 2 when done
    stack = [root]
    while stack:
        node = stack[-1]
        st = state.get(id(node), 0)
        if st == 0:
            state[id(node)] = 1
            for p in node._parents:
                if state.get(id(p), 0) == 0:
                    stack.append(p)
        else:
            stack.pop()
            if st == 1:
                state[id(node)] = 2
                order.append(node)
    return order


def backward(loss: Value, params=None):
    """Run one reverse pass from a scalar loss.

    Populates ``.grad`` on every reachable node that requires gradients and
    returns a map from parameter to gradient.  When ``params`` is given, the
    map covers exactly those Values, with zeros for parameters the loss never
    touched; otherwise it covers the reachable gradient leaves.
    """
    if not isinstance(loss, Value):
        raise TypeError("backward expects a Value")
    if loss.data.ndim != 0:
        raise ValueError("backward expects a scalar loss")
    if loss._consumed:
        raise RuntimeError(
            "backward already ran for this graph; rebuild it before differentiating again"
        )
    loss._consumed = True

    order = _topological_order(loss)
    loss.grad = np.ones(())
    for node in reversed(order):
        if node._vjp is not None and node.grad is not None:
            node._vjp(node.grad)

    if params is not None:
        return {
            p: (p.grad if p.grad is not None else np.zeros_like(p.data))
            for p in params
        }
    leaves = {}
    for node in order:
        if node.requires_grad and not node._parents and node.grad is not None:
            leaves[node] = node.grad
    return leaves
