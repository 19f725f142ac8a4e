"""The joint energy, its damped update iteration, and the undamped map.

Two parallel surfaces live here.  The numpy functions (``energy_base``,
``grad_energy_base``, ``fixed_point_map`` and friends) operate on the base
dynamics with fixed constants and back the certificate suite.  The tape
functions (``ghn_step``, ``iterate``) run the full gated update inside the
differentiation engine and back training.

One damped step with the gate bypassed is exactly gradient descent on the
base energy with step size alpha; that equivalence is a tested contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .errors import ConfigError, NumericsError
from .graphcore import SparseMatrix, laplacian_quadratic
from .memory import Gate, MemoryBank, gate_blend, gate_values, retrieve

VARIANTS = ("lse", "lsr", "hier", "nomem")


@dataclass
class DynamicsConfig:
    """Laplacian weight, damping, iteration count, and retrieval variant.

    ``lam`` may be negative for graph sharpening in model runs; the theory
    suite rejects negative values separately.
    """

    lam: float = 0.3
    alpha: float = 0.3
    iterations: int = 4
    variant: str = "lse"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"damping must be in (0, 1], got {self.alpha}")
        if self.iterations < 1:
            raise ConfigError(f"need at least one iteration, got {self.iterations}")
        self.variant = str(self.variant).lower()
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass
class IterationDiagnostics:
    """Per-iteration trajectory measurements collected by ``iterate``."""

    step_norms: list = field(default_factory=list)  # ||X_{t+1} - X_t||_F
    gate_means: list = field(default_factory=list)  # mean gate value, when gated


# ---------------------------------------------------------------------------
# base dynamics (numpy; fixed constants)


def softmax_rows(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)


def lse_rows(z: np.ndarray, beta: float) -> np.ndarray:
    """Row-wise (1/beta) log sum exp(beta z), numerically stable."""
    zz = beta * z
    m = zz.max(axis=-1, keepdims=True)
    return ((np.log(np.exp(zz - m).sum(axis=-1, keepdims=True)) + m) / beta)[..., 0]


def retrieval_map(X: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """Row-wise softmax retrieval M^T softmax(beta M x_v)."""
    return softmax_rows(beta * X @ M.T) @ M


def energy_base(X, M, beta, lam, L) -> float:
    """sum_v [-lse(beta, M x_v) + ||x_v||^2 / 2] + lam tr(X^T L X)."""
    X = np.asarray(X, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if X.shape[1] != M.shape[1]:
        raise ValueError(f"width mismatch: X has {X.shape[1]}, M has {M.shape[1]}")
    node_terms = -lse_rows(X @ M.T, beta) + 0.5 * (X * X).sum(axis=1)
    total = float(node_terms.sum())
    if lam != 0.0:
        if L is None:
            raise ValueError("nonzero Laplacian weight needs a Laplacian")
        total += lam * laplacian_quadratic(L, X)
    return total


def grad_energy_base(X, M, beta, lam, L) -> np.ndarray:
    """Row v: -M^T softmax(beta M x_v) + x_v + 2 lam (L X)_v."""
    X = np.asarray(X, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if X.shape[1] != M.shape[1]:
        raise ValueError(f"width mismatch: X has {X.shape[1]}, M has {M.shape[1]}")
    g = X - retrieval_map(X, M, beta)
    if lam != 0.0:
        if L is None:
            raise ValueError("nonzero Laplacian weight needs a Laplacian")
        g = g + (2.0 * lam) * L.matmul(X)
    return g


def fixed_point_map(X, M, beta, lam, L) -> np.ndarray:
    """Undamped map T(X): retrieval minus 2 lam L X.  Theory use only: lam >= 0."""
    if lam < 0:
        raise ValueError(f"the fixed-point analysis assumes lam >= 0, got {lam}")
    X = np.asarray(X, dtype=np.float64)
    out = retrieval_map(X, np.asarray(M, dtype=np.float64), beta)
    if lam != 0.0:
        out = out - (2.0 * lam) * L.matmul(X)
    return out


def damped_fixed_point_map(X, M, beta, lam, L, alpha) -> np.ndarray:
    return (1.0 - alpha) * X + alpha * fixed_point_map(X, M, beta, lam, L)


def iterate_fixed_point(
    X0, M, beta, lam, L, alpha=1.0, max_iter=10_000, tol=1e-12
):
    """Iterate the (optionally damped) map until successive change is tiny.

    Returns (X_final, per-step Frobenius differences)."""
    X = np.asarray(X0, dtype=np.float64).copy()
    diffs = []
    for _ in range(max_iter):
        Xn = damped_fixed_point_map(X, M, beta, lam, L, alpha)
        d = float(np.linalg.norm(Xn - X))
        diffs.append(d)
        X = Xn
        if d <= tol * max(1.0, float(np.linalg.norm(X))):
            break
    return X, diffs


# ---------------------------------------------------------------------------
# gated dynamics (tape)


def _step_with_gate_diag(x, bank, gate, cfg, L, training, rng):
    lam, alpha = cfg.lam, cfg.alpha
    if cfg.variant == "nomem":
        # retrieval term replaced by the state itself: pure smoothing
        if lam == 0.0 or L is None:
            return x, None
        return ad.add(x, ad.scale(ad.sparse_matmul(L, x), -2.0 * alpha * lam)), None
    r = retrieve(bank, x, cfg.variant)
    gate_mean = None
    if gate is not None:
        g = gate_values(gate, x, r)
        gate_mean = float(g.data.mean())
        keep = ad.add(ad.scale(g, -1.0), 1.0)
        r = ad.add(ad.elementwise_mul(g, r), ad.elementwise_mul(keep, x))
    proposal = r
    if lam != 0.0 and L is not None:
        proposal = ad.add(r, ad.scale(ad.sparse_matmul(L, x), -2.0 * lam))
    return ad.add(ad.scale(x, 1.0 - alpha), ad.scale(proposal, alpha)), gate_mean


def ghn_step(
    x: Value,
    bank: MemoryBank,
    gate: Gate,
    cfg: DynamicsConfig,
    L: SparseMatrix,
    training: bool = False,
    rng=None,
) -> Value:
    """One damped update: blend the state with gated retrieval minus smoothing.

    With ``gate=None`` this is the raw damped map, i.e. one gradient-descent
    step on the base energy with step size alpha.  The NoMem variant reduces
    to X - 2 alpha lam L X.
    """
    out, _ = _step_with_gate_diag(x, bank, gate, cfg, L, training, rng)
    return out


def iterate(
    x0: Value,
    bank: MemoryBank,
    gate: Gate,
    cfg: DynamicsConfig,
    L: SparseMatrix,
    training: bool = False,
    rng=None,
):
    """Apply ghn_step ``cfg.iterations`` times, recording trajectory diagnostics.

    Any non-finite entry aborts with the iteration index; callers treat that
    as a collapse event.
    """
    x = x0
    diag = IterationDiagnostics()
    for t in range(cfg.iterations):
        xn, gate_mean = _step_with_gate_diag(x, bank, gate, cfg, L, training, rng)
        if not np.isfinite(xn.data).all():
            raise NumericsError(f"non-finite state at iteration {t}")
        diag.step_norms.append(float(np.linalg.norm(xn.data - x.data)))
        if gate_mean is not None:
            diag.gate_means.append(gate_mean)
        x = xn
    return x, diag
