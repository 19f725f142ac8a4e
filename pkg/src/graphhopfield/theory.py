"""Executable convergence theory for the base dynamics.

Everything here works on the ungated, unlayered dynamics with fixed
constants (pattern matrix, temperature, Laplacian weight): smoothness and
contraction constants, descent and rate certificates, coercivity, and
critical-point classification.  Certificates measure actual trajectories and
report pass/fail with the worst observed slack; tolerances include 1e-6 of
headroom over pure float64 roundoff because reference minimizers are
themselves computed iteratively.

Constants
---------
    sigma_sq = ||M||_sigma^2          spectral norm squared of the patterns
    product  = beta * sigma_sq        the operating point
    mu       = 1 - product / 2        strong-convexity modulus when positive
    rho      = product / 2 + 2 lam ||L||     undamped contraction factor
    L_lip    = rho + 1                gradient Lipschitz constant
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    damped_fixed_point_map,
    energy_base,
    fixed_point_map,
    grad_energy_base,
    iterate_fixed_point,
    softmax_rows,
)
from .errors import NumericsError
from .graphcore import Graph, SparseMatrix, normalized_laplacian, symmetrize_edges

SLACK_HEADROOM = 1e-6

REGIME_STRONGLY_CONVEX = "strongly_convex"
REGIME_BOUNDARY = "convex_boundary"
REGIME_NONCONVEX = "nonconvex"


def spectral_norm(M: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest singular value of M by power iteration on M^T M."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0 or not np.abs(M).max() > 0:
        raise ValueError("spectral norm of an all-zero matrix is degenerate")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v landed exactly in the kernel; restart
            v = rng.standard_normal(M.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / norm_w
        new_sigma = float(np.linalg.norm(M @ v))
        if abs(new_sigma - sigma) <= tol * max(1.0, new_sigma):
            return new_sigma
        sigma = new_sigma
    raise NumericsError(f"power iteration did not converge in {max_iter} iterations")


def rescale_to_spectral_sq(M: np.ndarray, target_sq: float) -> np.ndarray:
    """Rescale M so its squared spectral norm equals target_sq."""
    return M * np.sqrt(target_sq) / spectral_norm(M)


def classify_regime(product: float, boundary_tol: float = 0.01) -> str:
    if abs(product - 2.0) <= boundary_tol:
        return REGIME_BOUNDARY
    return REGIME_STRONGLY_CONVEX if product < 2.0 else REGIME_NONCONVEX


@dataclass
class Certificate:
    """One named pass/fail check with its measured slack and constants."""

    name: str
    passed: bool
    slack: float
    constants: dict = field(default_factory=dict)
    detail: str = ""

    def as_row(self) -> dict:
        row = {"name": self.name, "passed": self.passed, "slack": self.slack}
        row.update(self.constants)
        if self.detail:
            row["detail"] = self.detail
        return row


@dataclass
class TheoryInstance:
    """Fixed base dynamics: patterns, temperature, Laplacian weight, Laplacian.

    ``L`` may be None for purely Laplacian-free instances (lam must then be
    zero); supply ``nodes`` in that case.
    """

    M: np.ndarray
    beta: float
    lam: float
    L: SparseMatrix
    nodes: int = 0

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=np.float64)
        if self.L is None and self.lam != 0.0:
            raise ValueError("a nonzero Laplacian weight needs a Laplacian")

    @property
    def num_nodes(self) -> int:
        return self.L.shape[0] if self.L is not None else self.nodes

    @property
    def width(self) -> int:
        return self.M.shape[1]

    def energy(self, X) -> float:
        return energy_base(X, self.M, self.beta, self.lam, self.L)

    def grad(self, X) -> np.ndarray:
        return grad_energy_base(X, self.M, self.beta, self.lam, self.L)


def laplacian_operator_norm(L: SparseMatrix) -> float:
    """Exact (dense) spectral norm of the Laplacian; suite instances are small."""
    if L is None:
        return 0.0
    return float(np.linalg.norm(L.to_dense(), 2))


def instance_constants(instance: TheoryInstance) -> dict:
    sigma = spectral_norm(instance.M)
    sigma_sq = sigma * sigma
    product = instance.beta * sigma_sq
    lap_norm = laplacian_operator_norm(instance.L)
    rho = 0.5 * product + 2.0 * instance.lam * lap_norm
    return {
        "sigma_sq": sigma_sq,
        "beta": instance.beta,
        "product": product,
        "lam": instance.lam,
        "laplacian_norm": lap_norm,
        "rho": rho,
        "lipschitz": rho + 1.0,
        "mu": 1.0 - 0.5 * product,
    }


@dataclass
class TheoryReport:
    """Operating-point constants plus the certificates evaluated against them."""

    spectral_norm_m_sq: float
    beta: float
    product: float
    laplacian_norm: float
    lipschitz: float
    rho: float
    mu: float
    regime: str
    certificates: list = field(default_factory=list)

    @classmethod
    def from_instance(cls, instance: TheoryInstance, certificates=()) -> "TheoryReport":
        c = instance_constants(instance)
        return cls(
            spectral_norm_m_sq=c["sigma_sq"],
            beta=c["beta"],
            product=c["product"],
            laplacian_norm=c["laplacian_norm"],
            lipschitz=c["lipschitz"],
            rho=c["rho"],
            mu=c["mu"],
            regime=classify_regime(c["product"]),
            certificates=list(certificates),
        )


# ---------------------------------------------------------------------------
# instance construction


def _random_connected_graph(rng, n) -> Graph:
    """Random graph with a spanning path so no node is isolated."""
    path = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1) if n > 1 else np.zeros((0, 2), int)
    extra_mask = rng.random((n, n)) < 0.25
    iu = np.triu_indices(n, k=1)
    extra = np.stack([iu[0][extra_mask[iu]], iu[1][extra_mask[iu]]], axis=1)
    edges = symmetrize_edges(np.vstack([path, extra]) if n > 1 else path)
    return Graph(
        num_nodes=n,
        edges=edges,
        features=np.zeros((n, 1)),
        labels=np.zeros(n, dtype=np.int64),
        train_mask=np.zeros(n, dtype=bool),
        val_mask=np.zeros(n, dtype=bool),
        test_mask=np.zeros(n, dtype=bool),
    )


def random_instance(
    rng,
    num_nodes=None,
    width=None,
    num_patterns=None,
    beta=None,
    lam=None,
    target_product=None,
) -> TheoryInstance:
    """Random base-dynamics instance; optionally pin beta * ||M||^2."""
    n = int(num_nodes if num_nodes is not None else rng.integers(4, 12))
    d = int(width if width is not None else rng.integers(2, 6))
    k = int(num_patterns if num_patterns is not None else rng.integers(2, 7))
    beta = float(beta if beta is not None else rng.uniform(0.3, 1.5))
    lam = float(lam if lam is not None else rng.uniform(0.0, 0.4))
    M = rng.standard_normal((k, d))
    if target_product is not None:
        M = rescale_to_spectral_sq(M, target_product / beta)
    L = normalized_laplacian(_random_connected_graph(rng, n), self_loops=True)
    return TheoryInstance(M=M, beta=beta, lam=lam, L=L)


def contractive_instance(rng, rho_target=0.7, num_nodes=8, width=3, num_patterns=4) -> TheoryInstance:
    """Instance with rho = (beta/2)||M||^2 + 2 lam ||L|| pinned below one."""
    beta = 1.0
    memory_share = 0.6 * rho_target
    smoothing_share = rho_target - memory_share
    M = rescale_to_spectral_sq(rng.standard_normal((num_patterns, width)), 2 * memory_share / beta)
    L = normalized_laplacian(_random_connected_graph(rng, num_nodes), self_loops=True)
    lam = smoothing_share / (2.0 * laplacian_operator_norm(L))
    return TheoryInstance(M=M, beta=beta, lam=lam, L=L)


# ---------------------------------------------------------------------------
# certificates


def _require_nonnegative_lam(instance):
    if instance.lam < 0:
        raise ValueError(f"the theory assumes lam >= 0, got {instance.lam}")


def certify_descent(instance: TheoryInstance, eta: float, steps: int = 30, seed: int = 0) -> Certificate:
    """Per-step smooth-descent inequality plus the averaged gradient-norm bound."""
    _require_nonnegative_lam(instance)
    consts = instance_constants(instance)
    lip = consts["lipschitz"]
    if not 0.0 < eta < 2.0 / lip:
        raise ValueError(f"step size must lie in (0, 2/L) = (0, {2.0 / lip:.6g}), got {eta}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((instance.num_nodes, instance.width))
    c = eta * (1.0 - eta * lip / 2.0)
    energy0 = instance.energy(X)
    energy = energy0
    min_slack = np.inf
    min_sq_grad = np.inf
    detail = ""
    passed = True
    for t in range(steps):
        g = instance.grad(X)
        sq = float((g * g).sum())
        min_sq_grad = min(min_sq_grad, sq)
        X = X - eta * g
        new_energy = instance.energy(X)
        slack = (energy - c * sq) - new_energy
        if slack < min_slack:
            min_slack = slack
        if slack < -SLACK_HEADROOM and passed:
            passed = False
            detail = f"descent violated at step {t}: slack {slack:.3e}"
        energy = new_energy
    # telescoped bound: min_t ||grad||^2 <= (E_0 - E_T) / (c T)
    cesaro_rhs = (energy0 - energy) / (c * steps)
    if min_sq_grad > cesaro_rhs + SLACK_HEADROOM:
        passed = False
        detail = (detail + "; " if detail else "") + "averaged gradient bound violated"
    consts.update(
        {
            "eta": eta,
            "steps": steps,
            "min_grad_sq": min_sq_grad,
            "cesaro_bound": cesaro_rhs,
        }
    )
    return Certificate("monotone_descent", passed, float(min_slack), consts, detail)


def certify_contraction(
    instance: TheoryInstance,
    starts: int = 10,
    alpha: float = 1.0,
    seed: int = 0,
    max_iter: int = 20_000,
) -> Certificate:
    """Unique-attractor check: common limit from random starts, geometric rates."""
    _require_nonnegative_lam(instance)
    consts = instance_constants(instance)
    rho = consts["rho"]
    if rho >= 1.0:
        raise ValueError(f"contraction requires rho < 1, got rho = {rho:.6g}")
    factor = (1.0 - alpha) + alpha * rho
    rng = np.random.default_rng(seed)
    limits = []
    worst_ratio = 0.0
    for _ in range(starts):
        X = rng.standard_normal((instance.num_nodes, instance.width))
        trajectory = [X]
        for _ in range(max_iter):
            X = damped_fixed_point_map(X, instance.M, instance.beta, instance.lam, instance.L, alpha)
            trajectory.append(X)
            if np.linalg.norm(trajectory[-1] - trajectory[-2]) <= 1e-13 * max(
                1.0, np.linalg.norm(X)
            ):
                break
        limit = trajectory[-1]
        limits.append(limit)
        dists = [float(np.linalg.norm(Z - limit)) for Z in trajectory[:-1]]
        floor = 1e-9 * max(1.0, float(np.linalg.norm(limit)))
        for prev, cur in zip(dists, dists[1:]):
            if prev > floor:
                worst_ratio = max(worst_ratio, cur / prev)
    spread = max(
        float(np.linalg.norm(a - b)) for i, a in enumerate(limits) for b in limits[i + 1 :]
    ) if starts > 1 else 0.0
    passed = spread <= 1e-6 and worst_ratio <= factor + SLACK_HEADROOM
    consts.update(
        {
            "alpha": alpha,
            "damped_factor": factor,
            "worst_step_ratio": worst_ratio,
            "limit_spread": spread,
        }
    )
    slack = factor + SLACK_HEADROOM - worst_ratio
    detail = "" if passed else f"spread {spread:.3e}, worst ratio {worst_ratio:.6f}"
    return Certificate(f"contraction_alpha_{alpha:g}", passed, float(slack), consts, detail)


def solve_minimizer(instance: TheoryInstance, grad_tol: float = 1e-10, max_iter: int = 500_000):
    """Gradient descent to a near-stationary point; linear rate in the convex regime."""
    consts = instance_constants(instance)
    eta = 1.0 / consts["lipschitz"]
    rng = np.random.default_rng(12345)
    X = rng.standard_normal((instance.num_nodes, instance.width)) * 0.1
    for _ in range(max_iter):
        g = instance.grad(X)
        if np.linalg.norm(g) <= grad_tol:
            return X
        X = X - eta * g
    raise NumericsError(f"minimizer solve stalled above gradient tolerance {grad_tol}")


def certify_strong_convexity(
    instance: TheoryInstance, steps: int = 40, eta: float = None, seed: int = 0
) -> Certificate:
    """Linear-rate envelopes for iterates and energies in the mu > 0 regime."""
    _require_nonnegative_lam(instance)
    consts = instance_constants(instance)
    if consts["product"] >= 2.0:
        raise ValueError(
            f"strong convexity requires beta ||M||^2 < 2, got {consts['product']:.6g}"
        )
    lip = consts["lipschitz"]
    mu = consts["mu"]
    if eta is None:
        eta = 1.0 / lip
    if not 0.0 < eta <= 1.0 / lip:
        raise ValueError(f"step size must lie in (0, 1/L] = (0, {1.0 / lip:.6g}], got {eta}")
    X_star = solve_minimizer(instance)
    e_star = instance.energy(X_star)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((instance.num_nodes, instance.width))
    dist0 = float(np.linalg.norm(X - X_star))
    gap0 = instance.energy(X) - e_star
    rate = 1.0 - eta * mu
    min_slack = np.inf
    passed = True
    detail = ""
    for t in range(1, steps + 1):
        X = X - eta * instance.grad(X)
        dist = float(np.linalg.norm(X - X_star))
        gap = instance.energy(X) - e_star
        envelope_dist = rate**t * dist0
        envelope_gap = rate**t * gap0
        slack = min(envelope_dist - dist, envelope_gap - gap)
        min_slack = min(min_slack, slack)
        if slack < -SLACK_HEADROOM and passed:
            passed = False
            detail = f"envelope violated at step {t}"
    consts.update({"eta": eta, "rate": rate, "steps": steps})
    return Certificate("strong_convexity_rate", passed, float(min_slack), consts, detail)


def coercivity_lower_bound(instance: TheoryInstance, X) -> float:
    """Quadratic coercivity floor; the energy is checked against it on the spot."""
    _require_nonnegative_lam(instance)
    X = np.asarray(X, dtype=np.float64)
    sigma = spectral_norm(instance.M)
    n = instance.num_nodes
    norm = float(np.linalg.norm(X))
    bound = 0.5 * norm**2 - sigma * np.sqrt(n) * norm - n * np.log(instance.M.shape[0]) / instance.beta
    energy = instance.energy(X)
    if energy < bound - 1e-9 * max(1.0, abs(bound)):
        raise NumericsError(
            f"coercivity bound violated: energy {energy:.6g} < bound {bound:.6g}"
        )
    return bound


def certify_coercivity(instance: TheoryInstance, trials: int = 20, seed: int = 0) -> Certificate:
    rng = np.random.default_rng(seed)
    min_slack = np.inf
    for _ in range(trials):
        scale = float(rng.uniform(0.1, 1000.0))
        X = rng.standard_normal((instance.num_nodes, instance.width)) * scale
        bound = coercivity_lower_bound(instance, X)
        min_slack = min(min_slack, instance.energy(X) - bound)
    consts = instance_constants(instance)
    consts["trials"] = trials
    return Certificate("coercivity", True, float(min_slack), consts)


# ---------------------------------------------------------------------------
# covariance bound and retrieval Lipschitz measurements


def softmax_covariance_norm(p: np.ndarray) -> float:
    """Spectral norm of diag(p) - p p^T for a probability vector."""
    sigma = np.diag(p) - np.outer(p, p)
    return float(np.abs(np.linalg.eigvalsh(sigma)).max())


def certify_covariance_bound(samples: int = 10_000, max_k: int = 8, seed: int = 0) -> Certificate:
    """||diag(p) - p p^T|| <= 1/2 over random simplex points, tight near (1/2, 1/2)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        k = int(rng.integers(2, max_k + 1))
        p = rng.exponential(size=k)
        p /= p.sum()
        worst = max(worst, softmax_covariance_norm(p))
    # the maximizer: mass split evenly over two entries
    for k in range(2, max_k + 1):
        p = np.zeros(k)
        p[:2] = 0.5
        worst = max(worst, softmax_covariance_norm(p))
    passed = worst <= 0.5 + 1e-12 and worst >= 0.499
    return Certificate(
        "softmax_covariance_bound",
        passed,
        float(0.5 + 1e-12 - worst),
        {"samples": samples, "observed_max": worst},
    )


def certify_retrieval_lipschitz(instance: TheoryInstance, pairs: int = 200, seed: int = 0) -> Certificate:
    """Measured retrieval expansion never exceeds (beta/2) ||M||^2."""
    consts = instance_constants(instance)
    bound = 0.5 * consts["product"]
    rng = np.random.default_rng(seed)
    worst = 0.0
    M, beta = instance.M, instance.beta
    for _ in range(pairs):
        x = rng.standard_normal((1, instance.width))
        y = x + rng.standard_normal((1, instance.width)) * rng.uniform(1e-3, 2.0)
        rx = softmax_rows(beta * x @ M.T) @ M
        ry = softmax_rows(beta * y @ M.T) @ M
        worst = max(worst, float(np.linalg.norm(rx - ry) / np.linalg.norm(x - y)))
    passed = worst <= bound + 1e-8
    consts.update({"measured_lipschitz": worst, "bound": bound})
    return Certificate("retrieval_lipschitz", passed, float(bound + 1e-8 - worst), consts)


# ---------------------------------------------------------------------------
# Hessian structure


def hessian_matvec(instance: TheoryInstance, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Apply the energy Hessian at X to a direction V, without materializing it.

    Per node the block is I - beta M^T (diag(p_v) - p_v p_v^T) M; the Laplacian
    couples nodes through 2 lam (L (x) I).
    """
    M, beta = instance.M, instance.beta
    P = softmax_rows(beta * X @ M.T)
    W = V @ M.T
    PW = P * W
    U = PW - P * PW.sum(axis=1, keepdims=True)
    out = V - beta * (U @ M)
    if instance.lam != 0.0:
        out = out + (2.0 * instance.lam) * instance.L.matmul(V)
    return out


def _power_extreme(matvec, shape, rng, max_iter=5000, tol=1e-12):
    """Largest-magnitude eigenvalue of a symmetric operator by power iteration."""
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    value = 0.0
    for i in range(max_iter):
        w = matvec(v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, True
        v = w / norm_w
        new_value = float((v * matvec(v)).sum())
        if i > 0 and abs(new_value - value) <= tol * max(1.0, abs(new_value)):
            return new_value, True
        value = new_value
    return value, False


def smallest_hessian_eigenvalue(instance: TheoryInstance, X: np.ndarray, seed: int = 0):
    """Smallest eigenvalue of the Hessian at X via shifted power iteration.

    Returns (eigenvalue, converged).  The estimate errs high, never low.
    """
    rng = np.random.default_rng(seed)
    hv = lambda V: hessian_matvec(instance, X, V)
    top, ok1 = _power_extreme(hv, X.shape, rng)
    shift = abs(top) * 1.1 + 1.0
    shifted, ok2 = _power_extreme(lambda V: shift * V - hv(V), X.shape, rng)
    return shift - shifted, ok1 and ok2


def classify_critical_point(instance: TheoryInstance, X_star, grad_tol: float = 1e-8, eig_tol: float = 1e-8) -> str:
    """Judge a stationary point by the sign of the smallest Hessian eigenvalue."""
    X_star = np.asarray(X_star, dtype=np.float64)
    gnorm = float(np.linalg.norm(instance.grad(X_star)))
    if gnorm > grad_tol:
        raise ValueError(f"not a critical point: gradient norm {gnorm:.3e} > {grad_tol}")
    eig, converged = smallest_hessian_eigenvalue(instance, X_star)
    if not converged:
        return "inconclusive"
    if eig > eig_tol:
        return "strict_local_min"
    if eig < -eig_tol:
        return "strict_saddle"
    return "inconclusive"


def certify_hessian_lower_bound(instance: TheoryInstance, trials: int = 5, seed: int = 0) -> Certificate:
    """Smallest Hessian eigenvalue never falls below mu + 2 lam eigmin(L)."""
    _require_nonnegative_lam(instance)
    consts = instance_constants(instance)
    lap_min = float(np.linalg.eigvalsh(instance.L.to_dense()).min()) if instance.L is not None else 0.0
    floor = consts["mu"] + 2.0 * instance.lam * lap_min
    rng = np.random.default_rng(seed)
    min_slack = np.inf
    for _ in range(trials):
        X = rng.standard_normal((instance.num_nodes, instance.width))
        eig, _ = smallest_hessian_eigenvalue(instance, X, seed=seed)
        min_slack = min(min_slack, eig - floor)
    passed = min_slack >= -1e-8
    consts.update({"hessian_floor": floor, "trials": trials})
    return Certificate("hessian_lower_bound", passed, float(min_slack), consts)


def certify_constants_identity(instance: TheoryInstance) -> Certificate:
    """rho + 1 equals the gradient Lipschitz constant, recomputed from parts."""
    c = instance_constants(instance)
    recomputed = 0.5 * c["beta"] * c["sigma_sq"] + 1.0 + 2.0 * c["lam"] * c["laplacian_norm"]
    err = abs(c["rho"] + 1.0 - c["lipschitz"]) + abs(recomputed - c["lipschitz"])
    return Certificate("constants_identity", err <= 1e-12, float(1e-12 - err), c)


# ---------------------------------------------------------------------------
# bundled verification suite


def _worst_of(certs):
    """The most alarming certificate in a batch: failures first, then min slack."""
    return min(certs, key=lambda c: (c.passed, c.slack))


def run_verification_suite(seed: int = 0) -> list:
    """All certificates on bundled synthetic instances; powers `verify-theory`."""
    rng = np.random.default_rng(seed)
    certs = [certify_covariance_bound(seed=seed)]

    # descent on a batch of random instances at eta = 1 / L
    batch = []
    for i in range(100):
        inst = random_instance(rng)
        batch.append(
            certify_descent(inst, eta=1.0 / instance_constants(inst)["lipschitz"], seed=seed + i)
        )
    worst = _worst_of(batch)
    worst.constants["instances"] = 100
    certs.append(worst)

    # contraction, undamped and damped
    for alpha in (1.0, 0.7, 0.3):
        batch = [
            certify_contraction(
                contractive_instance(rng, rho_target=float(rng.uniform(0.3, 0.9))),
                alpha=alpha,
                seed=seed + i,
            )
            for i in range(20)
        ]
        worst = _worst_of(batch)
        worst.constants["instances"] = 20
        certs.append(worst)

    # strong convexity at mu = 1/2
    batch = [
        certify_strong_convexity(
            random_instance(rng, beta=1.0, target_product=1.0, lam=float(rng.uniform(0.0, 0.3))),
            seed=seed + i,
        )
        for i in range(10)
    ]
    worst = _worst_of(batch)
    worst.constants["instances"] = 10
    certs.append(worst)

    reference = random_instance(rng, num_nodes=10, width=3, num_patterns=5, beta=1.0, lam=0.2)
    certs.append(certify_coercivity(reference, seed=seed))
    certs.append(certify_retrieval_lipschitz(reference, seed=seed))
    certs.append(certify_hessian_lower_bound(reference, seed=seed))
    certs.append(certify_constants_identity(reference))

    # critical-point classification in both clear-cut regimes
    convex = random_instance(rng, beta=1.0, target_product=1.0, lam=0.1)
    kind_min = classify_critical_point(convex, solve_minimizer(convex))
    m = np.array([[1.5, 0.5]])
    saddle_inst = TheoryInstance(
        M=np.vstack([m, -m]),
        beta=2.0,  # beta ||m||^2 = 5 > 2: the origin is a strict saddle
        lam=0.0,
        L=None,
        nodes=1,
    )
    kind_saddle = classify_critical_point(saddle_inst, np.zeros((1, 2)))
    passed = kind_min == "strict_local_min" and kind_saddle == "strict_saddle"
    certs.append(
        Certificate(
            "critical_point_classification",
            passed,
            0.0 if passed else -1.0,
            {"convex_regime": kind_min, "symmetric_pair": kind_saddle},
        )
    )
    return certs
