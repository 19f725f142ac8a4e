import numpy as np
import pytest

import graphhopfield.autodiff as ad
from graphhopfield.dynamics import (
    DynamicsConfig,
    damped_fixed_point_map,
    energy_base,
    fixed_point_map,
    ghn_step,
    grad_energy_base,
    iterate,
    iterate_fixed_point,
)
from graphhopfield.errors import ConfigError, NumericsError
from graphhopfield.graphcore import laplacian_quadratic, normalized_laplacian
from graphhopfield.memory import Gate, MemoryBank

from helpers import central_difference, random_graph, relative_error


def bank_with(patterns, beta=1.0):
    return MemoryBank(
        patterns=ad.parameter(np.asarray(patterns, dtype=np.float64)),
        log_beta=ad.parameter(np.log(beta)),
    )


def laplacian_for(rng, n, self_loops=True):
    return normalized_laplacian(random_graph(rng, n, p=0.5), self_loops=self_loops)


def scaled_to_norm_sq(rng, k, d, target_sq):
    """Random K x d matrix rescaled so its spectral norm squared hits target_sq."""
    M = rng.standard_normal((k, d))
    return M * np.sqrt(target_sq) / np.linalg.norm(M, 2)


# ---------------------------------------------------------------------------
# energy and gradient


def test_energy_with_zero_patterns_closed_form():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4, 3))
    for beta, k in ((1.0, 5), (2.5, 2)):
        e = energy_base(X, np.zeros((k, 3)), beta, 0.0, None)
        expected = 0.5 * (X * X).sum() - 4 * np.log(k) / beta
        assert e == pytest.approx(expected, rel=1e-12)


def test_energy_single_pattern_at_fixed_point():
    m = np.array([[1.5, -0.5]])
    e = energy_base(m, m, 2.0, 0.0, None)
    assert e == pytest.approx(-0.5 * (m * m).sum(), rel=1e-12)


def test_gradient_zero_at_single_pattern_fixed_point():
    m = np.array([[1.5, -0.5, 2.0]])
    X = np.tile(m, (4, 1))
    g = grad_energy_base(X, m, 1.3, 0.0, None)
    np.testing.assert_allclose(g, 0.0, atol=1e-14)


def test_gradient_rows_decouple_without_laplacian():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((4, 3))
    X = rng.standard_normal((5, 3))
    g0 = grad_energy_base(X, M, 0.9, 0.0, None)
    X2 = X.copy()
    X2[2] += rng.standard_normal(3)
    g1 = grad_energy_base(X2, M, 0.9, 0.0, None)
    mask = np.ones(5, dtype=bool)
    mask[2] = False
    np.testing.assert_array_equal(g0[mask], g1[mask])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    worst = 0.0
    for trial in range(10):
        n, d, k = 5, 3, 4
        L = laplacian_for(rng, n)
        M = rng.standard_normal((k, d))
        beta = float(rng.uniform(0.3, 2.0))
        lam = float(rng.uniform(0.0, 0.5))
        X = rng.standard_normal((n, d))
        fd = central_difference(lambda Z: energy_base(Z, M, beta, lam, L), X.copy())
        worst = max(worst, relative_error(grad_energy_base(X, M, beta, lam, L), fd))
    assert worst <= 1e-6


def test_energy_shape_mismatch():
    with pytest.raises(ValueError):
        energy_base(np.ones((2, 3)), np.ones((2, 4)), 1.0, 0.0, None)


# ---------------------------------------------------------------------------
# single step


def test_full_step_to_single_pattern_with_saturated_gate():
    rng = np.random.default_rng(3)
    m = np.array([[0.7, -1.2]])
    bank = bank_with(m, beta=1.0)
    gate = Gate(
        weight=ad.parameter(np.zeros((4, 2))), bias=ad.parameter(np.full(2, 40.0))
    )
    cfg = DynamicsConfig(lam=0.0, alpha=1.0, iterations=1, variant="lse")
    x = ad.Value(rng.standard_normal((3, 2)))
    out = ghn_step(x, bank, gate, cfg, None)
    np.testing.assert_allclose(out.data, np.tile(m, (3, 1)), atol=1e-12)


def test_nomem_with_zero_lambda_is_identity():
    cfg = DynamicsConfig(lam=0.0, alpha=0.3, iterations=1, variant="nomem")
    x = ad.Value(np.random.default_rng(4).standard_normal((5, 3)))
    out = ghn_step(x, None, None, cfg, None)
    assert out is x


def test_nomem_is_pure_smoothing():
    rng = np.random.default_rng(5)
    L = laplacian_for(rng, 6)
    cfg = DynamicsConfig(lam=0.25, alpha=0.4, iterations=1, variant="nomem")
    X = rng.standard_normal((6, 3))
    out = ghn_step(ad.Value(X), None, None, cfg, L)
    np.testing.assert_allclose(
        out.data, X - 2 * 0.4 * 0.25 * L.matmul(X), atol=1e-14
    )


def test_ungated_step_is_gradient_descent_on_base_energy():
    rng = np.random.default_rng(6)
    for _ in range(5):
        n, d, k = 6, 4, 5
        L = laplacian_for(rng, n)
        M = rng.standard_normal((k, d))
        beta = float(rng.uniform(0.2, 2.0))
        lam = float(rng.uniform(0.0, 0.6))
        alpha = float(rng.uniform(0.1, 1.0))
        cfg = DynamicsConfig(lam=lam, alpha=alpha, iterations=1, variant="lse")
        X = rng.standard_normal((n, d))
        stepped = ghn_step(ad.Value(X), bank_with(M, beta=beta), None, cfg, L)
        gd = X - alpha * grad_energy_base(X, M, beta, lam, L)
        assert np.abs(stepped.data - gd).max() <= 1e-12


def test_step_gradients_reach_all_parameters():
    rng = np.random.default_rng(7)
    L = laplacian_for(rng, 5)
    bank = bank_with(rng.standard_normal((4, 3)), beta=1.0)
    gate = Gate.create(3, rng)
    cfg = DynamicsConfig(lam=0.3, alpha=0.3, iterations=2, variant="lse")
    out, _ = iterate(ad.Value(rng.standard_normal((5, 3))), bank, gate, cfg, L)
    ad.backward(ad.squared_norm(out))
    for p in (bank.patterns, bank.log_beta, gate.weight, gate.bias):
        assert p.grad is not None and np.abs(p.grad).max() > 0


# ---------------------------------------------------------------------------
# iteration


def test_iterate_once_equals_single_step():
    rng = np.random.default_rng(8)
    L = laplacian_for(rng, 5)
    bank = bank_with(rng.standard_normal((3, 2)))
    cfg = DynamicsConfig(lam=0.2, alpha=0.5, iterations=1, variant="lse")
    X = ad.Value(rng.standard_normal((5, 2)))
    by_iterate, diag = iterate(X, bank, None, cfg, L)
    by_step = ghn_step(X, bank, None, cfg, L)
    np.testing.assert_array_equal(by_iterate.data, by_step.data)
    assert len(diag.step_norms) == 1


def test_contraction_regime_step_ratios_bounded():
    rng = np.random.default_rng(9)
    n, d, k = 6, 3, 4
    L = laplacian_for(rng, n)
    norm_L = np.linalg.norm(L.to_dense(), 2)
    beta = 1.0
    M = scaled_to_norm_sq(rng, k, d, 0.8)  # (beta/2)||M||^2 = 0.4
    lam = 0.3 / (2 * norm_L)  # 2 lam ||L|| = 0.3
    rho = 0.5 * np.linalg.norm(M, 2) ** 2 + 2 * lam * norm_L
    assert rho < 1
    alpha = 0.6
    cfg = DynamicsConfig(lam=lam, alpha=alpha, iterations=40, variant="lse")
    _, diag = iterate(ad.Value(rng.standard_normal((n, d))), bank_with(M), None, cfg, L)
    bound = (1 - alpha) + alpha * rho + 1e-6
    deltas = diag.step_norms
    for prev, cur in zip(deltas, deltas[1:]):
        if prev > 1e-12:
            assert cur / prev <= bound


def test_iterate_smoke_with_defaults():
    rng = np.random.default_rng(10)
    L = laplacian_for(rng, 8)
    bank = bank_with(rng.standard_normal((6, 4)))
    gate = Gate.create(4, rng)
    cfg = DynamicsConfig()  # Laplacian weight 0.3, damping 0.3, 4 iterations
    out, diag = iterate(ad.Value(rng.standard_normal((8, 4))), bank, gate, cfg, L)
    assert np.isfinite(out.data).all()
    assert len(diag.step_norms) == 4
    assert len(diag.gate_means) == 4
    assert all(np.isfinite(v) for v in diag.step_norms)


def test_iterate_aborts_on_nonfinite_with_index():
    bank = bank_with(np.full((1, 2), 1e308))
    cfg = DynamicsConfig(lam=0.0, alpha=1.0, iterations=3, variant="lse")
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericsError, match="iteration 0"):
            iterate(ad.Value(np.full((2, 2), 1e308)), bank, None, cfg, None)


def test_config_validation():
    with pytest.raises(ConfigError):
        DynamicsConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        DynamicsConfig(alpha=1.5)
    with pytest.raises(ConfigError):
        DynamicsConfig(iterations=0)
    with pytest.raises(ConfigError):
        DynamicsConfig(variant="unknown")


# ---------------------------------------------------------------------------
# fixed-point map


def test_fixed_point_map_single_pattern_is_constant():
    rng = np.random.default_rng(11)
    m = np.array([[2.0, 1.0]])
    out = fixed_point_map(rng.standard_normal((4, 2)), m, 1.0, 0.0, None)
    np.testing.assert_allclose(out, np.tile(m, (4, 1)), atol=1e-15)


def test_fixed_point_map_at_origin_gives_pattern_mean():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((5, 3))
    out = fixed_point_map(np.zeros((2, 3)), M, 1.7, 0.0, None)
    np.testing.assert_allclose(out, np.tile(M.mean(axis=0), (2, 1)), atol=1e-14)


def test_fixed_point_map_rejects_negative_lambda():
    with pytest.raises(ValueError, match="lam"):
        fixed_point_map(np.ones((2, 2)), np.ones((2, 2)), 1.0, -0.1, None)


def test_banach_iteration_reaches_fixed_point():
    rng = np.random.default_rng(13)
    n, d = 5, 3
    L = laplacian_for(rng, n)
    M = scaled_to_norm_sq(rng, 4, d, 1.0)  # (beta/2)||M||^2 = 0.5
    lam = 0.05
    X, _ = iterate_fixed_point(rng.standard_normal((n, d)), M, 1.0, lam, L)
    residual = np.linalg.norm(X - fixed_point_map(X, M, 1.0, lam, L))
    assert residual <= 1e-8


def test_damped_map_definition():
    rng = np.random.default_rng(14)
    M = rng.standard_normal((3, 2))
    X = rng.standard_normal((4, 2))
    alpha = 0.25
    np.testing.assert_allclose(
        damped_fixed_point_map(X, M, 1.0, 0.0, None, alpha),
        (1 - alpha) * X + alpha * fixed_point_map(X, M, 1.0, 0.0, None),
        atol=1e-15,
    )


# ---------------------------------------------------------------------------
# descent and smoothing properties


def test_monotone_descent_inequality_over_random_instances():
    rng = np.random.default_rng(15)
    violations = 0
    for trial in range(100):
        n, d, k = 4, 3, 3
        L = laplacian_for(rng, n)
        M = rng.standard_normal((k, d))
        beta = float(rng.uniform(0.2, 1.5))
        lam = float(rng.uniform(0.0, 0.4))
        lip = 0.5 * beta * np.linalg.norm(M, 2) ** 2 + 1 + 2 * lam * np.linalg.norm(
            L.to_dense(), 2
        )
        eta = float(rng.uniform(0.05, 0.95)) * 2 / lip
        X = rng.standard_normal((n, d))
        for _ in range(5):
            g = grad_energy_base(X, M, beta, lam, L)
            Xn = X - eta * g
            drop = eta * (1 - eta * lip / 2) * (g * g).sum()
            if energy_base(Xn, M, beta, lam, L) > energy_base(X, M, beta, lam, L) - drop + 1e-9:
                violations += 1
            X = Xn
    assert violations == 0


def test_nomem_iteration_strictly_smooths():
    rng = np.random.default_rng(16)
    g = random_graph(rng, 8, p=0.4)
    L = normalized_laplacian(g)
    lam, alpha = 0.3, 0.5
    assert 2 * alpha * lam * np.linalg.norm(L.to_dense(), 2) < 1
    cfg = DynamicsConfig(lam=lam, alpha=alpha, iterations=1, variant="nomem")
    X = rng.standard_normal((8, 3))
    prev = laplacian_quadratic(L, X)
    assert prev > 1e-8  # non-constant start
    for _ in range(5):
        X = ghn_step(ad.Value(X), None, None, cfg, L).data
        cur = laplacian_quadratic(L, X)
        assert cur < prev
        prev = cur
