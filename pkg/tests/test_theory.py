import numpy as np
import pytest

from graphhopfield.dynamics import softmax_rows
from graphhopfield.errors import NumericsError
from graphhopfield.theory import (
    TheoryInstance,
    TheoryReport,
    certify_contraction,
    certify_covariance_bound,
    certify_descent,
    certify_hessian_lower_bound,
    certify_retrieval_lipschitz,
    certify_strong_convexity,
    classify_critical_point,
    classify_regime,
    coercivity_lower_bound,
    contractive_instance,
    hessian_matvec,
    instance_constants,
    random_instance,
    rescale_to_spectral_sq,
    run_verification_suite,
    smallest_hessian_eigenvalue,
    solve_minimizer,
    spectral_norm,
)


def jacobi_largest_singular_value(A, sweeps=100):
    """One-sided Jacobi: rotate column pairs until columns are orthogonal;
    the largest column norm is then the largest singular value."""
    A = np.asarray(A, dtype=np.float64).copy()
    n = A.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = A[:, p].copy(), A[:, q].copy()
                apq = ap @ aq
                off = max(off, abs(apq))
                if abs(apq) < 1e-15:
                    continue
                tau = (aq @ aq - ap @ ap) / (2 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1 + t * t)
                s = c * t
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
        if off < 1e-14:
            break
    return float(np.sqrt((A * A).sum(axis=0).max()))


def dense_hessian(instance, X):
    """Materialized (N d) x (N d) Hessian: per-node blocks plus Laplacian coupling."""
    n, d = X.shape
    P = softmax_rows(instance.beta * X @ instance.M.T)
    H = np.zeros((n * d, n * d))
    for v in range(n):
        p = P[v]
        sigma = np.diag(p) - np.outer(p, p)
        block = np.eye(d) - instance.beta * instance.M.T @ sigma @ instance.M
        H[v * d : (v + 1) * d, v * d : (v + 1) * d] = block
    if instance.lam:
        H += 2 * instance.lam * np.kron(instance.L.to_dense(), np.eye(d))
    return H


# ---------------------------------------------------------------------------
# spectral norm


def test_spectral_norm_diagonal():
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, abs=1e-12)


def test_spectral_norm_rank_one():
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(6), rng.standard_normal(4)
    got = spectral_norm(np.outer(u, v))
    assert got == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-10)


def test_spectral_norm_matches_jacobi_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        A = rng.standard_normal((8, 5))
        assert spectral_norm(A) == pytest.approx(
            jacobi_largest_singular_value(A), abs=1e-8
        )


def test_spectral_norm_rejects_zero_matrix():
    with pytest.raises(ValueError):
        spectral_norm(np.zeros((3, 3)))


def test_rescale_hits_target():
    rng = np.random.default_rng(2)
    M = rescale_to_spectral_sq(rng.standard_normal((5, 4)), 2.0)
    assert spectral_norm(M) ** 2 == pytest.approx(2.0, abs=1e-9)


# ---------------------------------------------------------------------------
# constants and regimes


def test_constants_identity_and_report():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, beta=1.0, lam=0.2)
    c = instance_constants(inst)
    assert c["rho"] + 1.0 == c["lipschitz"]
    recomputed = 0.5 * c["beta"] * c["sigma_sq"] + 1.0 + 2.0 * c["lam"] * c["laplacian_norm"]
    assert abs(recomputed - c["lipschitz"]) <= 1e-12
    report = TheoryReport.from_instance(inst)
    assert report.rho + 1.0 == report.lipschitz


def test_regime_classification():
    assert classify_regime(0.75) == "strongly_convex"  # Cornell-like operating point
    assert classify_regime(1.88) == "strongly_convex"
    assert classify_regime(2.0) == "convex_boundary"
    assert classify_regime(2.005) == "convex_boundary"
    assert classify_regime(35.96) == "nonconvex"  # dense co-purchase operating point
    assert classify_regime(2.15) == "nonconvex"


# ---------------------------------------------------------------------------
# descent certificates


def test_descent_certificate_passes_in_convex_regime():
    rng = np.random.default_rng(4)
    inst = random_instance(rng, beta=1.0, target_product=1.0, lam=0.2)
    eta = 1.0 / instance_constants(inst)["lipschitz"]
    cert = certify_descent(inst, eta=eta, steps=60)
    assert cert.passed
    assert cert.slack >= -1e-6
    assert cert.constants["min_grad_sq"] <= cert.constants["cesaro_bound"] + 1e-6


def test_descent_rejects_boundary_step_size():
    rng = np.random.default_rng(5)
    inst = random_instance(rng)
    lip = instance_constants(inst)["lipschitz"]
    with pytest.raises(ValueError):
        certify_descent(inst, eta=2.0 / lip)
    with pytest.raises(ValueError):
        certify_descent(inst, eta=0.0)


def test_descent_gradient_norm_shrinks_monotonically_in_convex_regime():
    rng = np.random.default_rng(6)
    inst = random_instance(rng, beta=1.0, target_product=0.8, lam=0.1)
    eta = 1.0 / instance_constants(inst)["lipschitz"]
    X = rng.standard_normal((inst.num_nodes, inst.width))
    norms = []
    for _ in range(40):
        g = inst.grad(X)
        norms.append(np.linalg.norm(g))
        X = X - eta * g
    tail = norms[5:]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))


# ---------------------------------------------------------------------------
# contraction certificates


def test_contraction_on_constructed_instance():
    rng = np.random.default_rng(7)
    inst = contractive_instance(rng, rho_target=0.6)
    c = instance_constants(inst)
    assert c["rho"] == pytest.approx(0.6, abs=1e-9)
    cert = certify_contraction(inst, starts=10)
    assert cert.passed
    assert cert.constants["limit_spread"] <= 1e-6
    assert cert.constants["worst_step_ratio"] <= c["rho"] + 1e-6


def test_sufficient_condition_instance_contracts():
    # (beta/2)||M||^2 + 4 lam < 1 guarantees contraction for any normalized Laplacian
    rng = np.random.default_rng(8)
    beta, lam = 0.1, 0.05
    M = rescale_to_spectral_sq(rng.standard_normal((4, 3)), 4.0)  # (beta/2)||M||^2 = 0.2
    from graphhopfield.graphcore import normalized_laplacian
    from graphhopfield.theory import _random_connected_graph

    L = normalized_laplacian(_random_connected_graph(rng, 7))
    assert 0.5 * beta * 4.0 + 4 * lam < 1
    cert = certify_contraction(TheoryInstance(M=M, beta=beta, lam=lam, L=L))
    assert cert.passed


def test_single_pattern_converges_in_one_step():
    m = np.array([[0.8, -0.4, 0.3]])  # ||m||^2 < 2 keeps rho < 1
    inst = TheoryInstance(M=m, beta=1.0, lam=0.0, L=None, nodes=4)
    cert = certify_contraction(inst, starts=3)
    assert cert.passed
    assert cert.constants["worst_step_ratio"] == 0.0


def test_damped_contraction_factor():
    rng = np.random.default_rng(10)
    inst = contractive_instance(rng, rho_target=0.8)
    cert = certify_contraction(inst, alpha=0.5)
    assert cert.passed
    expected = 0.5 + 0.5 * instance_constants(inst)["rho"]
    assert cert.constants["damped_factor"] == pytest.approx(expected)
    assert cert.constants["worst_step_ratio"] <= expected + 1e-6


def test_contraction_rejects_expansive_instance():
    rng = np.random.default_rng(11)
    inst = random_instance(rng, beta=4.0, target_product=8.0, lam=0.1)
    with pytest.raises(ValueError, match="rho"):
        certify_contraction(inst)


# ---------------------------------------------------------------------------
# strong convexity


def test_strong_convexity_envelopes_hold():
    rng = np.random.default_rng(12)
    inst = random_instance(rng, beta=1.0, target_product=1.0, lam=0.15)
    assert instance_constants(inst)["mu"] == pytest.approx(0.5, abs=1e-9)
    cert = certify_strong_convexity(inst, steps=50)
    assert cert.passed and cert.slack >= -1e-6


def test_strong_convexity_rejects_nonconvex_operating_point():
    rng = np.random.default_rng(13)
    inst = random_instance(rng, beta=1.0, target_product=35.96, lam=0.1)
    with pytest.raises(ValueError, match="< 2"):
        certify_strong_convexity(inst)


def test_minimizer_solver_reaches_tolerance():
    rng = np.random.default_rng(14)
    inst = random_instance(rng, beta=1.0, target_product=0.75, lam=0.1)
    X_star = solve_minimizer(inst)
    assert np.linalg.norm(inst.grad(X_star)) <= 1e-10


# ---------------------------------------------------------------------------
# coercivity


def test_coercivity_tight_at_origin():
    rng = np.random.default_rng(15)
    inst = random_instance(rng, num_nodes=6, lam=0.2, num_patterns=4)
    X = np.zeros((inst.num_nodes, inst.width))
    bound = coercivity_lower_bound(inst, X)
    expected = -inst.num_nodes * np.log(inst.M.shape[0]) / inst.beta
    assert bound == pytest.approx(expected, rel=1e-12)
    assert inst.energy(X) == pytest.approx(bound, rel=1e-12)


def test_coercivity_large_norm_energy_positive():
    rng = np.random.default_rng(16)
    inst = random_instance(rng, num_nodes=5, lam=0.1)
    X = rng.standard_normal((inst.num_nodes, inst.width))
    X *= 1e3 / np.linalg.norm(X)
    bound = coercivity_lower_bound(inst, X)
    assert inst.energy(X) > 0
    assert inst.energy(X) >= bound


def test_coercivity_single_pattern_drops_log_term():
    inst = TheoryInstance(M=np.array([[1.0, 2.0]]), beta=1.0, lam=0.0, L=None, nodes=3)
    bound = coercivity_lower_bound(inst, np.zeros((3, 2)))
    sigma = np.sqrt(5.0)
    assert bound == pytest.approx(0.0, abs=1e-12)  # ||X||=0 and ln 1 = 0
    X = np.ones((3, 2))
    assert coercivity_lower_bound(inst, X) == pytest.approx(
        0.5 * 6.0 - sigma * np.sqrt(3.0) * np.sqrt(6.0), rel=1e-12
    )


# ---------------------------------------------------------------------------
# Hessian structure and critical points


def test_hessian_matvec_matches_dense_assembly():
    rng = np.random.default_rng(17)
    inst = random_instance(rng, num_nodes=5, width=3, lam=0.25)
    X = rng.standard_normal((5, 3))
    H = dense_hessian(inst, X)
    for _ in range(5):
        V = rng.standard_normal((5, 3))
        got = hessian_matvec(inst, X, V)
        want = (H @ V.ravel()).reshape(5, 3)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_smallest_eigenvalue_matches_dense_oracle():
    rng = np.random.default_rng(18)
    for trial in range(5):
        inst = random_instance(rng, num_nodes=4, width=3, lam=0.2)
        X = rng.standard_normal((4, 3))
        got, converged = smallest_hessian_eigenvalue(inst, X, seed=trial)
        assert converged
        want = float(np.linalg.eigvalsh(dense_hessian(inst, X)).min())
        assert got == pytest.approx(want, abs=1e-6)


def test_strongly_convex_critical_point_is_minimum():
    rng = np.random.default_rng(19)
    inst = random_instance(rng, beta=1.0, target_product=1.0, lam=0.1)
    assert classify_critical_point(inst, solve_minimizer(inst)) == "strict_local_min"


def test_symmetric_pattern_pair_midpoint_is_strict_saddle():
    m = np.array([[1.2, -0.3, 0.8]])
    beta = 2.0
    assert beta * (m @ m.T).item() > 2.0
    inst = TheoryInstance(M=np.vstack([m, -m]), beta=beta, lam=0.0, L=None, nodes=1)
    X = np.zeros((1, 3))
    assert np.linalg.norm(inst.grad(X)) <= 1e-12
    assert classify_critical_point(inst, X) == "strict_saddle"
    # eigen-decomposition oracle agrees
    eigs = np.linalg.eigvalsh(dense_hessian(inst, X))
    assert eigs.min() < -1e-6 < 1e-6 < eigs.max()


def test_memoryless_quadratic_energy_minimum_at_origin():
    rng = np.random.default_rng(20)
    base = random_instance(rng, num_nodes=5, width=2, lam=0.3)
    inst = TheoryInstance(M=np.zeros((3, 2)), beta=1.0, lam=base.lam, L=base.L)
    X = np.zeros((5, 2))
    assert np.linalg.norm(inst.grad(X)) == 0.0
    assert classify_critical_point(inst, X) == "strict_local_min"


def test_classify_rejects_noncritical_point():
    rng = np.random.default_rng(21)
    inst = random_instance(rng)
    with pytest.raises(ValueError, match="critical"):
        classify_critical_point(inst, rng.standard_normal((inst.num_nodes, inst.width)) + 10)


def test_hessian_lower_bound_certificate():
    rng = np.random.default_rng(22)
    inst = random_instance(rng, num_nodes=6, width=3, lam=0.2)
    cert = certify_hessian_lower_bound(inst, trials=3)
    assert cert.passed


# ---------------------------------------------------------------------------
# covariance and Lipschitz measurements


def test_covariance_bound_certificate():
    cert = certify_covariance_bound(samples=10_000, seed=0)
    assert cert.passed
    assert 0.499 <= cert.constants["observed_max"] <= 0.5 + 1e-12


def test_retrieval_lipschitz_certificate():
    rng = np.random.default_rng(23)
    inst = random_instance(rng, beta=1.2, lam=0.1)
    cert = certify_retrieval_lipschitz(inst, pairs=300)
    assert cert.passed
    assert cert.constants["measured_lipschitz"] <= cert.constants["bound"] + 1e-8


# ---------------------------------------------------------------------------
# bundled suite


def test_verification_suite_all_pass():
    certs = run_verification_suite(seed=7)
    names = {c.name for c in certs}
    assert {"softmax_covariance_bound", "monotone_descent", "strong_convexity_rate"} <= names
    failures = [c.name for c in certs if not c.passed]
    assert not failures, f"failing certificates: {failures}"
