"""Objective handles: analytic gradients vs finite differences, counters, noise."""

import numpy as np
import pytest

from optbench.oracle import (
    MatFacProblem,
    ObjectiveHandle,
    build_mstar,
    finite_diff_grad,
    matfac_objective,
    quadratic_objective,
    wrap_stochastic,
)
from optbench.rng import Seed, spawn_stream


def test_quadratic_minimizer_and_direct_values():
    h = quadratic_objective([1.0, 1.0])
    assert h.f(np.zeros(2)) == 0.0
    assert np.array_equal(h.grad(np.zeros(2)), np.zeros(2))
    h2 = quadratic_objective([2.0, 1.0])
    assert h2.f(np.array([1.0, 1.0])) == pytest.approx(1.5, rel=1e-15)
    assert np.allclose(h2.grad(np.array([1.0, 1.0])), [2.0, 1.0], rtol=1e-15)
    assert h2.lipschitz_grad == 2.0
    assert h2.optimum_value == 0.0


def test_quadratic_rejects_bad_eigenvalues():
    with pytest.raises(ValueError):
        quadratic_objective([1.0, 0.0])
    with pytest.raises(ValueError):
        quadratic_objective([])


def test_quadratic_gradient_matches_finite_differences():
    h = quadratic_objective([0.5, 1.0, 2.0, 3.0, 4.0])
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(5)
        fd = finite_diff_grad(h, x, step=1e-5)
        g = h.grad(x)
        assert np.all(np.abs(fd - g) <= 1e-6 * np.maximum(1.0, np.abs(g)))


def test_build_mstar_block_structure():
    p = build_mstar(Seed(4), d=4, r=2)
    assert p.mstar.shape == (4, 4)
    assert np.array_equal(p.mstar, p.mstar.T)
    assert np.all(p.mstar[2:, :] == 0.0)
    assert np.all(p.mstar[:, 2:] == 0.0)
    assert not np.all(p.mstar[:2, :2] == 0.0)


def test_build_mstar_scalar_case():
    p = build_mstar(Seed(9), d=1, r=1)
    assert p.gamma_cap == pytest.approx(abs(p.mstar[0, 0]), rel=1e-12)


def test_build_mstar_rejects_bad_rank():
    with pytest.raises(ValueError):
        build_mstar(Seed(0), d=3, r=4)
    with pytest.raises(ValueError):
        build_mstar(Seed(0), d=3, r=0)


def test_power_iteration_matches_dense_eigensolver():
    p = build_mstar(Seed(123), d=50, r=10)
    block = p.mstar[:10, :10]
    sigma = float(np.max(np.abs(np.linalg.eigvalsh(block))))
    assert p.gamma_cap == pytest.approx(sigma, rel=1e-8)


def test_build_mstar_deterministic():
    a = build_mstar(Seed(5), d=6, r=3)
    b = build_mstar(Seed(5), d=6, r=3)
    assert np.array_equal(a.mstar, b.mstar)


def test_matfac_global_minimizer_from_factorized_target():
    # a positive semidefinite block factors exactly: f = 0, grad = 0
    rng = np.random.default_rng(7)
    c = rng.standard_normal((3, 3))
    block = c @ c.T
    d, r = 5, 3
    mstar = np.zeros((d, d))
    mstar[:3, :3] = block
    p = MatFacProblem(d=d, r=r, mstar=mstar, gamma_cap=float(np.linalg.norm(block, 2)))
    h = matfac_objective(p)
    u = np.zeros((d, r))
    u[:3, :] = c
    x = u.reshape(-1, order="F")
    assert h.f(x) == pytest.approx(0.0, abs=1e-20)
    assert np.linalg.norm(h.grad(x)) == pytest.approx(0.0, abs=1e-12)


def test_matfac_hand_expanded_case():
    p = MatFacProblem(d=3, r=1, mstar=np.zeros((3, 3)), gamma_cap=1.0)
    h = matfac_objective(p)
    x = np.array([1.0, 0.0, 0.0])
    assert h.f(x) == pytest.approx(1.0, rel=1e-15)
    assert np.allclose(h.grad(x), [4.0, 0.0, 0.0], atol=1e-15)
    assert np.allclose(finite_diff_grad(h, x, step=1e-5), [4.0, 0.0, 0.0], atol=1e-6)


def test_matfac_gradient_matches_finite_differences():
    p = build_mstar(Seed(3), d=6, r=2)
    h = matfac_objective(p)
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.standard_normal(12)
        g = h.grad(x)
        fd = finite_diff_grad(h, x, step=1e-6 * (1.0 + float(np.linalg.norm(x))))
        assert np.all(np.abs(fd - g) <= 1e-5 * np.maximum(1.0, np.abs(g)))


def test_matfac_constants_follow_cap():
    p = build_mstar(Seed(21), d=8, r=3)
    h = matfac_objective(p)
    assert h.lipschitz_grad == pytest.approx(8.0 * p.gamma_cap, rel=1e-14)
    assert h.lipschitz_hess == pytest.approx(12.0 * np.sqrt(p.gamma_cap), rel=1e-14)


def test_matfac_nonnegative_everywhere():
    p = build_mstar(Seed(2), d=5, r=2)
    h = matfac_objective(p)
    rng = np.random.default_rng(4)
    assert all(h.f(rng.standard_normal(10)) >= 0.0 for _ in range(20))


def test_matfac_rejects_wrong_dimension():
    h = matfac_objective(build_mstar(Seed(2), d=5, r=2))
    with pytest.raises(ValueError):
        h.f(np.zeros(7))


def test_finite_diff_exact_for_quadratic():
    h = quadratic_objective([1.0])
    assert finite_diff_grad(h, np.array([3.0]), step=1e-5)[0] == pytest.approx(3.0, abs=1e-9)


def test_finite_diff_zero_for_constant():
    h = ObjectiveHandle(dim=3, f=lambda x: 4.2, grad=lambda x: np.zeros(3))
    assert np.array_equal(finite_diff_grad(h, np.ones(3), step=1e-4), np.zeros(3))


def test_finite_diff_rejects_bad_step():
    h = quadratic_objective([1.0])
    with pytest.raises(ValueError):
        finite_diff_grad(h, np.array([1.0]), step=0.0)


def test_nonfinite_points_rejected():
    h = quadratic_objective([1.0, 2.0])
    with pytest.raises(ValueError):
        h.f(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        h.grad(np.array([np.inf, 0.0]))


def test_grad_counter_semantics():
    h = quadratic_objective([1.0, 2.0])
    x = np.ones(2)
    h.f(x)
    assert h.grad_evals == 0
    h.grad(x)
    h.grad(x)
    assert h.grad_evals == 2
    clone = h.replicate()
    assert clone.grad_evals == 0
    clone.grad(x)
    assert (clone.grad_evals, h.grad_evals) == (1, 2)


def test_wrap_stochastic_zero_noise_is_deterministic():
    h = wrap_stochastic(quadratic_objective([1.0, 3.0]), noise_scale=0.0, rho=1.0)
    x = np.array([0.5, -2.0])
    g = h.stoch_grad(x, Seed(1))
    assert np.array_equal(g, np.array([0.5, -6.0]))
    assert h.grad_evals == 1


def test_wrap_stochastic_domain_errors():
    base = quadratic_objective([1.0])
    with pytest.raises(ValueError):
        wrap_stochastic(base, noise_scale=0.0, rho=0.5)
    with pytest.raises(ValueError):
        wrap_stochastic(base, noise_scale=1.0, rho=1.5)  # 1 + a^2 > rho
    with pytest.raises(ValueError):
        wrap_stochastic(base, noise_scale=-0.1, rho=2.0)


def test_wrap_stochastic_second_moment_ratio():
    a = 0.5
    h = wrap_stochastic(quadratic_objective([1.0, 2.0, 3.0]), noise_scale=a, rho=1.0 + a**2)
    x = np.array([1.0, -1.0, 0.5])
    base_sq = float(np.linalg.norm(h.grad(x)) ** 2)
    root = Seed(55)
    draws = 10_000
    ratios = np.empty(draws)
    for k in range(draws):
        g = h.stoch_grad(x, spawn_stream(root, k))
        ratios[k] = float(g @ g) / base_sq
    stderr = ratios.std(ddof=1) / np.sqrt(draws)
    assert abs(ratios.mean() - (1.0 + a**2 / 3.0)) <= 3.0 * stderr


def test_wrap_stochastic_unbiased():
    a = 0.4
    h = wrap_stochastic(quadratic_objective([2.0, 1.0]), noise_scale=a, rho=1.0 + a**2)
    x = np.array([1.5, -0.5])
    g_true = h.grad(x)
    root = Seed(77)
    draws = 10_000
    samples = np.stack([h.stoch_grad(x, spawn_stream(root, k)) for k in range(draws)])
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(draws)
    assert np.all(np.abs(samples.mean(axis=0) - g_true) <= 4.0 * stderr)


def test_wrap_stochastic_reproducible_per_seed():
    h = wrap_stochastic(quadratic_objective([1.0]), noise_scale=0.3, rho=1.2)
    x = np.array([2.0])
    assert np.array_equal(h.stoch_grad(x, Seed(9)), h.stoch_grad(x, Seed(9)))
