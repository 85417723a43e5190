from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import orthonormal_design
from spcaslr.errors import CapacityError, ParameterError
from spcaslr.model import SpikedModel, lmmse_oracle
from spcaslr.sampler import sample_spiked
from spcaslr.slr import (
    OMP,
    L0Exact,
    LassoTopK,
    RegressionInstance,
    hard_threshold_topk,
    lasso_coordinate_descent,
    lasso_objective,
    make_solver,
    plugin_lambda,
    prediction_error,
    restricted_eigenvalue_probe,
    solve_l0_exact,
    solve_omp,
    solve_thresholded_lasso,
)


def ista(y, x, lam, iters=20000):
    """Proximal gradient reference for the Lasso objective."""
    n = x.shape[0]
    step = n / np.linalg.eigvalsh(x.T @ x)[-1]
    b = np.zeros(x.shape[1])
    for _ in range(iters):
        z = b - step * x.T @ (x @ b - y) / n
        b = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
    return b


def brute_force_l0(y, x, k):
    """Independent enumerator: lstsq on every support, lexicographic order."""
    best, best_rss = None, np.inf
    for s in itertools.combinations(range(x.shape[1]), k):
        cols = list(s)
        coef = np.linalg.lstsq(x[:, cols], y, rcond=None)[0]
        rss = float(np.sum((y - x[:, cols] @ coef) ** 2))
        if rss < best_rss - 1e-12:
            best, best_rss = s, rss
    return best, best_rss


def rss(inst, beta):
    r = inst.residual(beta)
    return float(r @ r)


def random_instance(rng, n, p, k, noise=0.5):
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[rng.choice(p, k, replace=False)] = rng.standard_normal(k)
    return RegressionInstance(x @ beta + noise * rng.standard_normal(n), x, k)


instances = st.builds(
    lambda seed, n, p, k_frac: random_instance(np.random.default_rng(seed), n, p, max(1, int(k_frac * p))),
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(5, 40),
    p=st.integers(1, 12),
    k_frac=st.floats(0.0, 1.0),
)


def test_instance_validation():
    with pytest.raises(ParameterError):
        RegressionInstance(np.zeros(3), np.zeros((4, 2)), 1)
    with pytest.raises(ParameterError):
        RegressionInstance(np.zeros(3), np.zeros((3, 2)), 3)
    with pytest.raises(ParameterError):
        RegressionInstance(np.zeros(3), np.zeros((3, 2)), 0)


def test_lasso_orthonormal_least_squares(rng):
    x = orthonormal_design(50, 8, seed=1)
    y = rng.standard_normal(50)
    fit = lasso_coordinate_descent(y, x, 0.0)
    assert fit.converged
    np.testing.assert_allclose(fit.beta, x.T @ y / 50, atol=1e-6)


def test_lasso_kill_condition(rng):
    x = rng.standard_normal((30, 6))
    y = rng.standard_normal(30)
    lam = np.abs(x.T @ y).max() / 30
    assert not np.any(lasso_coordinate_descent(y, x, lam).beta)
    assert not np.any(lasso_coordinate_descent(y, x, 2 * lam).beta)


def test_lasso_matches_reference_optimizer(rng):
    x = rng.standard_normal((20, 10))
    y = x[:, :2] @ [1.0, -1.0] + 0.2 * rng.standard_normal(20)
    lam = 0.05
    ours = lasso_objective(y, x, lasso_coordinate_descent(y, x, lam, tol=1e-10).beta, lam)
    ref = lasso_objective(y, x, ista(y, x, lam), lam)
    assert ours <= ref + 1e-6


def test_lasso_rejects_bad_input():
    with pytest.raises(ParameterError):
        lasso_coordinate_descent(np.zeros(3), np.zeros((4, 2)), 0.1)
    with pytest.raises(ParameterError):
        lasso_coordinate_descent(np.zeros(4), np.zeros((4, 2)), -0.1)


@given(instances, st.floats(0.001, 1.0))
@settings(max_examples=100, deadline=None)
def test_lasso_kkt(inst, lam):
    tol = 1e-6
    fit = lasso_coordinate_descent(inst.y, inst.x, lam, tol=tol, max_sweeps=100_000)
    assert fit.converged
    g = inst.x.T @ (inst.y - inst.x @ fit.beta) / inst.n
    # residual check scaled to the design, since tol bounds coefficient moves
    slack = 10 * tol * max(1.0, float(np.abs(inst.gram).max()) * inst.p)
    nz = fit.beta != 0
    assert np.all(np.abs(g[nz] - lam * np.sign(fit.beta[nz])) <= slack)
    assert np.all(np.abs(g[~nz]) <= lam + slack)


def test_hard_threshold_examples():
    np.testing.assert_array_equal(hard_threshold_topk([3.0, -5.0, 1.0], 2).beta, [3.0, -5.0, 0.0])
    np.testing.assert_array_equal(hard_threshold_topk([1.0, 1.0, 1.0], 1).beta, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(hard_threshold_topk([1.0, 2.0], 5).beta, [1.0, 2.0])
    assert hard_threshold_topk([1.0, 2.0], 0).support == ()
    with pytest.raises(ParameterError):
        hard_threshold_topk([1.0], -1)


def test_thresholded_lasso_noiseless_support(rng):
    x = rng.standard_normal((100, 10))
    beta = np.zeros(10)
    beta[[2, 7]] = [1.5, -2.0]
    out = solve_thresholded_lasso(RegressionInstance(x @ beta, x, 2), lam=0.01)
    assert out.support == (2, 7)


def test_thresholded_lasso_large_lambda(rng):
    x = rng.standard_normal((40, 5))
    out = solve_thresholded_lasso(RegressionInstance(rng.standard_normal(40), x, 3), lam=100.0)
    assert out.support == ()
    assert not np.any(out.beta)


def test_thresholded_lasso_spiked_column():
    model = SpikedModel.build(500, 10, 1.0, "random_signs", seed=3)
    data = sample_spiked(model, 200, seed=3).data
    i = model.spike.support[0]
    inst = RegressionInstance(data[:, i], np.delete(data, i, axis=1), 10)
    out = solve_thresholded_lasso(inst, lam=0.1)
    assert np.count_nonzero(out.beta) <= 10
    assert set(out.support) == set(np.flatnonzero(out.beta))


def test_omp_orthonormal_exact():
    x = orthonormal_design(40, 12, seed=2)
    beta = np.zeros(12)
    beta[[1, 5, 9]] = [2.0, -1.0, 0.5]
    out = solve_omp(RegressionInstance(x @ beta, x, 3))
    np.testing.assert_allclose(out.beta, beta, atol=1e-10)


def test_omp_orthogonal_response():
    x = orthonormal_design(30, 5, seed=3)
    q, _ = np.linalg.qr(np.hstack([x, np.random.default_rng(0).standard_normal((30, 1))]))
    y = q[:, -1]
    out = solve_omp(RegressionInstance(y, x, 3))
    assert out.support == ()


@given(instances)
@settings(max_examples=60, deadline=None)
def test_omp_residual_path_nonincreasing(inst):
    _, path = solve_omp(inst, return_path=True)
    assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(path, path[1:]))


def test_l0_noiseless_recovery(rng):
    x = rng.standard_normal((30, 9))
    beta = np.zeros(9)
    beta[[0, 4, 8]] = [1.0, -2.0, 3.0]
    out = solve_l0_exact(RegressionInstance(x @ beta, x, 3))
    assert out.support == (0, 4, 8)
    np.testing.assert_allclose(out.beta, beta, atol=1e-10)


def test_l0_matches_brute_force():
    for seed in range(20):
        inst = random_instance(np.random.default_rng(seed), 15, 8, 2)
        support, best = brute_force_l0(inst.y, inst.x, 2)
        out = solve_l0_exact(inst)
        assert out.support == support
        assert rss(inst, out.beta) == pytest.approx(best, rel=1e-9, abs=1e-12)


def test_l0_tie_breaks_lexicographically():
    x = np.tile(np.array([[1.0], [2.0], [0.0]]), (1, 3))
    y = np.array([1.0, 2.0, 0.0])
    assert solve_l0_exact(RegressionInstance(y, x, 1)).support == (0,)


def test_l0_capacity():
    inst = RegressionInstance(np.zeros(5), np.ones((5, 30)), 10)
    with pytest.raises(CapacityError):
        solve_l0_exact(inst)
    with pytest.raises(CapacityError):
        solve_l0_exact(RegressionInstance(np.zeros(5), np.ones((5, 6)), 3), max_supports=10)


@given(instances)
@settings(max_examples=60, deadline=None)
def test_l0_dominates(inst):
    best = rss(inst, solve_l0_exact(inst).beta)
    for solver in (OMP(), LassoTopK(0.1), LassoTopK(0.01)):
        assert best <= rss(inst, solver(inst).beta) * (1 + 1e-9) + 1e-9


@given(instances)
@settings(max_examples=60, deadline=None)
def test_solvers_are_sparse_and_deterministic(inst):
    for solver in (OMP(), LassoTopK(0.05), L0Exact(), LassoTopK(lambda_rule="plugin")):
        a, b = solver(inst), solver(inst)
        assert np.count_nonzero(a.beta) <= inst.k
        assert set(a.support) == set(np.flatnonzero(a.beta))
        np.testing.assert_array_equal(a.beta, b.beta)


def test_make_solver():
    assert isinstance(make_solver("omp"), OMP)
    assert make_solver("lasso_topk", lam=0.3).lam == 0.3
    assert isinstance(make_solver("l0"), L0Exact)
    with pytest.raises(ParameterError):
        make_solver("cosamp")


def test_plugin_lambda():
    y = np.full(100, 2.0)
    inst = RegressionInstance(y, np.ones((100, 9)), 1)
    assert plugin_lambda(inst) == pytest.approx(4 * 2.0 * math.sqrt(math.log(10) / 100))


def test_prediction_error_examples():
    x = np.eye(6)
    beta = np.arange(6.0)
    assert prediction_error(x, beta, beta) == 0.0
    e1 = np.zeros(6)
    e1[0] = 1.0
    assert prediction_error(x, beta + e1, beta) == pytest.approx(1 / 6)
    with pytest.raises(ParameterError):
        prediction_error(x, beta[:3], beta[:3])


@pytest.mark.slow
def test_prediction_error_condition(capsys):
    n, d, k, theta = 200, 500, 10, 1.0
    ok, ratios = 0, []
    for t in range(100):
        model = SpikedModel.build(d, k, theta, "random_signs", seed=1000 + t)
        data = sample_spiked(model, n, seed=2000 + t).data
        i = model.spike.support[0]
        oracle = lmmse_oracle(model, i, verify=False)
        x = np.delete(data, i, axis=1)
        beta_hat = solve_thresholded_lasso(RegressionInstance(data[:, i], x, k), lam=0.1).beta
        err = prediction_error(x, beta_hat, oracle.beta_star)
        scale = oracle.sigma_sq * k * math.log(d) / n
        ratios.append(err / scale)
        ok += err <= 50 * scale
    with capsys.disabled():
        print(f"\nprediction error / (sigma^2 k log d / n): median {np.median(ratios):.3f}, max {max(ratios):.3f}")
    assert ok >= 95


def test_re_probe_orthonormal():
    x = orthonormal_design(60, 10, seed=4)
    g = restricted_eigenvalue_probe(x, 2, n_directions=0, seed=0)
    assert 0.99 <= g <= 1.0 + 1e-12
    assert restricted_eigenvalue_probe(x, 2, n_directions=200, seed=0) <= 1.0 + 1e-12


def test_re_probe_zero_column(rng):
    x = rng.standard_normal((20, 5))
    x[:, 3] = 0.0
    assert restricted_eigenvalue_probe(x, 1, n_directions=10, seed=0) == 0.0


def test_re_probe_is_deterministic(rng):
    x = rng.standard_normal((40, 30))
    a = restricted_eigenvalue_probe(x, 4, n_directions=50, seed=1)
    assert a == restricted_eigenvalue_probe(x, 4, n_directions=50, seed=1)
    with pytest.raises(ParameterError):
        restricted_eigenvalue_probe(x, 31)
