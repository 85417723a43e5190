"""Fast self-checks run by ``spcaslr verify``.

Each check returns ``(name, passed, detail)``.  They cover the closed-form
model quantities, the solvers' optimality conditions and the null
distribution of the Q statistic, at sizes that finish in a few seconds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .detect import hypothesis_test, q_statistic, q_threshold
from .model import SpikedModel, design_eigenvalues, lmmse_oracle, population_covariance, sherman_morrison_inverse
from .sampler import sample_null
from .slr import L0Exact, RegressionInstance, SparseCoefficients, lasso_coordinate_descent


class _KnownSupportLeastSquares:
    """Least squares on a fixed column set; only used to probe the null distribution."""

    name = "known_support_ls"

    def __init__(self, columns):
        self.columns = list(columns)

    def __call__(self, inst: RegressionInstance) -> SparseCoefficients:
        beta = np.zeros(inst.p)
        cols = self.columns[: inst.k]
        beta[cols] = np.linalg.lstsq(inst.x[:, cols], inst.y, rcond=None)[0]
        return SparseCoefficients.from_dense(beta)


def check_linear_model_oracle(models: int = 30, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(models):
        d = int(rng.integers(3, 31))
        k = int(rng.integers(1, min(d, 10) + 1))
        model = SpikedModel.build(d, k, float(rng.uniform(0.05, 1.0)), "random_sphere", seed=rng)
        sigma = population_covariance(model)
        for i in range(d):
            o = lmmse_oracle(model, i, verify=False)
            rest = np.delete(np.arange(d), i)
            dense = np.linalg.solve(sigma[np.ix_(rest, rest)], sigma[rest, i])
            explained = sigma[rest, i] @ dense
            worst = max(worst, np.abs(o.beta_star - dense).max(),
                        abs(o.sigma_sq - (sigma[i, i] - explained)), abs(o.signal - explained))
    return "closed-form regression coefficients vs dense solve", worst <= 1e-10, f"max error {worst:.2e}"


def check_sherman_morrison(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        v = rng.standard_normal(int(rng.integers(1, 20)))
        inv = sherman_morrison_inverse(v, 0.5)
        worst = max(worst, np.abs((np.eye(v.size) + 0.5 * np.outer(v, v)) @ inv - np.eye(v.size)).max())
    return "Sherman-Morrison inverse", worst <= 1e-12, f"max error {worst:.2e}"


def check_design_eigenvalues(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(3, 40))
        k = int(rng.integers(1, d + 1))
        model = SpikedModel.build(d, k, float(rng.uniform(0.0, 5.0)), "random_sphere", seed=rng)
        i = model.spike.support[0]
        w = np.linalg.eigvalsh(np.delete(np.delete(population_covariance(model), i, 0), i, 1))
        lo, hi = design_eigenvalues(model, i)
        worst = max(worst, abs(w[0] - lo), abs(w[-1] - hi))
    return "design covariance eigenvalues", worst <= 1e-10, f"max error {worst:.2e}"


def check_lasso_kkt(seed: int = 0, lam: float = 0.1, tol: float = 1e-6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((60, 25))
    y = x[:, :3] @ np.array([1.0, -0.5, 0.25]) + 0.3 * rng.standard_normal(60)
    fit = lasso_coordinate_descent(y, x, lam, tol)
    g = x.T @ (y - x @ fit.beta) / x.shape[0]
    nz = fit.beta != 0
    worst = max(np.abs(g[nz] - lam * np.sign(fit.beta[nz])).max(initial=0.0),
                (np.abs(g[~nz]) - lam).max(initial=-np.inf))
    return "Lasso optimality conditions", fit.converged and worst <= 10 * tol, f"worst violation {worst:.2e}"


def check_threshold_formula():
    got = q_threshold(500, 100, 5)
    want = 13 * 5 * math.log(20) / 500
    clamp = q_threshold(500, 100, 50)
    ok = abs(got - want) < 1e-15 and abs(clamp - 1.3) < 1e-15
    return "Q threshold formula and clamp", ok, f"{got:.6f}, clamp {clamp:.6f}"


def check_null_chi_square(trials: int = 300, n: int = 200, d: int = 12, k: int = 3, seed: int = 0):
    solver = _KnownSupportLeastSquares(range(k))
    nq = [n * q_statistic(sample_null(d, n, seed=seed + t), 0, solver, k) for t in range(trials)]
    ks = stats.kstest(nq, stats.chi2(k).cdf).statistic
    return f"n*Q under the null is chi-square({k})", ks < 0.1, f"KS distance {ks:.3f} over {trials} trials"


def check_null_false_alarm(trials: int = 20, n: int = 400, d: int = 16, k: int = 2, seed: int = 0):
    solver = L0Exact()
    alarms = sum(hypothesis_test(sample_null(d, n, seed=seed + t), k, solver)[0] for t in range(trials))
    return "null false alarms with the l0 solver", alarms <= trials // 10, f"{alarms}/{trials} false alarms"


CHECKS = (
    check_linear_model_oracle,
    check_sherman_morrison,
    check_design_eigenvalues,
    check_lasso_kkt,
    check_threshold_formula,
    check_null_chi_square,
    check_null_false_alarm,
)


def run_checks():
    results = []
    for check in CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # report, keep going
            results.append((check.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    return results
