"""Sparse linear regression black boxes and their diagnostics.

A solver is any object with a ``name`` and a ``__call__(instance)`` that
returns :class:`SparseCoefficients` with at most ``instance.k`` nonzeros.
Solvers never standardise columns; callers control scaling.

All solvers work from the normalised Gram matrix ``X^T X / n`` and the
correlation vector ``X^T y / n``.  A :class:`RegressionInstance` computes
them lazily, or accepts precomputed slices (the detector builds the full
``d x d`` Gram once and reuses it for every coordinate).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol

import numba
import numpy as np

from ._select import top_k_indices
from .errors import CapacityError, ParameterError

DEFAULT_LAMBDA = 0.1
DEFAULT_TOL = 1e-6
DEFAULT_MAX_SWEEPS = 1000
L0_MAX_SUPPORTS = 10**6
_L0_CHUNK = 20_000


class RegressionInstance:
    """Response ``y`` (length n), design ``x`` (n x p) and sparsity budget ``k``."""

    def __init__(self, y, x, k: int, gram=None, xty=None):
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ParameterError(f"dimension mismatch: y {y.shape}, x {x.shape}")
        n, p = x.shape
        if n < 1 or p < 1:
            raise ParameterError("need n >= 1 and p >= 1")
        if not 1 <= k <= p:
            raise ParameterError(f"need 1 <= k <= p, got k={k}, p={p}")
        self.y = y
        self.x = x
        self.k = int(k)
        self._gram = None if gram is None else np.asarray(gram, dtype=float)
        self._xty = None if xty is None else np.asarray(xty, dtype=float)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def gram(self) -> np.ndarray:
        """``X^T X / n``."""
        if self._gram is None:
            self._gram = self.x.T @ self.x / self.n
        return self._gram

    @property
    def xty(self) -> np.ndarray:
        """``X^T y / n``."""
        if self._xty is None:
            self._xty = self.x.T @ self.y / self.n
        return self._xty

    def residual(self, beta) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        nz = np.flatnonzero(beta)
        return self.y - self.x[:, nz] @ beta[nz]


@dataclass(frozen=True)
class SparseCoefficients:
    beta: np.ndarray
    support: tuple[int, ...]

    @classmethod
    def from_dense(cls, beta) -> "SparseCoefficients":
        beta = np.asarray(beta, dtype=float)
        return cls(beta=beta, support=tuple(int(j) for j in np.flatnonzero(beta)))


class SlrSolver(Protocol):
    name: str

    def __call__(self, instance: RegressionInstance) -> SparseCoefficients: ...


class LassoFit(NamedTuple):
    beta: np.ndarray
    converged: bool
    sweeps: int


# ---------------------------------------------------------------------------
# Lasso by cyclic coordinate descent


@numba.njit(cache=True, nogil=True)
def _lasso_cd_gram(gram, xty, lam, tol, max_sweeps, beta):
    p = xty.shape[0]
    # grad[j] = xty[j] - (gram @ beta)[j]
    grad = xty - gram @ beta
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            gjj = gram[j, j]
            old = beta[j]
            if gjj <= 0.0:
                new = 0.0
            else:
                z = grad[j] + gjj * old
                if z > lam:
                    new = (z - lam) / gjj
                elif z < -lam:
                    new = (z + lam) / gjj
                else:
                    new = 0.0
            delta = new - old
            if delta != 0.0:
                for l in range(p):
                    grad[l] -= gram[l, j] * delta
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change <= tol:
            return beta, True, sweep + 1
    return beta, False, max_sweeps


def lasso_gram(gram, xty, lam: float, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS) -> LassoFit:
    """Coordinate descent on ``0.5 b^T G b - c^T b + lam * |b|_1`` from zero."""
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    gram = np.ascontiguousarray(gram, dtype=float)
    xty = np.ascontiguousarray(xty, dtype=float)
    if gram.shape != (xty.size, xty.size):
        raise ParameterError(f"gram shape {gram.shape} does not match xty length {xty.size}")
    beta, converged, sweeps = _lasso_cd_gram(gram, xty, float(lam), float(tol), int(max_sweeps), np.zeros(xty.size))
    return LassoFit(beta, bool(converged), int(sweeps))


def lasso_coordinate_descent(
    y, x, lam: float, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS
) -> LassoFit:
    """Minimise ``(1/2n)||y - X b||^2 + lam * ||b||_1`` by cyclic coordinate descent.

    Starts from zero and stops once a full sweep moves no coefficient by more
    than ``tol``; ``converged`` is False if ``max_sweeps`` ran out first.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ParameterError(f"dimension mismatch: y {y.shape}, x {x.shape}")
    n = x.shape[0]
    return lasso_gram(x.T @ x / n, x.T @ y / n, lam, tol, max_sweeps)


def lasso_objective(y, x, beta, lam: float) -> float:
    r = np.asarray(y) - np.asarray(x) @ np.asarray(beta)
    return float(r @ r / (2 * len(r)) + lam * np.abs(beta).sum())


def hard_threshold_topk(beta, k: int) -> SparseCoefficients:
    """Keep the ``k`` largest-magnitude entries (ties go to the lower index)."""
    if k < 0:
        raise ParameterError(f"k must be nonnegative, got {k}")
    beta = np.asarray(beta, dtype=float)
    if k >= beta.size:
        return SparseCoefficients.from_dense(beta.copy())
    out = np.zeros_like(beta)
    keep = top_k_indices(np.abs(beta), k)
    out[keep] = beta[keep]
    return SparseCoefficients.from_dense(out)


def plugin_lambda(instance: RegressionInstance) -> float:
    """``4 * sigma_hat * sqrt(log d / n)`` with ``sigma_hat^2 = ||y||^2 / n`` and ``d = p + 1``."""
    sigma_hat = math.sqrt(float(instance.y @ instance.y) / instance.n)
    return 4.0 * sigma_hat * math.sqrt(math.log(instance.p + 1) / instance.n)


def solve_thresholded_lasso(
    instance: RegressionInstance,
    lam: float = DEFAULT_LAMBDA,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> SparseCoefficients:
    fit = lasso_gram(instance.gram, instance.xty, lam, tol, max_sweeps)
    return hard_threshold_topk(fit.beta, instance.k)


# ---------------------------------------------------------------------------
# Orthogonal matching pursuit


def _lstsq_on(gram, xty, support) -> np.ndarray:
    g = gram[np.ix_(support, support)]
    c = xty[support]
    # Normal equations solved in the least-squares sense, so a rank-deficient
    # selection falls back to the pseudoinverse solution.
    return np.linalg.lstsq(g, c, rcond=None)[0]


def solve_omp(instance: RegressionInstance, return_path: bool = False):
    """``k`` rounds of orthogonal matching pursuit.

    Each round adds the unselected column with the largest absolute
    correlation with the residual (lowest index on ties) and refits least
    squares on the selected set.  Stops early once every correlation is zero
    to machine precision.  With ``return_path`` also returns the residual
    norms ``||y - X b||`` after each round (starting with ``||y||``).
    """
    gram, xty = instance.gram, instance.xty
    p = instance.p
    beta = np.zeros(p)
    selected: list[int] = []
    yy = float(instance.y @ instance.y) / instance.n
    path = [math.sqrt(max(yy, 0.0) * instance.n)]
    scale = math.sqrt(max(yy, 0.0) * float(np.max(np.diag(gram), initial=0.0)))
    for _ in range(instance.k):
        corr = xty - gram @ beta
        corr[selected] = 0.0
        j = int(np.argmax(np.abs(corr)))
        if abs(corr[j]) <= 1e-12 * max(scale, 1e-300):
            break
        selected.append(j)
        sel = sorted(selected)
        beta = np.zeros(p)
        beta[sel] = _lstsq_on(gram, xty, sel)
        if return_path:
            path.append(float(np.linalg.norm(instance.residual(beta))))
    result = SparseCoefficients.from_dense(beta)
    if return_path:
        return result, path
    return result


# ---------------------------------------------------------------------------
# Exhaustive l0 search


def solve_l0_exact(instance: RegressionInstance, max_supports: int = L0_MAX_SUPPORTS) -> SparseCoefficients:
    """Best size-``k`` subset by exhaustive enumeration.

    Every support's least-squares fit is scored through the normal equations,
    in batches.  Ties go to the lexicographically smaller support.
    """
    p, k = instance.p, instance.k
    total = math.comb(p, k)
    if total > max_supports:
        raise CapacityError(f"C({p}, {k}) = {total} supports exceeds the limit of {max_supports}")
    gram, xty = instance.gram, instance.xty
    best_gain = -np.inf
    best_support = None
    best_coef = None
    combos_iter = itertools.combinations(range(p), k)
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos_iter, _L0_CHUNK)), dtype=np.intp
        )
        if chunk.size == 0:
            break
        combos = chunk.reshape(-1, k)
        g = gram[combos[:, :, None], combos[:, None, :]]
        c = xty[combos]
        try:
            coef = np.linalg.solve(g, c[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            coef = np.stack([np.linalg.lstsq(gi, ci, rcond=None)[0] for gi, ci in zip(g, c)])
        # Explained variance of the least-squares fit: c_S^T b_S.
        gain = np.einsum("ij,ij->i", c, coef)
        j = int(np.argmax(gain))
        if gain[j] > best_gain:
            best_gain = gain[j]
            best_support = combos[j].copy()
            best_coef = coef[j].copy()
    beta = np.zeros(p)
    beta[best_support] = best_coef
    return SparseCoefficients(beta=beta, support=tuple(int(j) for j in best_support if beta[j] != 0.0))


# ---------------------------------------------------------------------------
# Named solvers


class LassoTopK:
    """Thresholded Lasso: Lasso followed by keeping the ``k`` largest coefficients.

    ``lambda_rule="plugin"`` ignores ``lam`` and uses :func:`plugin_lambda`.
    """

    name = "lasso_topk"

    def __init__(self, lam: float = DEFAULT_LAMBDA, tol: float = DEFAULT_TOL,
                 max_sweeps: int = DEFAULT_MAX_SWEEPS, lambda_rule: str = "fixed"):
        if lambda_rule not in ("fixed", "plugin"):
            raise ParameterError(f"unknown lambda rule {lambda_rule!r}")
        if lam < 0:
            raise ParameterError(f"lambda must be nonnegative, got {lam}")
        self.lam = float(lam)
        self.tol = float(tol)
        self.max_sweeps = int(max_sweeps)
        self.lambda_rule = lambda_rule

    def __call__(self, instance: RegressionInstance) -> SparseCoefficients:
        lam = plugin_lambda(instance) if self.lambda_rule == "plugin" else self.lam
        return solve_thresholded_lasso(instance, lam, self.tol, self.max_sweeps)

    def __repr__(self):
        return f"LassoTopK(lam={self.lam}, lambda_rule={self.lambda_rule!r})"


class OMP:
    name = "omp"

    def __call__(self, instance: RegressionInstance) -> SparseCoefficients:
        return solve_omp(instance)

    def __repr__(self):
        return "OMP()"


class L0Exact:
    name = "l0"

    def __init__(self, max_supports: int = L0_MAX_SUPPORTS):
        self.max_supports = int(max_supports)

    def __call__(self, instance: RegressionInstance) -> SparseCoefficients:
        return solve_l0_exact(instance, self.max_supports)

    def __repr__(self):
        return "L0Exact()"


SOLVERS = {"lasso_topk": LassoTopK, "omp": OMP, "l0": L0Exact}


def make_solver(name: str, **params) -> SlrSolver:
    """Instantiate a registered solver by name, e.g. ``make_solver("lasso_topk", lam=0.1)``."""
    try:
        cls = SOLVERS[name]
    except KeyError:
        raise ParameterError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return cls(**params)


# ---------------------------------------------------------------------------
# Diagnostics


def prediction_error(x, beta_hat, beta_star) -> float:
    """``(1/n) ||X (beta_hat - beta_star)||^2``."""
    x = np.asarray(x, dtype=float)
    diff = np.asarray(beta_hat, dtype=float) - np.asarray(beta_star, dtype=float)
    if diff.shape != (x.shape[1],):
        raise ParameterError(f"coefficient length {diff.shape} does not match design {x.shape}")
    r = x @ diff
    return float(r @ r) / x.shape[0]


RE_EXHAUSTIVE_LIMIT = 10**4


def restricted_eigenvalue_probe(x, k: int, n_directions: int = 1000, seed=None) -> float:
    """Upper estimate of the restricted eigenvalue constant of ``x``.

    Takes the minimum of ``(1/n)||X b||^2 / ||b||^2`` over

    * every size-``k`` support (smallest eigenvalue of the ``k x k`` block of
      ``X^T X / n``), when there are at most 10^4 supports, and
    * ``n_directions`` random members of the cone ``||b_{S^c}||_1 = 3 ||b_S||_1``
      with random size-``k`` supports ``S``.

    Computing the exact constant is NP-hard; this is only a probe and can
    overestimate it.
    """
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if not 1 <= k <= p:
        raise ParameterError(f"need 1 <= k <= p, got k={k}, p={p}")
    gram = x.T @ x / n
    best = np.inf
    if math.comb(p, k) <= RE_EXHAUSTIVE_LIMIT:
        combos = np.array(list(itertools.combinations(range(p), k)), dtype=np.intp)
        blocks = gram[combos[:, :, None], combos[:, None, :]]
        best = float(np.linalg.eigvalsh(blocks)[:, 0].min())
    rng = np.random.default_rng(seed)
    for _ in range(n_directions):
        s = rng.choice(p, size=k, replace=False)
        b = np.zeros(p)
        b[s] = rng.standard_normal(k)
        rest = np.setdiff1d(np.arange(p), s)
        if rest.size:
            tail = rng.standard_normal(rest.size)
            l1 = np.abs(tail).sum()
            if l1 > 0:
                b[rest] = tail * (3.0 * np.abs(b[s]).sum() / l1)
        nb = float(b @ b)
        if nb == 0.0:
            continue
        best = min(best, float(b @ gram @ b) / nb)
    return max(best, 0.0) if np.isfinite(best) else best
