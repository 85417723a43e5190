"""Sparse PCA through per-coordinate sparse regressions.

Each coordinate ``i`` is regressed on all the others with an SLR black box
using sparsity budget ``k``; the statistic

    Q_i = (1/n)||X_i||^2 - (1/n)||X_i - X_{-i} beta_hat_i||^2

measures how much of coordinate ``i`` the rest of the data explains.  Large
values flag coordinates on the spike's support.  The detector only ever calls
``solver(instance)``; it does not know which solver it holds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._select import top_k_indices
from .errors import ParameterError
from .sampler import SampleMatrix
from .slr import RegressionInstance, SlrSolver

THRESHOLD_CONSTANT = 13.0


@dataclass(frozen=True)
class QReport:
    """Q values for a dataset.

    Entries that were never computed (short-circuited tests) are NaN.
    """

    q: np.ndarray
    threshold: float
    solver_name: str
    k: int

    @property
    def exceed(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.q > self.threshold

    @property
    def q_max(self) -> float:
        return float(np.nanmax(self.q))


def q_threshold(n: int, d: int, k: int) -> float:
    """``13 k log(d/k) / n``, never below ``13 k / n`` (the bound needs ``d/k >= e``)."""
    if n < 1 or d < 1 or k < 1:
        raise ParameterError(f"need n, d, k >= 1, got n={n}, d={d}, k={k}")
    return THRESHOLD_CONSTANT * k * max(math.log(d / k), 1.0) / n


def _as_data(x) -> np.ndarray:
    return x.data if isinstance(x, SampleMatrix) else np.asarray(x, dtype=float)


class _Coordinates:
    """Shared Gram matrix for building the ``d`` leave-one-out regressions."""

    def __init__(self, x, k: int):
        data = _as_data(x)
        n, d = data.shape
        if d < 2:
            raise ParameterError("need at least two coordinates")
        if not 1 <= k <= d - 1:
            raise ParameterError(f"need 1 <= k <= d-1, got k={k}, d={d}")
        self.data = data
        self.n, self.d, self.k = n, d, int(k)
        self.gram = data.T @ data / n

    def instance(self, i: int) -> RegressionInstance:
        if not 0 <= i < self.d:
            raise ParameterError(f"coordinate {i} out of range for d={self.d}")
        rest = np.delete(np.arange(self.d), i)
        return RegressionInstance(
            y=self.data[:, i],
            x=self.data[:, rest],
            k=self.k,
            gram=self.gram[np.ix_(rest, rest)],
            xty=self.gram[rest, i],
        )

    def q(self, i: int, solver: SlrSolver) -> float:
        inst = self.instance(i)
        coef = solver(inst)
        r = inst.residual(coef.beta)
        return float(inst.y @ inst.y - r @ r) / self.n


def q_statistic(x, i: int, solver: SlrSolver, k: int) -> float:
    """Q value for coordinate ``i``."""
    return _Coordinates(x, k).q(i, solver)


def q_values(x, k: int, solver: SlrSolver, workers: int | None = None) -> np.ndarray:
    """Q values for every coordinate.  ``workers > 1`` runs regressions in threads."""
    coords = _Coordinates(x, k)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            q = list(pool.map(lambda i: coords.q(i, solver), range(coords.d)))
    else:
        q = [coords.q(i, solver) for i in range(coords.d)]
    return np.array(q)


def q_report(x, k: int, solver: SlrSolver, workers: int | None = None) -> QReport:
    data = _as_data(x)
    n, d = data.shape
    q = q_values(data, k, solver, workers)
    return QReport(q=q, threshold=q_threshold(n, d, k), solver_name=solver.name, k=k)


def hypothesis_test(x, k: int, solver: SlrSolver, full: bool = False) -> tuple[int, QReport]:
    """Return 1 if some coordinate's Q exceeds the threshold, else 0.

    By default stops at the first exceeding coordinate; the remaining Q
    entries in the report are NaN.  ``full=True`` computes all of them.
    """
    if full:
        rep = q_report(x, k, solver)
        return int(np.any(rep.exceed)), rep
    coords = _Coordinates(x, k)
    thr = q_threshold(coords.n, coords.d, k)
    q = np.full(coords.d, np.nan)
    decision = 0
    for i in range(coords.d):
        q[i] = coords.q(i, solver)
        if q[i] > thr:
            decision = 1
            break
    return decision, QReport(q=q, threshold=thr, solver_name=solver.name, k=k)


def support_recovery(x, k: int, solver: SlrSolver) -> tuple[tuple[int, ...], QReport]:
    """All coordinates whose Q exceeds the threshold (any number of them)."""
    rep = q_report(x, k, solver)
    return tuple(int(i) for i in np.flatnonzero(rep.exceed)), rep


def recover_topk(x, k: int, solver: SlrSolver) -> tuple[tuple[int, ...], QReport]:
    """The ``k`` coordinates with the largest Q (ties to the lower index)."""
    rep = q_report(x, k, solver)
    return tuple(int(i) for i in top_k_indices(rep.q, k)), rep


@dataclass(frozen=True)
class AdaptiveResult:
    k: int
    decision: int
    # (k', number of exceedances) for every level tried
    levels: tuple[tuple[int, int], ...]


def adaptive_sparsity(x, k_init: int, solver: SlrSolver) -> AdaptiveResult:
    """Sparsity search by halving, for when ``k`` is unknown.

    Tries ``k' = k_init, k_init // 2, ...`` and stops at the first level where
    at least ``k'`` coordinates exceed the threshold for ``k'``, or at
    ``k' = 1``.  The decision is 1 if the stopping level had any exceedance.
    """
    if k_init < 1:
        raise ParameterError(f"k_init must be >= 1, got {k_init}")
    data = _as_data(x)
    kp = min(int(k_init), data.shape[1] - 1)
    levels = []
    while True:
        rep = q_report(data, kp, solver)
        count = int(np.sum(rep.exceed))
        levels.append((kp, count))
        if count >= kp or kp == 1:
            return AdaptiveResult(k=kp, decision=int(count > 0), levels=tuple(levels))
        kp = max(kp // 2, 1)
