"""Classical sparse PCA methods used as comparison points.

Every recovery method returns exactly ``k`` coordinates; scores are ranked
with ties going to the lower index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._select import top_k_indices
from .errors import NumericalError, ParameterError
from .sampler import SampleMatrix, empirical_covariance


@dataclass(frozen=True)
class BaselineResult:
    method: str
    selected: tuple[int, ...] = ()
    statistic: float | None = None
    iterations: int | None = None
    vector: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True


def _check_k(k: int, d: int) -> None:
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")


def leading_eigenvector(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a symmetric matrix and a unit eigenvector for it."""
    d = m.shape[0]
    try:
        w, v = scipy.linalg.eigh(m, subset_by_index=[d - 1, d - 1])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError("symmetric eigensolver failed", shape=m.shape, cause=str(exc)) from exc
    vec = v[:, 0]
    if not np.all(np.isfinite(vec)):
        raise NumericalError("eigensolver returned non-finite vector", shape=m.shape)
    return float(w[0]), vec


def soft_threshold(a, t: float):
    return np.sign(a) * np.maximum(np.abs(a) - t, 0.0)


# ---------------------------------------------------------------------------
# Diagonal thresholding


def diagonal_thresholding(x: SampleMatrix, k: int) -> BaselineResult:
    """Pick the ``k`` coordinates with the largest sample variance."""
    _check_k(k, x.d)
    var = np.mean(x.data**2, axis=0)
    return BaselineResult("dt", selected=tuple(int(i) for i in top_k_indices(var, k)))


def dt_statistic(x: SampleMatrix) -> float:
    """Largest sample variance."""
    return float(np.max(np.mean(x.data**2, axis=0)))


# ---------------------------------------------------------------------------
# Covariance thresholding


def _thresholded_direction(x: SampleMatrix, tau: float) -> np.ndarray:
    m = empirical_covariance(x) - np.eye(x.d)
    diag = np.diag(m).copy()
    m = soft_threshold(m, tau / math.sqrt(x.n))
    np.fill_diagonal(m, diag)
    return leading_eigenvector(m)[1]


def covariance_thresholding(x: SampleMatrix, k: int, tau: float = 4.0, split: bool = False) -> BaselineResult:
    """Single-spike covariance thresholding.

    Soft-thresholds the off-diagonal entries of ``Sigma_hat - I`` at
    ``tau / sqrt(n)``, leaves the diagonal alone, and takes the leading
    eigenvector ``v`` of the result.

    With ``split=False`` coordinates are ranked by ``|v|``.  With
    ``split=True`` (the two-stage sample-splitting scheme) ``v`` comes from
    the first half of the samples only, and coordinates are ranked by
    ``|(Sigma_hat' - I) v|`` where ``Sigma_hat'`` is the covariance of the
    second half.
    """
    if tau < 0:
        raise ParameterError(f"tau must be nonnegative, got {tau}")
    _check_k(k, x.d)
    if not split:
        v = _thresholded_direction(x, tau)
        return BaselineResult("ct", selected=tuple(int(i) for i in top_k_indices(np.abs(v), k)), vector=v)
    if x.n < 2:
        raise ParameterError("split covariance thresholding needs n >= 2")
    half = x.n // 2
    v = _thresholded_direction(SampleMatrix(x.data[:half]), tau)
    held_out = SampleMatrix(x.data[half:])
    score = (empirical_covariance(held_out) - np.eye(x.d)) @ v
    return BaselineResult("ct", selected=tuple(int(i) for i in top_k_indices(np.abs(score), k)), vector=v)


# ---------------------------------------------------------------------------
# Truncated power method


def _truncate(v: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(v)
    keep = top_k_indices(np.abs(v), k)
    out[keep] = v[keep]
    return out


@dataclass(frozen=True)
class TPowerResult:
    vector: np.ndarray
    selected: tuple[int, ...]
    iterations: int
    converged: bool
    rayleigh: tuple[float, ...]


def truncated_power_method(
    sigma_hat, k: int, epsilon: float = 0.01, max_iter: int = 1000, init=None
) -> TPowerResult:
    """Iterate ``v <- normalize(truncate_k(Sigma_hat v))``.

    Stops when successive iterates differ by less than ``epsilon`` in l2 norm.
    The default start is the normalised indicator of the ``k`` largest
    diagonal entries, which depends on the variables' scales; pass ``init``
    to override (e.g. for random restarts).  ``rayleigh`` holds ``v^T S v``
    for the start and every iterate.
    """
    s = np.asarray(sigma_hat, dtype=float)
    d = s.shape[0]
    _check_k(k, d)
    if init is None:
        v = np.zeros(d)
        v[top_k_indices(np.diag(s), k)] = 1.0
    else:
        v = _truncate(np.asarray(init, dtype=float), k)
    v /= np.linalg.norm(v)
    rq = [float(v @ s @ v)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = _truncate(s @ v, k)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise NumericalError("truncated power iterate vanished", iteration=it)
        w /= nw
        step = np.linalg.norm(w - v)
        v = w
        rq.append(float(v @ s @ v))
        if step < epsilon:
            converged = True
            break
    selected = tuple(int(i) for i in top_k_indices(np.abs(v), k))
    return TPowerResult(vector=v, selected=selected, iterations=it, converged=converged, rayleigh=tuple(rq))


def tpower_recovery(x: SampleMatrix, k: int, epsilon: float = 0.01, max_iter: int = 1000) -> BaselineResult:
    res = truncated_power_method(empirical_covariance(x), k, epsilon, max_iter)
    return BaselineResult(
        "tpower", selected=res.selected, iterations=res.iterations, vector=res.vector, converged=res.converged
    )


# ---------------------------------------------------------------------------
# Minimal dual perturbation


def default_z_grid(n: int, d: int, points: int = 30) -> np.ndarray:
    """30 log-spaced points on ``[0.01, 2] * sqrt(log d / n)``."""
    scale = math.sqrt(math.log(d) / n)
    return np.geomspace(0.01, 2.0, points) * scale


def mdp_term(sigma_hat, k: int, z: float) -> float:
    return leading_eigenvector(soft_threshold(sigma_hat, z))[0] + z * k


def mdp_statistic(sigma_hat, k: int, n: int | None = None, z_grid=None) -> float:
    """``min_z [lambda_max(soft_threshold(Sigma_hat, z)) + z k]`` over a grid of ``z``.

    Either ``z_grid`` or the sample size ``n`` (for :func:`default_z_grid`)
    must be given.
    """
    s = np.asarray(sigma_hat, dtype=float)
    if z_grid is None:
        if n is None:
            raise ParameterError("mdp_statistic needs either n or an explicit z_grid")
        z_grid = default_z_grid(n, s.shape[0])
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size == 0 or np.any(z_grid <= 0):
        raise ParameterError("z_grid must be non-empty and positive")
    return min(mdp_term(s, k, float(z)) for z in z_grid)
