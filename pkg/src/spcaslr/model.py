"""Spiked covariance model and its closed-form linear-model quantities.

The population covariance is ``I_d + theta * u u^T`` with ``u`` a unit,
k-sparse vector.  Regressing coordinate ``i`` on the remaining ``d - 1``
coordinates gives a Gaussian linear model whose coefficients, noise variance
and explained variance have closed forms; this module computes them and
cross-checks them against dense linear algebra.

Coordinate convention: deleting coordinate ``i`` shifts every index greater
than ``i`` down by one, so vectors of length ``d - 1`` are indexed as
``np.delete(v, i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ParameterError, SingularityError

SpikeMode = Literal["uniform", "random_signs", "random_sphere"]

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class Spike:
    """Unit-norm sparse direction ``u`` together with its support."""

    u: np.ndarray
    support: tuple[int, ...]

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "support", tuple(int(j) for j in self.support))
        if u.ndim != 1:
            raise ParameterError("spike vector must be one-dimensional")
        d = u.size
        s = self.support
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ParameterError("support must be strictly increasing")
        if s and (s[0] < 0 or s[-1] >= d):
            raise ParameterError("support index out of range")
        off = np.ones(d, dtype=bool)
        off[list(s)] = False
        if np.any(u[off] != 0.0):
            raise ParameterError("spike has nonzero entries off its support")
        if abs(np.linalg.norm(u) - 1.0) > _NORM_TOL:
            raise ParameterError("spike must have unit Euclidean norm")

    @property
    def d(self) -> int:
        return self.u.size

    @property
    def k(self) -> int:
        return len(self.support)

    @classmethod
    def from_vector(cls, u) -> "Spike":
        u = np.asarray(u, dtype=float)
        return cls(u=u, support=tuple(np.flatnonzero(u)))


@dataclass(frozen=True)
class SpikedModel:
    """``N(0, I_d + theta u u^T)`` with a k-sparse spike.

    ``theta <= 1`` is what the theory assumes; larger values are accepted and
    reported through :attr:`in_theory_regime`.
    """

    d: int
    k: int
    theta: float
    spike: Spike

    def __post_init__(self):
        if not 1 <= self.k <= self.d:
            raise ParameterError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if self.theta < 0 or not np.isfinite(self.theta):
            raise ParameterError(f"theta must be a finite nonnegative number, got {self.theta}")
        if self.spike.d != self.d:
            raise ParameterError("spike dimension does not match d")
        if self.spike.k > self.k:
            raise ParameterError("spike has more than k nonzero entries")

    @property
    def in_theory_regime(self) -> bool:
        return self.theta <= 1.0

    @classmethod
    def build(cls, d: int, k: int, theta: float, mode: SpikeMode = "random_signs", seed=None):
        return cls(d=d, k=k, theta=float(theta), spike=make_spike(d, k, mode, seed))


@dataclass(frozen=True)
class LinearModelOracle:
    """Population regression of coordinate ``target_index`` on the others."""

    target_index: int
    beta_star: np.ndarray
    sigma_sq: float
    signal: float
    verified: bool | None = field(default=None)


def make_spike(d: int, k: int, mode: SpikeMode = "uniform", seed=None) -> Spike:
    """Draw a unit k-sparse spike.

    ``uniform`` puts ``1/sqrt(k)`` on the first ``k`` coordinates and ignores
    ``seed``.  ``random_signs`` uses ``+-1/sqrt(k)`` on a uniformly random
    support.  ``random_sphere`` places a uniform point of the unit sphere in
    ``R^k`` on a uniformly random support.
    """
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")
    u = np.zeros(d)
    if mode == "uniform":
        support = np.arange(k)
        u[support] = 1.0 / np.sqrt(k)
        return Spike(u=u, support=tuple(support))

    rng = np.random.default_rng(seed)
    support = np.sort(rng.choice(d, size=k, replace=False))
    if mode == "random_signs":
        signs = rng.choice([-1.0, 1.0], size=k)
        u[support] = signs / np.sqrt(k)
    elif mode == "random_sphere":
        g = rng.standard_normal(k)
        while not np.any(g):  # pragma: no cover - probability zero
            g = rng.standard_normal(k)
        u[support] = g / np.linalg.norm(g)
        # Renormalise once more so the 1e-12 norm invariant survives rounding.
        u /= np.linalg.norm(u)
    else:
        raise ParameterError(f"unknown spike mode {mode!r}")
    return Spike(u=u, support=tuple(support))


def check_condition(spike: Spike, c_min: float, which: Literal["C1", "C2"], k: int | None = None) -> bool:
    """Entry-size conditions on the spike.

    C1 asks for at least one coordinate with ``c_min^2/k <= u_i^2 <= 1 - c_min^2/k``;
    C2 asks every support entry to satisfy ``|u_i| >= c_min/sqrt(k)``.
    ``k`` defaults to the size of the spike's support.
    """
    k = spike.k if k is None else int(k)
    u2 = spike.u**2
    lo = c_min**2 / k
    if which == "C1":
        return bool(np.any((u2 >= lo) & (u2 <= 1.0 - lo)))
    if which == "C2":
        s = list(spike.support)
        # 1e-12 slack: the equality case |u_i| = 1/sqrt(k) is computed in floating point.
        return bool(np.all(np.abs(spike.u[s]) >= c_min / np.sqrt(k) - 1e-12))
    raise ParameterError(f"unknown condition {which!r}")


def population_covariance(model: SpikedModel) -> np.ndarray:
    u = model.spike.u
    return np.eye(model.d) + model.theta * np.outer(u, u)


def sherman_morrison_inverse(v, c: float) -> np.ndarray:
    """Inverse of ``I + c v v^T`` via the Sherman-Morrison formula."""
    v = np.asarray(v, dtype=float)
    denom = 1.0 + c * float(v @ v)
    if denom == 0.0:
        raise SingularityError("1 + c * v^T v is zero; matrix is singular")
    return np.eye(v.size) - (c / denom) * np.outer(v, v)


def _check_index(model: SpikedModel, i: int) -> None:
    if not 0 <= i < model.d:
        raise ParameterError(f"coordinate {i} out of range for d={model.d}")


def lmmse_oracle(model: SpikedModel, i: int, verify: bool = True) -> LinearModelOracle:
    """Closed-form best linear predictor of ``X_i`` from ``X_{-i}``.

    With ``verify`` the coefficients and noise variance are recomputed by a
    dense solve of ``Sigma_{-i} beta = Sigma_{-i,i}`` and compared to 1e-10.
    """
    _check_index(model, i)
    theta = model.theta
    u = model.spike.u
    ui = u[i]
    rest = np.delete(u, i)
    tail = 1.0 - ui**2
    denom = 1.0 + tail * theta
    beta = (theta * ui / denom) * rest
    sigma_sq = 1.0 + theta * ui**2 / denom
    signal = theta**2 * ui**2 * tail / denom

    verified = None
    if verify:
        sigma = population_covariance(model)
        s_rest = np.delete(np.delete(sigma, i, axis=0), i, axis=1)
        s_cross = np.delete(sigma[:, i], i)
        dense_beta = np.linalg.solve(s_rest, s_cross)
        dense_sigma_sq = sigma[i, i] - s_cross @ dense_beta
        verified = bool(
            np.allclose(beta, dense_beta, rtol=0.0, atol=1e-10)
            and abs(dense_sigma_sq - sigma_sq) <= 1e-10
        )
    return LinearModelOracle(
        target_index=i, beta_star=beta, sigma_sq=float(sigma_sq), signal=float(signal), verified=verified
    )


def design_eigenvalues(model: SpikedModel, i: int) -> tuple[float, float]:
    """Extreme eigenvalues of the design covariance ``I_{d-1} + theta u_{-i} u_{-i}^T``."""
    _check_index(model, i)
    rest_sq = 1.0 - model.spike.u[i] ** 2
    top = 1.0 + model.theta * rest_sq
    if model.d == 2:
        return top, top
    return 1.0, top
