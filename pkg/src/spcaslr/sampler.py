"""Seeded Gaussian samples from the null and spiked models.

All routines assume the population mean is zero: nothing is centred, and
variances are computed as ``(1/n) sum x^2``.  Real data would need centring
before being passed in.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, ParameterError
from .model import SpikedModel


@dataclass(frozen=True)
class SampleMatrix:
    """``n x d`` data matrix, one sample per row."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ParameterError("sample matrix must be two-dimensional")
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise ParameterError(f"need n >= 1 and d >= 2, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ParameterError("sample matrix contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def derive_seed(base_seed: int, *keys) -> int:
    """Per-task seed: ``base_seed`` XOR a stable 64-bit hash of ``keys``.

    The hash is BLAKE2b over the keys' ``repr``, so it does not depend on
    Python's randomised ``hash`` or on the scheduling of parallel tasks.
    """
    digest = hashlib.blake2b(repr(keys).encode("utf-8"), digest_size=8).digest()
    return (int(base_seed) & 0xFFFFFFFFFFFFFFFF) ^ int.from_bytes(digest, "little")


def sample_spiked(model: SpikedModel, n: int, seed=None) -> SampleMatrix:
    """Rows ``g + sqrt(theta) * xi * u`` with ``g ~ N(0, I)``, ``xi ~ N(0, 1)``."""
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, model.d))
    xi = rng.standard_normal(n)
    return SampleMatrix(g + np.sqrt(model.theta) * np.outer(xi, model.spike.u))


def sample_null(d: int, n: int, seed=None) -> SampleMatrix:
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return SampleMatrix(rng.standard_normal((n, d)))


def column_scale(x: SampleMatrix) -> np.ndarray:
    """Root mean square of each column (standard deviation about a zero mean)."""
    return np.sqrt(np.mean(x.data**2, axis=0))


def rescale_columns(x: SampleMatrix, scales="unit_variance") -> SampleMatrix:
    """Multiply column ``j`` by ``scales[j]``.

    ``scales="unit_variance"`` divides each column by its root mean square,
    which turns the empirical covariance into a correlation matrix.
    """
    if isinstance(scales, str):
        if scales != "unit_variance":
            raise ParameterError(f"unknown rescaling {scales!r}")
        rms = column_scale(x)
        if np.any(rms == 0.0):
            raise DegenerateInputError("cannot rescale a zero-variance column to unit variance")
        return SampleMatrix(x.data / rms)
    scales = np.asarray(scales, dtype=float)
    if scales.shape != (x.d,):
        raise ParameterError(f"expected {x.d} scales, got shape {scales.shape}")
    if np.any(~np.isfinite(scales)) or np.any(scales <= 0):
        raise ParameterError("scales must be finite and strictly positive")
    return SampleMatrix(x.data * scales)


def empirical_covariance(x: SampleMatrix) -> np.ndarray:
    data = x.data
    cov = data.T @ data / x.n
    return (cov + cov.T) / 2.0


def save_csv(x: SampleMatrix, path) -> None:
    """Write one sample per line, comma separated, no header.

    ``repr``-style float formatting round-trips bit-exactly through :func:`load_csv`.
    """
    lines = [",".join(repr(float(v)) for v in row) for row in x.data]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_csv(path) -> SampleMatrix:
    data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return SampleMatrix(data)
