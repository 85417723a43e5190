"""Sparse PCA in the single spiked covariance model, driven by sparse linear regression."""

from .detect import (
    QReport,
    adaptive_sparsity,
    hypothesis_test,
    q_report,
    q_statistic,
    q_threshold,
    q_values,
    recover_topk,
    support_recovery,
)
from .model import SpikedModel, Spike, lmmse_oracle, make_spike, population_covariance
from .sampler import SampleMatrix, empirical_covariance, rescale_columns, sample_null, sample_spiked
from .slr import L0Exact, LassoTopK, OMP, RegressionInstance, SparseCoefficients, make_solver

__version__ = "0.1.0"

__all__ = [
    "L0Exact",
    "LassoTopK",
    "OMP",
    "QReport",
    "RegressionInstance",
    "SampleMatrix",
    "SparseCoefficients",
    "Spike",
    "SpikedModel",
    "adaptive_sparsity",
    "empirical_covariance",
    "hypothesis_test",
    "lmmse_oracle",
    "make_solver",
    "make_spike",
    "population_covariance",
    "q_report",
    "q_statistic",
    "q_threshold",
    "q_values",
    "recover_topk",
    "rescale_columns",
    "sample_null",
    "sample_spiked",
    "support_recovery",
]
