"""Seeded, trial-averaged experiment runs that emit CSV rows.

Every ``(k, trial)`` pair is an independent task with seeds derived from the
base seed, so results do not depend on how tasks are scheduled.  Rows are
sorted by ``(method, k, trial, metric)`` before being written.
"""

from __future__ import annotations

import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..baselines import covariance_thresholding, diagonal_thresholding, dt_statistic, mdp_statistic, tpower_recovery
from ..detect import q_values, recover_topk
from ..errors import ParameterError
from ..model import SpikedModel
from ..sampler import derive_seed, empirical_covariance, rescale_columns, sample_null, sample_spiked
from ..slr import make_solver
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CSV_HEADER = "method,k,theta,trial,metric,value"
SUMMARY_TRIAL = "all"


@dataclass(frozen=True)
class TrialRecord:
    method: str
    k: int
    theta: float
    trial: int | str
    metric: str
    value: float

    def sort_key(self):
        # trial rows (int trial) before the summary row of the same (method, k)
        is_summary = isinstance(self.trial, str)
        return (self.method, self.k, is_summary, -1 if is_summary else self.trial, self.metric)

    def to_csv(self) -> str:
        return f"{self.method},{self.k},{float(self.theta)!r},{self.trial},{self.metric},{float(self.value)!r}"


def best_cutoff_error(h0, h1) -> float:
    """``min_c (P_H0(stat > c) + P_H1(stat <= c)) / 2`` over all empirical cutoffs."""
    h0 = np.sort(np.asarray(h0, dtype=float))
    h1 = np.sort(np.asarray(h1, dtype=float))
    if h0.size == 0 or h1.size == 0:
        raise ParameterError("both samples must be non-empty")
    cuts = np.concatenate([[-np.inf], h0, h1])
    false_alarm = 1.0 - np.searchsorted(h0, cuts, side="right") / h0.size
    miss = np.searchsorted(h1, cuts, side="right") / h1.size
    return float(np.min(false_alarm + miss) / 2.0)


def _trial_data(config: ExperimentConfig, k: int, trial: int):
    base = config.base_seed
    model = SpikedModel.build(config.d, k, config.theta, config.spike,
                              seed=derive_seed(base, config.kind, "spike", k, trial))
    return model


def _maybe_rescale(config, x):
    return rescale_columns(x, "unit_variance") if config.rescale else x


def _recovery_trial(config: ExperimentConfig, k: int, trial: int) -> list[TrialRecord]:
    model = _trial_data(config, k, trial)
    x = sample_spiked(model, config.n, seed=derive_seed(config.base_seed, config.kind, "data", k, trial))
    x = _maybe_rescale(config, x)
    truth = set(model.spike.support)
    solver = make_solver(config.solver, **config.solver_params())
    rows = []
    for method in config.methods:
        start = time.perf_counter()
        try:
            if method == "dt":
                selected = diagonal_thresholding(x, k).selected
            elif method == "ct":
                selected = covariance_thresholding(x, k, config.tau, split=config.ct_split).selected
            elif method == "tpower":
                selected = tpower_recovery(x, k, config.tpower_epsilon).selected
            elif method == "qslr":
                selected = recover_topk(x, k, solver)[0]
            else:  # pragma: no cover - rejected by config validation
                raise ParameterError(f"method {method!r} cannot recover supports")
        except Exception:
            log.exception("method %s failed on k=%d trial=%d", method, k, trial)
            rows.append(TrialRecord(method, k, config.theta, trial, "error", 1.0))
            continue
        overlap = len(truth & set(selected)) / k
        rows.append(TrialRecord(method, k, config.theta, trial, "overlap_fraction", overlap))
        if config.timing:
            rows.append(TrialRecord(method, k, config.theta, trial, "wall_ms",
                                    1000.0 * (time.perf_counter() - start)))
    return rows


def _testing_statistic(method: str, config: ExperimentConfig, x, k: int, solver) -> float:
    if method == "dt":
        return dt_statistic(x)
    if method == "mdp":
        return mdp_statistic(empirical_covariance(x), k, n=x.n)
    if method == "qslr":
        return float(np.max(q_values(x, k, solver)))
    raise ParameterError(f"method {method!r} has no testing statistic")  # pragma: no cover


def _testing_trial(config: ExperimentConfig, k: int, trial: int) -> list[TrialRecord]:
    model = _trial_data(config, k, trial)
    base = config.base_seed
    h0 = _maybe_rescale(config, sample_null(config.d, config.n, seed=derive_seed(base, config.kind, "h0", k, trial)))
    h1 = _maybe_rescale(config, sample_spiked(model, config.n, seed=derive_seed(base, config.kind, "h1", k, trial)))
    solver = make_solver(config.solver, **config.solver_params())
    rows = []
    for method in config.methods:
        start = time.perf_counter()
        try:
            s0 = _testing_statistic(method, config, h0, k, solver)
            s1 = _testing_statistic(method, config, h1, k, solver)
        except Exception:
            log.exception("method %s failed on k=%d trial=%d", method, k, trial)
            rows.append(TrialRecord(method, k, config.theta, trial, "error", 1.0))
            continue
        rows.append(TrialRecord(method, k, config.theta, trial, "statistic_h0", s0))
        rows.append(TrialRecord(method, k, config.theta, trial, "statistic_h1", s1))
        if config.timing:
            rows.append(TrialRecord(method, k, config.theta, trial, "wall_ms",
                                    1000.0 * (time.perf_counter() - start)))
    return rows


def _run_trials(config: ExperimentConfig, trial_fn) -> list[TrialRecord]:
    tasks = [(k, t) for k in config.k_values for t in range(config.trials)]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(lambda kt: trial_fn(config, *kt), tasks))
    else:
        chunks = [trial_fn(config, k, t) for k, t in tasks]
    return sorted((row for chunk in chunks for row in chunk), key=TrialRecord.sort_key)


def _grouped(rows, metric):
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        if r.metric == metric:
            groups.setdefault((r.method, r.k), []).append(r.value)
    return groups


def summarize_recovery(rows) -> dict[tuple[str, int], tuple[float, float, int]]:
    """``(method, k) -> (mean overlap, standard error, trial count)``."""
    out = {}
    for key, vals in _grouped(rows, "overlap_fraction").items():
        a = np.asarray(vals)
        se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
        out[key] = (float(a.mean()), se, int(a.size))
    return out


def summarize_testing(rows) -> dict[tuple[str, int], float]:
    """``(method, k) -> best single-cutoff error``."""
    h0 = _grouped(rows, "statistic_h0")
    h1 = _grouped(rows, "statistic_h1")
    return {key: best_cutoff_error(h0[key], h1[key]) for key in h0 if key in h1}


def run_recovery_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """Support recovery sweep: one overlap row per (method, k, trial) plus a mean row per (method, k)."""
    if config.kind != "recovery":
        raise ParameterError("run_recovery_experiment needs kind='recovery'")
    rows = _run_trials(config, _recovery_trial)
    summary = [
        TrialRecord(m, k, config.theta, SUMMARY_TRIAL, "overlap_fraction_mean", mean)
        for (m, k), (mean, _, _) in summarize_recovery(rows).items()
    ]
    return rows + sorted(summary, key=TrialRecord.sort_key)


def run_testing_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """Paired H0/H1 statistics per (method, k, trial) plus a best-cutoff error row per (method, k)."""
    if config.kind != "testing":
        raise ParameterError("run_testing_experiment needs kind='testing'")
    rows = _run_trials(config, _testing_trial)
    summary = [
        TrialRecord(m, k, config.theta, SUMMARY_TRIAL, "best_cutoff_error", err)
        for (m, k), err in summarize_testing(rows).items()
    ]
    return rows + sorted(summary, key=TrialRecord.sort_key)


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    if config.kind == "recovery":
        return run_recovery_experiment(config)
    return run_testing_experiment(config)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        buf.write(r.to_csv() + "\n")
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_bytes(rows_to_csv(rows).encode("utf-8"))


def read_csv(path) -> list[TrialRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParameterError(f"{path}: missing or unexpected CSV header")
    rows = []
    for line in lines[1:]:
        method, k, theta, trial, metric, value = line.split(",")
        rows.append(TrialRecord(method, int(k), float(theta),
                                trial if trial == SUMMARY_TRIAL else int(trial), metric, float(value)))
    return rows
