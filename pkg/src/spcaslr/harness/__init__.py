"""Experiment configuration, runners and CSV output."""

from .config import PRESETS, ExperimentConfig, build_config, read_config_file
from .runner import (
    CSV_HEADER,
    TrialRecord,
    best_cutoff_error,
    read_csv,
    rows_to_csv,
    run_experiment,
    run_recovery_experiment,
    run_testing_experiment,
    summarize_recovery,
    summarize_testing,
    write_csv,
)

__all__ = [
    "CSV_HEADER",
    "PRESETS",
    "ExperimentConfig",
    "TrialRecord",
    "best_cutoff_error",
    "build_config",
    "read_config_file",
    "read_csv",
    "rows_to_csv",
    "run_experiment",
    "run_recovery_experiment",
    "run_testing_experiment",
    "summarize_recovery",
    "summarize_testing",
    "write_csv",
]
