"""Conformal prediction intervals for time series forecasters."""

from ._tscp import (
    TscpError,
    UncertaintyThreshold,
    build_interval,
    conformity_scores,
    corrected_rank,
    coverage_rate,
    mase_msiw,
    read_results,
    rolling_calibrate,
    rolling_window_count,
    run_experiment,
    uncertainty_threshold,
)

__all__ = [
    "TscpError",
    "UncertaintyThreshold",
    "build_interval",
    "conformity_scores",
    "corrected_rank",
    "coverage_rate",
    "mase_msiw",
    "read_results",
    "rolling_calibrate",
    "rolling_window_count",
    "run_experiment",
    "uncertainty_threshold",
]
