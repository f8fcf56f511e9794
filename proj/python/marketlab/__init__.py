"""Two-sided marketplace experiment engine: mean-field model, finite-N simulator, estimators."""

from ._marketlab import (
    MarketError,
    beta_weight,
    est_cluster,
    est_cr,
    est_lr,
    est_tsri,
    est_tsrn,
    gte_true,
    homogeneous_limits,
    meanfield_estimates,
    preset_names,
    preset_text,
    run_cli,
    simulate,
    steady_state,
    tsr_schedule,
    two_listing_forms,
)

__all__ = [
    "MarketError",
    "beta_weight",
    "est_cluster",
    "est_cr",
    "est_lr",
    "est_tsri",
    "est_tsrn",
    "gte_true",
    "homogeneous_limits",
    "meanfield_estimates",
    "preset_names",
    "preset_text",
    "run_cli",
    "simulate",
    "steady_state",
    "tsr_schedule",
    "two_listing_forms",
]
