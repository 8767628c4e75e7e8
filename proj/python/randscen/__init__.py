"""Randomized scenario design: binomial bounds, trial design and seeded runs."""

from ._randscen import (
    InfeasibleDesign,
    ResourceError,
    SolverError,
    ValidationFailure,
    binom_cdf,
    binom_cdf_inv_eps,
    binom_sf,
    coverage,
    design,
    incomplete_beta_reg,
    levelq_interval,
    n_trials,
    psi_campi,
    psi_campi_raw,
    reproduce,
    run,
    selection_prob_bounds,
    selection_prob_exact,
)

__all__ = [
    "InfeasibleDesign",
    "ResourceError",
    "SolverError",
    "ValidationFailure",
    "binom_cdf",
    "binom_cdf_inv_eps",
    "binom_sf",
    "coverage",
    "design",
    "incomplete_beta_reg",
    "levelq_interval",
    "n_trials",
    "psi_campi",
    "psi_campi_raw",
    "reproduce",
    "run",
    "selection_prob_bounds",
    "selection_prob_exact",
]
