"""Double control variate score-function gradient estimators for binary latents."""

from ._core import (
    LinearObjective,
    Objective,
    ToyObjective,
    alpha_grad,
    empirical_variance,
    entropy_grad,
    estimate,
    estimator_expectation_exact,
    estimator_names,
    estimator_variance_exact,
    exact_moments,
    load_mnist_idx,
    log_prob,
    mean_and_covdiag,
    optimal_alpha_k2,
    run_oracle_gates,
    run_toy,
    run_vae_synthetic,
    sample_batch,
    score,
    toy_eval,
)

__all__ = [
    "LinearObjective",
    "Objective",
    "ToyObjective",
    "alpha_grad",
    "empirical_variance",
    "entropy_grad",
    "estimate",
    "estimator_expectation_exact",
    "estimator_names",
    "estimator_variance_exact",
    "exact_moments",
    "load_mnist_idx",
    "log_prob",
    "mean_and_covdiag",
    "optimal_alpha_k2",
    "run_oracle_gates",
    "run_toy",
    "run_vae_synthetic",
    "sample_batch",
    "score",
    "toy_eval",
]
