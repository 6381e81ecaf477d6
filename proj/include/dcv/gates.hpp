#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcv {

struct GateResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Exhaustive unbiasedness of every estimator (D in {1,2,3}, K in {2,3},
// `draws` random (eta, alpha) per cell) on the toy and a small MLP ELBO.
GateResult gate_unbiasedness(std::uint64_t seed, int draws = 20, double rel_tol = 1e-10);

// Var(RLOO) >= Var(R*) and Cov(R*, E) = 0 on random instances.
GateResult gate_rloo_bound(std::uint64_t seed, int instances = 100, double cov_tol = 1e-10);

// Mean-field double CV at alpha = -1 is exact for every tuple of a linear f.
GateResult gate_zero_variance_linear(std::uint64_t seed, int instances = 20, double tol = 1e-12);

// double_cv_loo with K = 2 equals the closed form on random batches.
GateResult gate_k2_closed_form(std::uint64_t seed, int batches = 1000, double tol = 1e-12);

// The K = 2 optimal alpha minimizes the exhaustive variance over a grid.
GateResult gate_optimal_alpha(std::uint64_t seed, double grid_step = 0.01);

// MLP/ELBO gradients against central finite differences.
GateResult gate_gradient_check(std::uint64_t seed, int configs = 50, double step = 1e-5, double rel_tol = 1e-5);

std::vector<GateResult> run_oracle_gates(std::uint64_t seed);

}  // namespace dcv
