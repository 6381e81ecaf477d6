#pragma once

#include <vector>

#include "dcv/adam.hpp"
#include "dcv/estimators.hpp"

namespace dcv {

// Scalar regression coefficient shared by all logit coordinates, with the
// Adam moments used to adapt it. Starts at zero.
struct AlphaState {
    double alpha = 0.0;
    double m = 0.0;
    double v = 0.0;
    std::int64_t step = 0;
};

// d/d alpha ||u + alpha v||^2 = 2 v.(u + alpha v)
double alpha_grad(const GradEstimate& estimate, double alpha);

// Minimizer of ||u + alpha v||^2 for a single estimate; 0 if v == 0.
double alpha_minimizer(const GradEstimate& estimate);

// One Adam descent step on alpha.
AlphaState adapt(const AlphaState& state, double grad, double lr, const AdamConfig& cfg = {});

// Variance-optimal alpha for the K = 2 estimator written as (g - alpha h)/2:
// E[g^T h] / E[h^T h] from matched samples. Returns 0 when E[h^T h] == 0.
// `weights`, if given, are probabilities for each sample (exact moments);
// otherwise samples are averaged uniformly.
double optimal_alpha_k2(const std::vector<Vec>& g_samples, const std::vector<Vec>& h_samples,
                        const std::vector<double>& weights = {});

// The (g, h) pair for a K = 2 batch:
//   g = (f1 - f2)(s1 - s2)
//   h = M (grad f1 + grad f2) - [grad f2^T (x1-mu) - grad f1^T (x2-mu)] (s1 - s2)
struct K2Pair {
    Vec g;
    Vec h;
};
K2Pair k2_regression_pair(const SampleBatch& batch);

}  // namespace dcv
