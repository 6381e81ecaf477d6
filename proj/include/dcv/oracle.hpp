#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dcv/estimators.hpp"
#include "dcv/objectives.hpp"
#include "dcv/rng.hpp"

namespace dcv {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedVecSum {
public:
    explicit CompensatedVecSum(Eigen::Index n) : parts_(static_cast<std::size_t>(n)) {}
    void add(const Vec& x, double weight = 1.0);
    Vec value() const;

private:
    std::vector<CompensatedSum> parts_;
};

struct Outcome {
    BinarySample x;
    double prob = 0.0;
    ObjectiveEval eval;
    Vec score;
};

struct ExactMoments {
    double ef = 0.0;
    Vec exact_grad;                    // E_q[f(x) s(x)]
    std::vector<Outcome> per_outcome;  // Gray-code order
};

constexpr int kMaxExactDim = 20;
constexpr std::uint64_t kMaxTuples = std::uint64_t{1} << 24;
constexpr int kMaxAntitheticDim = 8;

// Sums over all 2^D outcomes. Throws std::invalid_argument if D > 20.
ExactMoments exact_moments(const LogitVector& eta, const Objective& objective);

using EstimatorFn = std::function<Vec(const SampleBatch&)>;

// Visits every sample tuple with its probability. Independent mode walks all
// (2^D)^K tuples; antithetic mode (K = 2) walks the 3^D cells of the shared
// uniforms, each coordinate split at min(mu, 1-mu) and max(mu, 1-mu).
using TupleVisitor = std::function<void(double prob, const SampleBatch& batch)>;
void enumerate_tuples(const ExactMoments& moments, const LogitVector& eta, int k, bool antithetic,
                      const TupleVisitor& visit);

// Estimator with alpha and side inputs bound from exact quantities
// (E f for rstar, f(mu) for mean-field estimators, the logits for disarm).
EstimatorFn bind_estimator(EstimatorKind kind, const LogitVector& eta, const Objective& objective,
                           const ExactMoments& moments, double alpha, double baseline = 0.0);

Vec estimator_expectation_exact(const EstimatorFn& estimator, const ExactMoments& moments,
                                const LogitVector& eta, int k, bool antithetic = false);
// Total variance Tr Cov(g) = sum_tuples p ||g - E g||^2.
double estimator_variance_exact(const EstimatorFn& estimator, const ExactMoments& moments,
                                const LogitVector& eta, int k, bool antithetic = false);

Vec estimator_expectation_exact(EstimatorKind kind, const LogitVector& eta, const Objective& objective, int k,
                                double alpha = 0.0);
double estimator_variance_exact(EstimatorKind kind, const LogitVector& eta, const Objective& objective, int k,
                                double alpha = 0.0);

// RLOO = R* + E, with E the residual of the leave-one-out baseline.
struct RlooDecomposition {
    double var_rloo = 0.0;
    double var_rstar = 0.0;
    double var_residual = 0.0;
    double cov_trace = 0.0;    // Tr Cov(R*, E)
    double cov_max_abs = 0.0;  // max_ij |Cov(R*, E)_ij|
};
RlooDecomposition rloo_decomposition_exact(const LogitVector& eta, const Objective& objective, int k);

// Monte Carlo total variance: sum over coordinates of the unbiased sample
// variance of g across `replicates` independent batches. Deterministic in rng.
struct EmpiricalVariance {
    double total_variance = 0.0;
    Vec mean;
};
EmpiricalVariance empirical_variance(EstimatorKind kind, const LogitVector& eta, const Objective& objective,
                                     int k, int replicates, Rng& rng, double alpha = 0.0);

}  // namespace dcv
