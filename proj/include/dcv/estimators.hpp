#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dcv/bernoulli.hpp"
#include "dcv/objectives.hpp"

namespace dcv {

using Mat = Eigen::MatrixXd;

// K samples with everything the estimators need. Column k of `input_grads`
// and `scores` belongs to xs[k]. For the logit parameterization the score
// s(x) = x - mu is also the centered sample used by the Taylor control
// variates, and E[s(x)(x - mu)^T] = diag(covdiag).
struct SampleBatch {
    std::vector<BinarySample> xs;
    Vec fvals;
    Mat input_grads;
    Mat scores;
    Vec mu;
    Vec covdiag;

    int k() const { return static_cast<int>(xs.size()); }
    Eigen::Index dim() const { return mu.size(); }
};

// Builds a batch from precomputed evaluations; evals[k] belongs to xs[k].
SampleBatch assemble_batch(const LogitVector& eta, std::vector<BinarySample> xs,
                           const std::vector<ObjectiveEval>& evals);

// Evaluates the objective once per sample and assembles the batch.
SampleBatch evaluate_batch(const LogitVector& eta, std::vector<BinarySample> xs, const Objective& objective);

// g(alpha) = u + alpha v. v is exactly zero for estimators without alpha.
struct GradEstimate {
    Vec u;
    Vec v;

    Vec at(double alpha) const { return u + alpha * v; }
};

GradEstimate reinforce(const SampleBatch& batch, double baseline);
GradEstimate rloo(const SampleBatch& batch);
// Pairwise leave-one-out form; O(K^2 D). Kept for cross-checking rloo().
Vec rloo_pairwise(const SampleBatch& batch);
GradEstimate r_star(const SampleBatch& batch, double exact_ef);
GradEstimate double_cv_meanfield(const SampleBatch& batch, const ObjectiveEval& f_mu);
GradEstimate double_cv_loo(const SampleBatch& batch);
// K = 2 closed form Delta(x1,x2,alpha)(s1 - s2)/2 - alpha M (grad f1 + grad f2)/2.
Vec double_cv_k2_closed_form(const SampleBatch& batch, double alpha);

enum class HalfMode { bxk_only, bxj_only };
GradEstimate half_cv(const SampleBatch& batch, HalfMode mode);

GradEstimate muprop(const SampleBatch& batch, const ObjectiveEval& f_mu);

// DisARM for one antithetic pair (x, x~).
GradEstimate disarm_k2(double f_x, double f_xt, const BinarySample& x, const BinarySample& xt,
                       const LogitVector& eta);
// Averages DisARM over consecutive pairs (0,1), (2,3), ... of an antithetic batch.
GradEstimate disarm(const SampleBatch& batch, const LogitVector& eta);

enum class EstimatorKind { reinforce, rloo, rstar, double_cv, double_cv_mf, half_bxk, half_bxj, muprop, disarm };

std::string_view estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);
const std::vector<EstimatorKind>& all_estimators();

int min_samples(EstimatorKind kind);
bool needs_mean_eval(EstimatorKind kind);
bool needs_exact_mean(EstimatorKind kind);
bool uses_antithetic(EstimatorKind kind);
bool has_alpha(EstimatorKind kind);
// Throws std::invalid_argument if K is incompatible with the estimator.
void check_sample_count(EstimatorKind kind, int k);

// Side inputs some estimators need.
struct EstimatorContext {
    double baseline = 0.0;                  // reinforce
    std::optional<double> exact_ef;         // rstar
    std::optional<ObjectiveEval> f_mu;      // double-cv-mf, muprop
    std::optional<LogitVector> eta;         // disarm
};

GradEstimate estimate(EstimatorKind kind, const SampleBatch& batch, const EstimatorContext& ctx);

}  // namespace dcv
