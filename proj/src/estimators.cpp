#include "dcv/estimators.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcv {

namespace {

void require_loo(const SampleBatch& batch, const char* who) {
    if (batch.k() < 2) throw std::invalid_argument(std::string(who) + ": needs K >= 2 samples");
}

// (1/(K-1)) sum_k (c_k - mean(c)) s_k, the covariance form of the
// leave-one-out average applied to values c.
Vec loo_term(const Vec& values, const Mat& scores) {
    const double k = static_cast<double>(values.size());
    const Vec centered = values.array() - values.mean();
    return scores * centered / (k - 1.0);
}

Vec zeros_like(const SampleBatch& batch) { return Vec::Zero(batch.dim()); }

// b_k = (mean_{j != k} grad f(x_j))^T (x_k - mu)
Vec loo_gradient_cv(const SampleBatch& batch) {
    const double k = static_cast<double>(batch.k());
    const Vec total = batch.input_grads.rowwise().sum();
    Vec b(batch.k());
    for (int j = 0; j < batch.k(); ++j)
        b[j] = (total - batch.input_grads.col(j)).dot(batch.scores.col(j)) / (k - 1.0);
    return b;
}

}  // namespace

SampleBatch assemble_batch(const LogitVector& eta, std::vector<BinarySample> xs,
                           const std::vector<ObjectiveEval>& evals) {
    if (xs.empty() || xs.size() != evals.size())
        throw std::invalid_argument("assemble_batch: need one evaluation per sample");
    const MeanCov mc = mean_and_covdiag(eta);
    const Eigen::Index d = eta.size();
    const auto k = static_cast<Eigen::Index>(xs.size());
    SampleBatch b;
    b.fvals.resize(k);
    b.input_grads.resize(d, k);
    b.scores.resize(d, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& x = xs[static_cast<std::size_t>(j)];
        const auto& ev = evals[static_cast<std::size_t>(j)];
        if (x.size() != d || ev.input_grad.size() != d)
            throw std::invalid_argument("assemble_batch: dimension mismatch");
        b.fvals[j] = ev.value;
        b.input_grads.col(j) = ev.input_grad;
        b.scores.col(j) = x.to_real() - mc.mu;
    }
    b.xs = std::move(xs);
    b.mu = mc.mu;
    b.covdiag = mc.covdiag;
    return b;
}

SampleBatch evaluate_batch(const LogitVector& eta, std::vector<BinarySample> xs, const Objective& objective) {
    std::vector<ObjectiveEval> evals;
    evals.reserve(xs.size());
    for (const auto& x : xs) evals.push_back(objective.eval(x));
    return assemble_batch(eta, std::move(xs), evals);
}

GradEstimate reinforce(const SampleBatch& batch, double baseline) {
    const Vec c = batch.fvals.array() - baseline;
    return {batch.scores * c / static_cast<double>(batch.k()), zeros_like(batch)};
}

GradEstimate rloo(const SampleBatch& batch) {
    require_loo(batch, "rloo");
    return {loo_term(batch.fvals, batch.scores), zeros_like(batch)};
}

Vec rloo_pairwise(const SampleBatch& batch) {
    require_loo(batch, "rloo_pairwise");
    const int k = batch.k();
    Vec g = zeros_like(batch);
    for (int i = 0; i < k; ++i) {
        double others = 0.0;
        for (int j = 0; j < k; ++j)
            if (j != i) others += batch.fvals[j];
        g += (batch.fvals[i] - others / (k - 1)) * batch.scores.col(i);
    }
    return g / static_cast<double>(k);
}

GradEstimate r_star(const SampleBatch& batch, double exact_ef) { return reinforce(batch, exact_ef); }

GradEstimate double_cv_meanfield(const SampleBatch& batch, const ObjectiveEval& f_mu) {
    require_loo(batch, "double_cv_meanfield");
    if (f_mu.input_grad.size() != batch.dim())
        throw std::invalid_argument("double_cv_meanfield: gradient at mu has wrong size");
    const Vec b = batch.scores.transpose() * f_mu.input_grad;
    Vec v = loo_term(b, batch.scores) - batch.covdiag.cwiseProduct(f_mu.input_grad);
    return {loo_term(batch.fvals, batch.scores), std::move(v)};
}

GradEstimate double_cv_loo(const SampleBatch& batch) {
    require_loo(batch, "double_cv_loo");
    const Vec b = loo_gradient_cv(batch);
    const Vec mean_grad = batch.input_grads.rowwise().mean();
    Vec v = loo_term(b, batch.scores) - batch.covdiag.cwiseProduct(mean_grad);
    return {loo_term(batch.fvals, batch.scores), std::move(v)};
}

Vec double_cv_k2_closed_form(const SampleBatch& batch, double alpha) {
    if (batch.k() != 2) throw std::invalid_argument("double_cv_k2_closed_form: needs K == 2");
    const auto g1 = batch.input_grads.col(0), g2 = batch.input_grads.col(1);
    const auto s1 = batch.scores.col(0), s2 = batch.scores.col(1);
    const double delta = batch.fvals[0] - batch.fvals[1] + alpha * (g2.dot(s1) - g1.dot(s2));
    return delta * (s1 - s2) / 2.0 - alpha * batch.covdiag.cwiseProduct(g1 + g2) / 2.0;
}

GradEstimate half_cv(const SampleBatch& batch, HalfMode mode) {
    require_loo(batch, "half_cv");
    const double k = static_cast<double>(batch.k());
    const Vec b = loo_gradient_cv(batch);
    Vec v;
    if (mode == HalfMode::bxk_only) {
        const Vec mean_grad = batch.input_grads.rowwise().mean();
        v = batch.scores * b / k - batch.covdiag.cwiseProduct(mean_grad);
    } else {
        // -(1/K) sum_k (mean_{j != k} b_j) s_k; no correction term.
        const Vec others = (b.sum() - b.array()) / (k - 1.0);
        v = -(batch.scores * others) / k;
    }
    return {loo_term(batch.fvals, batch.scores), std::move(v)};
}

GradEstimate muprop(const SampleBatch& batch, const ObjectiveEval& f_mu) {
    if (f_mu.input_grad.size() != batch.dim())
        throw std::invalid_argument("muprop: gradient at mu has wrong size");
    const Vec taylor = f_mu.value + (batch.scores.transpose() * f_mu.input_grad).array();
    const Vec resid = batch.fvals - taylor;
    Vec u = batch.scores * resid / static_cast<double>(batch.k()) + batch.covdiag.cwiseProduct(f_mu.input_grad);
    return {std::move(u), zeros_like(batch)};
}

GradEstimate disarm_k2(double f_x, double f_xt, const BinarySample& x, const BinarySample& xt,
                       const LogitVector& eta) {
    if (x.size() != eta.size() || xt.size() != eta.size())
        throw std::invalid_argument("disarm_k2: dimension mismatch");
    Vec g = Vec::Zero(eta.size());
    const double half_diff = 0.5 * (f_x - f_xt);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (x[i] == xt[i]) continue;
        const double sign = xt[i] ? -1.0 : 1.0;
        g[i] = half_diff * sign * sigmoid(std::abs(eta[i]));
    }
    return {std::move(g), Vec::Zero(eta.size())};
}

GradEstimate disarm(const SampleBatch& batch, const LogitVector& eta) {
    if (batch.k() < 2 || batch.k() % 2 != 0) throw std::invalid_argument("disarm: needs an even K >= 2");
    Vec g = Vec::Zero(batch.dim());
    const int pairs = batch.k() / 2;
    for (int p = 0; p < pairs; ++p) {
        const auto a = static_cast<std::size_t>(2 * p), c = a + 1;
        g += disarm_k2(batch.fvals[2 * p], batch.fvals[2 * p + 1], batch.xs[a], batch.xs[c], eta).u;
    }
    return {g / static_cast<double>(pairs), zeros_like(batch)};
}

namespace {
constexpr std::array<std::pair<EstimatorKind, std::string_view>, 9> kNames{{
    {EstimatorKind::reinforce, "reinforce"},
    {EstimatorKind::rloo, "rloo"},
    {EstimatorKind::rstar, "rstar"},
    {EstimatorKind::double_cv, "double-cv"},
    {EstimatorKind::double_cv_mf, "double-cv-mf"},
    {EstimatorKind::half_bxk, "half-bxk"},
    {EstimatorKind::half_bxj, "half-bxj"},
    {EstimatorKind::muprop, "muprop"},
    {EstimatorKind::disarm, "disarm"},
}};
}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
    for (const auto& [k, n] : kNames)
        if (k == kind) return n;
    return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

const std::vector<EstimatorKind>& all_estimators() {
    static const std::vector<EstimatorKind> kinds = [] {
        std::vector<EstimatorKind> v;
        for (const auto& [k, n] : kNames) v.push_back(k);
        return v;
    }();
    return kinds;
}

int min_samples(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::reinforce:
        case EstimatorKind::rstar:
        case EstimatorKind::muprop:
            return 1;
        default:
            return 2;
    }
}

bool needs_mean_eval(EstimatorKind kind) {
    return kind == EstimatorKind::double_cv_mf || kind == EstimatorKind::muprop;
}

bool needs_exact_mean(EstimatorKind kind) { return kind == EstimatorKind::rstar; }

bool uses_antithetic(EstimatorKind kind) { return kind == EstimatorKind::disarm; }

bool has_alpha(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::double_cv:
        case EstimatorKind::double_cv_mf:
        case EstimatorKind::half_bxk:
        case EstimatorKind::half_bxj:
            return true;
        default:
            return false;
    }
}

void check_sample_count(EstimatorKind kind, int k) {
    if (k < min_samples(kind))
        throw std::invalid_argument(std::string(estimator_name(kind)) + " needs K >= " +
                                    std::to_string(min_samples(kind)) + ", got " + std::to_string(k));
    if (uses_antithetic(kind) && k % 2 != 0)
        throw std::invalid_argument("disarm needs an even K (antithetic pairs), got " + std::to_string(k));
}

GradEstimate estimate(EstimatorKind kind, const SampleBatch& batch, const EstimatorContext& ctx) {
    check_sample_count(kind, batch.k());
    switch (kind) {
        case EstimatorKind::reinforce:
            return reinforce(batch, ctx.baseline);
        case EstimatorKind::rloo:
            return rloo(batch);
        case EstimatorKind::rstar:
            if (!ctx.exact_ef) throw std::invalid_argument("rstar needs the exact mean E f");
            return r_star(batch, *ctx.exact_ef);
        case EstimatorKind::double_cv:
            return double_cv_loo(batch);
        case EstimatorKind::double_cv_mf:
            if (!ctx.f_mu) throw std::invalid_argument("double-cv-mf needs f evaluated at mu");
            return double_cv_meanfield(batch, *ctx.f_mu);
        case EstimatorKind::half_bxk:
            return half_cv(batch, HalfMode::bxk_only);
        case EstimatorKind::half_bxj:
            return half_cv(batch, HalfMode::bxj_only);
        case EstimatorKind::muprop:
            if (!ctx.f_mu) throw std::invalid_argument("muprop needs f evaluated at mu");
            return muprop(batch, *ctx.f_mu);
        case EstimatorKind::disarm:
            if (!ctx.eta) throw std::invalid_argument("disarm needs the logits");
            return disarm(batch, *ctx.eta);
    }
    throw std::logic_error("estimate: unhandled estimator");
}

}  // namespace dcv
