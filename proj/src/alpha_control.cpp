#include "dcv/alpha_control.hpp"

#include <cmath>
#include <stdexcept>

namespace dcv {

double alpha_grad(const GradEstimate& estimate, double alpha) {
    return 2.0 * estimate.v.dot(estimate.u + alpha * estimate.v);
}

double alpha_minimizer(const GradEstimate& estimate) {
    const double vv = estimate.v.squaredNorm();
    if (vv == 0.0) return 0.0;
    return -estimate.u.dot(estimate.v) / vv;
}

AlphaState adapt(const AlphaState& state, double grad, double lr, const AdamConfig& cfg) {
    if (!(lr > 0.0)) throw std::invalid_argument("adapt: learning rate must be positive");
    AlphaState next = state;
    ++next.step;
    next.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    next.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad;
    const double mhat = next.m / (1.0 - std::pow(cfg.beta1, static_cast<double>(next.step)));
    const double vhat = next.v / (1.0 - std::pow(cfg.beta2, static_cast<double>(next.step)));
    next.alpha -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    return next;
}

double optimal_alpha_k2(const std::vector<Vec>& g_samples, const std::vector<Vec>& h_samples,
                        const std::vector<double>& weights) {
    if (g_samples.size() != h_samples.size() || g_samples.empty())
        throw std::invalid_argument("optimal_alpha_k2: sample lists must be non-empty and matched");
    if (!weights.empty() && weights.size() != g_samples.size())
        throw std::invalid_argument("optimal_alpha_k2: weight list size mismatch");
    const double uniform = 1.0 / static_cast<double>(g_samples.size());
    double gh = 0.0, hh = 0.0;
    for (std::size_t i = 0; i < g_samples.size(); ++i) {
        const double w = weights.empty() ? uniform : weights[i];
        gh += w * g_samples[i].dot(h_samples[i]);
        hh += w * h_samples[i].squaredNorm();
    }
    if (hh == 0.0) return 0.0;
    return gh / hh;
}

K2Pair k2_regression_pair(const SampleBatch& batch) {
    if (batch.k() != 2) throw std::invalid_argument("k2_regression_pair: needs K == 2");
    const auto g1 = batch.input_grads.col(0), g2 = batch.input_grads.col(1);
    const auto s1 = batch.scores.col(0), s2 = batch.scores.col(1);
    const Vec ds = s1 - s2;
    K2Pair p;
    p.g = (batch.fvals[0] - batch.fvals[1]) * ds;
    p.h = batch.covdiag.cwiseProduct(g1 + g2) - (g2.dot(s1) - g1.dot(s2)) * ds;
    return p;
}

}  // namespace dcv
