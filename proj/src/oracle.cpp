#include "dcv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcv {

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

void CompensatedVecSum::add(const Vec& x, double weight) {
    for (std::size_t i = 0; i < parts_.size(); ++i) parts_[i].add(weight * x[static_cast<Eigen::Index>(i)]);
}

Vec CompensatedVecSum::value() const {
    Vec out(static_cast<Eigen::Index>(parts_.size()));
    for (std::size_t i = 0; i < parts_.size(); ++i) out[static_cast<Eigen::Index>(i)] = parts_[i].value();
    return out;
}

ExactMoments exact_moments(const LogitVector& eta, const Objective& objective) {
    const auto d = static_cast<int>(eta.size());
    if (d > kMaxExactDim)
        throw std::invalid_argument("exact_moments: D = " + std::to_string(d) + " is too large to enumerate");
    if (objective.dim() != eta.size()) throw std::invalid_argument("exact_moments: dimension mismatch");
    const Vec mu = eta.mean();
    const std::uint64_t n = std::uint64_t{1} << d;

    ExactMoments m;
    m.per_outcome.reserve(n);
    CompensatedSum ef;
    CompensatedVecSum grad(eta.size());
    for (std::uint64_t i = 0; i < n; ++i) {
        Outcome o;
        o.x = BinarySample::from_code(i ^ (i >> 1), d);
        o.prob = std::exp(log_prob(eta, o.x));
        o.eval = objective.eval(o.x);
        o.score = o.x.to_real() - mu;
        ef.add(o.prob * o.eval.value);
        grad.add(o.score, o.prob * o.eval.value);
        m.per_outcome.push_back(std::move(o));
    }
    m.ef = ef.value();
    m.exact_grad = grad.value();
    return m;
}

namespace {

void fill_column(SampleBatch& b, int col, const BinarySample& x, const ObjectiveEval& ev, const Vec& score) {
    b.xs[static_cast<std::size_t>(col)] = x;
    b.fvals[col] = ev.value;
    b.input_grads.col(col) = ev.input_grad;
    b.scores.col(col) = score;
}

SampleBatch empty_batch(const LogitVector& eta, int k) {
    const MeanCov mc = mean_and_covdiag(eta);
    SampleBatch b;
    b.xs.resize(static_cast<std::size_t>(k));
    b.fvals = Vec::Zero(k);
    b.input_grads = Mat::Zero(eta.size(), k);
    b.scores = Mat::Zero(eta.size(), k);
    b.mu = mc.mu;
    b.covdiag = mc.covdiag;
    return b;
}

const Outcome& find_outcome(const ExactMoments& m, const BinarySample& x) {
    // per_outcome is in Gray-code order: outcome i has code i ^ (i >> 1).
    std::uint64_t code = 0;
    for (Eigen::Index j = 0; j < x.size(); ++j) code |= std::uint64_t{x[j]} << j;
    std::uint64_t idx = code;
    for (std::uint64_t shift = code >> 1; shift; shift >>= 1) idx ^= shift;
    return m.per_outcome[idx];
}

}  // namespace

void enumerate_tuples(const ExactMoments& moments, const LogitVector& eta, int k, bool antithetic,
                      const TupleVisitor& visit) {
    if (k < 1) throw std::invalid_argument("enumerate_tuples: K must be >= 1");
    const auto d = static_cast<int>(eta.size());
    if (moments.per_outcome.size() != (std::uint64_t{1} << d))
        throw std::invalid_argument("enumerate_tuples: moments do not match the logits");
    SampleBatch batch = empty_batch(eta, k);

    if (antithetic) {
        if (k != 2) throw std::invalid_argument("enumerate_tuples: antithetic enumeration needs K == 2");
        if (d > kMaxAntitheticDim)
            throw std::invalid_argument("enumerate_tuples: antithetic enumeration limited to D <= 8");
        const Vec& mu = batch.mu;
        std::uint64_t cells = 1;
        for (int i = 0; i < d; ++i) cells *= 3;
        Vec u(d);
        for (std::uint64_t c = 0; c < cells; ++c) {
            double prob = 1.0;
            std::uint64_t rest = c;
            for (int i = 0; i < d; ++i) {
                const int region = static_cast<int>(rest % 3);
                rest /= 3;
                const double lo = std::min(mu[i], 1.0 - mu[i]), hi = std::max(mu[i], 1.0 - mu[i]);
                const double a = region == 0 ? 0.0 : (region == 1 ? lo : hi);
                const double b = region == 0 ? lo : (region == 1 ? hi : 1.0);
                prob *= b - a;
                u[i] = 0.5 * (a + b);
            }
            if (prob == 0.0) continue;
            auto [x, xt] = antithetic_from_uniforms(mu, u);
            const Outcome& o1 = find_outcome(moments, x);
            const Outcome& o2 = find_outcome(moments, xt);
            fill_column(batch, 0, o1.x, o1.eval, o1.score);
            fill_column(batch, 1, o2.x, o2.eval, o2.score);
            visit(prob, batch);
        }
        return;
    }

    const std::uint64_t n = moments.per_outcome.size();
    std::uint64_t total = 1;
    for (int j = 0; j < k; ++j) {
        if (total > kMaxTuples / n)
            throw std::invalid_argument("enumerate_tuples: (2^D)^K exceeds the enumeration limit");
        total *= n;
    }
    std::vector<std::uint64_t> idx(static_cast<std::size_t>(k), 0);
    for (std::uint64_t t = 0; t < total; ++t) {
        std::uint64_t rest = t;
        double prob = 1.0;
        for (int j = 0; j < k; ++j) {
            const std::uint64_t i = rest % n;
            rest /= n;
            const Outcome& o = moments.per_outcome[i];
            prob *= o.prob;
            if (idx[static_cast<std::size_t>(j)] != i || t == 0) fill_column(batch, j, o.x, o.eval, o.score);
            idx[static_cast<std::size_t>(j)] = i;
        }
        visit(prob, batch);
    }
}

EstimatorFn bind_estimator(EstimatorKind kind, const LogitVector& eta, const Objective& objective,
                           const ExactMoments& moments, double alpha, double baseline) {
    EstimatorContext ctx;
    ctx.baseline = baseline;
    ctx.exact_ef = moments.ef;
    ctx.eta = eta;
    if (needs_mean_eval(kind)) ctx.f_mu = eval_at_mean(objective, eta.mean());
    return [kind, ctx = std::move(ctx), alpha](const SampleBatch& b) { return estimate(kind, b, ctx).at(alpha); };
}

Vec estimator_expectation_exact(const EstimatorFn& estimator, const ExactMoments& moments, const LogitVector& eta,
                                int k, bool antithetic) {
    CompensatedVecSum acc(eta.size());
    enumerate_tuples(moments, eta, k, antithetic,
                     [&](double p, const SampleBatch& b) { acc.add(estimator(b), p); });
    return acc.value();
}

double estimator_variance_exact(const EstimatorFn& estimator, const ExactMoments& moments, const LogitVector& eta,
                                int k, bool antithetic) {
    const Vec mean = estimator_expectation_exact(estimator, moments, eta, k, antithetic);
    CompensatedSum acc;
    enumerate_tuples(moments, eta, k, antithetic,
                     [&](double p, const SampleBatch& b) { acc.add(p * (estimator(b) - mean).squaredNorm()); });
    return acc.value();
}

Vec estimator_expectation_exact(EstimatorKind kind, const LogitVector& eta, const Objective& objective, int k,
                                double alpha) {
    check_sample_count(kind, k);
    const ExactMoments m = exact_moments(eta, objective);
    return estimator_expectation_exact(bind_estimator(kind, eta, objective, m, alpha), m, eta, k,
                                       uses_antithetic(kind));
}

double estimator_variance_exact(EstimatorKind kind, const LogitVector& eta, const Objective& objective, int k,
                                double alpha) {
    check_sample_count(kind, k);
    const ExactMoments m = exact_moments(eta, objective);
    return estimator_variance_exact(bind_estimator(kind, eta, objective, m, alpha), m, eta, k,
                                    uses_antithetic(kind));
}

RlooDecomposition rloo_decomposition_exact(const LogitVector& eta, const Objective& objective, int k) {
    if (k < 2) throw std::invalid_argument("rloo_decomposition_exact: needs K >= 2");
    const ExactMoments m = exact_moments(eta, objective);
    const Eigen::Index d = eta.size();
    // E[R*] = E[RLOO] = exact gradient, E[E] = 0.
    const Vec& g = m.exact_grad;
    CompensatedSum v_rloo, v_rstar, v_res;
    std::vector<CompensatedSum> cov(static_cast<std::size_t>(d * d));
    enumerate_tuples(m, eta, k, false, [&](double p, const SampleBatch& b) {
        const Vec loo = rloo(b).u;
        const Vec star = r_star(b, m.ef).u;
        const Vec res = loo - star;
        v_rloo.add(p * (loo - g).squaredNorm());
        v_rstar.add(p * (star - g).squaredNorm());
        v_res.add(p * res.squaredNorm());
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                cov[static_cast<std::size_t>(i * d + j)].add(p * (star[i] - g[i]) * res[j]);
    });
    RlooDecomposition out;
    out.var_rloo = v_rloo.value();
    out.var_rstar = v_rstar.value();
    out.var_residual = v_res.value();
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const double c = cov[static_cast<std::size_t>(i * d + j)].value();
            if (i == j) out.cov_trace += c;
            out.cov_max_abs = std::max(out.cov_max_abs, std::abs(c));
        }
    return out;
}

EmpiricalVariance empirical_variance(EstimatorKind kind, const LogitVector& eta, const Objective& objective, int k,
                                     int replicates, Rng& rng, double alpha) {
    if (replicates < 2) throw std::invalid_argument("empirical_variance: needs at least 2 replicates");
    check_sample_count(kind, k);
    EstimatorContext ctx;
    ctx.eta = eta;
    if (needs_mean_eval(kind)) ctx.f_mu = eval_at_mean(objective, eta.mean());
    if (needs_exact_mean(kind)) {
        ctx.exact_ef = objective.closed_form_mean(eta.mean());
        if (!ctx.exact_ef) ctx.exact_ef = exact_moments(eta, objective).ef;
    }
    const bool anti = uses_antithetic(kind);
    // Welford per coordinate.
    Vec mean = Vec::Zero(eta.size());
    Vec m2 = Vec::Zero(eta.size());
    for (int r = 0; r < replicates; ++r) {
        std::vector<BinarySample> xs;
        if (anti) {
            for (int p = 0; p < k / 2; ++p) {
                auto pair = sample_batch(eta, rng, 2, true);
                xs.push_back(std::move(pair[0]));
                xs.push_back(std::move(pair[1]));
            }
        } else {
            xs = sample_batch(eta, rng, k);
        }
        const SampleBatch b = evaluate_batch(eta, std::move(xs), objective);
        const Vec g = estimate(kind, b, ctx).at(alpha);
        const Vec delta = g - mean;
        mean += delta / static_cast<double>(r + 1);
        m2 += delta.cwiseProduct(g - mean);
    }
    return {m2.sum() / static_cast<double>(replicates - 1), mean};
}

}  // namespace dcv
