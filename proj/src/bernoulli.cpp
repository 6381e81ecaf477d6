#include "dcv/bernoulli.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcv {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double log_sigmoid(double z) { return -softplus(-z); }

LogitVector::LogitVector(Vec eta) : eta_(std::move(eta)) {
    if (eta_.size() < 1) throw std::invalid_argument("LogitVector: dimension must be >= 1");
    if (!eta_.allFinite()) throw std::invalid_argument("LogitVector: non-finite logit");
}

Vec LogitVector::mean() const { return eta_.unaryExpr([](double z) { return sigmoid(z); }); }

BinarySample::BinarySample(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
        if (b > 1) throw std::invalid_argument("BinarySample: entries must be 0 or 1");
}

BinarySample BinarySample::from_code(std::uint64_t code, int dim) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) bits[static_cast<std::size_t>(i)] = (code >> i) & 1u;
    return BinarySample(std::move(bits));
}

Vec BinarySample::to_real() const {
    Vec x(size());
    for (Eigen::Index i = 0; i < size(); ++i) x[i] = (*this)[i];
    return x;
}

MeanCov mean_and_covdiag(const LogitVector& eta) {
    MeanCov out;
    out.mu = eta.mean();
    out.covdiag = out.mu.array() * (1.0 - out.mu.array());
    return out;
}

BinarySample sample_from_uniforms(const Vec& mu, const Vec& u) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index i = 0; i < mu.size(); ++i) bits[static_cast<std::size_t>(i)] = u[i] < mu[i];
    return BinarySample(std::move(bits));
}

std::pair<BinarySample, BinarySample> antithetic_from_uniforms(const Vec& mu, const Vec& u) {
    Vec flipped = 1.0 - u.array();
    return {sample_from_uniforms(mu, u), sample_from_uniforms(mu, flipped)};
}

std::vector<BinarySample> sample_batch(const LogitVector& eta, Rng& rng, int count,
                                       bool antithetic) {
    if (count < 1) throw std::invalid_argument("sample_batch: K must be >= 1");
    if (antithetic && count != 2)
        throw std::invalid_argument("sample_batch: antithetic sampling requires K == 2, got " +
                                    std::to_string(count));
    const Vec mu = eta.mean();
    Vec u(eta.size());
    std::vector<BinarySample> out;
    out.reserve(static_cast<std::size_t>(count));
    if (antithetic) {
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
        auto [x, xt] = antithetic_from_uniforms(mu, u);
        out.push_back(std::move(x));
        out.push_back(std::move(xt));
        return out;
    }
    for (int k = 0; k < count; ++k) {
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
        out.push_back(sample_from_uniforms(mu, u));
    }
    return out;
}

double log_prob_relaxed(const LogitVector& eta, const Vec& x) {
    if (x.size() != eta.size()) throw std::invalid_argument("log_prob: dimension mismatch");
    double lp = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        lp += x[i] * log_sigmoid(eta[i]) + (1.0 - x[i]) * log_sigmoid(-eta[i]);
    return lp;
}

double log_prob(const LogitVector& eta, const BinarySample& x) {
    if (x.size() != eta.size()) throw std::invalid_argument("log_prob: dimension mismatch");
    double lp = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        lp += x[i] ? log_sigmoid(eta[i]) : log_sigmoid(-eta[i]);
    return lp;
}

Vec score(const LogitVector& eta, const BinarySample& x) {
    if (x.size() != eta.size()) throw std::invalid_argument("score: dimension mismatch");
    return x.to_real() - eta.mean();
}

Vec entropy_grad(const LogitVector& eta) {
    const Vec mu = eta.mean();
    return -(mu.array() * (1.0 - mu.array()) * eta.eta().array()).matrix();
}

double entropy(const LogitVector& eta) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double mu = sigmoid(eta[i]);
        h -= mu * log_sigmoid(eta[i]) + (1.0 - mu) * log_sigmoid(-eta[i]);
    }
    return h;
}

}  // namespace dcv
