#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dcv/rng.hpp"

namespace dcv {

using Vec = Eigen::VectorXd;

double sigmoid(double z);
// log(1 + exp(z)) without overflow.
double softplus(double z);
// log sigmoid(z) = -softplus(-z)
double log_sigmoid(double z);

// Logits of a factorized Bernoulli. Entries must be finite and D >= 1.
class LogitVector {
public:
    explicit LogitVector(Vec eta);
    static LogitVector zeros(Eigen::Index dim) { return LogitVector(Vec::Zero(dim)); }

    const Vec& eta() const { return eta_; }
    Eigen::Index size() const { return eta_.size(); }
    double operator[](Eigen::Index i) const { return eta_[i]; }

    // mu_i = sigmoid(eta_i)
    Vec mean() const;

private:
    Vec eta_;
};

// A point of {0,1}^D.
class BinarySample {
public:
    BinarySample() = default;
    explicit BinarySample(std::vector<std::uint8_t> bits);
    // Bit i of `code` becomes coordinate i.
    static BinarySample from_code(std::uint64_t code, int dim);

    const std::vector<std::uint8_t>& bits() const { return bits_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(bits_.size()); }
    std::uint8_t operator[](Eigen::Index i) const { return bits_[static_cast<std::size_t>(i)]; }
    Vec to_real() const;

    bool operator==(const BinarySample&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

struct MeanCov {
    Vec mu;
    Vec covdiag;  // mu * (1 - mu), the diagonal of E[s(x)(x - mu)^T]
};

MeanCov mean_and_covdiag(const LogitVector& eta);

// x_i = 1[u_i < mu_i]; ties at u == mu give 0.
BinarySample sample_from_uniforms(const Vec& mu, const Vec& u);
// (x, x~) with x_i = 1[u_i < mu_i] and x~_i = 1[1 - u_i < mu_i].
std::pair<BinarySample, BinarySample> antithetic_from_uniforms(const Vec& mu, const Vec& u);

// K samples. Antithetic mode requires K == 2 and returns the pair (x, x~).
std::vector<BinarySample> sample_batch(const LogitVector& eta, Rng& rng, int count,
                                       bool antithetic = false);

double log_prob(const LogitVector& eta, const BinarySample& x);
// Same formula with x allowed anywhere in [0,1]^D (linear in x).
double log_prob_relaxed(const LogitVector& eta, const Vec& x);

// Score of the logit parameterization: x - mu.
Vec score(const LogitVector& eta, const BinarySample& x);

// Gradient of the entropy H(q) = -E_q[log q] w.r.t. eta: -mu (1 - mu) eta.
Vec entropy_grad(const LogitVector& eta);
double entropy(const LogitVector& eta);

}  // namespace dcv
