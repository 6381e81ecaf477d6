#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace dcv {

using Vec = Eigen::VectorXd;

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Vec m;
    Vec v;
    std::int64_t step = 0;

    AdamState() = default;
    explicit AdamState(Eigen::Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

enum class Direction { descend, ascend };

// One bias-corrected Adam update of `params` in place.
void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr, Direction dir,
               const AdamConfig& cfg = {});

}  // namespace dcv
