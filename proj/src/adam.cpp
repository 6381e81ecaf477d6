#include "dcv/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dcv {

void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr, Direction dir, const AdamConfig& cfg) {
    if (grad.size() != params.size()) throw std::invalid_argument("adam_step: gradient/parameter size mismatch");
    if (state.m.size() == 0) state = AdamState(params.size());
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");

    ++state.step;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const double sign = dir == Direction::ascend ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] += sign * lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace dcv
