#include "dcv/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcv {

MlpParams::MlpParams(std::vector<int> sizes, double slope) : sizes_(std::move(sizes)), slope_(slope) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpParams: need input and output sizes");
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] < 1 || sizes_[l + 1] < 1)
            throw std::invalid_argument("MlpParams: layer sizes must be positive");
        offsets_.push_back(total);
        total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    theta_ = Vec::Zero(total);
}

void MlpParams::init_uniform(Rng& rng) {
    for (int l = 0; l < num_layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[static_cast<std::size_t>(l)]));
        auto w = weight(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
        bias(l).setZero();
    }
}

MlpParams::ConstMatMap MlpParams::weight(int layer) const {
    const auto l = static_cast<std::size_t>(layer);
    return ConstMatMap(theta_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
}

MlpParams::ConstVecMap MlpParams::bias(int layer) const {
    const auto l = static_cast<std::size_t>(layer);
    return ConstVecMap(theta_.data() + offsets_[l] + Eigen::Index{sizes_[l + 1]} * sizes_[l], sizes_[l + 1]);
}

Eigen::Map<Eigen::MatrixXd> MlpParams::weight(int layer) {
    const auto l = static_cast<std::size_t>(layer);
    return Eigen::Map<Eigen::MatrixXd>(theta_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
}

Eigen::Map<Vec> MlpParams::bias(int layer) {
    const auto l = static_cast<std::size_t>(layer);
    return Eigen::Map<Vec>(theta_.data() + offsets_[l] + Eigen::Index{sizes_[l + 1]} * sizes_[l], sizes_[l + 1]);
}

MlpForward mlp_eval(const MlpParams& params, const Vec& x) {
    if (x.size() != params.input_dim())
        throw std::invalid_argument("mlp_eval: input has size " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(params.input_dim()));
    MlpForward fwd;
    fwd.tape.inputs.reserve(static_cast<std::size_t>(params.num_layers()));
    fwd.tape.pre.reserve(static_cast<std::size_t>(params.num_layers()));
    Vec h = x;
    const double slope = params.slope();
    for (int l = 0; l < params.num_layers(); ++l) {
        Vec z = params.weight(l) * h + params.bias(l);
        fwd.tape.inputs.push_back(std::move(h));
        if (l + 1 < params.num_layers())
            h = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        else
            h = z;
        fwd.tape.pre.push_back(std::move(z));
    }
    fwd.output = std::move(h);
    return fwd;
}

MlpBackward mlp_backward(const MlpParams& params, const MlpTape& tape, const Vec& output_grad) {
    if (output_grad.size() != params.output_dim() ||
        tape.inputs.size() != static_cast<std::size_t>(params.num_layers()))
        throw std::invalid_argument("mlp_backward: shape mismatch");
    MlpBackward out;
    out.theta_grad = Vec::Zero(params.param_count());
    const double slope = params.slope();
    Vec delta = output_grad;
    for (int l = params.num_layers() - 1; l >= 0; --l) {
        const auto idx = static_cast<std::size_t>(l);
        if (l + 1 < params.num_layers()) {
            const Vec& z = tape.pre[idx];
            for (Eigen::Index i = 0; i < z.size(); ++i)
                if (!(z[i] > 0.0)) delta[i] *= slope;
        }
        const Vec& in = tape.inputs[idx];
        const Eigen::Index rows = delta.size(), cols = in.size();
        Eigen::Map<Eigen::MatrixXd> gw(out.theta_grad.data() + params.weight_offset(l), rows, cols);
        gw.noalias() = delta * in.transpose();
        out.theta_grad.segment(params.weight_offset(l) + rows * cols, rows) = delta;
        delta = params.weight(l).transpose() * delta;
    }
    out.input_grad = std::move(delta);
    return out;
}

}  // namespace dcv
