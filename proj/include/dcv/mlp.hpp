#pragma once

#include <vector>

#include <Eigen/Core>

#include "dcv/rng.hpp"

namespace dcv {

using Vec = Eigen::VectorXd;

// Fully connected network with LeakyReLU hidden layers and a linear output
// layer. All weights and biases live in one flat vector so optimizers can
// treat them as a single block. Layer l occupies
// [offset(l), offset(l) + out*in) for the column-major weight matrix
// followed by `out` bias entries.
class MlpParams {
public:
    using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
    using ConstVecMap = Eigen::Map<const Vec>;

    // sizes = {input, hidden..., output}; needs at least two entries.
    explicit MlpParams(std::vector<int> sizes, double slope = 0.3);

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    void init_uniform(Rng& rng);

    const std::vector<int>& sizes() const { return sizes_; }
    int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    double slope() const { return slope_; }

    Vec& theta() { return theta_; }
    const Vec& theta() const { return theta_; }
    Eigen::Index param_count() const { return theta_.size(); }

    ConstMatMap weight(int layer) const;
    ConstVecMap bias(int layer) const;
    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<Vec> bias(int layer);
    Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

private:
    std::vector<int> sizes_;
    double slope_;
    std::vector<Eigen::Index> offsets_;
    Vec theta_;
};

// Activations cached by the forward pass: inputs[l] is the input of layer l,
// pre[l] its pre-activation.
struct MlpTape {
    std::vector<Vec> inputs;
    std::vector<Vec> pre;
};

struct MlpForward {
    Vec output;
    MlpTape tape;
};

struct MlpBackward {
    Vec input_grad;
    Vec theta_grad;  // same layout as MlpParams::theta()
};

MlpForward mlp_eval(const MlpParams& params, const Vec& x);
MlpBackward mlp_backward(const MlpParams& params, const MlpTape& tape, const Vec& output_grad);

}  // namespace dcv
