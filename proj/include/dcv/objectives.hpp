#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Core>

#include "dcv/bernoulli.hpp"
#include "dcv/mlp.hpp"

namespace dcv {

// f(x), grad_x f(x) and grad_theta f(x) from one backward pass.
struct ObjectiveEval {
    double value = 0.0;
    Vec input_grad;
    Vec theta_grad;  // empty for parameter-free objectives
};

// An objective defined on real-valued inputs and restricted to {0,1}^D when
// sampled, so it can also be evaluated at the mean vector.
class Objective {
public:
    virtual ~Objective() = default;
    virtual Eigen::Index dim() const = 0;
    virtual ObjectiveEval eval(const Vec& x) const = 0;

    ObjectiveEval eval(const BinarySample& x) const { return eval(x.to_real()); }

    // E_q[f] under the factorized Bernoulli with mean mu, when available in
    // closed form.
    virtual std::optional<double> closed_form_mean(const Vec& /*mu*/) const { return std::nullopt; }
};

// Forward/backward pass counts, shared by whoever wants to audit cost.
struct EvalCounter {
    std::int64_t forward = 0;
    std::int64_t backward = 0;
};

// Forwards to another objective and counts evaluations. Every eval is one
// forward and one backward pass of the wrapped objective.
class CountingObjective final : public Objective {
public:
    CountingObjective(const Objective& inner, EvalCounter& counter) : inner_(&inner), counter_(&counter) {}
    Eigen::Index dim() const override { return inner_->dim(); }
    using Objective::eval;
    ObjectiveEval eval(const Vec& x) const override {
        ++counter_->forward;
        ++counter_->backward;
        return inner_->eval(x);
    }
    std::optional<double> closed_form_mean(const Vec& mu) const override { return inner_->closed_form_mean(mu); }

private:
    const Objective* inner_;
    EvalCounter* counter_;
};

// (1/D) sum_i (x_i - p0)^2
class ToyObjective final : public Objective {
public:
    explicit ToyObjective(Eigen::Index dim, double p0 = 0.499);
    Eigen::Index dim() const override { return dim_; }
    using Objective::eval;
    ObjectiveEval eval(const Vec& x) const override;
    std::optional<double> closed_form_mean(const Vec& mu) const override;
    double p0() const { return p0_; }

private:
    Eigen::Index dim_;
    double p0_;
};

// c + w^T x
class LinearObjective final : public Objective {
public:
    LinearObjective(double offset, Vec weights);
    Eigen::Index dim() const override { return weights_.size(); }
    using Objective::eval;
    ObjectiveEval eval(const Vec& x) const override;
    std::optional<double> closed_form_mean(const Vec& mu) const override { return eval(mu).value; }

private:
    double offset_;
    Vec weights_;
};

ObjectiveEval toy_eval(const Vec& x, double p0);

inline ObjectiveEval eval_at_mean(const Objective& objective, const Vec& mu) { return objective.eval(mu); }

enum class Likelihood { bernoulli, gaussian };

// Decoder p_theta(y|x): an MLP producing logits (Bernoulli) or means
// (Gaussian, with per-pixel log-variance).
struct DecoderParams {
    MlpParams net;
    Likelihood likelihood = Likelihood::bernoulli;
    Vec log_var;  // Gaussian only; size = output dim

    DecoderParams(MlpParams net_, Likelihood lik);
    Eigen::Index param_count() const { return net.param_count() + log_var.size(); }
    Eigen::Index latent_dim() const { return net.input_dim(); }
    Eigen::Index data_dim() const { return net.output_dim(); }
};

// log p(y|x) and its gradients w.r.t. the decoder output (and log-variance).
struct LogLik {
    double value = 0.0;
    Vec output_grad;
    Vec log_var_grad;
};
LogLik log_likelihood(const DecoderParams& dec, const Vec& decoder_output, const Vec& y);

// Instantaneous ELBO for one datum at fixed variational logits:
//   log p(y|x) + log p(x) - log q_eta(x),  p(x) uniform over {0,1}^D.
// input_grad is grad_x log p(y|x) (decoder term only). theta_grad is
// [grad of decoder weights ; grad of log-variance].
// With include_log_q = false the -log q term is left out of `value`; the
// training loop then adds the analytic entropy gradient separately.
class ElboObjective final : public Objective {
public:
    ElboObjective(const DecoderParams& dec, LogitVector eta, Vec y, bool include_log_q = true);
    Eigen::Index dim() const override { return eta_.size(); }
    using Objective::eval;
    ObjectiveEval eval(const Vec& x) const override;

    double log_prior() const;

private:
    const DecoderParams* dec_;
    LogitVector eta_;
    Vec y_;
    bool include_log_q_;
};

}  // namespace dcv
