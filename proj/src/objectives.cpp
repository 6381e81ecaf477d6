#include "dcv/objectives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dcv {

ToyObjective::ToyObjective(Eigen::Index dim, double p0) : dim_(dim), p0_(p0) {
    if (dim < 1) throw std::invalid_argument("ToyObjective: dimension must be >= 1");
    if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("ToyObjective: p0 must lie in (0,1)");
}

ObjectiveEval toy_eval(const Vec& x, double p0) {
    const double d = static_cast<double>(x.size());
    const Vec r = x.array() - p0;
    return {r.squaredNorm() / d, (2.0 / d) * r, Vec()};
}

ObjectiveEval ToyObjective::eval(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("ToyObjective: dimension mismatch");
    return toy_eval(x, p0_);
}

std::optional<double> ToyObjective::closed_form_mean(const Vec& mu) const {
    const double hi = (1.0 - p0_) * (1.0 - p0_), lo = p0_ * p0_;
    return (mu.array() * hi + (1.0 - mu.array()) * lo).sum() / static_cast<double>(dim_);
}

LinearObjective::LinearObjective(double offset, Vec weights) : offset_(offset), weights_(std::move(weights)) {
    if (weights_.size() < 1) throw std::invalid_argument("LinearObjective: dimension must be >= 1");
}

ObjectiveEval LinearObjective::eval(const Vec& x) const {
    if (x.size() != weights_.size()) throw std::invalid_argument("LinearObjective: dimension mismatch");
    return {offset_ + weights_.dot(x), weights_, Vec()};
}

DecoderParams::DecoderParams(MlpParams net_, Likelihood lik) : net(std::move(net_)), likelihood(lik) {
    if (likelihood == Likelihood::gaussian) log_var = Vec::Zero(net.output_dim());
}

LogLik log_likelihood(const DecoderParams& dec, const Vec& out, const Vec& y) {
    if (y.size() != out.size()) throw std::invalid_argument("log_likelihood: data dimension mismatch");
    LogLik ll;
    ll.output_grad.resize(out.size());
    if (dec.likelihood == Likelihood::bernoulli) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] != 0.0 && y[i] != 1.0)
                throw std::invalid_argument("Bernoulli likelihood needs binary data");
            ll.value += y[i] * out[i] - softplus(out[i]);
            ll.output_grad[i] = y[i] - sigmoid(out[i]);
        }
        return ll;
    }
    constexpr double log_2pi = 1.8378770664093454835606594728112;
    ll.log_var_grad.resize(out.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] >= -1.0 && y[i] <= 1.0))
            throw std::invalid_argument("Gaussian likelihood expects data centered to [-1,1]");
        const double prec = std::exp(-dec.log_var[i]);
        const double r = y[i] - out[i];
        ll.value += -0.5 * (log_2pi + dec.log_var[i] + r * r * prec);
        ll.output_grad[i] = r * prec;
        ll.log_var_grad[i] = -0.5 + 0.5 * r * r * prec;
    }
    return ll;
}

ElboObjective::ElboObjective(const DecoderParams& dec, LogitVector eta, Vec y, bool include_log_q)
    : dec_(&dec), eta_(std::move(eta)), y_(std::move(y)), include_log_q_(include_log_q) {
    if (eta_.size() != dec.latent_dim()) throw std::invalid_argument("ElboObjective: latent dimension mismatch");
    if (y_.size() != dec.data_dim()) throw std::invalid_argument("ElboObjective: data dimension mismatch");
}

double ElboObjective::log_prior() const { return -static_cast<double>(eta_.size()) * std::numbers::ln2; }

ObjectiveEval ElboObjective::eval(const Vec& x) const {
    if (x.size() != eta_.size()) throw std::invalid_argument("ElboObjective: dimension mismatch");
    const MlpForward fwd = mlp_eval(dec_->net, x);
    const LogLik ll = log_likelihood(*dec_, fwd.output, y_);
    const MlpBackward bwd = mlp_backward(dec_->net, fwd.tape, ll.output_grad);
    ObjectiveEval ev;
    ev.value = ll.value + log_prior();
    if (include_log_q_) ev.value -= log_prob_relaxed(eta_, x);
    ev.input_grad = bwd.input_grad;
    ev.theta_grad.resize(dec_->param_count());
    ev.theta_grad.head(dec_->net.param_count()) = bwd.theta_grad;
    if (dec_->log_var.size() > 0) ev.theta_grad.tail(dec_->log_var.size()) = ll.log_var_grad;
    return ev;
}

}  // namespace dcv
