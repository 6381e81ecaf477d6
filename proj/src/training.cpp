#include "dcv/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dcv/adam.hpp"
#include "dcv/alpha_control.hpp"
#include "dcv/oracle.hpp"

namespace dcv {

namespace {

enum Stream : std::uint64_t { kTrain = 1, kProbe = 2, kInit = 3 };

std::vector<BinarySample> draw_samples(EstimatorKind kind, const LogitVector& eta, Rng& rng, int k) {
    if (!uses_antithetic(kind)) return sample_batch(eta, rng, k);
    std::vector<BinarySample> xs;
    xs.reserve(static_cast<std::size_t>(k));
    for (int p = 0; p < k / 2; ++p) {
        auto pair = sample_batch(eta, rng, 2, true);
        xs.push_back(std::move(pair[0]));
        xs.push_back(std::move(pair[1]));
    }
    return xs;
}

bool is_record_step(int t, const TrainConfig& cfg) { return t % cfg.probe_every == 0 || t == cfg.steps; }

class WallClock {
public:
    explicit WallClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        if (!enabled_) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

void update_alpha(AlphaState& alpha, double grad, const TrainConfig& cfg) {
    if (has_alpha(cfg.estimator) && cfg.lr_alpha > 0.0) alpha = adapt(alpha, grad, cfg.lr_alpha);
}

// ---------------------------------------------------------------- toy

TrainResult train_toy(const TrainConfig& cfg, const ToyConfig& toy_cfg) {
    const ToyObjective toy(toy_cfg.dim, toy_cfg.p0);
    const Rng root(cfg.seed);
    Rng train = root.fork(kTrain);
    const Rng probe_base = root.fork(kProbe);
    const WallClock clock(cfg.record_wall_time);

    Vec eta = Vec::Zero(toy_cfg.dim);
    AdamState eta_state;
    AlphaState alpha;
    TrainResult result;
    result.backward_passes_per_step.reserve(static_cast<std::size_t>(cfg.steps));

    for (int t = 0;; ++t) {
        const LogitVector logits(eta);
        if (is_record_step(t, cfg)) {
            Rng probe = probe_base;
            StepRecord rec;
            rec.step = t;
            rec.objective = *toy.closed_form_mean(logits.mean());
            rec.grad_variance =
                empirical_variance(cfg.estimator, logits, toy, cfg.k, cfg.probe_reps, probe, alpha.alpha)
                    .total_variance;
            rec.alpha = alpha.alpha;
            rec.mean_sigma_eta = logits.mean().mean();
            rec.wall_secs = clock.seconds();
            result.records.push_back(rec);
        }
        if (t == cfg.steps) break;

        EvalCounter counter;
        const CountingObjective objective(toy, counter);
        const SampleBatch batch =
            evaluate_batch(logits, draw_samples(cfg.estimator, logits, train, cfg.k), objective);
        EstimatorContext ctx;
        ctx.eta = logits;
        if (needs_mean_eval(cfg.estimator)) ctx.f_mu = eval_at_mean(objective, batch.mu);
        if (needs_exact_mean(cfg.estimator)) ctx.exact_ef = toy.closed_form_mean(batch.mu);
        const GradEstimate est = estimate(cfg.estimator, batch, ctx);
        const Vec g = est.at(alpha.alpha);

        if (toy_cfg.optimizer == Optimizer::adam)
            adam_step(eta, g, eta_state, cfg.lr_eta, Direction::ascend);
        else
            eta += cfg.lr_eta * g;
        update_alpha(alpha, alpha_grad(est, alpha.alpha), cfg);

        result.backward_passes_per_step.push_back(counter.backward);
        result.totals.forward += counter.forward;
        result.totals.backward += counter.backward;
    }
    return result;
}

// ---------------------------------------------------------------- VAE

struct VaeModel {
    MlpParams encoder;
    DecoderParams decoder;
};

Vec decoder_flat(const DecoderParams& dec) {
    Vec flat(dec.param_count());
    flat.head(dec.net.param_count()) = dec.net.theta();
    if (dec.log_var.size() > 0) flat.tail(dec.log_var.size()) = dec.log_var;
    return flat;
}

void set_decoder_flat(DecoderParams& dec, const Vec& flat) {
    dec.net.theta() = flat.head(dec.net.param_count());
    if (dec.log_var.size() > 0) dec.log_var = flat.tail(dec.log_var.size());
}

Vec prepare_datum(const VaeConfig& vc, const Vec& image, Rng& rng) {
    return vc.likelihood == Likelihood::bernoulli ? binarize(image, rng) : center(image);
}

// Per-datum pieces of one estimator evaluation.
struct DatumGradient {
    GradEstimate estimate;  // score-function part, excluding the entropy term
    Vec decoder_grad;       // mean over the K samples of grad_theta f
    double log_joint_mean = 0.0;
};

DatumGradient datum_gradient(const TrainConfig& cfg, const DecoderParams& dec, const LogitVector& eta, const Vec& y,
                             Rng& rng, EvalCounter& counter) {
    const ElboObjective elbo(dec, eta, y, /*include_log_q=*/false);
    const CountingObjective objective(elbo, counter);
    std::vector<BinarySample> xs = draw_samples(cfg.estimator, eta, rng, cfg.k);
    std::vector<ObjectiveEval> evals;
    evals.reserve(xs.size());
    for (const auto& x : xs) evals.push_back(objective.eval(x));

    DatumGradient out;
    out.decoder_grad = Vec::Zero(dec.param_count());
    for (const auto& ev : evals) {
        out.decoder_grad += ev.theta_grad;
        out.log_joint_mean += ev.value;
    }
    out.decoder_grad /= static_cast<double>(evals.size());
    out.log_joint_mean /= static_cast<double>(evals.size());

    const SampleBatch batch = assemble_batch(eta, std::move(xs), evals);
    EstimatorContext ctx;
    ctx.eta = eta;
    if (needs_mean_eval(cfg.estimator)) ctx.f_mu = eval_at_mean(objective, batch.mu);
    out.estimate = estimate(cfg.estimator, batch, ctx);
    return out;
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    return idx;
}

StepRecord probe_vae(const TrainConfig& cfg, const VaeConfig& vc, const VaeModel& model, double alpha, Rng probe) {
    const std::size_t n_probe =
        vc.probe_data > 0 ? std::min<std::size_t>(static_cast<std::size_t>(vc.probe_data), vc.data.size())
                          : vc.data.size();
    std::vector<Vec> ys;
    std::vector<LogitVector> etas;
    ys.reserve(n_probe);
    etas.reserve(n_probe);
    for (std::size_t n = 0; n < n_probe; ++n) {
        ys.push_back(prepare_datum(vc, vc.data.images[n], probe));
        etas.emplace_back(mlp_eval(model.encoder, ys.back()).output);
    }

    StepRecord rec;
    rec.alpha = alpha;
    EvalCounter scratch;
    double elbo = 0.0, sigma = 0.0;
    for (std::size_t n = 0; n < n_probe; ++n) {
        const ElboObjective objective(model.decoder, etas[n], ys[n], /*include_log_q=*/false);
        const auto xs = sample_batch(etas[n], probe, cfg.k);
        double lj = 0.0;
        for (const auto& x : xs) lj += objective.eval(x).value;
        elbo += lj / static_cast<double>(xs.size()) + entropy(etas[n]);
        sigma += etas[n].mean().mean();
    }
    rec.objective = elbo / static_cast<double>(n_probe);
    rec.mean_sigma_eta = sigma / static_cast<double>(n_probe);

    // Total variance of the concatenated per-datum logit gradients over a
    // probe minibatch, across probe_reps independent sample draws.
    const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(vc.batch), n_probe);
    const Eigen::Index d = vc.latent;
    Vec mean = Vec::Zero(static_cast<Eigen::Index>(nb) * d);
    Vec m2 = Vec::Zero(mean.size());
    Vec g(mean.size());
    for (int r = 0; r < cfg.probe_reps; ++r) {
        for (std::size_t n = 0; n < nb; ++n) {
            const DatumGradient dg = datum_gradient(cfg, model.decoder, etas[n], ys[n], probe, scratch);
            g.segment(static_cast<Eigen::Index>(n) * d, d) = dg.estimate.at(alpha);
        }
        const Vec delta = g - mean;
        mean += delta / static_cast<double>(r + 1);
        m2 += delta.cwiseProduct(g - mean);
    }
    rec.grad_variance = cfg.probe_reps > 1 ? m2.sum() / static_cast<double>(cfg.probe_reps - 1) : 0.0;
    return rec;
}

TrainResult train_vae(const TrainConfig& cfg, const VaeConfig& vc) {
    const int pixels = vc.data.pixels();
    const Rng root(cfg.seed);
    Rng train = root.fork(kTrain);
    const Rng probe_base = root.fork(kProbe);
    Rng init = root.fork(kInit);
    const WallClock clock(cfg.record_wall_time);

    VaeModel model{MlpParams({pixels, vc.hidden, vc.hidden, vc.latent}),
                   DecoderParams(MlpParams({vc.latent, vc.hidden, vc.hidden, pixels}), vc.likelihood)};
    model.encoder.init_uniform(init);
    model.decoder.net.init_uniform(init);

    AdamState enc_state, dec_state;
    AlphaState alpha;
    TrainResult result;
    result.backward_passes_per_step.reserve(static_cast<std::size_t>(cfg.steps));

    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    const auto batch_size = static_cast<std::size_t>(vc.batch);

    for (int t = 0;; ++t) {
        if (is_record_step(t, cfg)) {
            StepRecord rec = probe_vae(cfg, vc, model, alpha.alpha, probe_base);
            rec.step = t;
            rec.wall_secs = clock.seconds();
            result.records.push_back(rec);
        }
        if (t == cfg.steps) break;

        EvalCounter counter;
        Vec enc_grad = Vec::Zero(model.encoder.param_count());
        Vec dec_grad = Vec::Zero(model.decoder.param_count());
        double alpha_g = 0.0;
        for (std::size_t b = 0; b < batch_size; ++b) {
            if (cursor == order.size()) {
                order = permutation(vc.data.size(), train);
                cursor = 0;
            }
            const Vec y = prepare_datum(vc, vc.data.images[order[cursor++]], train);
            const MlpForward enc = mlp_eval(model.encoder, y);
            ++counter.forward;
            const LogitVector eta(enc.output);

            DatumGradient dg = datum_gradient(cfg, model.decoder, eta, y, train, counter);
            // The estimator sees f = log p(y, x); the entropy of q enters analytically.
            dg.estimate.u += entropy_grad(eta);
            const Vec g = dg.estimate.at(alpha.alpha);
            enc_grad += mlp_backward(model.encoder, enc.tape, g).theta_grad;
            ++counter.backward;
            dec_grad += dg.decoder_grad;
            alpha_g += alpha_grad(dg.estimate, alpha.alpha);
        }
        enc_grad /= static_cast<double>(batch_size);
        dec_grad /= static_cast<double>(batch_size);

        adam_step(model.encoder.theta(), enc_grad, enc_state, cfg.lr_eta, Direction::ascend);
        Vec dec_flat = decoder_flat(model.decoder);
        adam_step(dec_flat, dec_grad, dec_state, cfg.lr_theta, Direction::ascend);
        set_decoder_flat(model.decoder, dec_flat);
        update_alpha(alpha, alpha_g, cfg);

        result.backward_passes_per_step.push_back(counter.backward);
        result.totals.forward += counter.forward;
        result.totals.backward += counter.backward;
    }
    return result;
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (cfg.probe_every < 1) throw std::invalid_argument("probe interval must be >= 1");
    if (cfg.probe_reps < 2) throw std::invalid_argument("probe replicates must be >= 2");
    if (cfg.lr_eta < 0.0 || cfg.lr_theta < 0.0 || cfg.lr_alpha < 0.0)
        throw std::invalid_argument("learning rates must be non-negative");
    check_sample_count(cfg.estimator, cfg.k);
    if (const auto* toy = std::get_if<ToyConfig>(&cfg.problem)) {
        if (toy->dim < 1) throw std::invalid_argument("toy dimension must be >= 1");
        if (!(toy->p0 > 0.0 && toy->p0 < 1.0)) throw std::invalid_argument("p0 must lie in (0,1)");
        return;
    }
    const auto& vc = std::get<VaeConfig>(cfg.problem);
    if (vc.latent < 1 || vc.hidden < 1 || vc.batch < 1)
        throw std::invalid_argument("latent, hidden and batch sizes must be positive");
    if (vc.data.size() == 0 || vc.data.pixels() < 1) throw std::invalid_argument("VAE training needs a dataset");
    if (needs_exact_mean(cfg.estimator))
        throw std::invalid_argument("rstar needs the exact E f, which is intractable for the VAE objective");
}

TrainResult run_training(const TrainConfig& config) {
    validate(config);
    if (const auto* toy = std::get_if<ToyConfig>(&config.problem)) return train_toy(config, *toy);
    return train_vae(config, std::get<VaeConfig>(config.problem));
}

}  // namespace dcv
