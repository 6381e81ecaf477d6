// dcv: toy and VAE training runs with the double control variate family of
// score-function estimators, plus the exhaustive oracle gate suite.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dcv/dataset.hpp"
#include "dcv/gates.hpp"
#include "dcv/metrics.hpp"
#include "dcv/training.hpp"

namespace {

struct CommonArgs {
    std::string estimator = "double-cv";
    int k = 2;
    int steps = 10000;
    std::uint64_t seed = 0;
    double lr = -1.0;
    double alpha_lr = 1e-3;
    int probe_every = 100;
    int probe_reps = 100;
    std::string out;
    std::string format = "csv";
    bool wall_time = false;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--estimator", a.estimator, "reinforce|rloo|rstar|double-cv|double-cv-mf|half-bxk|half-bxj|muprop|disarm")
        ->capture_default_str();
    app->add_option("--k", a.k, "samples per step")->capture_default_str();
    app->add_option("--steps", a.steps)->capture_default_str();
    app->add_option("--seed", a.seed)->capture_default_str();
    app->add_option("--lr", a.lr, "learning rate for the logits / encoder");
    app->add_option("--alpha-lr", a.alpha_lr)->capture_default_str();
    app->add_option("--probe-every", a.probe_every)->capture_default_str();
    app->add_option("--probe-reps", a.probe_reps)->capture_default_str();
    app->add_option("--out", a.out, "metrics output path")->required();
    app->add_option("--format", a.format, "csv|jsonl")->capture_default_str();
    app->add_flag("--wall-time", a.wall_time, "record wall-clock seconds (makes output run-dependent)");
}

dcv::TrainConfig base_config(const CommonArgs& a, double default_lr) {
    dcv::TrainConfig cfg;
    cfg.estimator = dcv::parse_estimator(a.estimator);
    cfg.k = a.k;
    cfg.steps = a.steps;
    cfg.seed = a.seed;
    cfg.lr_eta = a.lr >= 0.0 ? a.lr : default_lr;
    cfg.lr_alpha = a.alpha_lr;
    cfg.probe_every = a.probe_every;
    cfg.probe_reps = a.probe_reps;
    cfg.record_wall_time = a.wall_time;
    return cfg;
}

void finish(const dcv::TrainResult& result, const CommonArgs& a) {
    dcv::write_metrics(result.records, a.out, dcv::parse_metrics_format(a.format));
    const auto& last = result.records.back();
    std::printf("steps=%lld objective=%.6g grad_variance=%.6g alpha=%.6g mean_sigma_eta=%.6g backward_passes=%lld\n",
                static_cast<long long>(last.step), last.objective, last.grad_variance, last.alpha,
                last.mean_sigma_eta, static_cast<long long>(result.totals.backward));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Double control variate gradient estimators for binary latent variables"};
    app.require_subcommand(1);

    CommonArgs toy_args;
    int dim = 200;
    double p0 = 0.499;
    std::string optimizer = "adam";
    auto* toy = app.add_subcommand("toy", "maximize E[(1/D) sum (x_i - p0)^2] over Bernoulli logits");
    add_common(toy, toy_args);
    toy->add_option("--dim", dim)->capture_default_str();
    toy->add_option("--p0", p0)->capture_default_str();
    toy->add_option("--optimizer", optimizer, "adam|sgd")->capture_default_str();

    CommonArgs vae_args;
    vae_args.steps = 5000;
    std::string dataset = "synthetic", labels, likelihood = "bernoulli";
    int latent = 200, hidden = 200, batch = 50, synthetic_count = 512, synthetic_side = 8, probe_data = 0;
    double decoder_lr = -1.0;
    auto* vae = app.add_subcommand("vae", "train a VAE with factorized Bernoulli latents");
    add_common(vae, vae_args);
    vae->add_option("--dataset", dataset, "synthetic | idx:PATH")->capture_default_str();
    vae->add_option("--labels", labels, "optional IDX label file");
    vae->add_option("--likelihood", likelihood, "bernoulli|gaussian")->capture_default_str();
    vae->add_option("--latent", latent)->capture_default_str();
    vae->add_option("--hidden", hidden)->capture_default_str();
    vae->add_option("--batch", batch)->capture_default_str();
    vae->add_option("--decoder-lr", decoder_lr, "defaults to --lr");
    vae->add_option("--synthetic-count", synthetic_count)->capture_default_str();
    vae->add_option("--synthetic-side", synthetic_side)->capture_default_str();
    vae->add_option("--probe-data", probe_data, "data points used by probes (0 = all)")->capture_default_str();

    std::uint64_t check_seed = 20240;
    auto* check = app.add_subcommand("check", "run the exhaustive-enumeration oracle gates");
    check->add_option("--seed", check_seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*toy) {
            dcv::TrainConfig cfg = base_config(toy_args, 1e-3);
            dcv::ToyConfig tc;
            tc.dim = dim;
            tc.p0 = p0;
            if (optimizer == "adam")
                tc.optimizer = dcv::Optimizer::adam;
            else if (optimizer == "sgd")
                tc.optimizer = dcv::Optimizer::sgd;
            else
                throw std::invalid_argument("unknown optimizer '" + optimizer + "'");
            cfg.problem = tc;
            finish(dcv::run_training(cfg), toy_args);
            return 0;
        }
        if (*vae) {
            dcv::VaeConfig vc;
            if (likelihood == "bernoulli")
                vc.likelihood = dcv::Likelihood::bernoulli;
            else if (likelihood == "gaussian")
                vc.likelihood = dcv::Likelihood::gaussian;
            else
                throw std::invalid_argument("unknown likelihood '" + likelihood + "'");
            if (dataset == "synthetic") {
                dcv::Rng data_rng = dcv::Rng(vae_args.seed).fork(7);
                vc.data = dcv::synthetic_bars(synthetic_count, synthetic_side, data_rng);
            } else if (dataset.rfind("idx:", 0) == 0) {
                vc.data = dcv::load_mnist_idx(dataset.substr(4),
                                              labels.empty() ? std::nullopt : std::optional<std::string>(labels));
            } else {
                throw std::invalid_argument("--dataset must be 'synthetic' or 'idx:PATH'");
            }
            vc.latent = latent;
            vc.hidden = hidden;
            vc.batch = batch;
            vc.probe_data = probe_data;
            // Continuous data trains with the smaller default rate.
            const double default_lr = vc.likelihood == dcv::Likelihood::bernoulli ? 1e-3 : 1e-4;
            dcv::TrainConfig cfg = base_config(vae_args, default_lr);
            cfg.lr_theta = decoder_lr >= 0.0 ? decoder_lr : cfg.lr_eta;
            cfg.problem = std::move(vc);
            finish(dcv::run_training(cfg), vae_args);
            return 0;
        }
        bool all = true;
        for (const auto& g : dcv::run_oracle_gates(check_seed)) {
            std::printf("[%s] %-22s %s (%.2fs)\n", g.passed ? "PASS" : "FAIL", g.name.c_str(), g.detail.c_str(),
                        g.seconds);
            all = all && g.passed;
        }
        return all ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
