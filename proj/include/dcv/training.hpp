#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "dcv/dataset.hpp"
#include "dcv/estimators.hpp"
#include "dcv/metrics.hpp"
#include "dcv/objectives.hpp"

namespace dcv {

enum class Optimizer { adam, sgd };

struct ToyConfig {
    int dim = 200;
    double p0 = 0.499;
    Optimizer optimizer = Optimizer::adam;
};

struct VaeConfig {
    Likelihood likelihood = Likelihood::bernoulli;
    int latent = 200;
    int hidden = 200;
    int batch = 50;
    // Data used for the objective/variance probes (a fixed prefix of the
    // dataset); 0 means the whole dataset.
    int probe_data = 0;
    ImageDataset data;
};

struct TrainConfig {
    EstimatorKind estimator = EstimatorKind::double_cv;
    int k = 2;
    int steps = 1000;
    std::uint64_t seed = 0;
    double lr_eta = 1e-3;    // logits (toy) or encoder weights (VAE)
    double lr_theta = 1e-3;  // decoder weights
    double lr_alpha = 1e-3;
    int probe_every = 100;
    int probe_reps = 100;
    bool record_wall_time = false;
    std::variant<ToyConfig, VaeConfig> problem = ToyConfig{};
};

// Throws std::invalid_argument on an inconsistent configuration.
void validate(const TrainConfig& config);

struct TrainResult {
    std::vector<StepRecord> records;
    // Objective forward/backward passes per training step (probes excluded).
    std::vector<std::int64_t> backward_passes_per_step;
    EvalCounter totals;
};

// Runs Algorithm 1: sample, evaluate (one backward pass per sample),
// estimate, ascend eta, ascend theta, adapt alpha. A StepRecord is emitted
// before the first update and then every `probe_every` updates (plus the
// final step). Probes use their own random stream, reseeded identically at
// every probe, so they never perturb the training stream.
TrainResult run_training(const TrainConfig& config);

}  // namespace dcv
