#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcv/alpha_control.hpp"
#include "dcv/dataset.hpp"
#include "dcv/estimators.hpp"
#include "dcv/gates.hpp"
#include "dcv/metrics.hpp"
#include "dcv/oracle.hpp"
#include "dcv/training.hpp"

namespace py = pybind11;
using namespace dcv;

namespace {

using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows of a K x D 0/1 array become samples.
std::vector<BinarySample> samples_from_rows(const BitMatrix& xs) {
    std::vector<BinarySample> out;
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(xs.cols()));
        for (Eigen::Index i = 0; i < xs.cols(); ++i) bits[static_cast<std::size_t>(i)] = xs(k, i);
        out.emplace_back(std::move(bits));
    }
    return out;
}

BitMatrix rows_from_samples(const std::vector<BinarySample>& xs, Eigen::Index dim) {
    BitMatrix m(static_cast<Eigen::Index>(xs.size()), dim);
    for (std::size_t k = 0; k < xs.size(); ++k)
        for (Eigen::Index i = 0; i < dim; ++i) m(static_cast<Eigen::Index>(k), i) = xs[k][i];
    return m;
}

py::list records_to_list(const std::vector<StepRecord>& recs) {
    py::list out;
    for (const auto& r : recs) {
        py::dict d;
        d["step"] = r.step;
        d["objective"] = r.objective;
        d["grad_variance"] = r.grad_variance;
        d["alpha"] = r.alpha;
        d["mean_sigma_eta"] = r.mean_sigma_eta;
        d["wall_secs"] = r.wall_secs;
        out.append(d);
    }
    return out;
}

py::dict result_to_dict(const TrainResult& r) {
    py::dict d;
    d["records"] = records_to_list(r.records);
    d["backward_passes_per_step"] = r.backward_passes_per_step;
    d["forward_total"] = r.totals.forward;
    d["backward_total"] = r.totals.backward;
    return d;
}

Likelihood parse_likelihood(const std::string& name) {
    if (name == "bernoulli") return Likelihood::bernoulli;
    if (name == "gaussian") return Likelihood::gaussian;
    throw std::invalid_argument("unknown likelihood '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Double control variate score-function estimators for factorized Bernoulli latents.";

    m.def("mean_and_covdiag", [](const Vec& eta) {
        const MeanCov mc = mean_and_covdiag(LogitVector(eta));
        return py::make_tuple(mc.mu, mc.covdiag);
    }, py::arg("eta"));

    m.def("sample_batch", [](const Vec& eta, std::uint64_t seed, int k, bool antithetic) {
        Rng rng(seed);
        return rows_from_samples(sample_batch(LogitVector(eta), rng, k, antithetic), eta.size());
    }, py::arg("eta"), py::arg("seed"), py::arg("k"), py::arg("antithetic") = false,
       "K x D array of 0/1 samples; deterministic in seed.");

    m.def("log_prob", [](const Vec& eta, const BitMatrix& x) {
        return log_prob(LogitVector(eta), samples_from_rows(x).at(0));
    }, py::arg("eta"), py::arg("x"));

    m.def("score", [](const Vec& eta, const BitMatrix& x) { return score(LogitVector(eta), samples_from_rows(x).at(0)); },
          py::arg("eta"), py::arg("x"));

    m.def("entropy_grad", [](const Vec& eta) { return entropy_grad(LogitVector(eta)); }, py::arg("eta"));

    m.def("toy_eval", [](const Vec& x, double p0) {
        const ObjectiveEval ev = toy_eval(x, p0);
        return py::make_tuple(ev.value, ev.input_grad);
    }, py::arg("x"), py::arg("p0") = 0.499);

    py::class_<Objective>(m, "Objective")
        .def_property_readonly("dim", &Objective::dim)
        .def("__call__", [](const Objective& f, const Vec& x) {
            const ObjectiveEval ev = f.eval(x);
            return py::make_tuple(ev.value, ev.input_grad);
        }, py::arg("x"));
    py::class_<ToyObjective, Objective>(m, "ToyObjective")
        .def(py::init<Eigen::Index, double>(), py::arg("dim"), py::arg("p0") = 0.499)
        .def_property_readonly("p0", &ToyObjective::p0);
    py::class_<LinearObjective, Objective>(m, "LinearObjective")
        .def(py::init<double, Vec>(), py::arg("offset"), py::arg("weights"));

    m.def("estimator_names", [] {
        std::vector<std::string> names;
        for (const auto kind : all_estimators()) names.emplace_back(estimator_name(kind));
        return names;
    });

    m.def("estimate", [](const std::string& name, const Vec& eta, const BitMatrix& xs, const Objective& f,
                         std::optional<double> exact_ef) {
        const EstimatorKind kind = parse_estimator(name);
        const LogitVector logits(eta);
        const SampleBatch batch = evaluate_batch(logits, samples_from_rows(xs), f);
        EstimatorContext ctx;
        ctx.eta = logits;
        ctx.exact_ef = exact_ef;
        if (needs_mean_eval(kind)) ctx.f_mu = f.eval(batch.mu);
        const GradEstimate g = estimate(kind, batch, ctx);
        return py::make_tuple(g.u, g.v);
    }, py::arg("estimator"), py::arg("eta"), py::arg("xs"), py::arg("objective"), py::arg("exact_ef") = py::none(),
       "(u, v) with g(alpha) = u + alpha v for the samples in the rows of xs.");

    m.def("exact_moments", [](const Vec& eta, const Objective& f) {
        const ExactMoments em = exact_moments(LogitVector(eta), f);
        return py::make_tuple(em.ef, em.exact_grad);
    }, py::arg("eta"), py::arg("objective"));

    m.def("estimator_expectation_exact", [](const std::string& name, const Vec& eta, const Objective& f, int k,
                                            double alpha) {
        return estimator_expectation_exact(parse_estimator(name), LogitVector(eta), f, k, alpha);
    }, py::arg("estimator"), py::arg("eta"), py::arg("objective"), py::arg("k"), py::arg("alpha") = 0.0);

    m.def("estimator_variance_exact", [](const std::string& name, const Vec& eta, const Objective& f, int k,
                                         double alpha) {
        return estimator_variance_exact(parse_estimator(name), LogitVector(eta), f, k, alpha);
    }, py::arg("estimator"), py::arg("eta"), py::arg("objective"), py::arg("k"), py::arg("alpha") = 0.0);

    m.def("empirical_variance", [](const std::string& name, const Vec& eta, const Objective& f, int k,
                                   int replicates, std::uint64_t seed, double alpha) {
        Rng rng(seed);
        return empirical_variance(parse_estimator(name), LogitVector(eta), f, k, replicates, rng, alpha)
            .total_variance;
    }, py::arg("estimator"), py::arg("eta"), py::arg("objective"), py::arg("k"), py::arg("replicates"),
       py::arg("seed"), py::arg("alpha") = 0.0);

    m.def("alpha_grad", [](const Vec& u, const Vec& v, double alpha) { return alpha_grad({u, v}, alpha); },
          py::arg("u"), py::arg("v"), py::arg("alpha"));
    m.def("optimal_alpha_k2", &optimal_alpha_k2, py::arg("g_samples"), py::arg("h_samples"),
          py::arg("weights") = std::vector<double>{});

    m.def("run_toy", [](const std::string& estimator, int dim, int k, int steps, std::uint64_t seed, double lr,
                        double alpha_lr, int probe_every, int probe_reps, double p0) {
        TrainConfig cfg;
        cfg.estimator = parse_estimator(estimator);
        cfg.k = k;
        cfg.steps = steps;
        cfg.seed = seed;
        cfg.lr_eta = lr;
        cfg.lr_alpha = alpha_lr;
        cfg.probe_every = probe_every;
        cfg.probe_reps = probe_reps;
        cfg.problem = ToyConfig{dim, p0, Optimizer::adam};
        TrainResult r;
        {
            py::gil_scoped_release release;
            r = run_training(cfg);
        }
        return result_to_dict(r);
    }, py::arg("estimator") = "double-cv", py::arg("dim") = 200, py::arg("k") = 2, py::arg("steps") = 1000,
       py::arg("seed") = 0, py::arg("lr") = 1e-3, py::arg("alpha_lr") = 1e-3, py::arg("probe_every") = 100,
       py::arg("probe_reps") = 100, py::arg("p0") = 0.499);

    m.def("run_vae_synthetic", [](const std::string& estimator, const std::string& likelihood, int latent, int hidden,
                                  int k, int batch, int steps, std::uint64_t seed, int count, int side, double lr,
                                  int probe_every, int probe_reps) {
        TrainConfig cfg;
        cfg.estimator = parse_estimator(estimator);
        cfg.k = k;
        cfg.steps = steps;
        cfg.seed = seed;
        cfg.lr_eta = cfg.lr_theta = lr;
        cfg.probe_every = probe_every;
        cfg.probe_reps = probe_reps;
        VaeConfig vc;
        vc.likelihood = parse_likelihood(likelihood);
        vc.latent = latent;
        vc.hidden = hidden;
        vc.batch = batch;
        Rng data_rng = Rng(seed).fork(7);
        vc.data = synthetic_bars(count, side, data_rng);
        cfg.problem = std::move(vc);
        TrainResult r;
        {
            py::gil_scoped_release release;
            r = run_training(cfg);
        }
        return result_to_dict(r);
    }, py::arg("estimator") = "double-cv", py::arg("likelihood") = "bernoulli", py::arg("latent") = 16,
       py::arg("hidden") = 32, py::arg("k") = 2, py::arg("batch") = 50, py::arg("steps") = 1000, py::arg("seed") = 0,
       py::arg("count") = 512, py::arg("side") = 8, py::arg("lr") = 1e-3, py::arg("probe_every") = 100,
       py::arg("probe_reps") = 20);

    m.def("run_oracle_gates", [](std::uint64_t seed) {
        py::list out;
        for (const auto& g : run_oracle_gates(seed)) {
            py::dict d;
            d["name"] = g.name;
            d["passed"] = g.passed;
            d["detail"] = g.detail;
            d["seconds"] = g.seconds;
            out.append(d);
        }
        return out;
    }, py::arg("seed") = 20240);

    m.def("load_mnist_idx", [](const std::string& images, std::optional<std::string> labels) {
        const ImageDataset ds = load_mnist_idx(images, labels);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), ds.pixels());
        for (std::size_t n = 0; n < ds.size(); ++n) x.row(static_cast<Eigen::Index>(n)) = ds.images[n].transpose();
        return py::make_tuple(x, ds.labels, ds.rows, ds.cols);
    }, py::arg("images"), py::arg("labels") = py::none(),
       "(images N x rows*cols in [0,1], labels, rows, cols)");
}
