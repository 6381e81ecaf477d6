#include "dcv/gates.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "dcv/alpha_control.hpp"
#include "dcv/oracle.hpp"

namespace dcv {

namespace {

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

Vec uniform_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
    return v;
}

double rel_error(const Vec& approx, const Vec& exact) {
    const double scale = std::max({approx.cwiseAbs().maxCoeff(), exact.cwiseAbs().maxCoeff(), 1e-300});
    return (approx - exact).cwiseAbs().maxCoeff() / scale;
}

// Decoder D -> hidden -> hidden -> out with random weights, biases and
// (for Gaussian) log-variances.
DecoderParams random_decoder(Rng& rng, int latent, int hidden, int out, Likelihood lik) {
    DecoderParams dec(MlpParams({latent, hidden, hidden, out}), lik);
    dec.net.init_uniform(rng);
    for (int l = 0; l < dec.net.num_layers(); ++l)
        for (Eigen::Index i = 0; i < dec.net.bias(l).size(); ++i) dec.net.bias(l)[i] = uniform(rng, -0.5, 0.5);
    if (lik == Likelihood::gaussian) dec.log_var = uniform_vec(rng, out, -1.0, 1.0);
    return dec;
}

Vec random_data(Rng& rng, int n, Likelihood lik) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = lik == Likelihood::bernoulli ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : uniform(rng, -1, 1);
    return y;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace

GateResult gate_unbiasedness(std::uint64_t seed, int draws, double rel_tol) {
    Timer timer;
    Rng rng = Rng(seed).fork(101);
    double worst = 0.0;
    std::string worst_where;
    int checked = 0;
    for (int d = 1; d <= 3; ++d) {
        for (int k = 2; k <= 3; ++k) {
            for (int draw = 0; draw < draws; ++draw) {
                const LogitVector eta(uniform_vec(rng, d, -2.0, 2.0));
                const double alpha = uniform(rng, -2.0, 2.0);
                const double baseline = uniform(rng, -1.0, 1.0);
                const ToyObjective toy(d);
                const DecoderParams dec = random_decoder(rng, d, 4, 3, Likelihood::bernoulli);
                const ElboObjective elbo(dec, eta, random_data(rng, 3, Likelihood::bernoulli));
                for (const Objective* obj : {static_cast<const Objective*>(&toy), static_cast<const Objective*>(&elbo)}) {
                    const ExactMoments m = exact_moments(eta, *obj);
                    for (EstimatorKind kind : all_estimators()) {
                        if (uses_antithetic(kind) && k != 2) continue;
                        const EstimatorFn fn = bind_estimator(kind, eta, *obj, m, alpha, baseline);
                        const Vec mean = estimator_expectation_exact(fn, m, eta, k, uses_antithetic(kind));
                        const double err = rel_error(mean, m.exact_grad);
                        ++checked;
                        if (err > worst) {
                            worst = err;
                            worst_where = std::string(estimator_name(kind)) + " D=" + std::to_string(d) +
                                          " K=" + std::to_string(k) + (obj == &toy ? " toy" : " elbo");
                        }
                    }
                }
            }
        }
    }
    GateResult r{"unbiasedness", worst < rel_tol, "", timer.seconds()};
    r.detail = std::to_string(checked) + " estimator expectations, worst rel err " + fmt(worst) + " (" +
               worst_where + "), tol " + fmt(rel_tol);
    return r;
}

GateResult gate_rloo_bound(std::uint64_t seed, int instances, double cov_tol) {
    Timer timer;
    Rng rng = Rng(seed).fork(102);
    int violations = 0, strict = 0;
    double worst_cov = 0.0, worst_split = 0.0;
    for (int i = 0; i < instances; ++i) {
        const int d = uniform_int(rng, 1, 3);
        const int k = uniform_int(rng, 2, 3);
        const LogitVector eta(uniform_vec(rng, d, -2.0, 2.0));
        RlooDecomposition dec;
        if (i % 2 == 0) {
            dec = rloo_decomposition_exact(eta, ToyObjective(d, uniform(rng, 0.05, 0.95)), k);
        } else {
            const DecoderParams p = random_decoder(rng, d, 4, 3, Likelihood::bernoulli);
            dec = rloo_decomposition_exact(eta, ElboObjective(p, eta, random_data(rng, 3, Likelihood::bernoulli)), k);
        }
        if (dec.var_rloo < dec.var_rstar) ++violations;
        if (dec.var_rloo > dec.var_rstar) ++strict;
        worst_cov = std::max(worst_cov, dec.cov_max_abs);
        worst_split = std::max(worst_split, std::abs(dec.var_rloo - dec.var_rstar - dec.var_residual));
    }
    GateResult r{"rloo_bound", violations == 0 && worst_cov <= cov_tol && worst_split <= cov_tol, "",
                 timer.seconds()};
    r.detail = std::to_string(instances) + " instances, " + std::to_string(violations) +
               " with Var(RLOO) < Var(R*), " + std::to_string(strict) + " strict; max |Cov(R*,E)| " +
               fmt(worst_cov) + ", max |Var split residual| " + fmt(worst_split);
    return r;
}

GateResult gate_zero_variance_linear(std::uint64_t seed, int instances, double tol) {
    Timer timer;
    Rng rng = Rng(seed).fork(103);
    double worst = 0.0;
    std::int64_t tuples = 0;
    for (int i = 0; i < instances; ++i) {
        const int d = uniform_int(rng, 1, 8);
        const LogitVector eta(uniform_vec(rng, d, -3.0, 3.0));
        const LinearObjective f(uniform(rng, -2.0, 2.0), uniform_vec(rng, d, -3.0, 3.0));
        const ExactMoments m = exact_moments(eta, f);
        const MeanCov mc = mean_and_covdiag(eta);
        // d/deta E[c + w.x] = mu (1 - mu) w
        const Vec exact = mc.covdiag.cwiseProduct(f.eval(mc.mu).input_grad);
        const EstimatorFn fn = bind_estimator(EstimatorKind::double_cv_mf, eta, f, m, -1.0);
        enumerate_tuples(m, eta, 2, false, [&](double, const SampleBatch& b) {
            worst = std::max(worst, (fn(b) - exact).cwiseAbs().maxCoeff());
            ++tuples;
        });
    }
    GateResult r{"zero_variance_linear", worst < tol, "", timer.seconds()};
    r.detail = std::to_string(tuples) + " tuples over " + std::to_string(instances) + " linear objectives, max dev " +
               fmt(worst) + ", tol " + fmt(tol);
    return r;
}

GateResult gate_k2_closed_form(std::uint64_t seed, int batches, double tol) {
    Timer timer;
    Rng rng = Rng(seed).fork(104);
    double worst = 0.0;
    for (int i = 0; i < batches; ++i) {
        const int d = uniform_int(rng, 1, 10);
        const LogitVector eta(uniform_vec(rng, d, -3.0, 3.0));
        std::vector<ObjectiveEval> evals(2);
        for (auto& ev : evals) {
            ev.value = uniform(rng, -5.0, 5.0);
            ev.input_grad = uniform_vec(rng, d, -2.0, 2.0);
        }
        const SampleBatch b = assemble_batch(eta, sample_batch(eta, rng, 2), evals);
        const double alpha = uniform(rng, -3.0, 3.0);
        worst = std::max(worst, (double_cv_loo(b).at(alpha) - double_cv_k2_closed_form(b, alpha)).cwiseAbs().maxCoeff());
    }
    GateResult r{"k2_closed_form", worst < tol, "", timer.seconds()};
    r.detail = std::to_string(batches) + " random batches, max dev " + fmt(worst) + ", tol " + fmt(tol);
    return r;
}

GateResult gate_optimal_alpha(std::uint64_t seed, double grid_step) {
    Timer timer;
    Rng rng = Rng(seed).fork(105);
    // p0 near 1/2 makes f almost constant on {0,1}^2 and alpha* collapses to ~0.
    const double p0 = 0.05 + 0.3 * rng.uniform();
    const ToyObjective toy(2, p0);
    const LogitVector eta(uniform_vec(rng, 2, -2.0, 2.0));
    const ExactMoments m = exact_moments(eta, toy);

    std::vector<Vec> gs, hs;
    std::vector<double> ps;
    enumerate_tuples(m, eta, 2, false, [&](double p, const SampleBatch& b) {
        const K2Pair pair = k2_regression_pair(b);
        gs.push_back(pair.g);
        hs.push_back(pair.h);
        ps.push_back(p);
    });
    const double alpha_star = optimal_alpha_k2(gs, hs, ps);

    const int n = static_cast<int>(std::lround(4.0 / grid_step));
    double best_alpha = 0.0, best_var = INFINITY;
    for (int i = 0; i <= n; ++i) {
        const double a = -2.0 + i * grid_step;
        const double var = estimator_variance_exact(
            bind_estimator(EstimatorKind::double_cv, eta, toy, m, a), m, eta, 2);
        if (var < best_var) {
            best_var = var;
            best_alpha = a;
        }
    }
    const double var_star =
        estimator_variance_exact(bind_estimator(EstimatorKind::double_cv, eta, toy, m, alpha_star), m, eta, 2);
    const bool ok = std::abs(alpha_star - best_alpha) <= grid_step + 1e-12 && var_star <= best_var * (1 + 1e-12);
    GateResult r{"optimal_alpha", ok, "", timer.seconds()};
    r.detail = "p0=" + fmt(p0) + " eta=(" + fmt(eta[0]) + "," + fmt(eta[1]) + ") alpha*=" + fmt(alpha_star) + " grid argmin=" +
               fmt(best_alpha) + " var(alpha*)=" + fmt(var_star) + " grid min var=" + fmt(best_var);
    return r;
}

GateResult gate_gradient_check(std::uint64_t seed, int configs, double step, double rel_tol) {
    Timer timer;
    Rng rng = Rng(seed).fork(106);
    double worst_theta = 0.0, worst_input = 0.0;
    for (int c = 0; c < configs; ++c) {
        const int latent = uniform_int(rng, 1, 6), hidden = uniform_int(rng, 1, 6), out = uniform_int(rng, 1, 6);
        const Likelihood lik = c % 2 == 0 ? Likelihood::bernoulli : Likelihood::gaussian;
        DecoderParams dec = random_decoder(rng, latent, hidden, out, lik);
        const LogitVector eta(uniform_vec(rng, latent, -2.0, 2.0));
        const Vec y = random_data(rng, out, lik);
        const Vec x = uniform_vec(rng, latent, 0.0, 1.0);

        const ObjectiveEval ev = ElboObjective(dec, eta, y, false).eval(x);
        auto value_at = [&](const Vec& xx) { return ElboObjective(dec, eta, y, false).eval(xx).value; };

        Vec fd_input(latent);
        for (int i = 0; i < latent; ++i) {
            Vec xp = x, xm = x;
            xp[i] += step;
            xm[i] -= step;
            fd_input[i] = (value_at(xp) - value_at(xm)) / (2 * step);
        }
        Vec fd_theta(dec.param_count());
        const Eigen::Index nnet = dec.net.param_count();
        for (Eigen::Index i = 0; i < dec.param_count(); ++i) {
            double& p = i < nnet ? dec.net.theta()[i] : dec.log_var[i - nnet];
            const double orig = p;
            p = orig + step;
            const double fp = value_at(x);
            p = orig - step;
            const double fm = value_at(x);
            p = orig;
            fd_theta[i] = (fp - fm) / (2 * step);
        }
        worst_input = std::max(worst_input, rel_error(ev.input_grad, fd_input));
        worst_theta = std::max(worst_theta, rel_error(ev.theta_grad, fd_theta));
    }
    GateResult r{"gradient_check", worst_input < rel_tol && worst_theta < rel_tol, "", timer.seconds()};
    r.detail = std::to_string(configs) + " configs, max rel err input " + fmt(worst_input) + ", theta " +
               fmt(worst_theta) + ", tol " + fmt(rel_tol);
    return r;
}

std::vector<GateResult> run_oracle_gates(std::uint64_t seed) {
    return {gate_unbiasedness(seed),         gate_rloo_bound(seed),       gate_zero_variance_linear(seed),
            gate_k2_closed_form(seed),       gate_optimal_alpha(seed),    gate_gradient_check(seed)};
}

}  // namespace dcv
