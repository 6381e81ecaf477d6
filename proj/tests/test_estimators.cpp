#include <cmath>

#include <gtest/gtest.h>

#include "dcv/alpha_control.hpp"
#include "dcv/estimators.hpp"
#include "dcv/oracle.hpp"

namespace dcv {
namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
    return v;
}

// Batch with arbitrary (nonlinear-looking) values and gradients, which is
// all the estimators consume.
SampleBatch random_batch(Rng& rng, int d, int k, const LogitVector& eta) {
    std::vector<BinarySample> xs = sample_batch(eta, rng, k);
    std::vector<ObjectiveEval> evals;
    for (int j = 0; j < k; ++j) evals.push_back({-1.0 + 2.0 * rng.uniform(), random_vec(rng, d, -2.0, 2.0), Vec()});
    return assemble_batch(eta, std::move(xs), evals);
}

SampleBatch toy_batch(const LogitVector& eta, std::vector<std::vector<std::uint8_t>> bits, double p0 = 0.499) {
    std::vector<BinarySample> xs;
    for (auto& b : bits) xs.emplace_back(std::move(b));
    return evaluate_batch(eta, std::move(xs), ToyObjective(eta.size(), p0));
}

// Leave-one-out average written pairwise: (1/K) sum_k (a_k - mean_{j!=k} a_j) s_k.
Vec loo_pairwise(const Vec& a, const Mat& s) {
    const int k = static_cast<int>(a.size());
    Vec out = Vec::Zero(s.rows());
    for (int i = 0; i < k; ++i) {
        double others = 0.0;
        for (int j = 0; j < k; ++j)
            if (j != i) others += a[j];
        out += (a[i] - others / (k - 1)) * s.col(i);
    }
    return out / k;
}

TEST(Reinforce, Examples) {
    const LogitVector eta(v1(0.0));
    const SampleBatch b = toy_batch(eta, {{1}});
    EXPECT_NEAR(reinforce(b, 0.0).u[0], 0.1255005, 1e-15);
    EXPECT_EQ(reinforce(b, b.fvals[0]).u[0], 0.0);
    EXPECT_EQ(reinforce(b, 0.0).v, Vec::Zero(1));
    const Vec e = estimator_expectation_exact(EstimatorKind::reinforce, eta, ToyObjective(1), 1);
    EXPECT_NEAR(e[0], 5e-4, 1e-15);
}

TEST(Rloo, Examples) {
    const LogitVector eta(v1(0.0));
    EXPECT_NEAR(rloo(toy_batch(eta, {{1}, {0}})).u[0], 0.001, 1e-15);
    EXPECT_EQ(rloo(toy_batch(eta, {{1}, {1}})).u[0], 0.0);
    EXPECT_NEAR(estimator_expectation_exact(EstimatorKind::rloo, eta, ToyObjective(1), 2)[0], 5e-4, 1e-15);
    EXPECT_THROW(rloo(toy_batch(eta, {{1}})), std::invalid_argument);
}

TEST(Rloo, CovarianceFormMatchesPairwise) {
    Rng rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 1 + rep % 5, k = 2 + rep % 6;
        const LogitVector eta(random_vec(rng, d, -2.0, 2.0));
        const SampleBatch b = random_batch(rng, d, k, eta);
        EXPECT_LT((rloo(b).u - rloo_pairwise(b)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((rloo(b).u - loo_pairwise(b.fvals, b.scores)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(RStar, Examples) {
    const LogitVector eta(v1(0.0));
    const SampleBatch b = toy_batch(eta, {{1}, {0}});
    EXPECT_NEAR(r_star(b, 0.250001).u[0], 5e-4, 1e-15);
    const SampleBatch c = evaluate_batch(eta, {BinarySample({1}), BinarySample({0})}, LinearObjective(3.0, v1(0.0)));
    EXPECT_EQ(r_star(c, 3.0).u[0], 0.0);
}

TEST(DoubleCvMeanfield, LinearZeroVarianceAllPairs) {
    const LogitVector eta(v1(0.0));
    const LinearObjective f(0.0, v1(2.0));
    const ObjectiveEval f_mu = f.eval(eta.mean());
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const SampleBatch batch = evaluate_batch(
                eta, {BinarySample({static_cast<std::uint8_t>(a)}), BinarySample({static_cast<std::uint8_t>(b)})}, f);
            EXPECT_NEAR(double_cv_meanfield(batch, f_mu).at(-1.0)[0], 0.5, 1e-15);
            EXPECT_NEAR(double_cv_loo(batch).at(-1.0)[0], 0.5, 1e-15);
            EXPECT_NEAR(double_cv_k2_closed_form(batch, -1.0)[0], 0.5, 1e-15);
        }
}

TEST(DoubleCvMeanfield, ZeroGradientAtMeanReducesToRloo) {
    const LogitVector eta(v1(0.0));
    const ToyObjective toy(1, 0.5);
    const SampleBatch b = toy_batch(eta, {{1}, {0}}, 0.5);
    const GradEstimate g = double_cv_meanfield(b, toy.eval(eta.mean()));
    EXPECT_EQ(g.v, Vec::Zero(1));
    EXPECT_EQ(g.u, rloo(b).u);
}

TEST(DoubleCvMeanfield, ExhaustivelyUnbiased) {
    const LogitVector eta(Vec{{0.3, -0.9}});
    const ToyObjective toy(2, 0.2);
    const Vec exact = exact_moments(eta, toy).exact_grad;
    for (const double alpha : {-1.0, 0.37, 2.0}) {
        const Vec e = estimator_expectation_exact(EstimatorKind::double_cv_mf, eta, toy, 2, alpha);
        EXPECT_LT((e - exact).cwiseAbs().maxCoeff(), 1e-10 * exact.cwiseAbs().maxCoeff());
    }
}

TEST(DoubleCvLoo, ZeroGradientsGiveRloo) {
    Rng rng(3);
    const LogitVector eta(random_vec(rng, 3, -1.0, 1.0));
    SampleBatch b = random_batch(rng, 3, 4, eta);
    b.input_grads.setZero();
    const GradEstimate g = double_cv_loo(b);
    EXPECT_EQ(g.v, Vec::Zero(3));
    EXPECT_EQ(g.u, rloo(b).u);
}

TEST(DoubleCvLoo, ExhaustivelyUnbiasedD3) {
    const LogitVector eta(Vec{{0.3, -0.9, 1.4}});
    const ToyObjective toy(3, 0.2);
    const Vec exact = exact_moments(eta, toy).exact_grad;
    for (const int k : {2, 3}) {
        const Vec e = estimator_expectation_exact(EstimatorKind::double_cv, eta, toy, k, 0.37);
        EXPECT_LT((e - exact).cwiseAbs().maxCoeff(), 1e-10 * exact.cwiseAbs().maxCoeff()) << "K=" << k;
    }
}

TEST(DoubleCvLoo, K2ClosedFormAndSignConvention) {
    Rng rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + rep % 4;
        const LogitVector eta(random_vec(rng, d, -2.0, 2.0));
        const SampleBatch b = random_batch(rng, d, 2, eta);
        const double alpha = -2.0 + 4.0 * rng.uniform();
        const GradEstimate g = double_cv_loo(b);
        EXPECT_LT((g.at(alpha) - double_cv_k2_closed_form(b, alpha)).cwiseAbs().maxCoeff(), 1e-12);
        // The regression form (g - alpha h)/2 is the same estimator: u = g/2, v = -h/2.
        const K2Pair pair = k2_regression_pair(b);
        EXPECT_LT((g.at(alpha) - 0.5 * (pair.g - alpha * pair.h)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((g.u - 0.5 * pair.g).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((g.v + 0.5 * pair.h).cwiseAbs().maxCoeff(), 1e-14);
    }
    const LogitVector eta3 = LogitVector::zeros(2);
    EXPECT_THROW(double_cv_k2_closed_form(random_batch(rng, 2, 3, eta3), 0.5), std::invalid_argument);
}

// g(alpha) = u + alpha v against a direct evaluation of the doubled
// leave-one-out sum at two alphas.
TEST(AffineIdentity, AgainstDirectRecomputation) {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + rep % 4, k = 2 + rep % 4;
        const LogitVector eta(random_vec(rng, d, -2.0, 2.0));
        const SampleBatch b = random_batch(rng, d, k, eta);
        const Vec gsum = b.input_grads.rowwise().sum();
        const Vec gmean = gsum / k;
        Vec b_loo(k), b_mf(k), b_self(k);
        const ObjectiveEval f_mu{0.3, random_vec(rng, d, -1.0, 1.0), Vec()};
        for (int j = 0; j < k; ++j) {
            b_loo[j] = ((gsum - b.input_grads.col(j)) / (k - 1)).dot(b.scores.col(j));
            b_mf[j] = f_mu.input_grad.dot(b.scores.col(j));
        }
        for (const double alpha : {-0.8, 1.3}) {
            const Vec direct_loo = loo_pairwise(b.fvals + alpha * b_loo, b.scores) - alpha * b.covdiag.cwiseProduct(gmean);
            EXPECT_LT((double_cv_loo(b).at(alpha) - direct_loo).cwiseAbs().maxCoeff(), 1e-13);

            const Vec direct_mf =
                loo_pairwise(b.fvals + alpha * b_mf, b.scores) - alpha * b.covdiag.cwiseProduct(f_mu.input_grad);
            EXPECT_LT((double_cv_meanfield(b, f_mu).at(alpha) - direct_mf).cwiseAbs().maxCoeff(), 1e-13);

            Vec bxk = Vec::Zero(d), bxj = Vec::Zero(d);
            const double bsum = b_loo.sum();
            for (int j = 0; j < k; ++j) {
                bxk += b_loo[j] * b.scores.col(j);
                bxj += (bsum - b_loo[j]) / (k - 1) * b.scores.col(j);
            }
            const Vec direct_bxk = rloo(b).u + alpha * (bxk / k - b.covdiag.cwiseProduct(gmean));
            const Vec direct_bxj = rloo(b).u - alpha * bxj / k;
            EXPECT_LT((half_cv(b, HalfMode::bxk_only).at(alpha) - direct_bxk).cwiseAbs().maxCoeff(), 1e-13);
            EXPECT_LT((half_cv(b, HalfMode::bxj_only).at(alpha) - direct_bxj).cwiseAbs().maxCoeff(), 1e-13);
        }
    }
}

TEST(HalfCv, AlphaZeroIsRloo) {
    Rng rng(6);
    const LogitVector eta(random_vec(rng, 3, -1.0, 1.0));
    const SampleBatch b = random_batch(rng, 3, 3, eta);
    EXPECT_EQ(half_cv(b, HalfMode::bxk_only).at(0.0), rloo(b).u);
    EXPECT_EQ(half_cv(b, HalfMode::bxj_only).at(0.0), rloo(b).u);
}

TEST(HalfCv, ExhaustivelyUnbiasedAndBoundedByRStar) {
    const LogitVector eta(Vec{{0.8, -0.4}});
    const ToyObjective toy(2, 0.2);
    const ExactMoments m = exact_moments(eta, toy);
    for (const auto kind : {EstimatorKind::half_bxk, EstimatorKind::half_bxj}) {
        const Vec e = estimator_expectation_exact(kind, eta, toy, 2, 0.7);
        EXPECT_LT((e - m.exact_grad).cwiseAbs().maxCoeff(), 1e-10 * m.exact_grad.cwiseAbs().maxCoeff());
    }
    const double var_rstar = estimator_variance_exact(EstimatorKind::rstar, eta, toy, 2);
    for (double alpha = -2.0; alpha <= 2.0; alpha += 0.25)
        EXPECT_GE(estimator_variance_exact(EstimatorKind::half_bxj, eta, toy, 2, alpha), var_rstar * (1 - 1e-12));
}

// The b(x_j)-only control variate has zero mean, so no correction is needed.
TEST(HalfCv, BxjControlVariateHasZeroMean) {
    const LogitVector eta(Vec{{0.8, -0.4, 1.9}});
    Rng rng(9);
    DecoderParams dec(MlpParams({3, 4, 3}), Likelihood::bernoulli);
    dec.net.init_uniform(rng);
    const ElboObjective elbo(dec, eta, Vec{{1.0, 0.0, 1.0}}, true);
    const ExactMoments m = exact_moments(eta, elbo);
    for (const int k : {2, 3}) {
        const Vec ev = estimator_expectation_exact(
            [](const SampleBatch& b) -> Vec { return half_cv(b, HalfMode::bxj_only).v; }, m, eta, k);
        EXPECT_LT(ev.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Muprop, Examples) {
    const LogitVector eta(v1(0.0));
    const LinearObjective lin(0.0, v1(2.0));
    for (const std::uint8_t bit : {0, 1}) {
        const SampleBatch b = evaluate_batch(eta, {BinarySample({bit})}, lin);
        EXPECT_NEAR(muprop(b, lin.eval(eta.mean())).u[0], 0.5, 1e-15);
    }
    const LinearObjective flat(4.0, v1(0.0));
    const SampleBatch c = evaluate_batch(eta, {BinarySample({1}), BinarySample({0})}, flat);
    EXPECT_EQ(muprop(c, flat.eval(eta.mean())).u[0], 0.0);
    const ToyObjective toy(2, 0.2);
    const LogitVector eta2(Vec{{0.4, -1.1}});
    const Vec exact = exact_moments(eta2, toy).exact_grad;
    EXPECT_LT((estimator_expectation_exact(EstimatorKind::muprop, eta2, toy, 1) - exact).cwiseAbs().maxCoeff(),
              1e-10 * exact.cwiseAbs().maxCoeff());
}

TEST(Disarm, Examples) {
    const LogitVector eta(v1(0.0));
    EXPECT_EQ(disarm_k2(0.3, 0.1, BinarySample({1}), BinarySample({1}), eta).u[0], 0.0);
    EXPECT_NEAR(disarm_k2(0.251001, 0.249001, BinarySample({1}), BinarySample({0}), eta).u[0], 5e-4, 1e-15);
    EXPECT_NEAR(estimator_expectation_exact(EstimatorKind::disarm, eta, ToyObjective(1), 2)[0], 5e-4, 1e-15);
    const LogitVector eta2(Vec{{0.9, -0.3}});
    const ToyObjective toy(2, 0.2);
    const Vec exact = exact_moments(eta2, toy).exact_grad;
    EXPECT_LT((estimator_expectation_exact(EstimatorKind::disarm, eta2, toy, 2) - exact).cwiseAbs().maxCoeff(),
              1e-10 * exact.cwiseAbs().maxCoeff());
}

// DisARM is only unbiased for antithetic pairs; independent pairs show the bias.
TEST(Disarm, IndependentPairsAreBiased) {
    const LogitVector eta(Vec{{0.9, -0.3}});
    const ToyObjective toy(2, 0.2);
    const ExactMoments m = exact_moments(eta, toy);
    const Vec e = estimator_expectation_exact(bind_estimator(EstimatorKind::disarm, eta, toy, m, 0.0), m, eta, 2, false);
    EXPECT_GT((e - m.exact_grad).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Disarm, FourSamplesAveragePairs) {
    const LogitVector eta(Vec{{0.9, -0.3}});
    const ToyObjective toy(2, 0.2);
    const std::vector<BinarySample> xs{BinarySample({1, 0}), BinarySample({0, 0}), BinarySample({1, 1}),
                                       BinarySample({1, 0})};
    const SampleBatch b = evaluate_batch(eta, xs, toy);
    const Vec first = disarm_k2(b.fvals[0], b.fvals[1], xs[0], xs[1], eta).u;
    const Vec second = disarm_k2(b.fvals[2], b.fvals[3], xs[2], xs[3], eta).u;
    EXPECT_LT((disarm(b, eta).u - 0.5 * (first + second)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(disarm(evaluate_batch(eta, {xs[0], xs[1], xs[2]}, toy), eta), std::invalid_argument);
}

TEST(Registry, NamesRoundTrip) {
    for (const auto kind : all_estimators()) EXPECT_EQ(parse_estimator(estimator_name(kind)), kind);
    EXPECT_EQ(all_estimators().size(), 9u);
    EXPECT_EQ(parse_estimator("double-cv"), EstimatorKind::double_cv);
    EXPECT_EQ(parse_estimator("half-bxj"), EstimatorKind::half_bxj);
    EXPECT_THROW(parse_estimator("vimco"), std::invalid_argument);
}

TEST(Registry, SampleCountChecks) {
    EXPECT_THROW(check_sample_count(EstimatorKind::rloo, 1), std::invalid_argument);
    EXPECT_THROW(check_sample_count(EstimatorKind::double_cv, 1), std::invalid_argument);
    EXPECT_THROW(check_sample_count(EstimatorKind::disarm, 3), std::invalid_argument);
    EXPECT_NO_THROW(check_sample_count(EstimatorKind::disarm, 4));
    EXPECT_NO_THROW(check_sample_count(EstimatorKind::reinforce, 1));
    EXPECT_NO_THROW(check_sample_count(EstimatorKind::muprop, 1));
    EXPECT_TRUE(has_alpha(EstimatorKind::double_cv));
    EXPECT_FALSE(has_alpha(EstimatorKind::rloo));
}

TEST(Registry, NonAlphaEstimatorsHaveZeroV) {
    Rng rng(10);
    const LogitVector eta(random_vec(rng, 3, -1.0, 1.0));
    const SampleBatch b = random_batch(rng, 3, 2, eta);
    EstimatorContext ctx;
    ctx.exact_ef = 0.1;
    ctx.f_mu = ObjectiveEval{0.2, Vec::Ones(3), Vec()};
    ctx.eta = eta;
    for (const auto kind : all_estimators()) {
        const GradEstimate g = estimate(kind, b, ctx);
        EXPECT_TRUE(g.u.allFinite());
        if (!has_alpha(kind)) EXPECT_EQ(g.v, Vec::Zero(3)) << estimator_name(kind);
    }
    EXPECT_THROW(estimate(EstimatorKind::rstar, b, EstimatorContext{}), std::invalid_argument);
    EXPECT_THROW(estimate(EstimatorKind::muprop, b, EstimatorContext{}), std::invalid_argument);
}

TEST(Batch, AssembleValidates) {
    const LogitVector eta = LogitVector::zeros(2);
    EXPECT_THROW(assemble_batch(eta, {BinarySample({1, 0})}, {}), std::invalid_argument);
    EXPECT_THROW(assemble_batch(eta, {BinarySample({1, 0, 1})}, {ObjectiveEval{0.0, Vec::Zero(3), Vec()}}),
                 std::invalid_argument);
}

}  // namespace
}  // namespace dcv
