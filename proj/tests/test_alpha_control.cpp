#include <cmath>

#include <gtest/gtest.h>

#include "dcv/adam.hpp"
#include "dcv/alpha_control.hpp"
#include "dcv/oracle.hpp"

namespace dcv {
namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

TEST(Adam, ZeroGradientLeavesParams) {
    Vec p{{1.0, -2.0}};
    AdamState s;
    adam_step(p, Vec::Zero(2), s, 0.1, Direction::descend);
    EXPECT_EQ(p, (Vec{{1.0, -2.0}}));
    EXPECT_EQ(s.step, 1);
}

TEST(Adam, FirstStepIsLrTimesSign) {
    Vec p = Vec::Zero(3);
    AdamState s(3);
    adam_step(p, Vec{{4.0, -0.01, 1e3}}, s, 1e-3, Direction::ascend);
    EXPECT_NEAR(p[0], 1e-3, 1e-11);
    EXPECT_NEAR(p[1], -1e-3, 1e-9);
    EXPECT_NEAR(p[2], 1e-3, 1e-11);
    Vec q = Vec::Zero(1);
    AdamState t;
    adam_step(q, v1(4.0), t, 1e-3, Direction::descend);
    EXPECT_NEAR(q[0], -1e-3, 1e-11);
}

TEST(Adam, DeterministicTrajectories) {
    auto run = [] {
        Vec p{{0.5, 0.5}};
        AdamState s;
        for (int i = 0; i < 100; ++i) adam_step(p, Vec{{std::sin(i * 0.1), p[0] - p[1]}}, s, 1e-2, Direction::ascend);
        return p;
    };
    EXPECT_EQ(run(), run());
}

TEST(Adam, ShapeMismatch) {
    Vec p = Vec::Zero(2);
    AdamState s(3);
    EXPECT_THROW(adam_step(p, Vec::Zero(2), s, 1e-3, Direction::ascend), std::invalid_argument);
    AdamState s2;
    EXPECT_THROW(adam_step(p, Vec::Zero(3), s2, 1e-3, Direction::ascend), std::invalid_argument);
}

TEST(Adam, MinimizesQuadratic) {
    Vec p{{3.0, -4.0}};
    AdamState s;
    for (int i = 0; i < 5000; ++i) adam_step(p, 2 * (p - Vec{{1.0, 2.0}}), s, 1e-2, Direction::descend);
    EXPECT_NEAR(p[0], 1.0, 1e-3);
    EXPECT_NEAR(p[1], 2.0, 1e-3);
}

TEST(AlphaGrad, Examples) {
    EXPECT_EQ(alpha_grad({v1(1.0), v1(0.0)}, 0.7), 0.0);
    EXPECT_EQ(alpha_grad({v1(1.0), v1(-1.0)}, 0.0), -2.0);
    const GradEstimate g{v1(1.0), v1(-1.0)};
    EXPECT_EQ(alpha_minimizer(g), 1.0);
    EXPECT_EQ(alpha_grad(g, alpha_minimizer(g)), 0.0);
    EXPECT_EQ(alpha_minimizer({v1(1.0), v1(0.0)}), 0.0);
}

TEST(AlphaGrad, MatchesFiniteDifference) {
    const GradEstimate g{Vec{{0.3, -1.2, 2.0}}, Vec{{1.1, 0.4, -0.6}}};
    const double a = 0.37, h = 1e-6;
    const double fd = (g.at(a + h).squaredNorm() - g.at(a - h).squaredNorm()) / (2 * h);
    EXPECT_NEAR(alpha_grad(g, a), fd, 1e-8);
}

TEST(Adapt, ZeroGradientUnchanged) {
    const AlphaState s = adapt(AlphaState{}, 0.0, 1e-3);
    EXPECT_EQ(s.alpha, 0.0);
    EXPECT_EQ(s.step, 1);
}

TEST(Adapt, FirstStepMovesByLr) {
    EXPECT_NEAR(adapt(AlphaState{}, 2.5, 1e-3).alpha, -1e-3, 1e-11);
    EXPECT_NEAR(adapt(AlphaState{}, -0.2, 1e-3).alpha, 1e-3, 1e-10);
}

TEST(Adapt, RejectsNonPositiveLr) {
    EXPECT_THROW(adapt(AlphaState{}, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(adapt(AlphaState{}, 1.0, -1e-3), std::invalid_argument);
}

TEST(Adapt, ConvergesOnFixedQuadratic) {
    const GradEstimate g{Vec{{0.3, -1.2, 2.0}}, Vec{{1.1, 0.4, -0.6}}};
    const double target = alpha_minimizer(g);
    AlphaState s;
    for (int i = 0; i < 10000; ++i) s = adapt(s, alpha_grad(g, s.alpha), 1e-3);
    EXPECT_NEAR(s.alpha, target, 1e-3);
}

TEST(OptimalAlpha, PerfectCorrelation) {
    const std::vector<Vec> g{Vec{{1.0, 2.0}}, Vec{{-0.5, 0.3}}};
    std::vector<Vec> neg;
    for (const auto& x : g) neg.push_back(-x);
    EXPECT_NEAR(optimal_alpha_k2(g, g), 1.0, 1e-15);
    EXPECT_NEAR(optimal_alpha_k2(g, neg), -1.0, 1e-15);
}

TEST(OptimalAlpha, DegenerateHGivesZero) {
    const std::vector<Vec> g{Vec{{1.0}}, Vec{{2.0}}};
    const std::vector<Vec> h{Vec{{0.0}}, Vec{{0.0}}};
    EXPECT_EQ(optimal_alpha_k2(g, h), 0.0);
}

TEST(OptimalAlpha, MismatchedInputs) {
    const std::vector<Vec> g{Vec{{1.0}}, Vec{{2.0}}};
    const std::vector<Vec> h{Vec{{1.0}}};
    EXPECT_THROW(optimal_alpha_k2(g, h), std::invalid_argument);
    EXPECT_THROW(optimal_alpha_k2(g, g, {0.5}), std::invalid_argument);
}

// Exhaustive D = 1 toy instance: alpha* beats every point of a coarse grid.
TEST(OptimalAlpha, ExhaustiveD1BeatsGrid) {
    for (const double p0 : {0.1, 0.3, 0.499}) {
        const ToyObjective toy(1, p0);
        const LogitVector eta(v1(0.6));
        const ExactMoments m = exact_moments(eta, toy);
        std::vector<Vec> gs, hs;
        std::vector<double> ps;
        enumerate_tuples(m, eta, 2, false, [&](double p, const SampleBatch& b) {
            const K2Pair pair = k2_regression_pair(b);
            gs.push_back(pair.g);
            hs.push_back(pair.h);
            ps.push_back(p);
        });
        const double a = optimal_alpha_k2(gs, hs, ps);
        const double var_star = estimator_variance_exact(EstimatorKind::double_cv, eta, toy, 2, a);
        for (double grid = -2.0; grid <= 2.0 + 1e-12; grid += 0.5)
            EXPECT_LE(var_star, estimator_variance_exact(EstimatorKind::double_cv, eta, toy, 2, grid) * (1 + 1e-12) + 1e-300)
                << "p0=" << p0 << " grid=" << grid;
    }
}

}  // namespace
}  // namespace dcv
