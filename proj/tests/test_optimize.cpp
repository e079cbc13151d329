#include <cmath>

#include <gtest/gtest.h>

#include "cvqkd/error.hpp"
#include "cvqkd/optimize.hpp"

using namespace cvqkd;

TEST(NelderMead, FindsBoxedQuadraticMinimum) {
    auto f = [](const std::vector<double>& x) { return (x[0] - 0.3) * (x[0] - 0.3) + 2 * (x[1] + 0.7) * (x[1] + 0.7); };
    const auto r = nelder_mead_box(f, {0.9, 0.9}, {0.2, 0.2}, {-1, -1}, {1, 1}, 400, 1e-12);
    EXPECT_NEAR(r.x[0], 0.3, 1e-4);
    EXPECT_NEAR(r.x[1], -0.7, 1e-4);
    EXPECT_LE(r.evaluations, 400);
}

TEST(NelderMead, StaysInsideBox) {
    // Unconstrained minimum at (3, 3); the boxed one sits on the corner.
    auto f = [](const std::vector<double>& x) {
        EXPECT_LE(x[0], 1.0);
        EXPECT_LE(x[1], 1.0);
        return (x[0] - 3) * (x[0] - 3) + (x[1] - 3) * (x[1] - 3);
    };
    const auto r = nelder_mead_box(f, {0.0, 0.0}, {0.3, 0.3}, {-1, -1}, {1, 1}, 300, 1e-12);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(NelderMead, HonoursEvaluationBudget) {
    int calls = 0;
    auto f = [&](const std::vector<double>& x) {
        ++calls;
        return std::cos(5 * x[0]) + x[1] * x[1];
    };
    const auto r = nelder_mead_box(f, {0.1, 0.1}, {0.5, 0.5}, {-3, -3}, {3, 3}, 25, 0.0);
    EXPECT_LE(calls, 25);
    EXPECT_EQ(r.evaluations, calls);
}

TEST(SearchSpaceCheck, RejectsBadBounds) {
    SearchSpace s;
    s.va_min = 0.0;
    EXPECT_THROW(s.validate(), Error);
    s = {};
    s.ratio_min = 1.0;
    EXPECT_THROW(s.validate(), Error);
    s = {};
    s.cutoff_points = 0;
    EXPECT_THROW(s.validate(), Error);
    EXPECT_NO_THROW(SearchSpace{}.validate());
}

TEST(EvaluatePoint, ZeroCutoffIsBaseline) {
    const GaussianChannel ch{0.5, 0.05};
    const auto r = evaluate_point(Reconciliation::Reverse, ch, 0.9, {5.0, 0.0, 3.0});
    const auto base = baseline_keyrate({5.0, 0.9, Reconciliation::Reverse, 0.0}, ch);
    EXPECT_NEAR(r.key_rate, base.key_rate, 1e-6);
}

TEST(Optimize, NeverWorseThanBaselineAtTheSameModulation) {
    // The search includes the identity filter at the optimised baseline V_A.
    const auto ch = GaussianChannel::from_loss_db(10.0, 0.05);
    const auto opt = optimize_keyrate(Reconciliation::Reverse, ch, 0.9);
    const auto base = optimize_baseline(Reconciliation::Reverse, ch, 0.9, 0.1, 100.0);
    EXPECT_GE(opt.best.key_rate, base.key_rate - 1e-6);
    EXPECT_GE(opt.best.key_rate, opt.coarse_best);
    EXPECT_GT(opt.evaluations, 0u);
}

TEST(Optimize, PerfectChannelGainsNothing) {
    const GaussianChannel ch{1.0, 0.0};
    const auto opt = optimize_keyrate(Reconciliation::Direct, ch, 0.9);
    const auto base = optimize_baseline(Reconciliation::Direct, ch, 0.9, 0.1, 100.0);
    EXPECT_LE(opt.best.key_rate, base.key_rate + 1e-4);
}
