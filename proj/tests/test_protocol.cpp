#include <cmath>

#include <gtest/gtest.h>

#include "cvqkd/error.hpp"
#include "cvqkd/protocol.hpp"

using namespace cvqkd;

TEST(Channel, LossConversion) {
    EXPECT_NEAR(transmission_from_loss_db(10.0), 0.1, 1e-15);
    EXPECT_NEAR(transmission_from_loss_db(0.0), 1.0, 0.0);
    EXPECT_NEAR(loss_db_from_transmission(0.5), 3.0102999566398120, 1e-12);
    EXPECT_THROW(transmission_from_loss_db(-1.0), Error);
    EXPECT_THROW((GaussianChannel{0.0, 0.1}.validate()), Error);
    EXPECT_THROW((GaussianChannel{0.5, -0.1}.validate()), Error);
}

TEST(Channel, OutputCmByHand) {
    const auto cm = channel_output_cm(2.0, {0.25, 0.1});
    EXPECT_NEAR(cm.a, 3.0, 1e-15);
    EXPECT_NEAR(cm.b, 1.525, 1e-15);
    EXPECT_NEAR(cm.c, std::sqrt(2.0), 1e-15);

    const auto id = channel_output_cm(3.0, {1.0, 0.0});
    EXPECT_NEAR(id.a, 4.0, 0.0);
    EXPECT_NEAR(id.b, 4.0, 0.0);
    EXPECT_NEAR(id.c, std::sqrt(15.0), 1e-15);
}

TEST(Channel, EvePurification) {
    EXPECT_NEAR(eve_epr_variance({0.5, 0.1}).variance, 1.1, 1e-15);
    EXPECT_NEAR(eve_epr_variance({0.3, 0.0}).variance, 1.0, 1e-15);
    EXPECT_NEAR(eve_epr_variance({1e-9, 0.2}).variance, 1.0, 1e-9);
}

TEST(Chi, ConversionRoundTrip) {
    EXPECT_EQ(chi_from_va(0.0), 0.0);
    EXPECT_NEAR(chi_from_va(2.0), 1.0 / std::sqrt(2.0), 1e-15);
    for (double va : {0.1, 1.0, 7.0, 300.0}) EXPECT_NEAR(va_from_chi(chi_from_va(va)), va, 1e-9 * va);
}

TEST(Baseline, PerfectChannelKeepsFullInformation) {
    // No loss and no noise: Eve holds nothing, K = beta * log2(1 + V_A) / 2.
    for (auto dir : {Reconciliation::Direct, Reconciliation::Reverse}) {
        const auto r = baseline_keyrate({4.0, 0.9, dir, 0.0}, {1.0, 0.0});
        EXPECT_NEAR(r.mi_ab, 0.5 * std::log2(5.0), 1e-12);
        EXPECT_NEAR(r.holevo, 0.0, 1e-7);
        EXPECT_NEAR(r.key_rate, 0.9 * 0.5 * std::log2(5.0), 1e-7);
        EXPECT_EQ(r.keep_fraction, 1.0);
    }
}

TEST(Baseline, MutualInformationIsShannonFormula) {
    const GaussianChannel ch{0.3, 0.05};
    const auto r = baseline_keyrate({5.0, 0.95, Reconciliation::Reverse, 0.0}, ch);
    EXPECT_NEAR(r.mi_ab, 0.5 * std::log2(1 + 0.3 * 5 / (1 + 0.3 * 0.05)), 1e-12);
    EXPECT_NEAR(gaussian_snr(5.0, ch), 0.3 * 5 / (1 + 0.3 * 0.05), 1e-15);
    EXPECT_NEAR(gaussian_snr(5.0, ch, 0.5), 0.3 * 5 / (1.5 + 0.3 * 0.05), 1e-15);
}

TEST(Baseline, DirectReconciliationThreeDbLimit) {
    const double xi = 1e-6;
    const auto above = optimize_baseline(Reconciliation::Direct, GaussianChannel::from_loss_db(2.9, xi), 1.0);
    const auto below = optimize_baseline(Reconciliation::Direct, GaussianChannel::from_loss_db(3.1, xi), 1.0);
    EXPECT_GT(above.key_rate, 0.0);
    EXPECT_LE(below.key_rate, 0.0);
}

TEST(Baseline, ReverseReconciliationBeatsThreeDb) {
    const auto r = optimize_baseline(Reconciliation::Reverse, GaussianChannel::from_loss_db(10.0, 0.01), 0.95);
    EXPECT_GT(r.key_rate, 0.0);
}

TEST(Baseline, OptimumDominatesScan) {
    const GaussianChannel ch = GaussianChannel::from_loss_db(6.0, 0.05);
    const auto best = optimize_baseline(Reconciliation::Reverse, ch, 0.9);
    for (double va = 0.05; va < 1e3; va *= 1.7) {
        EXPECT_LE(baseline_keyrate({va, 0.9, Reconciliation::Reverse, 0.0}, ch).key_rate, best.key_rate + 1e-9);
    }
}

TEST(Baseline, TrustedNoiseOnlyHurts) {
    const GaussianChannel ch{0.4, 0.02};
    const auto clean = baseline_keyrate({3.0, 0.9, Reconciliation::Reverse, 0.0}, ch);
    const auto noisy = baseline_keyrate({3.0, 0.9, Reconciliation::Reverse, 0.3}, ch);
    EXPECT_LT(noisy.mi_ab, clean.mi_ab);
}

TEST(Baseline, RejectsBadParameters) {
    EXPECT_THROW(baseline_keyrate({-1.0, 0.9, Reconciliation::Reverse, 0.0}, {0.5, 0.0}), Error);
    EXPECT_THROW(baseline_keyrate({1.0, 1.2, Reconciliation::Reverse, 0.0}, {0.5, 0.0}), Error);
}
