#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cvqkd/error.hpp"
#include "cvqkd/montecarlo.hpp"

using namespace cvqkd;

namespace {

McConfig point(std::uint64_t n, std::uint64_t seed) {
    McConfig c;
    c.n_samples = n;
    c.seed = seed;
    c.modulation_variance = 2.0;
    c.transmission = 0.3;
    c.excess_noise = 0.1;
    const double vb = 0.3 * 2.1 + 1.0;
    c.target_variance = 3 * vb;
    c.cutoff = 1.5 * std::sqrt(vb);
    return c;
}

bool same(const Estimate& a, const Estimate& b) { return a.value == b.value && a.se == b.se; }

}  // namespace

TEST(Simulate, BitwiseIndependentOfThreadCount) {
    const auto cfg = point(200'000, 42);
    const auto a = simulate(cfg, 1);
    const auto b = simulate(cfg, 4);
    const auto c = simulate(cfg, 1);
    for (const auto* x : {&b, &c}) {
        EXPECT_EQ(a.n_accepted, x->n_accepted);
        EXPECT_TRUE(same(a.keep_fraction, x->keep_fraction));
        EXPECT_TRUE(same(a.var_a, x->var_a));
        EXPECT_TRUE(same(a.var_b, x->var_b));
        EXPECT_TRUE(same(a.cov_ab, x->cov_ab));
        EXPECT_TRUE(same(a.mi, x->mi));
    }
}

TEST(Simulate, SeedChangesStream) {
    EXPECT_NE(simulate(point(100'000, 1)).var_a.value, simulate(point(100'000, 2)).var_a.value);
}

TEST(Simulate, UnfilteredMomentsMatchModel) {
    auto cfg = point(1'000'000, 9);
    cfg.cutoff = 0.0;
    const auto e = simulate(cfg, 2);
    const auto jd = cfg.joint();
    EXPECT_EQ(e.n_accepted, e.n_total);
    EXPECT_NEAR(e.var_a.value, jd.alice_variance(), 4 * e.var_a.se);
    EXPECT_NEAR(e.var_b.value, jd.bob_variance(), 4 * e.var_b.se);
    EXPECT_NEAR(e.cov_ab.value, jd.covariance(), 4 * e.cov_ab.se);
    EXPECT_NEAR(e.mean_a.value, 0.0, 4 * e.mean_a.se);
}

TEST(Compare, AgreesWithQuadrature) {
    const auto rep = compare(point(1'000'000, 77), 3.0, {}, 2);
    EXPECT_TRUE(rep.passed);
    ASSERT_EQ(rep.lines.size(), 5u);
    for (const auto& l : rep.lines) EXPECT_TRUE(l.pass) << l.statistic << " " << l.sigmas;
}

TEST(Compare, CorruptedToleranceIsCaught) {
    // A loose quadrature tolerance shifts the analytic side enough to fail.
    McConfig c;
    c.n_samples = 1'000'000;
    c.seed = 12;
    c.modulation_variance = 2.0;
    c.transmission = 0.3;
    c.excess_noise = 0.1;
    const double vb = 0.3 * 2.1 + 1.0;
    c.target_variance = 2 * vb;
    c.cutoff = 0.0;
    EXPECT_TRUE(compare(c, 3.0, {}, 2).passed);
    EXPECT_FALSE(compare(c, 3.0, {1e-1, 1e-1}, 2).passed);
}

TEST(Dump, HeaderAndRecordsReadBack) {
    const auto cfg = point(20'000, 5);
    const auto path = (std::filesystem::temp_directory_path() / "cvqkd_dump_test.bin").string();
    dump_samples(cfg, path);
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    EXPECT_EQ(std::string(magic, 8), "CVQKDMC1");
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string text(len, '\0');
    in.read(text.data(), len);
    const auto header = nlohmann::json::parse(text);
    EXPECT_EQ(header["seed"].get<std::uint64_t>(), 5u);
    EXPECT_EQ(header["rng"].get<std::string>(), kRngName);
    std::uint64_t n = 0, kept = 0;
    double sbb = 0;
    char rec[17];
    while (in.read(rec, 17)) {
        double xa, xb;
        std::memcpy(&xa, rec, 8);
        std::memcpy(&xb, rec + 8, 8);
        ++n;
        if (rec[16]) {
            ++kept;
            sbb += xb * xb;
        }
    }
    EXPECT_EQ(n, cfg.n_samples);
    const auto e = simulate(cfg);
    EXPECT_EQ(kept, e.n_accepted);
    EXPECT_NEAR(sbb / kept, e.var_b.value, 1e-12 * e.var_b.value);
    std::filesystem::remove(path);
}

TEST(Config, Validation) {
    auto c = point(1, 1);
    EXPECT_THROW(c.validate(), Error);
    c = point(100'000, 1);
    c.target_variance = 0.5;
    EXPECT_THROW(c.validate(), Error);
}
