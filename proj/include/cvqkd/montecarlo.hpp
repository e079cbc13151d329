#pragma once

// Sample-level simulation of the prepare-and-measure protocol with
// rejection-sampled post-selection. Used as an independent check of the
// quadrature pipeline.
//
// Random stream: the run is cut into kShards fixed shards. Shard s draws from
// std::mt19937_64 seeded by std::seed_seq{seed_lo32, seed_hi32, s}; uniforms
// are (word >> 11 + 0.5) * 2^-53 and normals come from Box-Muller. The shard
// layout does not depend on the number of worker threads, so results are
// bitwise identical for any --jobs value.

#include <cstdint>
#include <string>
#include <vector>

#include "cvqkd/keyrate.hpp"
#include "cvqkd/postselection.hpp"

namespace cvqkd {

inline constexpr unsigned kShards = 16;
inline constexpr const char* kRngName = "mt19937_64+seed_seq(seed_lo,seed_hi,shard)/box-muller";

struct McConfig {
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t seed = 1;
    double modulation_variance = 1.0;
    double transmission = 1.0;
    double excess_noise = 0.0;
    double target_variance = 0.0;  // V_PS, absolute
    double cutoff = 0.0;           // Delta, absolute

    void validate() const;
    JointDistribution joint() const { return {modulation_variance, transmission, excess_noise}; }
    PostSelectionFilter filter() const;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct McEstimate {
    std::uint64_t n_total = 0;
    std::uint64_t n_accepted = 0;
    Estimate keep_fraction;
    Estimate var_a;  // measurement units, raw second moments
    Estimate var_b;
    Estimate cov_ab;
    Estimate mean_a;
    Estimate mean_b;
    /// Binned plug-in MI with the Miller-Madow correction applied. Its se is
    /// the sampling error plus the size of that correction, as a bound on
    /// the binning bias.
    Estimate mi;
    double mi_plugin = 0.0;
    double mi_bias_bound = 0.0;
    int bins_a = 0;
    int bins_b = 0;
};

McEstimate simulate(const McConfig& cfg, unsigned jobs = 1);

struct ComparisonLine {
    std::string statistic;
    double analytic = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double sigmas = 0.0;
    bool pass = false;
};

struct McReport {
    McConfig config;
    McEstimate estimate;
    std::vector<ComparisonLine> lines;
    bool passed = false;
};

McReport compare(const McConfig& cfg, double tol_sigmas, const Tolerances& tol = {}, unsigned jobs = 1);

/// Raw-sample dump: 8-byte magic "CVQKDMC1", uint32 header length, JSON
/// header (config and RNG name), then per sample float64 x_A, float64 x_B,
/// uint8 accepted. Little endian throughout.
void dump_samples(const McConfig& cfg, const std::string& path);

}  // namespace cvqkd
