#pragma once

// Run configuration for the command-line tool. Files use INI syntax:
//
//   [run]        mode, direction, beta, xi, eve_reference, jobs, out
//   [loss]       db, start, stop, step
//   [point]      modulation_variance, cutoff, ratio        (single mode)
//   [search]     va_min, va_max, va_points, cutoff_min, cutoff_max,
//                cutoff_points, ratio_min, ratio_max, ratio_points,
//                max_refine_evaluations, simplex_tol
//   [tolerance]  moments, mi
//   [baseline]   trusted_noise, only  (only: sweep the baseline without post-selection)
//   [mc]         samples, seed, sigmas
//
// Cutoffs are in units of sqrt(V_B) and ratios are V_PS / V_B. Excess noise
// is referred to the channel input.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/optimize.hpp"

namespace cvqkd {

enum class Mode { Single, Sweep, Optimize, McValidate };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);
Reconciliation parse_direction(const std::string& text);
EveReference parse_eve_reference(const std::string& text);

struct LossGrid {
    double start = 0.0;
    double stop = 30.0;
    double step = 1.0;

    /// start, start+step, ... up to stop (inclusive, with 1e-9 slack).
    std::vector<double> points() const;
    static LossGrid parse(const std::string& text);  // "start:stop:step"
};

struct McSettings {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 20240601;
    double sigmas = 3.0;
};

struct RunConfig {
    std::optional<Mode> mode;
    Reconciliation direction = Reconciliation::Reverse;
    double beta = 0.9;
    double xi = 0.05;
    EveReference eve_reference = EveReference::NlaState;
    double loss_db = 10.0;  // single and optimize
    LossGrid loss_grid;     // sweep
    double modulation_variance = 2.0;
    double cutoff = 1.5;
    double ratio = 10.0;
    SearchSpace search;
    Tolerances tol;
    double trusted_noise = 0.0;
    bool baseline_only = false;
    McSettings mc;
    unsigned jobs = 0;  // 0: hardware concurrency
    std::string out;

    void validate() const;
    unsigned effective_jobs() const;
};

/// Parse an INI file into cfg, rejecting unknown sections and keys.
void load_config_file(const std::string& path, RunConfig& cfg);
void load_config_string(const std::string& text, RunConfig& cfg);

/// Normalised INI text that reproduces cfg when loaded.
std::string echo_config(const RunConfig& cfg);

}  // namespace cvqkd
