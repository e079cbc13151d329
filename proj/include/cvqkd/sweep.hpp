#pragma once

// Loss sweeps, single evaluations and Monte Carlo validation runs.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvqkd/config.hpp"
#include "cvqkd/montecarlo.hpp"

namespace cvqkd {

/// One loss point. Cutoff and V_PS are absolute (shot-noise units).
struct SweepRow {
    double loss_db = 0.0;
    double transmission = 1.0;
    double modulation_variance = 0.0;
    double cutoff = 0.0;
    double target_variance = 0.0;
    double bob_variance = 0.0;
    double gain = 1.0;
    double keep_fraction = 0.0;
    double mi_ab = 0.0;
    double holevo = 0.0;
    double key_rate = 0.0;
    double baseline_modulation_variance = 0.0;
    double key_rate_baseline = 0.0;
    bool secure = false;
    std::string error;
};

SweepRow row_from_result(double loss_db, const KeyRateResult& ps, const KeyRateResult& baseline);

/// Optimised post-selection and baseline at one loss.
SweepRow optimize_row(const RunConfig& cfg, double loss_db);

/// Fixed (V_A, cutoff, ratio) point from cfg, baseline at the same V_A.
SweepRow single_row(const RunConfig& cfg);

using Progress = std::function<void(std::size_t done, std::size_t total, const SweepRow& row)>;

/// One optimised row per loss point, in grid order, using cfg.effective_jobs() threads.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const Progress& progress = {});

std::string csv_header();
std::string csv_row(const SweepRow& row);
void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_table(std::ostream& out, const std::vector<SweepRow>& rows);

/// Five points covering identity filter, weak and strong filtering, and the
/// DR and RR operating regions.
std::vector<McConfig> default_mc_suite(const RunConfig& cfg);

struct ValidationRun {
    std::vector<McReport> reports;
    bool passed = false;
};

ValidationRun run_mc_validate(const RunConfig& cfg);
void write_mc_report(std::ostream& out, const RunConfig& cfg, const ValidationRun& run);

}  // namespace cvqkd
