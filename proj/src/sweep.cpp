#include "cvqkd/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV field: quote only when needed.
std::string field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

SweepRow failed_row(double loss_db, const std::string& why) {
    SweepRow r;
    r.loss_db = loss_db;
    r.transmission = transmission_from_loss_db(loss_db);
    for (double* p : {&r.modulation_variance, &r.cutoff, &r.target_variance, &r.bob_variance, &r.gain,
                      &r.keep_fraction, &r.mi_ab, &r.holevo, &r.key_rate, &r.baseline_modulation_variance,
                      &r.key_rate_baseline}) {
        *p = kNan;
    }
    r.error = why;
    return r;
}

}  // namespace

SweepRow row_from_result(double loss_db, const KeyRateResult& ps, const KeyRateResult& baseline) {
    SweepRow r;
    const auto& d = ps.diagnostics;
    r.loss_db = loss_db;
    r.transmission = transmission_from_loss_db(loss_db);
    r.modulation_variance = d.modulation_variance;
    r.cutoff = d.cutoff;
    r.target_variance = d.target_variance;
    r.bob_variance = kNan;  // needs the channel; callers fill it in
    r.gain = d.gain;
    r.keep_fraction = ps.keep_fraction;
    r.mi_ab = ps.mi_ab;
    r.holevo = ps.holevo;
    r.key_rate = ps.key_rate;
    r.baseline_modulation_variance = baseline.diagnostics.modulation_variance;
    r.key_rate_baseline = baseline.key_rate;
    r.secure = ps.key_rate > 0.0;
    return r;
}

SweepRow optimize_row(const RunConfig& cfg, double loss_db) {
    try {
        const GaussianChannel ch = GaussianChannel::from_loss_db(loss_db, cfg.xi);
        const KeyRateResult base = optimize_baseline(cfg.direction, ch, cfg.beta, 1e-2, 1e4, cfg.trusted_noise);
        if (cfg.baseline_only) {
            // The baseline is the identity filter: no cutoff, unit gain, everything kept.
            SweepRow r = row_from_result(loss_db, base, base);
            r.bob_variance = channel_output_cm(r.modulation_variance, ch).b;
            r.cutoff = 0.0;
            r.target_variance = r.bob_variance;
            r.gain = 1.0;
            r.keep_fraction = 1.0;
            return r;
        }
        const OptimizationResult opt = optimize_keyrate(cfg.direction, ch, cfg.beta, cfg.search, cfg.tol, cfg.eve_reference);
        if (!std::isfinite(opt.best.key_rate)) {
            SweepRow r = failed_row(loss_db, "no parameter point could be evaluated");
            r.baseline_modulation_variance = base.diagnostics.modulation_variance;
            r.key_rate_baseline = base.key_rate;
            return r;
        }
        SweepRow r = row_from_result(loss_db, opt.best, base);
        r.bob_variance = channel_output_cm(r.modulation_variance, ch).b;
        return r;
    } catch (const std::exception& e) {
        return failed_row(loss_db, e.what());
    }
}

SweepRow single_row(const RunConfig& cfg) {
    const GaussianChannel ch = GaussianChannel::from_loss_db(cfg.loss_db, cfg.xi);
    const KeyRateResult ps = evaluate_point(cfg.direction, ch, cfg.beta,
                                            {cfg.modulation_variance, cfg.cutoff, cfg.ratio}, cfg.tol, cfg.eve_reference);
    const KeyRateResult base =
        baseline_keyrate({cfg.modulation_variance, cfg.beta, cfg.direction, cfg.trusted_noise}, ch);
    SweepRow r = row_from_result(cfg.loss_db, ps, base);
    r.bob_variance = channel_output_cm(r.modulation_variance, ch).b;
    return r;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const Progress& progress) {
    const std::vector<double> losses = cfg.loss_grid.points();
    std::vector<SweepRow> rows(losses.size());
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mu;

    auto worker = [&] {
        for (std::size_t i = next++; i < losses.size(); i = next++) {
            rows[i] = optimize_row(cfg, losses[i]);
            if (progress) {
                std::lock_guard lock(mu);
                progress(++done, losses.size(), rows[i]);
            }
        }
    };
    const unsigned jobs = std::min<std::size_t>(cfg.effective_jobs(), std::max<std::size_t>(1, losses.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

std::string csv_header() {
    return "loss_db,T,V_A,cutoff,V_PS,V_B,g,keep_fraction,mi_ab,holevo,K,V_A_baseline,K_baseline,secure,error";
}

std::string csv_row(const SweepRow& r) {
    std::string s;
    for (double v : {r.loss_db, r.transmission, r.modulation_variance, r.cutoff, r.target_variance, r.bob_variance,
                     r.gain, r.keep_fraction, r.mi_ab, r.holevo, r.key_rate, r.baseline_modulation_variance,
                     r.key_rate_baseline}) {
        s += num(v);
        s += ',';
    }
    s += r.secure ? "1," : "0,";
    s += field(r.error);
    return s;
}

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << csv_header() << '\n';
    for (const auto& r : rows) out << csv_row(r) << '\n';
}

void write_table(std::ostream& out, const std::vector<SweepRow>& rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%8s %8s %9s %9s %10s %8s %10s %12s %12s %7s\n", "loss_dB", "T", "V_A", "cutoff",
                  "V_PS", "keep", "g", "K", "K_baseline", "secure");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%8.3f %8.5f %9.4g %9.4g %10.4g %8.4g %10.5g %12.5g %12.5g %7s\n", r.loss_db,
                      r.transmission, r.modulation_variance, r.cutoff, r.target_variance, r.keep_fraction, r.gain,
                      r.key_rate, r.key_rate_baseline, r.error.empty() ? (r.secure ? "yes" : "no") : "error");
        out << buf;
    }
}

std::vector<McConfig> default_mc_suite(const RunConfig& cfg) {
    struct P {
        double va, t, xi, ratio, cutoff_units;
    };
    const P points[] = {
        {10.0, 0.5, 0.05, 1.3, 2.5},    // moderate filter
        {2.0, 0.3, 0.1, 2.0, 0.0},      // identity filter
        {2.2, 0.02, 0.05, 30.0, 1.75},  // RR region, long distance
        {1.5, 0.76, 0.3, 4.0, 2.0},     // DR region, noisy channel
        {5.0, 0.1, 0.2, 10.0, 3.0},     // strong rejection
    };
    std::vector<McConfig> out;
    std::uint64_t k = 0;
    for (const auto& p : points) {
        const double vb = p.t * (p.va + p.xi) + 1.0;
        out.push_back({cfg.mc.samples, cfg.mc.seed + k++, p.va, p.t, p.xi, p.ratio * vb, p.cutoff_units * std::sqrt(vb)});
    }
    return out;
}

ValidationRun run_mc_validate(const RunConfig& cfg) {
    ValidationRun run;
    run.passed = true;
    for (const auto& mc : default_mc_suite(cfg)) {
        run.reports.push_back(compare(mc, cfg.mc.sigmas, cfg.tol, cfg.effective_jobs()));
        run.passed = run.passed && run.reports.back().passed;
    }
    return run;
}

void write_mc_report(std::ostream& out, const RunConfig& cfg, const ValidationRun& run) {
    out << "# rng: " << kRngName << "\n";
    out << "# base seed: " << cfg.mc.seed << "\n";
    out << "# samples per point: " << cfg.mc.samples << "\n";
    out << "# tolerance: " << num(cfg.mc.sigmas) << " standard errors; quadrature moments " << num(cfg.tol.moments)
        << ", mi " << num(cfg.tol.mi) << "\n";
    out << "point,seed,V_A,T,xi,V_PS,cutoff,statistic,analytic,estimate,se,sigmas,pass\n";
    for (std::size_t i = 0; i < run.reports.size(); ++i) {
        const auto& rep = run.reports[i];
        const auto& c = rep.config;
        for (const auto& l : rep.lines) {
            out << i << ',' << c.seed << ',' << num(c.modulation_variance) << ',' << num(c.transmission) << ','
                << num(c.excess_noise) << ',' << num(c.target_variance) << ',' << num(c.cutoff) << ',' << l.statistic
                << ',' << num(l.analytic) << ',' << num(l.estimate) << ',' << num(l.se) << ',' << num(l.sigmas) << ','
                << (l.pass ? "pass" : "FAIL") << '\n';
        }
    }
    out << "# overall: " << (run.passed ? "pass" : "FAIL") << "\n";
}

}  // namespace cvqkd
