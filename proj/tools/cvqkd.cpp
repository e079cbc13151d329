// cvqkd: key rates of Gaussian-modulated CV-QKD with measurement-based
// post-selection, against the unfiltered protocol.
//
//   cvqkd sweep --direction RR --xi 0.05 --loss-grid 0:30:1 --out rr.csv
//   cvqkd optimize --direction DR --xi 0.3 --loss-db 1.2
//   cvqkd single --loss-db 10 --va 2 --cutoff 1.5 --ratio 10
//   cvqkd mc-validate --out mc.csv
//
// Exit codes: 0 success, 1 validation failure or runtime error, 2 bad
// configuration or I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvqkd/config.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/sweep.hpp"

namespace {

using namespace cvqkd;

struct Flags {
    std::string config;
    std::string direction, eve_reference, loss_grid, out, dump_prefix;
    double beta = 0, xi = 0, loss_db = 0, tol_moments = 0, tol_mi = 0;
    double va = 0, cutoff = 0, ratio = 0, sigmas = 0, trusted_noise = 0;
    unsigned jobs = 0;
    std::uint64_t samples = 0, seed = 0;
    bool baseline_only = false;
};

std::ostream* open_out(const std::string& path, std::ofstream& file) {
    if (path.empty()) return &std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::IoError, "cannot write " + path);
    return &file;
}

void finish(std::ofstream& file, const std::string& path) {
    if (!file.is_open()) return;
    file.close();
    if (!file) throw Error(ErrorKind::IoError, "error writing " + path);
    std::cerr << "wrote " << path << "\n";
}

void emit_rows(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
    write_table(std::cout, rows);
    std::cout << "\n";
    std::ofstream file;
    std::ostream* out = open_out(cfg.out, file);
    write_csv(*out, rows);
    finish(file, cfg.out);
}

int run(const RunConfig& cfg, const Flags& flags) {
    std::cout << echo_config(cfg) << "\n" << std::flush;
    switch (*cfg.mode) {
        case Mode::Single: {
            emit_rows(cfg, {single_row(cfg)});
            return 0;
        }
        case Mode::Optimize: {
            std::cerr << "optimizing at " << cfg.loss_db << " dB\n";
            const SweepRow row = optimize_row(cfg, cfg.loss_db);
            emit_rows(cfg, {row});
            if (!row.error.empty()) std::cerr << "point failed: " << row.error << "\n";
            return 0;
        }
        case Mode::Sweep: {
            const auto rows = run_sweep(cfg, [](std::size_t done, std::size_t total, const SweepRow& r) {
                std::fprintf(stderr, "[%zu/%zu] %.3f dB  K=%.6g  K_baseline=%.6g%s%s\n", done, total, r.loss_db,
                             r.key_rate, r.key_rate_baseline, r.error.empty() ? "" : "  error: ", r.error.c_str());
            });
            emit_rows(cfg, rows);
            return 0;
        }
        case Mode::McValidate: {
            if (!flags.dump_prefix.empty()) {
                int i = 0;
                for (const auto& mc : default_mc_suite(cfg)) {
                    const std::string path = flags.dump_prefix + "." + std::to_string(i++) + ".bin";
                    dump_samples(mc, path);
                    std::cerr << "wrote " << path << "\n";
                }
            }
            std::cerr << "running Monte Carlo validation suite\n";
            const ValidationRun v = run_mc_validate(cfg);
            std::ofstream file;
            std::ostream* out = open_out(cfg.out, file);
            write_mc_report(*out, cfg, v);
            finish(file, cfg.out);
            std::cerr << (v.passed ? "validation passed" : "validation FAILED") << "\n";
            return v.passed ? 0 : 1;
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-selected CV-QKD key rate calculator"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    Flags f;
    auto* o_config = app.add_option("--config", f.config, "INI config file; flags override it");
    auto* o_dir = app.add_option("--direction", f.direction, "DR or RR");
    auto* o_beta = app.add_option("--beta", f.beta, "reconciliation efficiency");
    auto* o_xi = app.add_option("--xi", f.xi, "excess noise, referred to the channel input");
    auto* o_eve = app.add_option("--eve-reference", f.eve_reference, "nla or post-selected");
    auto* o_loss = app.add_option("--loss-db", f.loss_db, "channel loss for single/optimize");
    auto* o_grid = app.add_option("--loss-grid", f.loss_grid, "start:stop:step in dB for sweep");
    auto* o_tm = app.add_option("--tol-moments", f.tol_moments, "relative tolerance of the filtered moments");
    auto* o_ti = app.add_option("--tol-mi", f.tol_mi, "relative tolerance of the mutual information");
    auto* o_jobs = app.add_option("--jobs", f.jobs, "worker threads (default: all cores)");
    auto* o_out = app.add_option("--out", f.out, "output file (default: stdout)");
    auto* o_va = app.add_option("--va", f.va, "modulation variance for single");
    auto* o_cut = app.add_option("--cutoff", f.cutoff, "cutoff in units of sqrt(V_B) for single");
    auto* o_ratio = app.add_option("--ratio", f.ratio, "V_PS / V_B for single");
    auto* o_tn = app.add_option("--trusted-noise", f.trusted_noise, "trusted detector noise (baseline only)");
    auto* o_bo = app.add_flag("--baseline-only", f.baseline_only, "sweep/optimize the unfiltered protocol only");
    auto* o_samples = app.add_option("--samples", f.samples, "Monte Carlo samples per point");
    auto* o_seed = app.add_option("--seed", f.seed, "Monte Carlo base seed");
    auto* o_sigmas = app.add_option("--sigmas", f.sigmas, "Monte Carlo acceptance in standard errors");

    auto* c_single = app.add_subcommand("single", "key rate at one fixed parameter point");
    auto* c_sweep = app.add_subcommand("sweep", "optimised key rate over a loss grid");
    auto* c_opt = app.add_subcommand("optimize", "optimised key rate at one loss");
    auto* c_mc = app.add_subcommand("mc-validate", "compare quadrature against Monte Carlo");
    c_mc->add_option("--dump-prefix", f.dump_prefix, "also write raw samples to PREFIX.<point>.bin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg;
        if (*o_config) load_config_file(f.config, cfg);
        if (*c_single) cfg.mode = Mode::Single;
        if (*c_sweep) cfg.mode = Mode::Sweep;
        if (*c_opt) cfg.mode = Mode::Optimize;
        if (*c_mc) cfg.mode = Mode::McValidate;
        if (*o_dir) cfg.direction = parse_direction(f.direction);
        if (*o_beta) cfg.beta = f.beta;
        if (*o_xi) cfg.xi = f.xi;
        if (*o_eve) cfg.eve_reference = parse_eve_reference(f.eve_reference);
        if (*o_loss) cfg.loss_db = f.loss_db;
        if (*o_grid) cfg.loss_grid = LossGrid::parse(f.loss_grid);
        if (*o_tm) cfg.tol.moments = f.tol_moments;
        if (*o_ti) cfg.tol.mi = f.tol_mi;
        if (*o_jobs) cfg.jobs = f.jobs;
        if (*o_out) cfg.out = f.out;
        if (*o_va) cfg.modulation_variance = f.va;
        if (*o_cut) cfg.cutoff = f.cutoff;
        if (*o_ratio) cfg.ratio = f.ratio;
        if (*o_tn) cfg.trusted_noise = f.trusted_noise;
        if (*o_bo) cfg.baseline_only = f.baseline_only;
        if (*o_samples) cfg.mc.samples = f.samples;
        if (*o_seed) cfg.mc.seed = f.seed;
        if (*o_sigmas) cfg.mc.sigmas = f.sigmas;
        cfg.validate();
        return run(cfg, f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return (e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::IoError) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
