// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 3 9        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/sweep.hpp"

using namespace cvqkd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_diff(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300}); }

PostSelectionFilter make_filter(double va, const GaussianChannel& ch, double ratio, double cut_units) {
    const double vb = channel_output_cm(va, ch).b;
    return PostSelectionFilter::for_channel(va, ch, ratio * vb, cut_units * std::sqrt(vb));
}

// 1. DR baseline 3 dB limit.
Outcome three_db_limit() {
    const auto at = [](double db) {
        return optimize_baseline(Reconciliation::Direct, GaussianChannel::from_loss_db(db, 1e-6), 1.0).key_rate;
    };
    const double k29 = at(2.9), k31 = at(3.1);
    return {k29 > 0.0 && k31 <= 0.0, fmt("K(2.9 dB)=%.6g K(3.1 dB)=%.6g", k29, k31)};
}

// 2. Delta = 0 reproduces the baseline on the 27-point grid, both directions.
Outcome identity_filter() {
    double worst = 0.0;
    std::string where;
    for (auto dir : {Reconciliation::Direct, Reconciliation::Reverse})
        for (double va : {1.0, 5.0, 20.0})
            for (double t : {0.9, 0.5, 0.1})
                for (double xi : {0.0, 0.05, 0.2}) {
                    const GaussianChannel ch{t, xi};
                    const ProtocolParams p{va, 0.9, dir, 0.0};
                    const double ps = keyrate_ps(p, ch, make_filter(va, ch, 2.0, 0.0)).key_rate;
                    const double base = baseline_keyrate(p, ch).key_rate;
                    if (std::fabs(ps - base) > worst) {
                        worst = std::fabs(ps - base);
                        where = fmt("%s V_A=%g T=%g xi=%g", to_string(dir), va, t, xi);
                    }
                }
    return {worst < 1e-4, fmt("54 evaluations, max |K_ps - K_base| = %.3g at %s", worst, where.c_str())};
}

// 3. Unit gain is the identity and solve_gain inverts effective_params.
Outcome nla_identity_inverse() {
    std::mt19937_64 rng(3003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_id = 0.0, worst_inv = 0.0;
    int n = 0;
    while (n < 50) {
        const double va = 0.1 + 20 * u(rng);
        const GaussianChannel ch{0.01 + 0.98 * u(rng), 0.3 * u(rng)};
        const auto e1 = effective_params(va, ch, {1.0});
        worst_id = std::max({worst_id, std::fabs(e1.chi - chi_from_va(va)), std::fabs(e1.transmission - ch.transmission),
                             std::fabs(e1.excess_noise - ch.excess_noise)});
        const double gmax = std::min(max_gain(va, ch), 50.0);
        const double g = 1.0 + (gmax - 1.0) * 0.95 * u(rng);
        EffectiveChannel e;
        try {
            e = effective_params(va, ch, {g});
        } catch (const Error&) {
            continue;
        }
        worst_inv = std::max(worst_inv, std::fabs(solve_gain(va, e.modulation_variance, ch).g - g) / g);
        ++n;
    }
    return {worst_id <= 1e-12 && worst_inv <= 1e-10,
            fmt("g=1 max deviation %.2g, round trip max rel error %.2g over 50 points", worst_id, worst_inv)};
}

double max_entry_diff(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

// 4. solve_bob_station reproduces gamma_PS from gamma_NLA.
Outcome station_reproduction() {
    std::mt19937_64 rng(4004);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto nla = channel_output_cm(0.2 + 30 * u(rng), {0.01 + 0.98 * u(rng), 0.3 * u(rng)});
        const BobStationParams truth{1.0 + 3 * u(rng), 0.05 + 0.95 * u(rng), 1.0 + 10 * u(rng)};
        const auto ps = forward_station(nla, truth);
        const auto s = solve_bob_station(nla, ps);
        worst = std::max(worst, max_entry_diff(forward_station(nla, s).to_cm(), ps.to_cm()));
    }
    const auto nla = channel_output_cm(4.0, {0.3, 0.05});
    const auto id = solve_bob_station(nla, nla);
    const bool identity_ok = id.transmission == 1.0 && std::fabs(id.eta - 1.0) < 1e-12;
    worst = std::max(worst, max_entry_diff(forward_station(nla, id).to_cm(), nla.to_cm()));
    return {worst <= 1e-8 && identity_ok,
            fmt("100 random pairs, max entry error %.2g; identity case T_B=%g eta=%.12g", worst, id.transmission, id.eta)};
}

// 5. Distinct stations in the family give the same RR key rate.
Outcome station_degeneracy() {
    std::mt19937_64 rng(5005);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int found = 0, tried = 0;
    while (found < 20 && tried < 2000) {
        ++tried;
        const double va = 0.5 + 10 * u(rng);
        const GaussianChannel ch{0.01 + 0.6 * u(rng), 0.1 * u(rng)};
        KeyRateResult r;
        try {
            r = keyrate_ps({va, 0.9, Reconciliation::Reverse, 0.0}, ch,
                           make_filter(va, ch, 1.1 + 20 * u(rng), 0.2 + 3 * u(rng)));
        } catch (const Error&) {
            continue;
        }
        const auto& d = r.diagnostics;
        const auto fam = station_family(*d.gamma_nla, d.gamma_ps);
        const double hi = std::isfinite(fam.n_max) ? fam.n_max : fam.n_min + 50.0;
        if (!(hi > fam.n_min * (1 + 1e-6) + 1e-6)) continue;
        auto key = [&](double n) {
            const auto s = station_with_epr_variance(fam, n);
            return r.keep_fraction * (0.9 * r.mi_ab - holevo_rr(d.gamma_ps, s, *d.gamma_nla));
        };
        const double k1 = key(fam.n_min);
        const double k2 = key(fam.n_min + (hi - fam.n_min) * (0.2 + 0.8 * u(rng)));
        worst = std::max(worst, rel_diff(k1, k2));
        ++found;
    }
    return {found == 20 && worst <= 1e-6,
            fmt("%d instances (%d draws), max relative K difference %.2g", found, tried, worst)};
}

// 6. Constructed conditional states against their closed forms.
Outcome explicit_matrices() {
    std::mt19937_64 rng(6006);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_dr = 0.0, worst_rr = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto g = channel_output_cm(0.2 + 30 * u(rng), {0.01 + 0.98 * u(rng), 0.3 * u(rng)});
        const Eigen::MatrixXd built = dr_conditional_state(g).matrix();
        worst_dr = std::max(worst_dr, (built - Eigen::MatrixXd(dr_conditional_closed_form(g))).cwiseAbs().maxCoeff());

        const BobStationParams s{1.0 + 3 * u(rng), 0.05 + 0.9 * u(rng), 1.0 + 10 * u(rng)};
        const auto st = rr_conditional_state(g, s);
        const auto cf = rr_conditional_closed_form(g, s);
        const std::pair<std::pair<int, int>, Eigen::Matrix2d> blocks[] = {
            {{0, 0}, cf.gamma_a}, {{1, 1}, cf.gamma_d},  {{2, 2}, cf.gamma_f},  {{3, 3}, cf.gamma_g},
            {{0, 1}, cf.sigma_ad}, {{0, 2}, cf.sigma_af}, {{0, 3}, cf.sigma_ag},
        };
        for (const auto& [ij, m] : blocks) {
            const Eigen::Matrix2d diff = st.block(ij.first, ij.second) - m;
            worst_rr = std::max(worst_rr, diff.cwiseAbs().maxCoeff() / std::max(1.0, m.cwiseAbs().maxCoeff()));
        }
    }
    return {worst_dr <= 1e-9 && worst_rr <= 1e-9,
            fmt("20 points: DR 4x4 max error %.2g (x-variance of B uses b - c^2/(a+1)), RR 7 blocks max error %.2g",
                worst_dr, worst_rr)};
}

// 7. Quadrature against Monte Carlo on the five-point suite.
Outcome quadrature_vs_mc() {
    RunConfig cfg;
    cfg.mode = Mode::McValidate;
    const auto v = run_mc_validate(cfg);
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i < v.reports.size(); ++i)
        for (const auto& l : v.reports[i].lines)
            if (l.sigmas > worst) {
                worst = l.sigmas;
                where = fmt("point %zu %s", i, l.statistic.c_str());
            }
    return {v.passed && v.reports.size() == 5,
            fmt("5 points x 1e6 samples, seed %llu.., worst %.2f sigma (%s)",
                static_cast<unsigned long long>(cfg.mc.seed), worst, where.c_str())};
}

// 8. Gaussian limits of the filtered statistics.
Outcome gaussian_limits() {
    double worst_mi = 0.0, worst_var = 0.0;
    for (double va : {1.0, 5.0, 20.0})
        for (double t : {0.9, 0.3, 0.05})
            for (double xi : {0.0, 0.1}) {
                const auto jd = JointDistribution::from(va, {t, xi});
                const double vb = jd.bob_variance();
                const double snr = gaussian_snr(va, {t, xi});
                const double mi = shannon_mi_filtered(jd, {3 * vb, 0.0, vb});
                worst_mi = std::max(worst_mi, std::fabs(mi - 0.5 * std::log2(1 + snr)));
                for (double ratio : {1.5, 10.0}) {
                    const PostSelectionFilter f{ratio * vb, 50 * std::sqrt(vb), vb};
                    worst_var = std::max(worst_var, std::fabs(filtered_moments(jd, f).var_b - f.target_variance));
                }
            }
    return {worst_mi <= 1e-7 && worst_var <= 1e-4,
            fmt("18 channels: Delta=0 MI error %.2g bits, Delta=50 sqrt(V_B) |Var_B - V_PS| max %.2g", worst_mi,
                worst_var)};
}

struct Advantage {
    bool found = false;
    double baseline_crossover = 0.0;
    double loss = 0.0;
    double k_ps = 0.0;
    double k_base = 0.0;
};

// Baseline crossover by bisection, then the first grid loss past it where
// the optimised post-selected rate is still positive.
Advantage find_advantage(Reconciliation dir, double xi) {
    Advantage a;
    auto base = [&](double db) {
        return optimize_baseline(dir, GaussianChannel::from_loss_db(db, xi), 0.9).key_rate;
    };
    double lo = 0.0, hi = 30.0;
    if (base(lo) <= 0.0) {
        hi = 0.0;
    } else if (base(hi) > 0.0) {
        return a;  // baseline secure over the whole range
    } else {
        while (hi - lo > 1e-4) {
            const double mid = 0.5 * (lo + hi);
            (base(mid) > 0.0 ? lo : hi) = mid;
        }
    }
    a.baseline_crossover = hi;
    const double step = dir == Reconciliation::Direct ? 0.1 : 0.5;
    for (double db = std::ceil(hi / step) * step; db <= 30.0 + 1e-9; db += step) {
        const auto ch = GaussianChannel::from_loss_db(db, xi);
        const double kb = optimize_baseline(dir, ch, 0.9).key_rate;
        if (kb > 0.0) continue;
        const auto opt = optimize_keyrate(dir, ch, 0.9);
        std::fprintf(stderr, "  %s xi=%g %.2f dB: K_ps=%.6g K_base=%.6g\n", to_string(dir), xi, db,
                     opt.best.key_rate, kb);
        if (opt.best.key_rate > 0.0) {
            a = {true, hi, db, opt.best.key_rate, kb};
            return a;
        }
        if (opt.best.key_rate < -1e-2) break;  // well past any advantage
    }
    return a;
}

// Crossovers of this implementation, kept as regression fixtures.
constexpr double kRrBaselineCrossoverDb = 16.3066;
constexpr double kDrBaselineCrossoverDb = 1.1815;
constexpr double kRrAdvantageLossDb = 16.5;
constexpr double kRrAdvantageKey = 6.69117e-4;
constexpr double kDrAdvantageLossDb = 1.2;
constexpr double kDrAdvantageKey = 3.0866e-3;

// 9. Post-selection beats the baseline somewhere on the loss axis.
Outcome postselection_advantage() {
    const Advantage rr = find_advantage(Reconciliation::Reverse, 0.05);
    const Advantage dr = find_advantage(Reconciliation::Direct, 0.3);
    const bool fixtures = std::fabs(rr.baseline_crossover - kRrBaselineCrossoverDb) < 2e-3 &&
                          std::fabs(dr.baseline_crossover - kDrBaselineCrossoverDb) < 2e-3 &&
                          std::fabs(rr.loss - kRrAdvantageLossDb) < 1e-9 && std::fabs(dr.loss - kDrAdvantageLossDb) < 1e-9 &&
                          rel_diff(rr.k_ps, kRrAdvantageKey) < 1e-2 && rel_diff(dr.k_ps, kDrAdvantageKey) < 1e-2;
    return {rr.found && dr.found && fixtures,
            fmt("%sRR xi=0.05: baseline crossover %.4f dB, at %.2f dB K_ps=%.4g K_base=%.4g; "
                "DR xi=0.3: baseline crossover %.4f dB, at %.2f dB K_ps=%.4g K_base=%.4g",
                fixtures ? "" : "regression fixtures moved; ", rr.baseline_crossover, rr.loss, rr.k_ps, rr.k_base, dr.baseline_crossover, dr.loss, dr.k_ps,
                dr.k_base)};
}

double min_symplectic(const CovarianceMatrix& cm) { return symplectic_eigenvalues(cm).eigenvalues.back(); }

// 10. Randomised invariants.
Outcome invariants() {
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double drift_err = 0.0, add_err = 0.0, purity = 0.0, min_nu = 1e300;
    int pipelines = 0;
    for (int k = 0; k < 1000; ++k) {
        // Mixed two-mode state plus a thermal mode, pushed through random symplectics.
        const double a = 1 + 20 * u(rng), b = 1 + 20 * u(rng);
        const double cmax = std::sqrt((a - 1) * (b - 1));
        const auto two = TwoModeSymmetricCM{a, b, cmax * u(rng)}.to_cm();
        const auto th = CovarianceMatrix::thermal(1 + 5 * u(rng));
        auto st = direct_sum(two, th);
        const auto before = symplectic_eigenvalues(st).eigenvalues;
        st = apply_beamsplitter(st, 0, 2, u(rng));
        st = apply_two_mode_squeezer(st, 1, 2, 1 + 3 * u(rng));
        st = apply_beamsplitter(st, 2, 1, u(rng));
        const auto after = symplectic_eigenvalues(st).eigenvalues;
        for (std::size_t i = 0; i < before.size(); ++i) drift_err = std::max(drift_err, rel_diff(before[i], after[i]));
        min_nu = std::min(min_nu, after.back());

        add_err = std::max(add_err, std::fabs(von_neumann_entropy(direct_sum(two, th)) -
                                              von_neumann_entropy(two) - von_neumann_entropy(th)));

        // Pure constructions: EPR through symplectics, and its conditional states.
        const double v = 1 + 30 * u(rng);
        auto pure = direct_sum(CovarianceMatrix::epr(v), CovarianceMatrix::vacuum(1));
        pure = apply_two_mode_squeezer(pure, 1, 2, 1 + 2 * u(rng));
        pure = apply_beamsplitter(pure, 0, 2, u(rng));
        purity = std::max(purity, von_neumann_entropy(pure));
        purity = std::max(purity, von_neumann_entropy(condition_on_homodyne(pure, 1, Quadrature::X)));
        purity = std::max(purity, von_neumann_entropy(condition_on_heterodyne(pure, 2)));
        const auto pure_nla = TwoModeSymmetricCM{v, v, std::sqrt(v * v - 1)};
        purity = std::max(purity, von_neumann_entropy(station_state(
                                      pure_nla, {1 + 2 * u(rng), 0.05 + 0.95 * u(rng), 1 + 5 * u(rng)})));

        // Every tenth case: the matrices produced by the key-rate pipeline.
        if (k % 10 == 0) {
            const double va = 0.5 + 10 * u(rng);
            const GaussianChannel ch{0.01 + 0.8 * u(rng), 0.1 * u(rng)};
            try {
                const auto r = keyrate_ps({va, 0.9, Reconciliation::Reverse, 0.0}, ch,
                                          make_filter(va, ch, 1.1 + 20 * u(rng), 3 * u(rng)));
                const auto& d = r.diagnostics;
                min_nu = std::min({min_nu, min_symplectic(d.gamma_ps.to_cm()), min_symplectic(d.gamma_nla->to_cm()),
                                   min_symplectic(station_state(*d.gamma_nla, *d.station)),
                                   min_symplectic(rr_conditional_state(*d.gamma_nla, *d.station))});
                ++pipelines;
            } catch (const Error&) {
                // Infeasible parameter draws are allowed; they produce no matrices.
            }
        }
    }
    const bool ok = drift_err <= 1e-9 && add_err <= 1e-9 && purity < 1e-9 && min_nu >= 1 - 1e-9;
    return {ok, fmt("1000 cases (%d pipeline runs): spectrum drift %.2g, additivity %.2g, max pure-state S %.2g, "
                    "min nu %.12g",
                    pipelines, drift_err, add_err, purity, min_nu)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "3 dB limit of the DR baseline", 10, three_db_limit},
        {2, "identity filter reproduces the baseline", 120, identity_filter},
        {3, "NLA identity and inverse", 1, nla_identity_inverse},
        {4, "Bob station forward reproduction", 5, station_reproduction},
        {5, "station degeneracy leaves K unchanged", 60, station_degeneracy},
        {6, "explicit conditional matrices", 5, explicit_matrices},
        {7, "quadrature vs Monte Carlo", 180, quadrature_vs_mc},
        {8, "Gaussian limits", 30, gaussian_limits},
        {9, "post-selection advantage", 600, postselection_advantage},
        {10, "randomised invariant suite", 60, invariants},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!pick.empty() && !pick.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = dt <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %2d %s  %s  [%.2f s / %.0f s%s]  %s\n", c.id, pass ? "PASS" : "FAIL", c.title, dt,
                    c.budget_s, in_time ? "" : " OVER BUDGET", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
