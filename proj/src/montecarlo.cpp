#include "cvqkd/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

#include <json.hpp>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

struct Accumulator {
    std::uint64_t n_total = 0;
    std::uint64_t n_accepted = 0;
    double sa = 0, sb = 0;
    double saa = 0, sbb = 0, sab = 0;
    double saaaa = 0, sbbbb = 0, saabb = 0;
    std::vector<std::array<double, 2>> kept;

    void merge(const Accumulator& o) {
        n_total += o.n_total;
        n_accepted += o.n_accepted;
        sa += o.sa;
        sb += o.sb;
        saa += o.saa;
        sbb += o.sbb;
        sab += o.sab;
        saaaa += o.saaaa;
        sbbbb += o.sbbbb;
        saabb += o.saabb;
        kept.insert(kept.end(), o.kept.begin(), o.kept.end());
    }
};

std::uint64_t shard_size(const McConfig& cfg, unsigned shard) {
    const std::uint64_t base = cfg.n_samples / kShards;
    return base + (shard < cfg.n_samples % kShards ? 1 : 0);
}

// Calls visit(x_a, x_b, accepted) for every sample of one shard, in order.
template <class Visit>
void run_shard(const McConfig& cfg, unsigned shard, Visit&& visit) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(shard)};
    std::mt19937_64 rng(seq);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };

    const JointDistribution jd = cfg.joint();
    const PostSelectionFilter filter = cfg.filter();
    const double sa = std::sqrt(jd.alice_variance());
    const double sn = std::sqrt(jd.noise_variance());
    const double k = jd.slope();

    const std::uint64_t n = shard_size(cfg, shard);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        const double xa = sa * r * std::cos(phi);
        const double xb = k * xa + sn * r * std::sin(phi);
        const bool accepted = uniform() < acceptance_probability(xb, filter);
        visit(xa, xb, accepted);
    }
}

Accumulator accumulate_shard(const McConfig& cfg, unsigned shard) {
    Accumulator acc;
    acc.kept.reserve(shard_size(cfg, shard));
    run_shard(cfg, shard, [&](double xa, double xb, bool accepted) {
        ++acc.n_total;
        if (!accepted) return;
        ++acc.n_accepted;
        const double aa = xa * xa;
        const double bb = xb * xb;
        acc.sa += xa;
        acc.sb += xb;
        acc.saa += aa;
        acc.sbb += bb;
        acc.sab += xa * xb;
        acc.saaaa += aa * aa;
        acc.sbbbb += bb * bb;
        acc.saabb += aa * bb;
        acc.kept.push_back({xa, xb});
    });
    return acc;
}

double interquartile_range(std::vector<double> v) {
    const auto q = [&](double p) {
        const auto idx = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1));
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
        return v[idx];
    };
    const double q1 = q(0.25);
    const double q3 = q(0.75);
    return q3 - q1;
}

struct BinnedMi {
    double plugin = 0.0;
    double corrected = 0.0;
    double stat_se = 0.0;
    double bias_bound = 0.0;
    int bins_a = 0;
    int bins_b = 0;
};

// Plug-in MI on a 2-D histogram with Freedman-Diaconis bin widths.
BinnedMi binned_mi(const std::vector<std::array<double, 2>>& pts) {
    BinnedMi out;
    const std::size_t n = pts.size();
    if (n < 2) return out;
    std::array<double, 2> lo{}, width{};
    std::array<int, 2> bins{};
    for (int d = 0; d < 2; ++d) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = pts[i][d];
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        lo[d] = *mn;
        const double span = *mx - *mn;
        double h = 2.0 * interquartile_range(col) / std::cbrt(static_cast<double>(n));
        if (!(h > 0.0)) h = span > 0.0 ? span : 1.0;
        bins[d] = std::max(1, static_cast<int>(std::ceil(span / h)));
        width[d] = h;
    }
    const std::size_t cells = static_cast<std::size_t>(bins[0]) * static_cast<std::size_t>(bins[1]);
    if (cells > 50'000'000) throw Error(ErrorKind::NumericalFailure, "MI histogram too large");

    std::vector<std::uint32_t> joint(cells, 0), ma(bins[0], 0), mb(bins[1], 0);
    auto index = [&](double x, int d) { return std::min(bins[d] - 1, static_cast<int>((x - lo[d]) / width[d])); };
    for (const auto& p : pts) {
        const int i = index(p[0], 0);
        const int j = index(p[1], 1);
        ++joint[static_cast<std::size_t>(i) * bins[1] + j];
        ++ma[i];
        ++mb[j];
    }
    const double dn = static_cast<double>(n);
    double s1 = 0.0, s2 = 0.0;
    std::size_t nonzero_joint = 0;
    for (int i = 0; i < bins[0]; ++i) {
        for (int j = 0; j < bins[1]; ++j) {
            const std::uint32_t c = joint[static_cast<std::size_t>(i) * bins[1] + j];
            if (c == 0) continue;
            ++nonzero_joint;
            const double l = std::log2(c * dn / (static_cast<double>(ma[i]) * mb[j]));
            s1 += c * l;
            s2 += c * l * l;
        }
    }
    const auto nonzero = [](const std::vector<std::uint32_t>& v) {
        return static_cast<double>(std::count_if(v.begin(), v.end(), [](std::uint32_t c) { return c > 0; }));
    };
    out.plugin = s1 / dn;
    const double mm = (static_cast<double>(nonzero_joint) - nonzero(ma) - nonzero(mb) + 1.0) / (2.0 * dn * std::numbers::ln2);
    out.corrected = out.plugin - mm;
    out.stat_se = std::sqrt(std::max(0.0, s2 / dn - out.plugin * out.plugin) / dn);
    out.bias_bound = std::fabs(mm);
    out.bins_a = bins[0];
    out.bins_b = bins[1];
    return out;
}

template <class Fn>
void for_shards(unsigned jobs, Fn&& fn) {
    jobs = std::clamp(jobs, 1u, kShards);
    if (jobs == 1) {
        for (unsigned s = 0; s < kShards; ++s) fn(s);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            for (unsigned s = w; s < kShards; s += jobs) fn(s);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

void McConfig::validate() const {
    if (n_samples < 2) throw Error(ErrorKind::InvalidParameter, "Monte Carlo needs at least 2 samples");
    joint().validate();
    if (cutoff > 0.0) filter().validate();
    if (!(cutoff >= 0.0)) throw Error(ErrorKind::InvalidParameter, "cutoff must be >= 0");
}

PostSelectionFilter McConfig::filter() const {
    const double vb = joint().bob_variance();
    // With no cutoff the target is irrelevant; keep the filter well formed.
    return {cutoff > 0.0 ? target_variance : std::max(target_variance, 2.0 * vb), cutoff, vb};
}

McEstimate simulate(const McConfig& cfg, unsigned jobs) {
    cfg.validate();
    std::vector<Accumulator> shards(kShards);
    for_shards(jobs, [&](unsigned s) { shards[s] = accumulate_shard(cfg, s); });
    Accumulator acc;
    for (const auto& s : shards) acc.merge(s);

    McEstimate est;
    est.n_total = acc.n_total;
    est.n_accepted = acc.n_accepted;
    const double n = static_cast<double>(acc.n_total);
    const double m = static_cast<double>(acc.n_accepted);
    const double p = m / n;
    est.keep_fraction = {p, std::max(std::sqrt(p * (1.0 - p) / n), 1.0 / n)};
    if (acc.n_accepted < 2) throw Error(ErrorKind::NumericalFailure, "fewer than two samples accepted");

    auto second = [&](double s2, double s4) {
        const double v = s2 / m;
        return Estimate{v, std::sqrt(std::max(0.0, s4 / m - v * v) / m)};
    };
    est.var_a = second(acc.saa, acc.saaaa);
    est.var_b = second(acc.sbb, acc.sbbbb);
    est.cov_ab = second(acc.sab, acc.saabb);
    est.mean_a = {acc.sa / m, std::sqrt(est.var_a.value / m)};
    est.mean_b = {acc.sb / m, std::sqrt(est.var_b.value / m)};

    const BinnedMi mi = binned_mi(acc.kept);
    est.mi = {mi.corrected, mi.stat_se + mi.bias_bound};
    est.mi_plugin = mi.plugin;
    est.mi_bias_bound = mi.bias_bound;
    est.bins_a = mi.bins_a;
    est.bins_b = mi.bins_b;
    return est;
}

McReport compare(const McConfig& cfg, double tol_sigmas, const Tolerances& tol, unsigned jobs) {
    McReport rep;
    rep.config = cfg;
    rep.estimate = simulate(cfg, jobs);
    const JointDistribution jd = cfg.joint();
    const PostSelectionFilter filter = cfg.filter();
    const FilteredMoments fm = filtered_moments(jd, filter, tol.moments);
    const double mi = shannon_mi_filtered(jd, filter, tol.mi);

    auto line = [&](const char* name, double analytic, const Estimate& e) {
        ComparisonLine l{name, analytic, e.value, e.se, 0.0, false};
        l.sigmas = std::fabs(e.value - analytic) / e.se;
        l.pass = l.sigmas <= tol_sigmas;
        rep.lines.push_back(l);
    };
    const auto& est = rep.estimate;
    line("keep_fraction", fm.keep_fraction, est.keep_fraction);
    line("var_a", fm.var_a, est.var_a);
    line("var_b", fm.var_b, est.var_b);
    line("cov_ab", fm.cov_ab, est.cov_ab);
    line("mi", mi, est.mi);
    rep.passed = std::all_of(rep.lines.begin(), rep.lines.end(), [](const ComparisonLine& l) { return l.pass; });
    return rep;
}

void dump_samples(const McConfig& cfg, const std::string& path) {
    cfg.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");

    const nlohmann::json header = {
        {"format", "x_a:f64,x_b:f64,accepted:u8"},
        {"rng", kRngName},
        {"shards", kShards},
        {"seed", cfg.seed},
        {"n_samples", cfg.n_samples},
        {"modulation_variance", cfg.modulation_variance},
        {"transmission", cfg.transmission},
        {"excess_noise", cfg.excess_noise},
        {"target_variance", cfg.target_variance},
        {"cutoff", cfg.cutoff},
    };
    const std::string text = header.dump();

    auto put_le = [&](auto value) {
        unsigned char bytes[sizeof value];
        std::memcpy(bytes, &value, sizeof value);
        if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
        out.write(reinterpret_cast<const char*>(bytes), sizeof value);
    };
    out.write("CVQKDMC1", 8);
    put_le(static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (unsigned s = 0; s < kShards; ++s) {
        run_shard(cfg, s, [&](double xa, double xb, bool accepted) {
            put_le(xa);
            put_le(xb);
            put_le(static_cast<std::uint8_t>(accepted ? 1 : 0));
        });
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

}  // namespace cvqkd
