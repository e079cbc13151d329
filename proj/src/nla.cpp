#include "cvqkd/nla.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSlack = 1e-9;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

NlaGain solve_gain(double va, double va_ps, const GaussianChannel& ch) {
    ch.validate();
    if (!(va > 0.0)) throw Error(ErrorKind::InvalidParameter, "modulation variance must be > 0");
    if (!(va_ps >= va)) {
        throw Error(ErrorKind::InvalidParameter,
                    "post-selected modulation " + num(va_ps) + " below the input " + num(va) + " needs g < 1");
    }
    const double t = ch.transmission;
    const double xi = ch.excess_noise;
    const double den = t * (va * (2.0 + va_ps - xi) + va_ps * xi);
    if (!(den > 0.0)) throw Error(ErrorKind::InvalidParameter, "gain equation has a nonpositive denominator");
    return {1.0 + 2.0 * (va_ps - va) / den};
}

EffectiveChannel effective_params(double va, const GaussianChannel& ch, NlaGain gain) {
    ch.validate();
    const double g = gain.g;
    if (!(g >= 1.0) || !std::isfinite(g)) throw Error(ErrorKind::InvalidParameter, "gain must be finite and >= 1");
    const double t = ch.transmission;
    const double xi = ch.excess_noise;
    const double chi = chi_from_va(va);

    EffectiveChannel e;
    const double chi_sq_factor = 1.0 + 2.0 * t * (1.0 - g) / (g * t * xi - t * xi - 2.0);
    e.chi = std::sqrt(chi_sq_factor) * chi;
    e.transmission = 4.0 * g * t / ((-2.0 + (g - 1.0) * t * (-2.0 + xi)) * (-2.0 + (g - 1.0) * t * xi));
    e.excess_noise = xi - xi * t * (xi - 2.0) * (g - 1.0) / 2.0;

    if (!(chi_sq_factor >= 0.0) || !(e.chi >= 0.0 && e.chi < 1.0)) {
        throw Error(ErrorKind::UnphysicalEffectiveChannel, "effective chi " + num(e.chi) + " at g=" + num(g));
    }
    if (!(e.transmission > 0.0 && e.transmission <= 1.0)) {
        throw Error(ErrorKind::UnphysicalEffectiveChannel,
                    "effective transmission " + num(e.transmission) + " at g=" + num(g));
    }
    if (!(e.excess_noise >= 0.0)) {
        throw Error(ErrorKind::UnphysicalEffectiveChannel, "effective excess noise " + num(e.excess_noise));
    }
    e.modulation_variance = va_from_chi(e.chi);
    return e;
}

TwoModeSymmetricCM gamma_nla(double va, const GaussianChannel& ch, NlaGain gain) {
    if (gain.g == 1.0) return channel_output_cm(va, ch);
    const EffectiveChannel e = effective_params(va, ch, gain);
    return channel_output_cm(e.modulation_variance, e.channel());
}

double max_gain(double va, const GaussianChannel& ch, double tol) {
    auto ok = [&](double g) {
        try {
            effective_params(va, ch, {g});
            return true;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UnphysicalEffectiveChannel) throw;
            return false;
        }
    };
    double lo = 1.0;
    double hi = 2.0;
    while (ok(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return kInf;
    }
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

StationFamily station_family(const TwoModeSymmetricCM& nla, const TwoModeSymmetricCM& ps) {
    if (ps.c == 0.0 || nla.c == 0.0) {
        throw Error(ErrorKind::InvalidParameter, "station solve needs nonzero correlations");
    }
    if (std::fabs(ps.a - nla.a) > 1e-6 * std::max(1.0, nla.a)) {
        throw Error(ErrorKind::InvalidParameter,
                    "gain not matched: a_PS=" + num(ps.a) + " vs a_NLA=" + num(nla.a));
    }
    StationFamily fam;
    fam.ratio = (ps.c * ps.c) / (nla.c * nla.c);
    // b_PS = r (1 + b_NLA) - T_B (N_B + 1) + N_B
    fam.offset = fam.ratio * (1.0 + nla.b) - ps.b;
    const double r = fam.ratio;
    const double big_r = fam.offset;
    const double eps = kSlack * std::max({1.0, r * (1.0 + nla.b), ps.b});

    if (big_r > 1.0 + eps) {
        throw Error(ErrorKind::NoFeasibleSolution,
                    "post-selected Bob variance needs T_B > 1 (offset " + num(big_r) + ")");
    }
    if (big_r >= 1.0 - eps) {
        if (r < 1.0 - eps) throw Error(ErrorKind::NoFeasibleSolution, "station needs eta < 1 at T_B = 1");
        fam.offset = 1.0;
        fam.transmission_pinned = true;
        fam.n_min = 1.0;
        fam.n_max = kInf;
        return fam;
    }

    double lower = 1.0;
    double upper = kInf;
    if (r > 1.0) lower = std::max(lower, (big_r - r) / (r - 1.0));
    if (r < 1.0) upper = (r - big_r) / (1.0 - r);
    if (upper < lower) {
        throw Error(ErrorKind::NoFeasibleSolution,
                    "no EPR variance gives eta >= 1 and T_B in (0,1] (ratio " + num(r) + ", offset " + num(big_r) + ")");
    }
    // T_B = (offset + N_B)/(N_B + 1) must stay positive.
    if (big_r + lower <= 0.0) {
        const double t_target = 0.5 * std::min(1.0, r);
        lower = (t_target - big_r) / (1.0 - t_target);
        if (lower > upper) throw Error(ErrorKind::NoFeasibleSolution, "no station with positive T_B");
    }
    fam.n_min = lower;
    fam.n_max = upper;
    return fam;
}

BobStationParams station_with_epr_variance(const StationFamily& fam, double n) {
    const double tiny = 1e-12 * std::max(1.0, std::fabs(n));
    if (!(n >= fam.n_min - tiny && n <= fam.n_max + tiny)) {
        throw Error(ErrorKind::InvalidParameter, "N_B=" + num(n) + " outside [" + num(fam.n_min) + ", " +
                                                     num(fam.n_max) + "]");
    }
    BobStationParams s;
    s.epr_variance = std::max(1.0, n);
    if (fam.transmission_pinned) {
        s.transmission = 1.0;
        s.eta = std::max(1.0, fam.ratio);
        return s;
    }
    s.transmission = std::min(1.0, (fam.offset + s.epr_variance) / (s.epr_variance + 1.0));
    if (!(s.transmission > 0.0)) throw Error(ErrorKind::NoFeasibleSolution, "station transmission not positive");
    s.eta = std::max(1.0, fam.ratio / s.transmission);
    return s;
}

BobStationParams solve_bob_station(const TwoModeSymmetricCM& nla, const TwoModeSymmetricCM& ps) {
    const StationFamily fam = station_family(nla, ps);
    return station_with_epr_variance(fam, fam.n_min);
}

CovarianceMatrix station_state(const TwoModeSymmetricCM& nla, const BobStationParams& s) {
    CovarianceMatrix st = direct_sum(direct_sum(nla.to_cm(), CovarianceMatrix::vacuum(1)),
                                     CovarianceMatrix::epr(s.epr_variance));
    st = apply_two_mode_squeezer(st, 1, 2, s.eta);
    return apply_beamsplitter(st, 1, 3, s.transmission);
}

TwoModeSymmetricCM forward_station(const TwoModeSymmetricCM& nla, const BobStationParams& s) {
    const CovarianceMatrix st = station_state(nla, s);
    return {st(0, 0), st(2, 2), st(0, 2)};
}

}  // namespace cvqkd
