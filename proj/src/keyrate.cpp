#include "cvqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "cvqkd/error.hpp"
#include "cvqkd/nla.hpp"

namespace cvqkd {

const char* to_string(EveReference reference) {
    return reference == EveReference::NlaState ? "nla" : "post-selected";
}

void Tolerances::validate() const {
    if (!(moments > 0.0 && moments < 1.0)) throw Error(ErrorKind::InvalidParameter, "moment tolerance out of (0,1)");
    if (!(mi > 0.0 && mi < 1.0)) throw Error(ErrorKind::InvalidParameter, "MI tolerance out of (0,1)");
}

CovarianceMatrix dr_conditional_state(const TwoModeSymmetricCM& gamma) {
    const CovarianceMatrix bc = condition_on_heterodyne(gamma.to_cm(), 0);
    return bc;
}

Eigen::Matrix4d dr_conditional_closed_form(const TwoModeSymmetricCM& g) {
    const double a = g.a;
    const double b = g.b;
    const double c = g.c;
    const double s2 = std::numbers::sqrt2;
    Eigen::Matrix4d m;
    m << b - c * c / (a + 1.0), 0.0, s2 * c / (a + 1.0), 0.0,
         0.0, b, 0.0, -c / s2,
         s2 * c / (a + 1.0), 0.0, 2.0 * a / (a + 1.0), 0.0,
         0.0, -c / s2, 0.0, (a + 1.0) / 2.0;
    return m;
}

double holevo_dr(const TwoModeSymmetricCM& gamma) {
    const double s = von_neumann_entropy(gamma.to_cm()) - von_neumann_entropy(dr_conditional_state(gamma));
    return std::max(0.0, s);
}

CovarianceMatrix rr_conditional_state(const TwoModeSymmetricCM& nla, const BobStationParams& station) {
    return condition_on_homodyne(station_state(nla, station), 1, Quadrature::X);
}

RrConditionalBlocks rr_conditional_closed_form(const TwoModeSymmetricCM& nla, const BobStationParams& s) {
    const double a = nla.a;
    const double b = nla.b;
    const double c = nla.c;
    const double eta = s.eta;
    const double t = s.transmission;
    const double n = s.epr_variance;
    const double amp = -1.0 + eta + b * eta;  // squeezed Bob variance
    const double den = n * (-1.0 + t) - amp * t;
    const double den_f = n + (amp - n) * t;
    const double den_g = -n + (1.0 - (1.0 + b) * eta + n) * t;
    const double mix = std::sqrt(-(-1.0 + t) * t);

    auto diag = [](double x, double p) {
        Eigen::Matrix2d m;
        m << x, 0.0, 0.0, p;
        return m;
    };
    RrConditionalBlocks r;
    r.gamma_a = diag(a + c * c * eta * t / den, a);
    r.gamma_d = diag(b * (-1.0 + eta) + eta + (1.0 + b) * (1.0 + b) * (-1.0 + eta) * eta * t / den,
                     b * (-1.0 + eta) + eta);
    r.gamma_f = diag(amp * n / den_f, amp + (1.0 - (1.0 + b) * eta + n) * t);
    r.gamma_g = diag(n - (-1.0 + n * n) * (-1.0 + t) / den_g, n);
    r.sigma_ad = diag(-c * std::sqrt(-1.0 + eta) * (n * (-1.0 + t) + t) / den_f, c * std::sqrt(-1.0 + eta));
    r.sigma_af = diag(c * std::sqrt(eta) * (-std::sqrt(1.0 - t) + (amp - n) * std::sqrt(t) * mix / den_f),
                      c * std::sqrt(eta) * std::sqrt(1.0 - t));
    r.sigma_ag = diag(c * std::sqrt(eta) * std::sqrt(-1.0 + n * n) * mix / den_g, 0.0);
    return r;
}

double holevo_rr(const TwoModeSymmetricCM& gamma_ps, const BobStationParams& station,
                 const TwoModeSymmetricCM& gamma_nla, EveReference reference) {
    const TwoModeSymmetricCM& ref = reference == EveReference::NlaState ? gamma_nla : gamma_ps;
    const double s = von_neumann_entropy(ref.to_cm()) - von_neumann_entropy(rr_conditional_state(gamma_nla, station));
    return std::max(0.0, s);
}

KeyRateResult keyrate_ps(const ProtocolParams& params, const GaussianChannel& channel,
                         const PostSelectionFilter& filter, const Tolerances& tol, EveReference reference) {
    params.validate();
    channel.validate();
    tol.validate();
    if (params.trusted_noise != 0.0) {
        throw Error(ErrorKind::InvalidParameter, "trusted noise is only supported by the baseline");
    }
    const double va = params.modulation_variance;
    const double vb = channel_output_cm(va, channel).b;
    if (std::fabs(filter.bob_variance - vb) > 1e-12 * vb) {
        throw Error(ErrorKind::InvalidParameter, "filter built for V_B=" + std::to_string(filter.bob_variance) +
                                                     " but the channel gives " + std::to_string(vb));
    }

    const char* stage = "filter";
    try {
        const JointDistribution jd = JointDistribution::from(va, channel);
        KeyRateResult out;
        out.direction = params.direction;
        auto& diag = out.diagnostics;
        diag.modulation_variance = va;
        diag.cutoff = filter.cutoff;
        diag.target_variance = filter.target_variance;
        diag.eve_reference = reference;

        stage = "moments";
        const FilteredMoments fm = filtered_moments(jd, filter, tol.moments);
        diag.gamma_ps = fm.cm();
        diag.log_keep_fraction = fm.log_keep_fraction;
        out.keep_fraction = fm.keep_fraction;

        stage = "gain";
        double va_ps = fm.modulation_variance_ps;
        // Integration noise can put V_A^PS a hair under V_A at tiny cutoffs.
        if (va_ps < va && va - va_ps <= 10.0 * tol.moments * (va + 2.0)) va_ps = va;
        const NlaGain gain = solve_gain(va, va_ps, channel);
        diag.gain = gain.g;

        stage = "amplifier";
        const TwoModeSymmetricCM nla = gamma_nla(va, channel, gain);
        diag.gamma_nla = nla;

        stage = "station";
        // Bounding Eve through gamma_NLA is only sound if Bob can reach
        // gamma_PS from it with local operations, so the station must exist.
        std::optional<BobStationParams> station;
        if (params.direction == Reconciliation::Reverse || reference == EveReference::NlaState) {
            station = solve_bob_station(nla, diag.gamma_ps);
        } else {
            try {
                station = solve_bob_station(nla, diag.gamma_ps);
            } catch (const Error&) {
                // Not needed for this bound; leave the diagnostic empty.
            }
        }
        diag.station = station;

        stage = "holevo";
        if (params.direction == Reconciliation::Direct) {
            const double h_nla = holevo_dr(nla);
            const double h_ps = holevo_dr(diag.gamma_ps);
            out.holevo = reference == EveReference::NlaState ? h_nla : h_ps;
            diag.holevo_other_reference = reference == EveReference::NlaState ? h_ps : h_nla;
        } else {
            const double s_cond = von_neumann_entropy(rr_conditional_state(nla, *station));
            const double h_nla = std::max(0.0, von_neumann_entropy(nla.to_cm()) - s_cond);
            const double h_ps = std::max(0.0, von_neumann_entropy(diag.gamma_ps.to_cm()) - s_cond);
            out.holevo = reference == EveReference::NlaState ? h_nla : h_ps;
            diag.holevo_other_reference = reference == EveReference::NlaState ? h_ps : h_nla;
        }

        stage = "mutual information";
        out.mi_ab = shannon_mi_filtered(jd, filter, tol.mi);

        out.key_rate = out.keep_fraction * (params.beta * out.mi_ab - out.holevo);
        return out;
    } catch (const Error& e) {
        throw e.annotated(stage);
    }
}

}  // namespace cvqkd
