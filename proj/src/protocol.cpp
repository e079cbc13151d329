#include "cvqkd/protocol.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "cvqkd/error.hpp"

namespace cvqkd {

const char* to_string(Reconciliation direction) {
    return direction == Reconciliation::Direct ? "DR" : "RR";
}

double transmission_from_loss_db(double loss_db) {
    if (!(loss_db >= 0.0) || !std::isfinite(loss_db)) {
        throw Error(ErrorKind::InvalidParameter, "loss in dB must be finite and >= 0");
    }
    return std::pow(10.0, -loss_db / 10.0);
}

double loss_db_from_transmission(double transmission) {
    return -10.0 * std::log10(transmission);
}

GaussianChannel GaussianChannel::from_loss_db(double loss_db, double excess_noise) {
    GaussianChannel ch{transmission_from_loss_db(loss_db), excess_noise};
    ch.validate();
    return ch;
}

void GaussianChannel::validate() const {
    if (!(transmission > 0.0 && transmission <= 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "channel transmission must lie in (0, 1]");
    }
    if (!(excess_noise >= 0.0) || !std::isfinite(excess_noise)) {
        throw Error(ErrorKind::InvalidParameter, "excess noise must be finite and >= 0");
    }
}

void ProtocolParams::validate() const {
    if (!(modulation_variance > 0.0) || !std::isfinite(modulation_variance)) {
        throw Error(ErrorKind::InvalidParameter, "modulation variance must be finite and > 0");
    }
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorKind::InvalidParameter, "beta out of (0,1]");
    if (!(trusted_noise >= 0.0)) throw Error(ErrorKind::InvalidParameter, "trusted noise must be >= 0");
}

TwoModeSymmetricCM channel_output_cm(double va, const GaussianChannel& channel) {
    if (!(va > 0.0)) throw Error(ErrorKind::InvalidParameter, "modulation variance must be > 0");
    channel.validate();
    const double t = channel.transmission;
    return {va + 1.0, t * va + t * channel.excess_noise + 1.0, std::sqrt(t * (va * va + 2.0 * va))};
}

EvePurification eve_epr_variance(const GaussianChannel& channel) {
    channel.validate();
    const double t = channel.transmission;
    if (t >= 1.0) throw Error(ErrorKind::InvalidParameter, "Eve's purification degenerates at T = 1");
    return {(1.0 - t + t * channel.excess_noise) / (1.0 - t)};
}

double chi_from_va(double va) {
    if (!(va >= 0.0)) throw Error(ErrorKind::InvalidParameter, "modulation variance must be >= 0");
    return std::sqrt(va / (va + 2.0));
}

double va_from_chi(double chi) {
    if (!(chi >= 0.0 && chi < 1.0)) throw Error(ErrorKind::InvalidParameter, "chi must lie in [0, 1)");
    return 2.0 * chi * chi / (1.0 - chi * chi);
}

double gaussian_snr(double va, const GaussianChannel& channel, double trusted_noise) {
    const double t = channel.transmission;
    return t * va / (1.0 + t * channel.excess_noise + trusted_noise);
}

KeyRateResult baseline_keyrate(const ProtocolParams& params, const GaussianChannel& channel) {
    params.validate();
    const TwoModeSymmetricCM gamma = channel_output_cm(params.modulation_variance, channel);
    const CovarianceMatrix cm = gamma.to_cm();

    KeyRateResult result;
    result.direction = params.direction;
    result.mi_ab = 0.5 * std::log2(1.0 + gaussian_snr(params.modulation_variance, channel, params.trusted_noise));

    double conditional = 0.0;
    if (params.direction == Reconciliation::Direct) {
        conditional = von_neumann_entropy(condition_on_heterodyne(cm, 0));
    } else if (params.trusted_noise == 0.0) {
        conditional = von_neumann_entropy(condition_on_homodyne(cm, 1, Quadrature::X));
    } else {
        // Trusted noise nu as Bob's mode mixed with one arm of an EPR pair of
        // variance N on a beamsplitter of transmission N/(N+nu); both ancillae
        // stay in Bob's station.
        const double nu = params.trusted_noise;
        const double n = 1.0 + nu;
        CovarianceMatrix full = direct_sum(cm, CovarianceMatrix::epr(n));
        full = apply_beamsplitter(full, 1, 2, n / (n + nu));
        conditional = von_neumann_entropy(condition_on_homodyne(full, 1, Quadrature::X));
    }
    result.holevo = std::max(0.0, von_neumann_entropy(cm) - conditional);
    result.keep_fraction = 1.0;
    result.key_rate = params.beta * result.mi_ab - result.holevo;
    result.diagnostics.modulation_variance = params.modulation_variance;
    result.diagnostics.gamma_ps = gamma;
    return result;
}

KeyRateResult optimize_baseline(Reconciliation direction, const GaussianChannel& channel, double beta,
                                double va_min, double va_max, double trusted_noise) {
    if (!(va_min > 0.0 && va_max > va_min)) throw Error(ErrorKind::InvalidParameter, "bad V_A range");
    ProtocolParams params{1.0, beta, direction, trusted_noise};
    auto rate_at = [&](double log_va) {
        params.modulation_variance = std::exp(log_va);
        return baseline_keyrate(params, channel).key_rate;
    };

    const double lo = std::log(va_min);
    const double hi = std::log(va_max);
    constexpr int kScan = 64;
    int best = 0;
    double best_rate = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double r = rate_at(lo + (hi - lo) * i / kScan);
        if (r > best_rate) {
            best_rate = r;
            best = i;
        }
    }
    const double step = (hi - lo) / kScan;
    const double a = std::max(lo, lo + (best - 1) * step);
    const double b = std::min(hi, lo + (best + 1) * step);
    auto [log_va, neg_rate] =
        boost::math::tools::brent_find_minima([&](double x) { return -rate_at(x); }, a, b, 40);
    double best_log = lo + best * step;
    if (-neg_rate > best_rate) best_log = log_va;

    params.modulation_variance = std::exp(best_log);
    return baseline_keyrate(params, channel);
}

}  // namespace cvqkd
