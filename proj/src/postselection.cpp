#include "cvqkd/postselection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/quadrature.hpp"

namespace cvqkd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// Half-width of the integration box, in units of the widest standard
// deviation that can appear in either outcome after filtering.
constexpr double kBoxSigmas = 10.0;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Largest variance either outcome can have after post-selection.
double widest_variance(const JointDistribution& jd, const PostSelectionFilter& f) {
    const double vb_max = std::max(jd.bob_variance(), f.target_variance);
    const double gain_ab = jd.covariance() / jd.bob_variance();
    const double va_max = jd.alice_conditional_variance() + gain_ab * gain_ab * vb_max;
    return std::max({jd.modulation_variance + 2.0, vb_max, va_max});
}

// Pieces of the x_B axis carrying all but a negligible share of the filtered
// mass: the accepted core |x| < Delta, where the density falls off on the
// scale sqrt(V_PS), and the untouched tails beyond Delta, which fall off on
// the scale sqrt(V_B).
std::vector<std::pair<double, double>> bob_segments(const JointDistribution& jd, const PostSelectionFilter& f) {
    const double sb = std::sqrt(jd.bob_variance());
    const double core = std::min(f.cutoff, kBoxSigmas * std::sqrt(f.target_variance));
    const double tail = f.cutoff + kBoxSigmas * sb;
    std::vector<std::pair<double, double>> seg;
    if (f.cutoff > 0.0) {
        seg.emplace_back(-tail, -f.cutoff);
        seg.emplace_back(-core, core);
        seg.emplace_back(f.cutoff, tail);
    } else {
        seg.emplace_back(-tail, tail);
    }
    return seg;
}

}  // namespace

PostSelectionFilter PostSelectionFilter::for_channel(double modulation_variance, const GaussianChannel& channel,
                                                     double target_variance, double cutoff) {
    PostSelectionFilter f{target_variance, cutoff, channel_output_cm(modulation_variance, channel).b};
    f.validate();
    return f;
}

void PostSelectionFilter::validate() const {
    if (!(bob_variance >= 1.0 - 1e-12) || !std::isfinite(bob_variance)) {
        throw Error(ErrorKind::InvalidParameter, "Bob variance must be finite and >= 1");
    }
    if (!(target_variance > bob_variance) || !std::isfinite(target_variance)) {
        throw Error(ErrorKind::InvalidParameter, "target variance V_PS=" + fmt_double(target_variance) +
                                                     " must exceed V_B=" + fmt_double(bob_variance));
    }
    if (!(cutoff >= 0.0) || !std::isfinite(cutoff)) {
        throw Error(ErrorKind::InvalidParameter, "cutoff must be finite and >= 0");
    }
}

double scaled_log_acceptance(double x, const PostSelectionFilter& f) {
    const double k = f.kappa();
    return std::fabs(x) < f.cutoff ? k * x * x : k * f.cutoff * f.cutoff;
}

double acceptance_probability(double x, const PostSelectionFilter& f) {
    f.validate();
    if (std::fabs(x) >= f.cutoff) return 1.0;
    return std::exp(-f.kappa() * (f.cutoff * f.cutoff - x * x));
}

JointDistribution JointDistribution::from(double modulation_variance, const GaussianChannel& channel) {
    JointDistribution jd{modulation_variance, channel.transmission, channel.excess_noise};
    jd.validate();
    return jd;
}

void JointDistribution::validate() const {
    if (!(modulation_variance > 0.0) || !std::isfinite(modulation_variance)) {
        throw Error(ErrorKind::InvalidParameter, "modulation variance must be finite and > 0");
    }
    GaussianChannel{transmission, excess_noise}.validate();
}

double JointDistribution::slope() const noexcept {
    return std::sqrt(2.0 * transmission * modulation_variance / (modulation_variance + 2.0));
}

double JointDistribution::alice_conditional_variance() const noexcept {
    // Var(x_A) - Cov^2 / V_B, written without cancellation.
    return alice_variance() * noise_variance() / bob_variance();
}

double joint_density(double x_a, double x_b, const JointDistribution& jd) {
    const double va = jd.alice_variance();
    const double vn = jd.noise_variance();
    const double r = x_b - jd.slope() * x_a;
    return std::exp(-x_a * x_a / (2.0 * va) - r * r / (2.0 * vn)) / (2.0 * std::numbers::pi * std::sqrt(va * vn));
}

MeasurementMoments to_measurement(const TwoModeSymmetricCM& cm) {
    return {0.5 * (cm.a + 1.0), cm.b, cm.c / std::numbers::sqrt2};
}

TwoModeSymmetricCM to_covariance(const MeasurementMoments& m) {
    return {2.0 * m.var_a - 1.0, m.var_b, std::numbers::sqrt2 * m.cov_ab};
}

FilteredMoments filtered_moments(const JointDistribution& jd, const PostSelectionFilter& f, double tol) {
    jd.validate();
    f.validate();
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParameter, "integration tolerance must be > 0");

    // Integrate over (x_B, u) with x_A = h x_B + u. Given x_B, u is
    // N(0, Var(x_A | x_B)) whatever the filter does, so the box is tight in
    // both directions even for strongly correlated outcomes.
    const double vb = jd.bob_variance();
    const double vu = jd.alice_conditional_variance();
    const double h = jd.covariance() / vb;
    const double log_norm = -kLog2Pi - 0.5 * std::log(vb * vu);

    // Components: 1, x_A^2, x_B^2, (x_A + x_B)^2. The last avoids a relative
    // tolerance on a covariance that may be zero.
    auto integrand = [&](double xb, double u) {
        const double w = std::exp(log_norm - xb * xb / (2.0 * vb) - u * u / (2.0 * vu) + scaled_log_acceptance(xb, f));
        const double xa = h * xb + u;
        const double s = xa + xb;
        return std::array<double, 4>{w, w * xa * xa, w * xb * xb, w * s * s};
    };

    const double u_half = kBoxSigmas * std::sqrt(vu);
    std::vector<quadrature::Rectangle> domain;
    for (const auto& [lo, hi] : bob_segments(jd, f)) domain.push_back({lo, hi, -u_half, u_half});
    quadrature::Options opts;
    opts.rel_tol = tol;
    opts.max_evaluations = 4'000'000;
    const auto res = quadrature::adaptive_cubature_2d<4>(integrand, domain, opts);

    FilteredMoments m;
    m.evaluations = res.evaluations;
    const double z = res.value[0];
    if (!(z > 0.0) || !std::isfinite(z)) {
        throw Error(ErrorKind::IntegrationFailure, "post-selected normalisation is not positive");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        m.integration_error = std::max(m.integration_error, res.error[i] / std::max(std::fabs(res.value[i]), 1e-300));
    }
    if (!res.converged) {
        throw Error(ErrorKind::IntegrationFailure, "moment cubature stopped at relative error " +
                                                       fmt_double(m.integration_error) + " after " +
                                                       std::to_string(res.evaluations) + " evaluations");
    }
    const double kd2 = f.kappa() * f.cutoff * f.cutoff;
    m.log_keep_fraction = std::min(0.0, std::log(z) - kd2);
    m.keep_fraction = std::exp(m.log_keep_fraction);
    m.var_a = res.value[1] / z;
    m.var_b = res.value[2] / z;
    m.cov_ab = 0.5 * (res.value[3] / z - m.var_a - m.var_b);
    m.modulation_variance_ps = 2.0 * m.var_a - 2.0;
    return m;
}

namespace {

// log of the integral of P_B(x) exp(scaled_log_acceptance(x)); the filtered
// normalisation before the exp(-kappa Delta^2) factor.
double log_filtered_norm(const JointDistribution& jd, const PostSelectionFilter& f, double tol) {
    const double vb = jd.bob_variance();
    const double half = kBoxSigmas * std::sqrt(std::max(vb, f.target_variance));
    // The exponent is at most -x^2 / (2 V_PS) everywhere, so no overflow.
    auto g = [&](double x) {
        return std::exp(-0.5 * kLog2Pi - 0.5 * std::log(vb) - x * x / (2.0 * vb) + scaled_log_acceptance(x, f));
    };
    std::vector<double> breaks;
    if (f.cutoff > 0.0) breaks = {-f.cutoff, f.cutoff};
    const auto r = quadrature::integrate_1d(g, -half, half, breaks, tol * 1e-2);
    if (!r.converged || !(r.value > 0.0)) {
        throw Error(ErrorKind::IntegrationFailure, "normalisation of the filtered Bob marginal did not converge");
    }
    return std::log(r.value);
}

}  // namespace

double alice_marginal_filtered(double x_a, const JointDistribution& jd, const PostSelectionFilter& f,
                               double log_norm, double tol) {
    const double va = jd.alice_variance();
    const double vn = jd.noise_variance();
    const double mean = jd.slope() * x_a;
    // Inside the cutoff the accepted conditional is again Gaussian, with a
    // wider variance and shifted centre; cover both peaks.
    const double inv_v = 1.0 / vn - 2.0 * f.kappa();
    const double v_in = 1.0 / inv_v;
    const double mean_in = mean / vn * v_in;
    const double width = 12.0 * std::sqrt(v_in);
    const double lo = std::min(mean, mean_in) - width;
    const double hi = std::max(mean, mean_in) + width;

    const double log_pa = -0.5 * kLog2Pi - 0.5 * std::log(va) - x_a * x_a / (2.0 * va) - log_norm;
    const double log_pn = -0.5 * kLog2Pi - 0.5 * std::log(vn);
    auto g = [&](double xb) {
        const double r = xb - mean;
        return std::exp(log_pa + log_pn - r * r / (2.0 * vn) + scaled_log_acceptance(xb, f));
    };
    std::vector<double> breaks{std::min(mean, mean_in), std::max(mean, mean_in)};
    if (f.cutoff > 0.0) {
        breaks.push_back(-f.cutoff);
        breaks.push_back(f.cutoff);
    }
    std::sort(breaks.begin(), breaks.end());
    const auto r = quadrature::integrate_1d(g, lo, hi, breaks, tol);
    if (!r.converged) throw Error(ErrorKind::IntegrationFailure, "Alice marginal quadrature did not converge");
    return r.value;
}

double shannon_mi_filtered(const JointDistribution& jd, const PostSelectionFilter& f, double tol) {
    jd.validate();
    f.validate();
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParameter, "integration tolerance must be > 0");

    // The filter only looks at x_B, so x_A | x_B keeps its Gaussian law and
    // I = h(x_A after filtering) - h(x_A | x_B).
    const double log_norm = log_filtered_norm(jd, f, tol);
    const double inner_tol = std::max(tol * 1e-3, 1e-13);
    auto neg_plogp = [&](double x) {
        const double p = alice_marginal_filtered(x, jd, f, log_norm, inner_tol);
        return p < 1e-300 ? 0.0 : -p * std::log2(p);
    };
    const double half = kBoxSigmas * std::sqrt(widest_variance(jd, f));
    const double sa = std::sqrt(jd.alice_variance());
    const auto h = quadrature::integrate_1d(neg_plogp, -half, half, {-3.0 * sa, -sa, 0.0, sa, 3.0 * sa}, tol * 1e-2);
    if (!h.converged) throw Error(ErrorKind::IntegrationFailure, "Shannon entropy quadrature did not converge");

    const double h_cond = 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * jd.alice_conditional_variance());
    return std::max(0.0, h.value - h_cond);
}

}  // namespace cvqkd
