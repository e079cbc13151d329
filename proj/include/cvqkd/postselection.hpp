#pragma once

// Gaussian post-selection on Bob's homodyne outcome and the statistics of the
// surviving data.
//
// Measurement units: Alice's heterodyne outcome x_A has variance (a+1)/2,
// Bob's homodyne outcome x_B has variance b, and their covariance is c/sqrt(2).
// All conversions between outcome statistics and CM entries go through
// to_covariance / to_measurement below.

#include "cvqkd/gaussian.hpp"
#include "cvqkd/protocol.hpp"

namespace cvqkd {

struct PostSelectionFilter {
    double target_variance = 0.0;  // V_PS
    double cutoff = 0.0;           // Delta
    double bob_variance = 1.0;     // V_B before filtering

    static PostSelectionFilter for_channel(double modulation_variance, const GaussianChannel& channel,
                                           double target_variance, double cutoff);
    void validate() const;

    /// kappa = (1/V_B - 1/V_PS) / 2, so that inside the cutoff the accepted
    /// density becomes N(0, V_PS) up to normalisation.
    double kappa() const noexcept { return 0.5 * (1.0 / bob_variance - 1.0 / target_variance); }
};

/// Acceptance probability of outcome x: exp(-kappa (Delta^2 - x^2)) for
/// |x| < Delta and 1 elsewhere.
double acceptance_probability(double x, const PostSelectionFilter& filter);

/// log(acceptance) + kappa Delta^2. Finite for any cutoff.
double scaled_log_acceptance(double x, const PostSelectionFilter& filter);

/// Prepare-and-measure outcome distribution:
///   x_A ~ N(0, (V_A+2)/2),  x_B | x_A ~ N(k x_A, 1 + T xi),  k = sqrt(2 T V_A / (V_A+2)).
struct JointDistribution {
    double modulation_variance = 1.0;
    double transmission = 1.0;
    double excess_noise = 0.0;

    static JointDistribution from(double modulation_variance, const GaussianChannel& channel);
    void validate() const;

    double alice_variance() const noexcept { return 0.5 * (modulation_variance + 2.0); }
    double bob_variance() const noexcept {
        return transmission * (modulation_variance + excess_noise) + 1.0;
    }
    double covariance() const noexcept { return slope() * alice_variance(); }
    double slope() const noexcept;
    double noise_variance() const noexcept { return 1.0 + transmission * excess_noise; }
    /// Var(x_A | x_B); the filter acts on x_B only, so this survives post-selection.
    double alice_conditional_variance() const noexcept;
};

double joint_density(double x_a, double x_b, const JointDistribution& jd);

struct MeasurementMoments {
    double var_a = 1.0;
    double var_b = 1.0;
    double cov_ab = 0.0;
};

MeasurementMoments to_measurement(const TwoModeSymmetricCM& cm);
TwoModeSymmetricCM to_covariance(const MeasurementMoments& m);

struct FilteredMoments {
    double keep_fraction = 1.0;
    /// log(keep_fraction); stays finite when keep_fraction underflows.
    double log_keep_fraction = 0.0;
    double var_a = 1.0;  // measurement units
    double var_b = 1.0;
    double cov_ab = 0.0;
    double modulation_variance_ps = 0.0;  // V_A^PS = a - 1
    double integration_error = 0.0;       // worst relative error estimate
    std::size_t evaluations = 0;

    TwoModeSymmetricCM cm() const { return to_covariance({var_a, var_b, cov_ab}); }
};

/// Post-selected second moments by adaptive 2-D cubature over (x_A, x_B).
FilteredMoments filtered_moments(const JointDistribution& jd, const PostSelectionFilter& filter, double tol = 1e-8);

/// Density of x_A after post-selection, by 1-D quadrature over x_B.
double alice_marginal_filtered(double x_a, const JointDistribution& jd, const PostSelectionFilter& filter,
                               double log_norm, double tol);

/// Shannon mutual information (bits) of the post-selected outcomes.
double shannon_mi_filtered(const JointDistribution& jd, const PostSelectionFilter& filter, double tol = 1e-7);

}  // namespace cvqkd
