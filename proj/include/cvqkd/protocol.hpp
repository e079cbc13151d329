#pragma once

// Physical description of the coherent-state protocol over a Gaussian
// channel, and the key rates obtained without post-selection.

#include "cvqkd/gaussian.hpp"
#include "cvqkd/result.hpp"

namespace cvqkd {

/// Excess noise is input-referred: the noise added at Bob's side is T*xi.
struct GaussianChannel {
    double transmission = 1.0;
    double excess_noise = 0.0;

    static GaussianChannel from_loss_db(double loss_db, double excess_noise);
    void validate() const;
};

double transmission_from_loss_db(double loss_db);
double loss_db_from_transmission(double transmission);

struct ProtocolParams {
    double modulation_variance = 1.0;  // V_A
    double beta = 0.9;                 // reconciliation efficiency
    Reconciliation direction = Reconciliation::Reverse;
    /// Trusted noise added by Bob to his outcome (variance, shot-noise units).
    double trusted_noise = 0.0;

    void validate() const;
};

struct EvePurification {
    double variance = 1.0;  // N_E
};

/// a = V_A + 1, b = T V_A + T xi + 1, c = sqrt(T (V_A^2 + 2 V_A)).
TwoModeSymmetricCM channel_output_cm(double modulation_variance, const GaussianChannel& channel);

EvePurification eve_epr_variance(const GaussianChannel& channel);

double chi_from_va(double modulation_variance);
double va_from_chi(double chi);

/// Gaussian signal-to-noise ratio T V_A / (1 + T xi + trusted_noise).
double gaussian_snr(double modulation_variance, const GaussianChannel& channel, double trusted_noise = 0.0);

/// Homodyne key rate without post-selection, keep fraction 1.
KeyRateResult baseline_keyrate(const ProtocolParams& params, const GaussianChannel& channel);

/// Best baseline over a log-spaced V_A scan refined by golden-section search.
KeyRateResult optimize_baseline(Reconciliation direction, const GaussianChannel& channel, double beta,
                                double va_min = 1e-2, double va_max = 1e4, double trusted_noise = 0.0);

}  // namespace cvqkd
