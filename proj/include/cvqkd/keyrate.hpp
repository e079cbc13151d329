#pragma once

// Holevo bounds and secret key rates with post-selection.

#include <Eigen/Dense>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/postselection.hpp"
#include "cvqkd/protocol.hpp"
#include "cvqkd/result.hpp"

namespace cvqkd {

struct Tolerances {
    double moments = 1e-8;
    double mi = 1e-7;

    void validate() const;
};

/// State of Bob's mode and Alice's vacuum ancilla C after Alice heterodynes.
CovarianceMatrix dr_conditional_state(const TwoModeSymmetricCM& gamma);

/// Closed form of dr_conditional_state, modes (B, C).
Eigen::Matrix4d dr_conditional_closed_form(const TwoModeSymmetricCM& gamma);

/// Eve's information on Alice's heterodyne outcome when she purifies gamma.
double holevo_dr(const TwoModeSymmetricCM& gamma);

/// Modes (A, D, F, G) after Bob's station and his x homodyne on B.
CovarianceMatrix rr_conditional_state(const TwoModeSymmetricCM& nla, const BobStationParams& station);

/// Diagonal 2x2 blocks of rr_conditional_state in closed form.
struct RrConditionalBlocks {
    Eigen::Matrix2d gamma_a, gamma_d, gamma_f, gamma_g;
    Eigen::Matrix2d sigma_ad, sigma_af, sigma_ag;
};

RrConditionalBlocks rr_conditional_closed_form(const TwoModeSymmetricCM& nla, const BobStationParams& station);

/// S(reference) - S(ADFG | x_B). The reference is gamma_NLA or gamma_PS
/// according to `reference`.
double holevo_rr(const TwoModeSymmetricCM& gamma_ps, const BobStationParams& station,
                 const TwoModeSymmetricCM& gamma_nla, EveReference reference = EveReference::NlaState);

/// Full post-selected key rate K = keep_fraction (beta I(a:b) - chi_E).
KeyRateResult keyrate_ps(const ProtocolParams& params, const GaussianChannel& channel,
                         const PostSelectionFilter& filter, const Tolerances& tol = {},
                         EveReference reference = EveReference::NlaState);

}  // namespace cvqkd
