#pragma once

// Entanglement-based picture of post-selection: a virtual noiseless linear
// amplifier of gain g on Bob's mode, followed by Gaussian operations inside
// Bob's station (two-mode squeezer eta with a vacuum ancilla D, then a
// beamsplitter T_B mixing in arm F of an EPR pair (F, G) of variance N_B).
//
// Mode order of the station state: A, B, D, F, G.

#include <utility>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/protocol.hpp"
#include "cvqkd/result.hpp"

namespace cvqkd {

struct NlaGain {
    double g = 1.0;
};

struct EffectiveChannel {
    double chi = 0.0;
    double transmission = 1.0;
    double excess_noise = 0.0;
    double modulation_variance = 0.0;

    GaussianChannel channel() const { return {transmission, excess_noise}; }
};

/// Gain that turns modulation variance V_A into V_A^PS on this channel.
NlaGain solve_gain(double modulation_variance, double modulation_variance_ps, const GaussianChannel& channel);

EffectiveChannel effective_params(double modulation_variance, const GaussianChannel& channel, NlaGain gain);

TwoModeSymmetricCM gamma_nla(double modulation_variance, const GaussianChannel& channel, NlaGain gain);

/// Supremum of gains with a physical effective channel; +inf if unbounded.
double max_gain(double modulation_variance, const GaussianChannel& channel, double tol = 1e-9);

/// Closed interval of EPR variances N_B admitting a valid station.
struct StationFamily {
    double ratio = 1.0;     // c_PS^2 / c_NLA^2 = eta T_B
    double offset = 1.0;    // T_B (N_B + 1) - N_B
    double n_min = 1.0;
    double n_max = 1.0;     // may be +inf
    bool transmission_pinned = false;  // offset == 1: T_B = 1 for every N_B
};

StationFamily station_family(const TwoModeSymmetricCM& nla, const TwoModeSymmetricCM& ps);

/// Member of the family with the given N_B.
BobStationParams station_with_epr_variance(const StationFamily& family, double epr_variance);

/// Canonical station: smallest admissible N_B.
BobStationParams solve_bob_station(const TwoModeSymmetricCM& nla, const TwoModeSymmetricCM& ps);

/// Five-mode state (A, B, D, F, G) after the station acts on gamma_NLA.
CovarianceMatrix station_state(const TwoModeSymmetricCM& nla, const BobStationParams& station);

/// Reduced (A, B) block of station_state.
TwoModeSymmetricCM forward_station(const TwoModeSymmetricCM& nla, const BobStationParams& station);

}  // namespace cvqkd
