#pragma once

#include <optional>

#include "cvqkd/gaussian.hpp"

namespace cvqkd {

enum class Reconciliation { Direct, Reverse };

const char* to_string(Reconciliation direction);

/// Which state Eve is taken to purify when bounding her information.
///  NlaState: the two-mode state after the virtual amplifier, before Bob's
///            station; the station ancillae are Bob's.
///  PostSelectedState: the filtered two-mode state itself. Much more
///            pessimistic, since it hands Eve the station's added noise.
enum class EveReference { NlaState, PostSelectedState };

const char* to_string(EveReference reference);

/// Parameters of Bob's virtual station: two-mode squeezer eta on a vacuum
/// ancilla, then a beamsplitter of transmission T_B mixing in one arm of an
/// EPR pair of variance N_B.
struct BobStationParams {
    double eta = 1.0;
    double transmission = 1.0;
    double epr_variance = 1.0;
};

struct KeyRateDiagnostics {
    double modulation_variance = 0.0;
    double cutoff = 0.0;             // Delta, shot-noise units
    double target_variance = 0.0;    // V_PS; 0 when no filter was applied
    TwoModeSymmetricCM gamma_ps;
    std::optional<TwoModeSymmetricCM> gamma_nla;
    double gain = 1.0;
    std::optional<BobStationParams> station;
    EveReference eve_reference = EveReference::NlaState;
    /// Holevo term under the other EveReference. Not used in K.
    std::optional<double> holevo_other_reference;
    double log_keep_fraction = 0.0;
};

struct KeyRateResult {
    double mi_ab = 0.0;
    double holevo = 0.0;
    double keep_fraction = 1.0;
    double key_rate = 0.0;
    Reconciliation direction = Reconciliation::Reverse;
    KeyRateDiagnostics diagnostics;

    bool secure() const noexcept { return key_rate > 0.0; }
};

}  // namespace cvqkd
