#pragma once

// Per-point maximisation of the post-selected key rate over (V_A, Delta, V_PS).

#include <cstddef>
#include <functional>
#include <vector>

#include "cvqkd/keyrate.hpp"

namespace cvqkd {

/// Delta is searched in units of sqrt(V_B) and V_PS as a multiple of V_B.
struct SearchSpace {
    double va_min = 0.1;
    double va_max = 100.0;
    int va_points = 6;  // log spaced
    double cutoff_min = 0.0;
    double cutoff_max = 5.0;
    int cutoff_points = 6;  // linear
    double ratio_min = 1.05;
    double ratio_max = 30.0;
    int ratio_points = 5;  // log spaced
    int max_refine_evaluations = 200;
    double simplex_tol = 1e-4;  // relative spread of K across the simplex

    void validate() const;
};

struct OptimizationResult {
    KeyRateResult best;
    double coarse_best = 0.0;  // best K on the grid, before refinement
    std::size_t evaluations = 0;
    std::size_t failed_evaluations = 0;
};

/// Point of the search space in optimizer coordinates.
struct SearchPoint {
    double modulation_variance;
    double cutoff_units;  // Delta / sqrt(V_B)
    double ratio;         // V_PS / V_B
};

KeyRateResult evaluate_point(Reconciliation direction, const GaussianChannel& channel, double beta,
                             const SearchPoint& p, const Tolerances& tol = {},
                             EveReference reference = EveReference::NlaState);

OptimizationResult optimize_keyrate(Reconciliation direction, const GaussianChannel& channel, double beta,
                                    const SearchSpace& space = {}, const Tolerances& tol = {},
                                    EveReference reference = EveReference::NlaState);

/// Derivative-free Nelder-Mead minimisation inside a box. Points outside
/// the box are projected onto it before f is called.
struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                              const std::vector<double>& step, const std::vector<double>& lower,
                              const std::vector<double>& upper, int max_evaluations, double rel_tol);

}  // namespace cvqkd
