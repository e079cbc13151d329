#include "cvqkd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> spaced(double lo, double hi, int n, bool logarithmic) {
    std::vector<double> v;
    if (n <= 1) {
        v.push_back(logarithmic ? std::sqrt(lo * hi) : 0.5 * (lo + hi));
        return v;
    }
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        v.push_back(logarithmic ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo));
    }
    return v;
}

}  // namespace

void SearchSpace::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorKind::InvalidParameter, what);
    };
    check(va_min > 0.0 && va_max > va_min, "search space: need 0 < va_min < va_max");
    check(cutoff_min >= 0.0 && cutoff_max > cutoff_min, "search space: need 0 <= cutoff_min < cutoff_max");
    check(ratio_min > 1.0 && ratio_max > ratio_min, "search space: need 1 < ratio_min < ratio_max");
    check(va_points >= 1 && cutoff_points >= 1 && ratio_points >= 1, "search space: grid sizes must be >= 1");
    check(max_refine_evaluations >= 0, "search space: refinement budget must be >= 0");
    check(simplex_tol > 0.0, "search space: simplex tolerance must be > 0");
}

KeyRateResult evaluate_point(Reconciliation direction, const GaussianChannel& channel, double beta,
                             const SearchPoint& p, const Tolerances& tol, EveReference reference) {
    const double vb = channel_output_cm(p.modulation_variance, channel).b;
    const PostSelectionFilter filter{p.ratio * vb, p.cutoff_units * std::sqrt(vb), vb};
    return keyrate_ps({p.modulation_variance, beta, direction}, channel, filter, tol, reference);
}

SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                              const std::vector<double>& step, const std::vector<double>& lower,
                              const std::vector<double>& upper, int max_evaluations, double rel_tol) {
    const std::size_t n = x0.size();
    auto project = [&](std::vector<double> x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
        return x;
    };
    SimplexResult out;
    auto eval = [&](const std::vector<double>& x) {
        ++out.evaluations;
        return f(x);
    };

    std::vector<std::vector<double>> pts{project(x0)};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = pts[0];
        x[i] += step[i];
        // Step inward when the start sits on the upper face.
        if (x[i] > upper[i]) x[i] = pts[0][i] - step[i];
        pts.push_back(project(x));
    }
    std::vector<double> vals;
    for (const auto& p : pts) {
        if (out.evaluations >= max_evaluations) break;
        vals.push_back(eval(p));
    }
    if (vals.size() < pts.size()) {
        out.x = pts[0];
        out.value = vals.empty() ? kInf : vals[0];
        return out;
    }

    std::vector<std::size_t> order(n + 1);
    while (out.evaluations < max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        const double spread = vals[worst] - vals[best];
        double diameter = 0.0;
        for (const auto& p : pts) {
            for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::fabs(p[i] - pts[best][i]));
        }
        if (std::isfinite(spread) && spread <= rel_tol * std::fabs(vals[best]) + 1e-15) break;
        if (diameter < 1e-9) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / n;
        }
        auto along = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
            return project(x);
        };

        const auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            if (out.evaluations >= max_evaluations) {
                pts[worst] = xr;
                vals[worst] = fr;
                break;
            }
            const auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        if (out.evaluations >= max_evaluations) break;
        const bool outside = fr < vals[worst];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            if (out.evaluations >= max_evaluations) break;
            for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
            pts[k] = project(pts[k]);
            vals[k] = eval(pts[k]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    out.x = pts[static_cast<std::size_t>(it - vals.begin())];
    out.value = *it;
    return out;
}

OptimizationResult optimize_keyrate(Reconciliation direction, const GaussianChannel& channel, double beta,
                                    const SearchSpace& space, const Tolerances& tol, EveReference reference) {
    space.validate();
    OptimizationResult out;
    out.best.key_rate = -kInf;
    out.best.direction = direction;

    auto evaluate = [&](const SearchPoint& p) -> double {
        ++out.evaluations;
        try {
            KeyRateResult r = evaluate_point(direction, channel, beta, p, tol, reference);
            if (r.key_rate > out.best.key_rate) out.best = r;
            return r.key_rate;
        } catch (const Error&) {
            ++out.failed_evaluations;
            return -kInf;
        }
    };

    // The identity filter at the best baseline modulation keeps the optimum
    // at or above the no-post-selection rate.
    const double va_seed =
        std::clamp(optimize_baseline(direction, channel, beta, space.va_min, space.va_max).diagnostics.modulation_variance,
                   space.va_min, space.va_max);
    SearchPoint start{va_seed, 0.0, space.ratio_min};
    double start_k = evaluate(start);
    for (double va : spaced(space.va_min, space.va_max, space.va_points, true)) {
        for (double d : spaced(space.cutoff_min, space.cutoff_max, space.cutoff_points, false)) {
            for (double m : spaced(space.ratio_min, space.ratio_max, space.ratio_points, true)) {
                const SearchPoint p{va, d, m};
                const double k = evaluate(p);
                if (k > start_k) {
                    start_k = k;
                    start = p;
                }
            }
        }
    }
    out.coarse_best = start_k;

    if (space.max_refine_evaluations > 0) {
        const std::vector<double> lower{std::log(space.va_min), space.cutoff_min, std::log(space.ratio_min)};
        const std::vector<double> upper{std::log(space.va_max), space.cutoff_max, std::log(space.ratio_max)};
        std::vector<double> step(3);
        for (int i = 0; i < 3; ++i) step[i] = 0.1 * (upper[i] - lower[i]);
        auto objective = [&](const std::vector<double>& u) {
            return -evaluate({std::exp(u[0]), u[1], std::exp(u[2])});
        };
        nelder_mead_box(objective, {std::log(start.modulation_variance), start.cutoff_units, std::log(start.ratio)},
                        step, lower, upper, space.max_refine_evaluations, space.simplex_tol);
    }
    return out;
}

}  // namespace cvqkd
