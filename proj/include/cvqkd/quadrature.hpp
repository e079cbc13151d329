#pragma once

// Adaptive numerical integration.
//
// adaptive_cubature_2d is a globally adaptive h-refinement scheme over
// rectangles using the degree-7 Genz-Malik rule with its embedded degree-5
// rule as error estimate. Integrands may be vector valued; every component
// must individually meet max(abs_tol, rel_tol * |I_k|).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cvqkd::quadrature {

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 1e-300;
    std::size_t max_evaluations = 20'000'000;
    /// Each input rectangle is first cut into initial_grid x initial_grid cells.
    int initial_grid = 4;
};

struct Rectangle {
    double x_lo, x_hi;
    double y_lo, y_hi;
};

template <std::size_t N>
struct CubatureResult {
    std::array<double, N> value{};
    std::array<double, N> error{};
    std::size_t evaluations = 0;
    std::size_t regions = 0;
    bool converged = false;
};

namespace detail {

template <std::size_t N>
struct Region {
    double cx, cy, hx, hy;
    std::array<double, N> value;
    std::array<double, N> error;
    int split_dim;
    double priority;
};

// Genz-Malik degree 7/5 pair for dimension 2 (17 points).
template <std::size_t N, class F>
void genz_malik(F& f, Region<N>& r) {
    constexpr double lambda2 = 0.35856858280031809199;  // sqrt(9/70)
    constexpr double lambda4 = 0.94868329805051379960;  // sqrt(9/10)
    constexpr double lambda5 = 0.68824720161168529772;  // sqrt(9/19)
    constexpr double dim = 2.0;
    constexpr double w1 = (12824.0 - (9120.0 - 400.0 * dim) * dim) / 19683.0;
    constexpr double w2 = 980.0 / 6561.0;
    constexpr double w3 = (1820.0 - 400.0 * dim) / 19683.0;
    constexpr double w4 = 200.0 / 19683.0;
    constexpr double w5 = 6859.0 / 19683.0 / 4.0;
    constexpr double e1 = (729.0 - 50.0 * (19.0 - dim) * dim) / 729.0;
    constexpr double e2 = 245.0 / 486.0;
    constexpr double e3 = (265.0 - 100.0 * dim) / 1458.0;
    constexpr double e4 = 25.0 / 729.0;
    constexpr double ratio = (lambda2 * lambda2) / (lambda4 * lambda4);

    const double vol = 4.0 * r.hx * r.hy;
    const std::array<double, N> f0 = f(r.cx, r.cy);
    std::array<double, N> s2{}, s3{}, s4{}, s5{};
    double diff[2] = {0.0, 0.0};

    auto axis = [&](int d, double lam, std::array<double, N>& a, std::array<double, N>& b) {
        const double dx = d == 0 ? lam * r.hx : 0.0;
        const double dy = d == 1 ? lam * r.hy : 0.0;
        a = f(r.cx + dx, r.cy + dy);
        b = f(r.cx - dx, r.cy - dy);
    };
    for (int d = 0; d < 2; ++d) {
        std::array<double, N> a2, b2, a4, b4;
        axis(d, lambda2, a2, b2);
        axis(d, lambda4, a4, b4);
        for (std::size_t k = 0; k < N; ++k) {
            s2[k] += a2[k] + b2[k];
            s3[k] += a4[k] + b4[k];
            diff[d] += std::fabs(a2[k] + b2[k] - 2.0 * f0[k] - ratio * (a4[k] + b4[k] - 2.0 * f0[k]));
        }
    }
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
            const auto v4 = f(r.cx + sx * lambda4 * r.hx, r.cy + sy * lambda4 * r.hy);
            const auto v5 = f(r.cx + sx * lambda5 * r.hx, r.cy + sy * lambda5 * r.hy);
            for (std::size_t k = 0; k < N; ++k) {
                s4[k] += v4[k];
                s5[k] += v5[k];
            }
        }
    }
    for (std::size_t k = 0; k < N; ++k) {
        const double deg7 = vol * (w1 * f0[k] + w2 * s2[k] + w3 * s3[k] + w4 * s4[k] + w5 * s5[k]);
        const double deg5 = vol * (e1 * f0[k] + e2 * s2[k] + e3 * s3[k] + e4 * s4[k]);
        r.value[k] = deg7;
        r.error[k] = std::fabs(deg7 - deg5);
    }
    // Split along the axis with the larger fourth difference; ties go to the wider side.
    if (diff[0] > diff[1]) {
        r.split_dim = 0;
    } else if (diff[1] > diff[0]) {
        r.split_dim = 1;
    } else {
        r.split_dim = r.hx >= r.hy ? 0 : 1;
    }
}

}  // namespace detail

inline constexpr std::size_t kGenzMalikPoints = 17;

/// Integrate f(x, y) -> std::array<double, N> over the union of the given
/// (disjoint) rectangles.
template <std::size_t N, class F>
CubatureResult<N> adaptive_cubature_2d(F&& f, const std::vector<Rectangle>& domain, const Options& opts = {}) {
    using detail::Region;
    CubatureResult<N> out;
    std::vector<Region<N>> heap;
    heap.reserve(1024);

    std::array<double, N> total{}, total_err{};
    const int grid = std::max(1, opts.initial_grid);
    for (const auto& rect : domain) {
        if (!(rect.x_hi > rect.x_lo) || !(rect.y_hi > rect.y_lo)) continue;
        const double hx = 0.5 * (rect.x_hi - rect.x_lo) / grid;
        const double hy = 0.5 * (rect.y_hi - rect.y_lo) / grid;
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                Region<N> r{rect.x_lo + (2 * i + 1) * hx, rect.y_lo + (2 * j + 1) * hy, hx, hy, {}, {}, 0, 0.0};
                detail::genz_malik<N>(f, r);
                out.evaluations += kGenzMalikPoints;
                for (std::size_t k = 0; k < N; ++k) {
                    total[k] += r.value[k];
                    total_err[k] += r.error[k];
                }
                heap.push_back(r);
            }
        }
    }
    if (heap.empty()) {
        out.converged = true;
        return out;
    }

    // Regions are ranked by their worst error relative to the current
    // totals. The weights drift as the totals settle, so the heap is rebuilt
    // every time the region count grows by an eighth.
    std::array<double, N> weight{};
    auto reweigh = [&] {
        for (std::size_t k = 0; k < N; ++k) weight[k] = 1.0 / std::max(std::fabs(total[k]), opts.abs_tol);
    };
    reweigh();
    auto priority = [&](const Region<N>& r) {
        double p = 0.0;
        for (std::size_t k = 0; k < N; ++k) p = std::max(p, r.error[k] * weight[k]);
        return p;
    };
    auto cmp = [](const Region<N>& a, const Region<N>& b) { return a.priority < b.priority; };
    auto rebuild = [&] {
        reweigh();
        for (auto& r : heap) r.priority = priority(r);
        std::make_heap(heap.begin(), heap.end(), cmp);
    };
    rebuild();
    std::size_t next_rebuild = heap.size() + std::max<std::size_t>(32, heap.size() / 8);

    auto done = [&] {
        for (std::size_t k = 0; k < N; ++k) {
            if (total_err[k] > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total[k]))) return false;
        }
        return true;
    };

    while (!done()) {
        if (out.evaluations + 2 * kGenzMalikPoints > opts.max_evaluations) break;
        if (heap.size() >= next_rebuild) {
            rebuild();
            next_rebuild = heap.size() + std::max<std::size_t>(32, heap.size() / 8);
        }
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Region<N> parent = heap.back();
        heap.pop_back();

        Region<N> lo = parent;
        Region<N> hi = parent;
        if (parent.split_dim == 0) {
            lo.hx = hi.hx = 0.5 * parent.hx;
            lo.cx = parent.cx - lo.hx;
            hi.cx = parent.cx + hi.hx;
        } else {
            lo.hy = hi.hy = 0.5 * parent.hy;
            lo.cy = parent.cy - lo.hy;
            hi.cy = parent.cy + hi.hy;
        }
        detail::genz_malik<N>(f, lo);
        detail::genz_malik<N>(f, hi);
        out.evaluations += 2 * kGenzMalikPoints;
        for (std::size_t k = 0; k < N; ++k) {
            total[k] += lo.value[k] + hi.value[k] - parent.value[k];
            total_err[k] += lo.error[k] + hi.error[k] - parent.error[k];
        }
        for (Region<N>* child : {&lo, &hi}) {
            child->priority = priority(*child);
            heap.push_back(*child);
            std::push_heap(heap.begin(), heap.end(), cmp);
        }
    }

    // Re-sum from the leaves; the running totals accumulate cancellation error.
    out.value.fill(0.0);
    out.error.fill(0.0);
    for (const auto& r : heap) {
        for (std::size_t k = 0; k < N; ++k) {
            out.value[k] += r.value[k];
            out.error[k] += r.error[k];
        }
    }
    out.regions = heap.size();
    out.converged = true;
    for (std::size_t k = 0; k < N; ++k) {
        if (out.error[k] > std::max(opts.abs_tol, opts.rel_tol * std::fabs(out.value[k]))) out.converged = false;
    }
    return out;
}

struct Result1d {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b], split at the given interior
/// breakpoints (sorted, inside (a, b)).
template <class F>
Result1d integrate_1d(F&& f, double a, double b, std::vector<double> breaks, double rel_tol,
                      unsigned max_depth = 18) {
    Result1d out;
    out.converged = true;
    std::vector<double> knots{a};
    for (double x : breaks) {
        if (x > knots.back() && x < b) knots.push_back(x);
    }
    knots.push_back(b);
    double l1_total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double err = 0.0;
        double l1 = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, knots[i], knots[i + 1], max_depth, rel_tol, &err, &l1);
        out.value += v;
        out.error += err * std::fabs(v);
        l1_total += l1;
    }
    // boost reports relative error; convert back and test against the L1 norm.
    if (out.error > rel_tol * std::max(std::fabs(out.value), 1e-300) && out.error > rel_tol * l1_total) {
        out.converged = false;
    }
    return out;
}

}  // namespace cvqkd::quadrature
