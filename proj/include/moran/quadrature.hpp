// =============================================================================
// quadrature.hpp — Adaptive quadrature and singular integrals by epsilon
// truncation.
//
// Regular integrands: adaptive bisection with a 15-point Gauss-Legendre rule
// per panel (accept when the two-half refinement agrees within tolerance).
//
// Singular integrands: for a declared, monotone-divergent singular point x_s,
// the integral is evaluated through nested truncations eps_k = eps_0 * 2^-k,
//     I_k = integral over [a,b] minus the eps_k-ball around x_s,
// which is a nondecreasing sequence for nonnegative integrands. The limit is
// estimated by geometric (Aitken) extrapolation of the increments; values
// exceeding a cap are reported as +infinity, and a near-unit increment ratio
// is classified as divergence. An optional early-acceptance threshold lets
// callers of threshold inequalities stop as soon as some I_k crosses it.
// =============================================================================
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "measure.hpp"

namespace moran {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    int max_depth = 30;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double previous, double last)
        : std::runtime_error(what + " (previous estimate " + std::to_string(previous) +
                             ", last estimate " + std::to_string(last) + ")"),
          previous_estimate(previous),
          last_estimate(last) {}

    double previous_estimate;
    double last_estimate;
};

namespace detail {

// 15-point Gauss-Legendre on [-1, 1], positive half (node 0 listed once).
inline constexpr double kGlNodes[8] = {
    0.0000000000000000, 0.2011940939974345, 0.3941513470775634, 0.5709721726085388,
    0.7244177313601700, 0.8482065834104272, 0.9372733924007059, 0.9879925180204854};
inline constexpr double kGlWeights[8] = {
    0.2025782419255613, 0.1984314853271116, 0.1861610000155622, 0.1662692058169939,
    0.1395706779261543, 0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

template <typename F>
double gauss15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = kGlWeights[0] * f(c);
    for (int i = 1; i < 8; ++i)
        s += kGlWeights[i] * (f(c - h * kGlNodes[i]) + f(c + h * kGlNodes[i]));
    return s * h;
}

template <typename F>
double adapt(const F& f, double a, double b, double whole, double abs_tol, int depth,
             int max_depth) {
    const double m = 0.5 * (a + b);
    const double left = gauss15(f, a, m);
    const double right = gauss15(f, m, b);
    const double refined = left + right;
    if (std::fabs(refined - whole) <= abs_tol || (b - a) < 1e-15)
        return refined;
    if (depth >= max_depth)
        throw QuadratureError("quadrature did not converge after max refinements", whole,
                              refined);
    return adapt(f, a, m, left, 0.5 * abs_tol, depth + 1, max_depth) +
           adapt(f, m, b, right, 0.5 * abs_tol, depth + 1, max_depth);
}

}  // namespace detail

/// Adaptive integral of f over [a, b]; throws QuadratureError on failure.
template <typename F>
double integrate_interval(const F& f, double a, double b, QuadratureOptions opts = {}) {
    if (!(b > a)) return 0.0;
    const double whole = detail::gauss15(f, a, b);
    const double scale = std::max({std::fabs(whole), 1e-30});
    return detail::adapt(f, a, b, whole, opts.rel_tol * scale, 0, opts.max_depth);
}

struct SingularOptions {
    double eps0 = 1e-2;          // initial truncation radius
    double cap = 1e12;           // values above this report +infinity
    double rel_tol = 1e-10;
    int max_steps = 80;          // truncation halvings
    double early_threshold = kPosInf;  // stop as soon as some I_k crosses this
    QuadratureOptions panel;     // per-band quadrature settings
};

struct SingularResult {
    double value = 0.0;          // finite limit estimate (meaningless when diverged)
    bool diverged = false;
    bool crossed_threshold = false;  // some truncated value reached the threshold
    bool converged = true;           // false when only the threshold decision is available
    std::vector<double> truncated_values;  // the monotone sequence I_k

    double value_or_infinity() const { return diverged ? kPosInf : value; }
};

/// Integral of a nonnegative integrand with a declared singular point x_s in
/// [a, b]. See file header for the truncation/extrapolation scheme.
template <typename F>
SingularResult integrate_with_singularity(const F& f, double a, double b, double x_s,
                                          SingularOptions opts = {}) {
    if (x_s < a || x_s > b)
        throw std::invalid_argument("integrate_with_singularity: singular point outside domain");
    SingularResult res;
    double eps = opts.eps0;
    {
        const double room = std::max(x_s - a, b - x_s);
        while (eps > 0.5 * room) eps *= 0.5;  // keep the first band inside the domain
    }

    double total = 0.0;
    if (x_s - eps > a) total += integrate_interval(f, a, x_s - eps, opts.panel);
    if (x_s + eps < b) total += integrate_interval(f, x_s + eps, b, opts.panel);
    res.truncated_values.push_back(total);
    if (total >= opts.early_threshold) res.crossed_threshold = true;
    if (total > opts.cap) {
        res.diverged = true;
        return res;
    }

    double prev_increment = -1.0;
    double prev_extrapolated = kPosInf;
    int near_unit_ratio_streak = 0;
    for (int k = 1; k <= opts.max_steps; ++k) {
        const double half = 0.5 * eps;
        double band = 0.0;
        if (x_s - half > a) {
            const double lo = std::max(a, x_s - eps);
            const double hi = x_s - half;
            if (hi > lo) band += integrate_interval(f, lo, hi, opts.panel);
        }
        if (x_s + half < b) {
            const double lo = x_s + half;
            const double hi = std::min(b, x_s + eps);
            if (hi > lo) band += integrate_interval(f, lo, hi, opts.panel);
        }
        eps = half;
        total += band;
        res.truncated_values.push_back(total);

        if (total >= opts.early_threshold) res.crossed_threshold = true;
        if (total > opts.cap) {
            res.diverged = true;
            return res;
        }

        const double increment = band;
        if (increment <= opts.rel_tol * std::max(total, 1e-30)) {
            res.value = total;  // increments vanished; the tail is negligible
            return res;
        }
        if (prev_increment > 0.0) {
            const double ratio = increment / prev_increment;
            if (ratio >= 0.9995) {
                if (++near_unit_ratio_streak >= 3) {
                    res.diverged = true;  // log-type or non-integrable tail
                    return res;
                }
            } else {
                near_unit_ratio_streak = 0;
            }
            if (ratio < 0.999) {
                const double tail = increment * ratio / (1.0 - ratio);
                const double extrapolated = total + tail;
                if (std::isfinite(prev_extrapolated) &&
                    std::fabs(extrapolated - prev_extrapolated) <=
                        opts.rel_tol * std::max(std::fabs(extrapolated), 1e-30) &&
                    tail <= 1e-4 * std::max(total, 1e-30)) {
                    res.value = extrapolated;
                    return res;
                }
                prev_extrapolated = extrapolated;
            }
        }
        prev_increment = increment;
    }
    if (res.crossed_threshold) {
        // the threshold decision is settled by monotonicity even though the
        // integral itself has not converged; report the last truncation
        res.value = total;
        res.converged = false;
        return res;
    }
    throw QuadratureError("singular integral did not converge within max truncations",
                          res.truncated_values[res.truncated_values.size() - 2],
                          res.truncated_values.back());
}

/// Exact per-cell averages of f on the uniform M-cell grid over [0,1]:
/// out[i] = M * integral of f over cell i. A declared singular point routes
/// the cell containing it (and only that cell) through epsilon truncation.
template <typename F>
std::vector<double> cell_averages(const F& f, int cells,
                                  std::optional<double> singularity = std::nullopt,
                                  SingularOptions opts = {}) {
    std::vector<double> out(static_cast<std::size_t>(cells));
    const double width = 1.0 / static_cast<double>(cells);
    for (int i = 0; i < cells; ++i) {
        const double lo = static_cast<double>(i) * width;
        const double hi = (i + 1 == cells) ? 1.0 : static_cast<double>(i + 1) * width;
        double v;
        if (singularity && *singularity >= lo && *singularity <= hi) {
            auto res = integrate_with_singularity(f, lo, hi, *singularity, opts);
            if (res.diverged)
                throw std::domain_error("cell_averages: non-integrable cell");
            v = res.value;
        } else {
            v = integrate_interval(f, lo, hi, opts.panel);
        }
        out[static_cast<std::size_t>(i)] = v / (hi - lo);
    }
    return out;
}

/// Integral of f against a base measure, with an optional declared singular
/// point. Interval bases must have a constant density part (the base measure
/// on [0,1] is uniform in this library); finite bases are plain sums where an
/// infinite integrand value on a positive-mass label yields +infinity.
inline double integrate(const std::function<double(double)>& f, const MeasureRepr& base,
                        std::optional<double> singularity = std::nullopt,
                        SingularOptions opts = {}) {
    double total = 0.0;
    for (const auto& [loc, mass] : base.atoms) {
        if (mass == 0.0) continue;
        if (singularity && loc == *singularity) return kPosInf;
        const double v = f(loc);
        if (v == kPosInf) return kPosInf;
        total += mass * v;
    }
    if (base.space.is_finite() || base.density.empty()) return total;

    double level = base.density[0];
    for (double d : base.density)
        if (d != level)
            throw std::invalid_argument(
                "integrate: non-uniform interval base measures are not supported");
    if (level == 0.0) return total;

    if (singularity) {
        const auto res = integrate_with_singularity(f, 0.0, 1.0, *singularity, opts);
        if (res.diverged) return kPosInf;
        return total + level * res.value;
    }
    return total + level * integrate_interval(f, 0.0, 1.0, opts.panel);
}

}  // namespace moran
