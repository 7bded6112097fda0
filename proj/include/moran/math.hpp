// =============================================================================
// math.hpp — Log-space combinatorics and small statistical helpers.
//
// Everything here is deterministic scalar math used across the library:
//   - log-sum-exp reductions
//   - log Pochhammer (rising factorial) and log multinomial coefficients
//   - regularized incomplete gamma (for chi-square tail probabilities)
//   - exact one-sided Spearman trend p-values for short series
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace moran {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// ── log-space reductions ────────────────────────────────────────────────────

/// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/// Normalize log-weights into probabilities in place; returns the log normalizer.
inline double normalize_log_weights(std::vector<double>& lw) {
    const double lz = log_sum_exp(lw);
    if (lz == kNegInf)
        throw std::domain_error("normalize_log_weights: all weights are zero");
    for (double& x : lw) x = std::exp(x - lz);
    return lz;
}

// ── combinatorics ───────────────────────────────────────────────────────────

/// ln (a)_n = ln[a (a+1) ... (a+n-1)], a > 0.
inline double log_pochhammer(double a, std::uint64_t n) {
    if (a <= 0.0) throw std::domain_error("log_pochhammer: requires a > 0");
    if (n == 0) return 0.0;
    return std::lgamma(a + static_cast<double>(n)) - std::lgamma(a);
}

inline double log_factorial(std::uint64_t n) {
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// ln [ n! / (c_1! ... c_K!) ] with n = sum of counts.
inline double log_multinomial_coefficient(std::span<const std::uint32_t> counts) {
    std::uint64_t n = 0;
    double denom = 0.0;
    for (auto c : counts) {
        n += c;
        denom += log_factorial(c);
    }
    return log_factorial(n) - denom;
}

// ── regularized incomplete gamma ────────────────────────────────────────────
// P(a,x) by series, Q(a,x) by continued fraction (Lentz). Standard method;
// accurate to ~1e-14 for the a ranges used here (chi-square dof / 2).

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_q_contfrac: no convergence");
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x) / Gamma(a).
inline double regularized_gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::domain_error("regularized_gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

/// Survival function of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_sf(double x, double dof) {
    return regularized_gamma_q(dof / 2.0, x / 2.0);
}

// ── Spearman trend test ─────────────────────────────────────────────────────

namespace detail {

inline std::vector<double> ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

/// Spearman rank correlation of y against x.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho: need two equal-length series");
    const auto rx = detail::ranks(x);
    const auto ry = detail::ranks(y);
    return detail::pearson(rx, ry);
}

/// One-sided p-value for a NEGATIVE Spearman trend, exact by permutation
/// enumeration for series of length <= 8 (larger series use the t approximation).
inline double spearman_negative_trend_pvalue(std::span<const double> x, std::span<const double> y) {
    const double rho_obs = spearman_rho(x, y);
    const std::size_t n = x.size();
    if (n <= 8) {
        const auto rx = detail::ranks(x);
        auto ry = detail::ranks(y);
        std::sort(ry.begin(), ry.end());
        std::size_t total = 0, at_most = 0;
        do {
            ++total;
            if (detail::pearson(rx, ry) <= rho_obs + 1e-12) ++at_most;
        } while (std::next_permutation(ry.begin(), ry.end()));
        return static_cast<double>(at_most) / static_cast<double>(total);
    }
    // t-approximation for longer series
    const double nn = static_cast<double>(n);
    const double t = rho_obs * std::sqrt((nn - 2.0) / (1.0 - rho_obs * rho_obs + 1e-15));
    // one-sided Student-t tail via the incomplete beta <-> gamma shortcut is
    // overkill here; a normal tail is adequate for n > 8 trend screens.
    return 0.5 * std::erfc(-t / std::sqrt(2.0));
}

// ── misc ────────────────────────────────────────────────────────────────────

/// SplitMix64 step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace moran
