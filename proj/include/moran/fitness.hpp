// =============================================================================
// fitness.hpp — Selection cost functions and population-size-scaled fitness.
//
// A fitness specification is a pair (phi, lambda) inducing per-size weights
//     w_n(x) = exp(-phi(x) / n^lambda),   0 < w_n(x) <= 1.
// phi is nonnegative and bounded; lambda >= 0 tunes how fast fitness
// differences flatten as the population grows (lambda = 0: no flattening).
//
// Supported phi families. Each family declares its minimizer; uniqueness of
// the minimizer is a property of the family, not detected numerically:
//   PowerDistance(x_o, p):  phi(x) = |x - x_o|^p on [0,1], minimizer x_o.
//   FiniteTable:            per-label values on a finite space.
//   TabulatedInterval:      piecewise-linear interpolation of node values.
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "space.hpp"

namespace moran {

struct PowerDistancePhi {
    double x_o = 0.5;  // unique minimizer, phi(x_o) = 0
    double p = 2.0;    // exponent > 0
};

struct FiniteTablePhi {
    std::vector<double> values;  // one nonnegative value per label
};

struct TabulatedIntervalPhi {
    std::vector<double> values;  // nodes at i/(m-1), piecewise-linear between
};

class PhiSpec {
public:
    using Family = std::variant<PowerDistancePhi, FiniteTablePhi, TabulatedIntervalPhi>;

    static PhiSpec power_distance(double x_o, double p) {
        if (x_o < 0.0 || x_o > 1.0) throw std::invalid_argument("PhiSpec: x_o outside [0,1]");
        if (p <= 0.0) throw std::invalid_argument("PhiSpec: p must be positive");
        return PhiSpec(PowerDistancePhi{x_o, p});
    }

    static PhiSpec finite_table(std::vector<double> values) {
        if (values.empty()) throw std::invalid_argument("PhiSpec: empty table");
        for (double v : values)
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("PhiSpec: table values must be finite and >= 0");
        return PhiSpec(FiniteTablePhi{std::move(values)});
    }

    static PhiSpec tabulated_interval(std::vector<double> values) {
        if (values.size() < 2) throw std::invalid_argument("PhiSpec: need >= 2 nodes");
        for (double v : values)
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("PhiSpec: node values must be finite and >= 0");
        return PhiSpec(TabulatedIntervalPhi{std::move(values)});
    }

    static PhiSpec zero_on(const SpaceSpec& space) {
        if (space.is_finite()) return finite_table(std::vector<double>(space.labels, 0.0));
        return tabulated_interval({0.0, 0.0});
    }

    double operator()(Genotype x) const {
        return std::visit(
            [&](const auto& fam) -> double { return eval(fam, x); }, family_);
    }

    /// Location of the declared minimum.
    Genotype minimizer() const {
        return std::visit(
            [](const auto& fam) -> Genotype { return argmin(fam); }, family_);
    }

    double min_value() const { return (*this)(minimizer()); }

    double max_value() const {
        return std::visit([](const auto& fam) -> double { return vmax(fam); }, family_);
    }

    bool is_constant() const { return max_value() == min_value(); }

    const Family& family() const { return family_; }

private:
    explicit PhiSpec(Family f) : family_(std::move(f)) {}

    static double eval(const PowerDistancePhi& f, double x) {
        return std::pow(std::fabs(x - f.x_o), f.p);
    }
    static double eval(const FiniteTablePhi& f, double x) {
        const int k = as_label(x);
        if (k < 0 || k >= static_cast<int>(f.values.size()))
            throw std::domain_error("PhiSpec: label outside table");
        return f.values[static_cast<std::size_t>(k)];
    }
    static double eval(const TabulatedIntervalPhi& f, double x) {
        const double m = static_cast<double>(f.values.size() - 1);
        const double t = std::clamp(x, 0.0, 1.0) * m;
        const auto i = static_cast<std::size_t>(std::min(t, m - 1.0));
        const double frac = t - static_cast<double>(i);
        return f.values[i] * (1.0 - frac) + f.values[i + 1] * frac;
    }

    static Genotype argmin(const PowerDistancePhi& f) { return f.x_o; }
    static Genotype argmin(const FiniteTablePhi& f) {
        const auto it = std::min_element(f.values.begin(), f.values.end());
        return static_cast<Genotype>(it - f.values.begin());
    }
    static Genotype argmin(const TabulatedIntervalPhi& f) {
        // piecewise-linear: the minimum sits on a node
        const auto it = std::min_element(f.values.begin(), f.values.end());
        const auto i = static_cast<double>(it - f.values.begin());
        return i / static_cast<double>(f.values.size() - 1);
    }

    static double vmax(const PowerDistancePhi& f) {
        return std::max(eval(f, 0.0), eval(f, 1.0));
    }
    static double vmax(const FiniteTablePhi& f) {
        return *std::max_element(f.values.begin(), f.values.end());
    }
    static double vmax(const TabulatedIntervalPhi& f) {
        return *std::max_element(f.values.begin(), f.values.end());
    }

    Family family_;
};

struct FitnessSpec {
    PhiSpec phi;
    double lambda = 0.0;  // >= 0

    FitnessSpec(PhiSpec p, double l) : phi(std::move(p)), lambda(l) {
        if (l < 0.0) throw std::invalid_argument("FitnessSpec: lambda must be >= 0");
    }
};

/// w_n(x) = exp(-phi(x) / n^lambda). Strictly positive, <= 1.
inline double weight_at(const FitnessSpec& fit, std::uint64_t n, Genotype x) {
    if (n == 0) throw std::invalid_argument("weight_at: n must be positive");
    const double scale = std::pow(static_cast<double>(n), fit.lambda);
    return std::exp(-fit.phi(x) / scale);
}

/// Fitness bound to a fixed population size: precomputes the 1/n^lambda scale.
class FitnessContext {
public:
    FitnessContext(const FitnessSpec& fit, std::uint64_t n)
        : phi_(&fit.phi), inv_scale_(std::pow(static_cast<double>(n), -fit.lambda)) {
        if (n == 0) throw std::invalid_argument("FitnessContext: n must be positive");
    }

    double scaled_phi(Genotype x) const { return (*phi_)(x) * inv_scale_; }
    double weight(Genotype x) const { return std::exp(-scaled_phi(x)); }
    double max_weight() const { return std::exp(-phi_->min_value() * inv_scale_); }
    const PhiSpec& phi() const { return *phi_; }

private:
    const PhiSpec* phi_;
    double inv_scale_;
};

}  // namespace moran
