// =============================================================================
// measure.hpp — Probability measures as (atoms + grid density) and the
// distances between them.
//
// Representation. On the unit interval a measure splits into an atom list
// (exact locations, exact masses) and a density part stored as per-cell
// averages with respect to Lebesgue measure on the uniform M-cell grid. On a
// finite space the measure is a pmf, stored as atoms at the labels with an
// empty density part. Invariants: total mass 1 within 1e-9, all masses and
// cell values nonnegative, atom locations distinct and sorted.
//
// Distances. TV is computed exactly from the representation. W1 and KS (unit
// interval only) are computed from the two CDFs, which are piecewise linear
// between cell boundaries with jumps at atoms, so both metrics are exact for
// the representation. Relative entropy D(a||b) is evaluated atom-by-atom and
// cell-by-cell and is +infinity when a is not absolutely continuous w.r.t. b.
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "math.hpp"
#include "space.hpp"

namespace moran {

struct MeasureRepr {
    SpaceSpec space;
    std::vector<std::pair<double, double>> atoms;  // (location, mass), sorted, distinct
    std::vector<double> density;                   // interval only: M cell averages (may be empty)

    static constexpr double kMassTolerance = 1e-9;

    // ── constructors ────────────────────────────────────────────────────────

    static MeasureRepr finite_pmf(std::vector<double> pmf) {
        MeasureRepr m;
        m.space = SpaceSpec::finite(static_cast<int>(pmf.size()));
        m.atoms.reserve(pmf.size());
        for (std::size_t k = 0; k < pmf.size(); ++k)
            m.atoms.emplace_back(static_cast<double>(k), pmf[k]);
        m.validate();
        return m;
    }

    static MeasureRepr uniform_interval(int grid_cells = SpaceSpec::kDefaultGridCells) {
        MeasureRepr m;
        m.space = SpaceSpec::unit_interval(grid_cells);
        m.density.assign(static_cast<std::size_t>(grid_cells), 1.0);
        return m;
    }

    static MeasureRepr interval(int grid_cells, std::vector<double> density,
                                std::vector<std::pair<double, double>> atoms = {}) {
        MeasureRepr m;
        m.space = SpaceSpec::unit_interval(grid_cells);
        m.density = std::move(density);
        m.atoms = std::move(atoms);
        m.sort_atoms();
        m.validate();
        return m;
    }

    static MeasureRepr point_mass(const SpaceSpec& space, Genotype loc) {
        space.require_contains(loc);
        MeasureRepr m;
        m.space = space;
        if (space.is_finite()) {
            std::vector<double> pmf(static_cast<std::size_t>(space.labels), 0.0);
            pmf[static_cast<std::size_t>(as_label(loc))] = 1.0;
            return finite_pmf(std::move(pmf));
        }
        m.atoms.emplace_back(loc, 1.0);
        return m;
    }

    // ── basic queries ───────────────────────────────────────────────────────

    double atom_mass() const {
        double s = 0.0;
        for (const auto& [loc, mass] : atoms) s += mass;
        return s;
    }

    double density_mass() const {
        if (density.empty()) return 0.0;
        double s = 0.0;
        for (double d : density) s += d;
        return s * space.cell_width();
    }

    double total_mass() const { return atom_mass() + density_mass(); }

    /// Mass of the single point {x}: exact atom match only.
    double mass_at(Genotype x) const {
        const auto it = std::lower_bound(
            atoms.begin(), atoms.end(), x,
            [](const auto& a, double v) { return a.first < v; });
        return (it != atoms.end() && it->first == x) ? it->second : 0.0;
    }

    /// pmf vector for finite-space measures.
    std::vector<double> to_pmf() const {
        if (!space.is_finite()) throw std::logic_error("to_pmf: finite space only");
        std::vector<double> pmf(static_cast<std::size_t>(space.labels), 0.0);
        for (const auto& [loc, mass] : atoms)
            pmf[static_cast<std::size_t>(as_label(loc))] += mass;
        return pmf;
    }

    /// Expectation of f. Density cells are evaluated at their midpoint, which
    /// is adequate for bounded f on the default grid; quadrature-grade callers
    /// should pass exact per-cell averages via expectation_cell_averages.
    template <typename F>
    double expectation(F&& f) const {
        double s = 0.0;
        for (const auto& [loc, mass] : atoms) s += mass * f(loc);
        if (!density.empty()) {
            const double w = space.cell_width();
            for (std::size_t i = 0; i < density.size(); ++i)
                s += density[i] * w * f((static_cast<double>(i) + 0.5) * w);
        }
        return s;
    }

    /// Expectation of f given exact per-cell averages of f (plus exact f at atoms).
    template <typename F>
    double expectation_cell_averages(std::span<const double> f_cell_avg, F&& f_at_atom) const {
        double s = 0.0;
        for (const auto& [loc, mass] : atoms) s += mass * f_at_atom(loc);
        const double w = space.cell_width();
        for (std::size_t i = 0; i < density.size(); ++i) s += density[i] * w * f_cell_avg[i];
        return s;
    }

    // ── maintenance ─────────────────────────────────────────────────────────

    void sort_atoms() {
        std::sort(atoms.begin(), atoms.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    void normalize() {
        const double t = total_mass();
        if (t <= 0.0) throw std::domain_error("normalize: zero total mass");
        for (auto& [loc, mass] : atoms) mass /= t;
        for (double& d : density) d /= t;
    }

    void validate() const {
        if (space.is_finite() && !density.empty())
            throw std::logic_error("MeasureRepr: finite space has no density part");
        if (space.is_interval() && !density.empty() &&
            density.size() != static_cast<std::size_t>(space.grid_cells))
            throw std::logic_error("MeasureRepr: density size does not match grid");
        for (double d : density)
            if (d < 0.0 || !std::isfinite(d))
                throw std::domain_error("MeasureRepr: negative or non-finite cell value");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const auto& [loc, mass] = atoms[i];
            space.require_contains(loc);
            if (mass < 0.0 || !std::isfinite(mass))
                throw std::domain_error("MeasureRepr: negative or non-finite atom mass");
            if (i > 0 && atoms[i - 1].first >= loc)
                throw std::domain_error("MeasureRepr: atom locations must be distinct and sorted");
        }
        const double t = total_mass();
        if (std::fabs(t - 1.0) > kMassTolerance)
            throw std::domain_error("MeasureRepr: total mass " + std::to_string(t) +
                                    " not 1 within 1e-9");
    }
};

/// Empirical measure of a population: mass multiplicity/n at each distinct
/// value. Values are merged on exact equality only.
inline MeasureRepr empirical_measure(std::span<const Genotype> pop, const SpaceSpec& space) {
    if (pop.empty()) throw std::invalid_argument("empirical_measure: empty population");
    for (Genotype g : pop) space.require_contains(g);
    if (space.is_finite()) {
        std::vector<double> pmf(static_cast<std::size_t>(space.labels), 0.0);
        const double unit = 1.0 / static_cast<double>(pop.size());
        for (Genotype g : pop) pmf[static_cast<std::size_t>(as_label(g))] += unit;
        return MeasureRepr::finite_pmf(std::move(pmf));
    }
    std::vector<Genotype> sorted(pop.begin(), pop.end());
    std::sort(sorted.begin(), sorted.end());
    MeasureRepr m;
    m.space = space;
    const double unit = 1.0 / static_cast<double>(pop.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        m.atoms.emplace_back(sorted[i], static_cast<double>(j - i + 1) * unit);
        i = j + 1;
    }
    return m;
}

namespace detail {

inline void require_same_space(const MeasureRepr& a, const MeasureRepr& b) {
    if (!(a.space == b.space))
        throw std::invalid_argument("measures live on different spaces");
}

inline double density_cell(const MeasureRepr& m, std::size_t i) {
    return m.density.empty() ? 0.0 : m.density[i];
}

struct CdfComparison {
    double ks = 0.0;
    double w1 = 0.0;
};

/// One pass over the piecewise-linear CDFs of a and b: collects both the
/// sup-norm (including jump corners) and the integral of |F_a - F_b|.
inline CdfComparison compare_cdfs(const MeasureRepr& a, const MeasureRepr& b) {
    require_same_space(a, b);
    if (!a.space.is_interval())
        throw std::invalid_argument("CDF metrics are defined on the unit interval only");
    const int cells = a.space.grid_cells;
    const double width = a.space.cell_width();

    std::vector<double> events;
    events.reserve(static_cast<std::size_t>(cells) + a.atoms.size() + b.atoms.size() + 1);
    for (int i = 0; i <= cells; ++i) events.push_back(static_cast<double>(i) * width);
    for (const auto& [loc, mass] : a.atoms) events.push_back(loc);
    for (const auto& [loc, mass] : b.atoms) events.push_back(loc);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    CdfComparison out;
    double x_prev = 0.0;
    double diff = 0.0;  // F_a(x) - F_b(x), right-continuous value at current x
    for (double x : events) {
        if (x > x_prev) {
            const std::size_t cell = static_cast<std::size_t>(a.space.cell_of(0.5 * (x_prev + x)));
            const double slope = density_cell(a, cell) - density_cell(b, cell);
            const double len = x - x_prev;
            const double d0 = diff;
            const double d1 = diff + slope * len;
            if (d0 * d1 < 0.0) {
                const double t = -d0 / slope;  // zero crossing inside the segment
                out.w1 += 0.5 * std::fabs(d0) * t + 0.5 * std::fabs(d1) * (len - t);
            } else {
                out.w1 += 0.5 * (std::fabs(d0) + std::fabs(d1)) * len;
            }
            out.ks = std::max(out.ks, std::fabs(d1));
            diff = d1;
        }
        diff += a.mass_at(x) - b.mass_at(x);
        out.ks = std::max(out.ks, std::fabs(diff));
        x_prev = x;
    }
    return out;
}

}  // namespace detail

/// Total variation distance, in [0, 1]. Atom parts are matched by exact
/// location; atom mass never cancels against density mass.
inline double tv_distance(const MeasureRepr& a, const MeasureRepr& b) {
    detail::require_same_space(a, b);
    double l1 = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.atoms.size() || j < b.atoms.size()) {
        if (j == b.atoms.size() || (i < a.atoms.size() && a.atoms[i].first < b.atoms[j].first)) {
            l1 += a.atoms[i++].second;
        } else if (i == a.atoms.size() || b.atoms[j].first < a.atoms[i].first) {
            l1 += b.atoms[j++].second;
        } else {
            l1 += std::fabs(a.atoms[i].second - b.atoms[j].second);
            ++i;
            ++j;
        }
    }
    if (a.space.is_interval()) {
        const double w = a.space.cell_width();
        const std::size_t cells = static_cast<std::size_t>(a.space.grid_cells);
        for (std::size_t c = 0; c < cells; ++c)
            l1 += std::fabs(detail::density_cell(a, c) - detail::density_cell(b, c)) * w;
    }
    return 0.5 * l1;
}

/// W1(a, b) = integral of |F_a - F_b| over [0, 1]. Unit interval only.
inline double wasserstein1(const MeasureRepr& a, const MeasureRepr& b) {
    return detail::compare_cdfs(a, b).w1;
}

/// Kolmogorov-Smirnov statistic sup |F_a - F_b|. Unit interval only.
inline double ks_statistic(const MeasureRepr& a, const MeasureRepr& b) {
    return detail::compare_cdfs(a, b).ks;
}

/// Relative entropy D(a||b) = int ln(da/db) da when a << b, +infinity
/// otherwise. Always >= 0; equals 0 iff the representations coincide.
inline double relative_entropy(const MeasureRepr& a, const MeasureRepr& b) {
    detail::require_same_space(a, b);
    double d = 0.0;
    for (const auto& [loc, mass] : a.atoms) {
        if (mass == 0.0) continue;
        const double mb = b.mass_at(loc);
        if (mb == 0.0) return kPosInf;
        d += mass * std::log(mass / mb);
    }
    if (a.space.is_interval()) {
        const double w = a.space.cell_width();
        const std::size_t cells = static_cast<std::size_t>(a.space.grid_cells);
        for (std::size_t c = 0; c < cells; ++c) {
            const double da = detail::density_cell(a, c);
            if (da == 0.0) continue;
            const double db = detail::density_cell(b, c);
            if (db == 0.0) return kPosInf;
            d += w * da * std::log(da / db);
        }
    }
    return std::max(d, 0.0);
}

}  // namespace moran
