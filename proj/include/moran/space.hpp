// =============================================================================
// space.hpp — Type spaces and genotypes.
//
// A genotype lives either in a finite label set {0, ..., K-1} or in the unit
// interval [0, 1]. Interval-space measures are represented on a fixed uniform
// grid of M cells (see measure.hpp); the grid resolution is part of the space.
// =============================================================================
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace moran {

enum class SpaceKind { Finite, UnitInterval };

/// A genotype is stored as a double: an exact small integer label in the
/// finite case, a real in [0,1] in the interval case. Equality is exact —
/// interval duplicates only ever arise from bit-exact urn copies.
using Genotype = double;

struct SpaceSpec {
    SpaceKind kind = SpaceKind::Finite;
    int labels = 1;      // K >= 1 (Finite)
    int grid_cells = 2;  // M >= 2 (UnitInterval)

    static SpaceSpec finite(int k) {
        if (k < 1) throw std::invalid_argument("SpaceSpec: K must be >= 1");
        SpaceSpec s;
        s.kind = SpaceKind::Finite;
        s.labels = k;
        return s;
    }

    static SpaceSpec unit_interval(int m = kDefaultGridCells) {
        if (m < 2) throw std::invalid_argument("SpaceSpec: grid must have >= 2 cells");
        SpaceSpec s;
        s.kind = SpaceKind::UnitInterval;
        s.grid_cells = m;
        return s;
    }

    bool is_finite() const { return kind == SpaceKind::Finite; }
    bool is_interval() const { return kind == SpaceKind::UnitInterval; }

    double cell_width() const { return 1.0 / static_cast<double>(grid_cells); }

    /// Index of the grid cell containing x in [0,1]; the right endpoint maps
    /// to the last cell.
    int cell_of(double x) const {
        int c = static_cast<int>(std::floor(x * grid_cells));
        if (c < 0) c = 0;
        if (c >= grid_cells) c = grid_cells - 1;
        return c;
    }

    bool contains(Genotype g) const {
        if (is_finite()) {
            const double r = std::nearbyint(g);
            return r == g && g >= 0.0 && g < static_cast<double>(labels);
        }
        return g >= 0.0 && g <= 1.0;
    }

    void require_contains(Genotype g) const {
        if (!contains(g))
            throw std::domain_error("genotype " + std::to_string(g) + " outside its space");
    }

    bool operator==(const SpaceSpec& o) const {
        if (kind != o.kind) return false;
        return is_finite() ? labels == o.labels : grid_cells == o.grid_cells;
    }

    static constexpr int kDefaultGridCells = 4096;
};

inline int as_label(Genotype g) { return static_cast<int>(g); }

}  // namespace moran
