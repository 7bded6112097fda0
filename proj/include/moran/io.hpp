// =============================================================================
// io.hpp — JSON and CSV serialization.
//
// CSV output follows RFC 4180 (CRLF record separators, header row; fields here
// are plain numerics and simple tokens, so no quoting is ever required).
// JSON is UTF-8 via nlohmann::json. All writers are timestamp-free so that
// identical inputs produce byte-identical files.
// =============================================================================
#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chain.hpp"
#include "limits.hpp"
#include "verify.hpp"

namespace moran {

using json = nlohmann::json;

// ── MeasureRepr <-> JSON ────────────────────────────────────────────────────

inline json to_json(const MeasureRepr& m) {
    json atoms = json::array();
    for (const auto& [loc, mass] : m.atoms) atoms.push_back({loc, mass});
    return json{{"space", m.space.is_finite() ? "finite" : "interval"},
                {"atoms", atoms},
                {"density", m.density},
                {"grid", m.space.is_finite() ? m.space.labels : m.space.grid_cells}};
}

inline MeasureRepr measure_from_json(const json& j) {
    MeasureRepr m;
    const std::string space = j.at("space").get<std::string>();
    const int grid = j.at("grid").get<int>();
    m.space = space == "finite" ? SpaceSpec::finite(grid) : SpaceSpec::unit_interval(grid);
    for (const auto& a : j.at("atoms"))
        m.atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    m.density = j.at("density").get<std::vector<double>>();
    m.sort_atoms();
    m.validate();
    return m;
}

// ── LimitResult -> JSON ─────────────────────────────────────────────────────

inline json to_json(const LimitResult& r) {
    json j{{"regime", regime_name(r.regime)}, {"measure", to_json(r.measure)}};
    if (std::isfinite(r.theta)) j["theta"] = r.theta;
    if (std::isfinite(r.beta)) j["beta"] = r.beta;
    if (r.q_star) j["q_star"] = to_json(*r.q_star);
    switch (r.qn_kind) {
        case QnLimitKind::PointMass: j["qn_limit"] = "point_mass_at_measure"; break;
        case QnLimitKind::MixtureOverMeasures: j["qn_limit"] = "mixture_over_measures"; break;
        case QnLimitKind::DirichletProcessPrior: j["qn_limit"] = "dirichlet_process_prior"; break;
    }
    if (r.qn_mixture) {
        json comps = json::array();
        for (std::size_t i = 0; i < r.qn_mixture->weights.size(); ++i)
            comps.push_back({{"weight", r.qn_mixture->weights[i]},
                             {"measure", to_json(r.qn_mixture->components[i])}});
        j["qn_mixture"] = comps;
    }
    return j;
}

// ── CSV writers ─────────────────────────────────────────────────────────────

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << "\r\n";
    }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    std::ofstream out_;
};

/// CDF of a measure sampled at every cell boundary and atom location.
inline void write_cdf_csv(const MeasureRepr& m, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"x", "cdf"});
    if (m.space.is_finite()) {
        double acc = 0.0;
        for (const auto& [loc, mass] : m.atoms) {
            acc += mass;
            csv.row({CsvWriter::num(loc), CsvWriter::num(acc)});
        }
        return;
    }
    std::vector<double> points;
    for (int i = 0; i <= m.space.grid_cells; ++i)
        points.push_back(static_cast<double>(i) * m.space.cell_width());
    for (const auto& [loc, mass] : m.atoms) points.push_back(loc);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    double acc = 0.0;
    double prev = 0.0;
    for (double x : points) {
        if (x > prev && !m.density.empty())
            acc += m.density[static_cast<std::size_t>(m.space.cell_of(0.5 * (prev + x)))] *
                   (x - prev);
        acc += m.mass_at(x);
        csv.row({CsvWriter::num(x), CsvWriter::num(acc)});
        prev = x;
    }
}

/// Count-vector frequencies aligned with a law's enumeration order.
inline void write_counts_csv(const CountsLaw& law, std::span<const double> freq,
                             const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> header;
    for (int k = 0; k < law.labels; ++k) header.push_back("n" + std::to_string(k));
    header.push_back("frequency");
    csv.row(header);
    for (std::size_t i = 0; i < law.size(); ++i) {
        std::vector<std::string> row;
        for (auto c : law.counts[i]) row.push_back(std::to_string(c));
        row.push_back(CsvWriter::num(freq[i]));
        csv.row(row);
    }
}

/// Exact counts law table.
inline void write_counts_law_csv(const CountsLaw& law, const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> header;
    for (int k = 0; k < law.labels; ++k) header.push_back("n" + std::to_string(k));
    header.push_back("probability");
    csv.row(header);
    for (std::size_t i = 0; i < law.size(); ++i) {
        std::vector<std::string> row;
        for (auto c : law.counts[i]) row.push_back(std::to_string(c));
        row.push_back(CsvWriter::num(law.prob[i]));
        csv.row(row);
    }
}

/// Sampled interval populations, one row per individual.
inline void write_values_csv(const SampleSet& ss, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"sample", "member", "value"});
    for (std::size_t s = 0; s < ss.populations.size(); ++s)
        for (std::size_t i = 0; i < ss.populations[s].size(); ++i)
            csv.row({std::to_string(s), std::to_string(i),
                     CsvWriter::num(ss.populations[s][i])});
}

/// Sweep table as (lambda, n, metric, value, target_regime) rows.
inline void write_sweep_csv(std::span<const SweepCell> cells, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"lambda", "n", "metric", "value", "target_regime"});
    for (const auto& c : cells)
        csv.row({CsvWriter::num(c.lambda), std::to_string(c.n), c.metric,
                 CsvWriter::num(c.value), c.target_regime});
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace moran
