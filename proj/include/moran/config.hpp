// =============================================================================
// config.hpp — Run configuration: a single JSON file with sections
// space / fitness / prior / chain / sweep / oracle / output.
//
// All randomness flows from the required top-level "seed" field; there is no
// wall-clock fallback. Validation failures throw ConfigError with the JSON
// path of the offending field.
// =============================================================================
#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "chain.hpp"
#include "verify.hpp"

namespace moran {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // parallelism degree; 0 = available cores
    SpaceSpec space;
    std::optional<FitnessSpec> fitness;
    std::optional<PriorSpec> prior;
    std::optional<ChainConfig> chain;
    std::optional<SweepOptions> sweep;
    std::string oracle_law = "stationary";  // or "breeding"
    std::string output_dir = "out";
    bool report_ks_vs_limit = false;

    const FitnessSpec& fit() const {
        if (!fitness) throw ConfigError("config: missing \"fitness\" section");
        return *fitness;
    }
    const PriorSpec& prior_spec() const {
        if (!prior) throw ConfigError("config: missing \"prior\" section");
        return *prior;
    }
    ChainConfig chain_config() const {
        if (!chain) throw ConfigError("config: missing \"chain\" section");
        return *chain;
    }
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("config: missing \"" + where + "." + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value at \"" + where + "." + key + "\": " + e.what());
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline SpaceSpec parse_space(const nlohmann::json& j) {
    const auto kind = require<std::string>(j, "kind", "space");
    if (kind == "finite") return SpaceSpec::finite(require<int>(j, "labels", "space"));
    if (kind == "interval")
        return SpaceSpec::unit_interval(
            get_or<int>(j, "grid", SpaceSpec::kDefaultGridCells));
    throw ConfigError("config: space.kind must be \"finite\" or \"interval\"");
}

inline PhiSpec parse_phi(const nlohmann::json& j, const SpaceSpec& space) {
    const auto family = require<std::string>(j, "family", "fitness.phi");
    if (family == "zero") return PhiSpec::zero_on(space);
    if (family == "power") {
        if (!space.is_interval())
            throw ConfigError("config: phi family \"power\" needs the interval space");
        return PhiSpec::power_distance(require<double>(j, "x_o", "fitness.phi"),
                                       require<double>(j, "p", "fitness.phi"));
    }
    if (family == "table") {
        auto values = require<std::vector<double>>(j, "values", "fitness.phi");
        if (!space.is_finite() || static_cast<int>(values.size()) != space.labels)
            throw ConfigError("config: phi table must list one value per label");
        return PhiSpec::finite_table(std::move(values));
    }
    if (family == "tabulated") {
        if (!space.is_interval())
            throw ConfigError("config: phi family \"tabulated\" needs the interval space");
        return PhiSpec::tabulated_interval(
            require<std::vector<double>>(j, "values", "fitness.phi"));
    }
    throw ConfigError("config: unknown phi family \"" + family + "\"");
}

inline MeasureRepr parse_component_measure(const nlohmann::json& j, const SpaceSpec& space,
                                           const std::string& where) {
    if (j.contains("pmf")) {
        auto pmf = j.at("pmf").get<std::vector<double>>();
        if (!space.is_finite() || static_cast<int>(pmf.size()) != space.labels)
            throw ConfigError("config: " + where + ".pmf must list one mass per label");
        return MeasureRepr::finite_pmf(std::move(pmf));
    }
    if (j.contains("point_mass"))
        return MeasureRepr::point_mass(space, j.at("point_mass").get<double>());
    if (j.contains("uniform")) {
        if (!space.is_interval())
            throw ConfigError("config: " + where + ".uniform needs the interval space");
        return MeasureRepr::uniform_interval(space.grid_cells);
    }
    throw ConfigError("config: " + where + " needs \"pmf\", \"point_mass\", or \"uniform\"");
}

inline PriorSpec parse_prior(const nlohmann::json& j, const SpaceSpec& space) {
    const auto kind = require<std::string>(j, "kind", "prior");
    if (kind == "dp") {
        const double c = require<double>(j, "c", "prior");
        MeasureRepr base = space.is_interval() && get_or<std::string>(j, "base", "uniform") ==
                                                      std::string("uniform")
                               ? MeasureRepr::uniform_interval(space.grid_cells)
                               : parse_component_measure(j.at("base"), space, "prior.base");
        return DpPrior(c, std::move(base), get_or<bool>(j, "fixed_mass", false));
    }
    if (kind == "mixture") {
        if (!j.contains("components") || !j.at("components").is_array() ||
            j.at("components").empty())
            throw ConfigError("config: prior.components must be a non-empty array");
        std::vector<double> weights;
        std::vector<MeasureRepr> comps;
        for (const auto& cj : j.at("components")) {
            weights.push_back(require<double>(cj, "weight", "prior.components[]"));
            comps.push_back(parse_component_measure(cj, space, "prior.components[]"));
        }
        return MixturePrior(std::move(weights), std::move(comps));
    }
    throw ConfigError("config: prior.kind must be \"dp\" or \"mixture\"");
}

inline KernelKind parse_kernel(const std::string& s) {
    if (s == "tournament") return KernelKind::Tournament;
    if (s == "inverse") return KernelKind::InverseFitness;
    throw ConfigError("config: kernel must be \"tournament\" or \"inverse\"");
}

inline ChainConfig parse_chain(const nlohmann::json& j, std::uint64_t seed) {
    ChainConfig cfg;
    cfg.n = require<std::uint64_t>(j, "n", "chain");
    cfg.burn_in = get_or<std::uint64_t>(j, "burn_in", ChainConfig::default_burn_in(cfg.n));
    cfg.thin = get_or<std::uint64_t>(j, "thin", cfg.n);
    if (j.contains("steps")) {
        cfg.steps = j.at("steps").get<std::uint64_t>();
    } else {
        const auto samples = require<std::uint64_t>(j, "samples", "chain");
        cfg.steps = cfg.burn_in + samples * cfg.thin;
    }
    cfg.kernel = parse_kernel(get_or<std::string>(j, "kernel", "tournament"));
    cfg.replicas = get_or<std::size_t>(j, "replicas", 1);
    cfg.seed = seed;
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: chain: ") + e.what());
    }
    return cfg;
}

inline SweepOptions parse_sweep(const nlohmann::json& j, std::uint64_t seed) {
    SweepOptions opt;
    opt.lambdas = require<std::vector<double>>(j, "lambdas", "sweep");
    opt.ns = require<std::vector<std::uint64_t>>(j, "ns", "sweep");
    const auto metric = require<std::string>(j, "metric", "sweep");
    if (metric == "TV")
        opt.metric = SweepMetric::TV;
    else if (metric == "W1")
        opt.metric = SweepMetric::W1;
    else if (metric == "KS")
        opt.metric = SweepMetric::KS;
    else
        throw ConfigError("config: sweep.metric must be TV, W1, or KS");
    opt.samples_per_cell = get_or<std::uint64_t>(j, "samples_per_cell", 4000);
    opt.thin_factor = get_or<std::uint64_t>(j, "thin_factor", 1);
    opt.kernel = parse_kernel(get_or<std::string>(j, "kernel", "tournament"));
    opt.seed = seed;
    if (opt.lambdas.empty() || opt.ns.empty())
        throw ConfigError("config: sweep.lambdas and sweep.ns must be non-empty");
    return opt;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    if (!j.contains("seed"))
        throw ConfigError(
            "config: missing required \"seed\" (runs are never wall-clock seeded)");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.threads = detail::get_or<std::size_t>(j, "threads", 0);
    if (!j.contains("space")) throw ConfigError("config: missing \"space\" section");
    cfg.space = detail::parse_space(j.at("space"));

    if (j.contains("fitness")) {
        const auto& fj = j.at("fitness");
        const double lambda = detail::require<double>(fj, "lambda", "fitness");
        if (!fj.contains("phi")) throw ConfigError("config: missing \"fitness.phi\"");
        cfg.fitness.emplace(detail::parse_phi(fj.at("phi"), cfg.space), lambda);
    }
    if (j.contains("prior")) cfg.prior = detail::parse_prior(j.at("prior"), cfg.space);
    if (j.contains("chain")) {
        cfg.chain = detail::parse_chain(j.at("chain"), cfg.seed);
        cfg.chain->threads = cfg.threads;
    }
    if (j.contains("sweep")) {
        cfg.sweep = detail::parse_sweep(j.at("sweep"), cfg.seed);
        cfg.sweep->threads = cfg.threads;
    }
    if (j.contains("oracle"))
        cfg.oracle_law = detail::get_or<std::string>(j.at("oracle"), "law", "stationary");
    if (j.contains("output"))
        cfg.output_dir = detail::get_or<std::string>(j.at("output"), "dir", "out");
    if (j.contains("report"))
        cfg.report_ks_vs_limit =
            detail::get_or<bool>(j.at("report"), "ks_vs_limit", false);

    if (cfg.prior && !(prior_space(*cfg.prior) == cfg.space))
        throw ConfigError("config: prior lives on a different space than \"space\"");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace moran
