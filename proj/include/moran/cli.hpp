// =============================================================================
// cli.hpp — Subcommand implementations behind the command-line tool.
//
// Subcommands: simulate | limit | balance | sweep | oracle. Each reads one
// JSON config (--config), writes CSV/JSON outputs into the output directory
// (--out overrides config, --seed overrides the config seed). Exit codes:
// 0 success, 2 invalid configuration, 1 runtime failure. Wall-clock
// timestamps appear only in run.log, never in data outputs.
// =============================================================================
#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "config.hpp"
#include "io.hpp"

namespace moran::cli {

namespace fs = std::filesystem;

struct CliOptions {
    std::string command;
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

inline void append_log(const fs::path& dir, const std::string& line) {
    std::ofstream log(dir / "run.log", std::ios::app);
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    log << stamp << "Z " << line << '\n';
}

inline LimitResult derive_limit(const RunConfig& cfg) {
    const auto& fit = cfg.fit();
    const auto& prior = cfg.prior_spec();
    if (const auto* dp = std::get_if<DpPrior>(&prior); dp && !dp->fixed_mass) {
        if (fit.lambda == 0.0) return limit_measure_lambda0(fit, dp->base, dp->c);
        if (fit.lambda < 1.0) return limit_measure_frac(fit, dp->base, dp->c);
    }
    return limit_fixed_prior(fit, prior);
}

inline int cmd_simulate(const RunConfig& cfg, const fs::path& dir) {
    const auto chain_cfg = cfg.chain_config();
    const auto ss = run_chain(chain_cfg, cfg.prior_spec(), cfg.fit());

    json summary{{"n", chain_cfg.n},
                 {"samples", ss.populations.size()},
                 {"replicas", chain_cfg.replicas},
                 {"kernel", kernel_name(chain_cfg.kernel)},
                 {"seed", chain_cfg.seed}};

    if (cfg.space.is_finite()) {
        const auto law = exact_stationary_law(cfg.space, cfg.prior_spec(), cfg.fit(),
                                              static_cast<int>(chain_cfg.n));
        const auto freq = counts_histogram(ss, law);
        write_counts_csv(law, freq, (dir / "counts.csv").string());
        double tv = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) tv += std::fabs(freq[i] - law.prob[i]);
        summary["tv_vs_exact"] = 0.5 * tv;
    } else {
        write_values_csv(ss, (dir / "values.csv").string());
        const auto pooled = ss.pooled_values();
        double mean = 0.0;
        for (double v : pooled) mean += v;
        mean /= static_cast<double>(pooled.size());
        summary["pooled_mean"] = mean;
        if (cfg.report_ks_vs_limit) {
            const auto limit = derive_limit(cfg);
            summary["ks_vs_limit"] =
                ks_statistic(empirical_measure(pooled, cfg.space), limit.measure);
            summary["limit_regime"] = regime_name(limit.regime);
        }
    }
    write_json_file(summary, (dir / "summary.json").string());
    return 0;
}

inline int cmd_limit(const RunConfig& cfg, const fs::path& dir) {
    const auto limit = derive_limit(cfg);
    write_json_file(to_json(limit), (dir / "limit.json").string());
    write_cdf_csv(limit.measure, (dir / "limit_cdf.csv").string());
    return 0;
}

inline int cmd_balance(const RunConfig& cfg, const fs::path& dir) {
    const auto chain_cfg = cfg.chain_config();
    const int n = static_cast<int>(chain_cfg.n);
    json report{{"n", n}, {"labels", cfg.space.labels}};
    report["tournament"] = detailed_balance_residual(KernelKind::Tournament, cfg.space, n,
                                                     cfg.prior_spec(), cfg.fit());
    report["inverse"] = detailed_balance_residual(KernelKind::InverseFitness, cfg.space, n,
                                                  cfg.prior_spec(), cfg.fit());
    write_json_file(report, (dir / "balance.json").string());
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg, const fs::path& dir) {
    if (!cfg.sweep) throw ConfigError("config: missing \"sweep\" section");
    auto opts = *cfg.sweep;
    opts.seed = cfg.seed;
    const auto cells = sweep_convergence(cfg.prior_spec(), cfg.fit().phi, opts);
    write_sweep_csv(cells, (dir / "sweep.csv").string());
    json rows = json::array();
    for (const auto& c : cells)
        rows.push_back({{"lambda", c.lambda},
                        {"n", c.n},
                        {"metric", c.metric},
                        {"value", c.value},
                        {"target_regime", c.target_regime}});
    write_json_file(rows, (dir / "sweep.json").string());
    return 0;
}

inline int cmd_oracle(const RunConfig& cfg, const fs::path& dir) {
    if (!cfg.space.is_finite())
        throw ConfigError("config: oracle laws are defined for finite spaces");
    const auto chain_cfg = cfg.chain_config();
    const int n = static_cast<int>(chain_cfg.n);
    CountsLaw law;
    if (cfg.oracle_law == "stationary") {
        law = exact_stationary_law(cfg.space, cfg.prior_spec(), cfg.fit(), n);
    } else if (cfg.oracle_law == "breeding") {
        const auto& prior = cfg.prior_spec();
        if (const auto* mix = std::get_if<MixturePrior>(&prior)) {
            law = prior_exact_law(*mix, n);
        } else {
            // breeding law of the urn: the stationary law with no selection
            FitnessSpec neutral(PhiSpec::zero_on(cfg.space), cfg.fit().lambda);
            law = exact_stationary_law(cfg.space, prior, neutral, n);
        }
    } else {
        throw ConfigError("config: oracle.law must be \"stationary\" or \"breeding\"");
    }
    write_counts_law_csv(law, (dir / "oracle.csv").string());
    json j{{"law", cfg.oracle_law}, {"n", n}, {"cells", law.size()}};
    write_json_file(j, (dir / "oracle.json").string());
    return 0;
}

/// Entry point shared by the binary and the tests.
inline int run(const CliOptions& opt) {
    try {
        RunConfig cfg = load_config(opt.config_path);
        if (opt.seed) {
            cfg.seed = *opt.seed;
            if (cfg.chain) cfg.chain->seed = *opt.seed;
            if (cfg.sweep) cfg.sweep->seed = *opt.seed;
        }
        if (opt.out_dir) cfg.output_dir = *opt.out_dir;

        fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        append_log(dir, opt.command + " config=" + opt.config_path +
                            " seed=" + std::to_string(cfg.seed));

        if (opt.command == "simulate") return cmd_simulate(cfg, dir);
        if (opt.command == "limit") return cmd_limit(cfg, dir);
        if (opt.command == "balance") return cmd_balance(cfg, dir);
        if (opt.command == "sweep") return cmd_sweep(cfg, dir);
        if (opt.command == "oracle") return cmd_oracle(cfg, dir);
        std::cerr << "unknown command: " << opt.command << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace moran::cli
