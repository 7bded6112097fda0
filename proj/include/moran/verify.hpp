// =============================================================================
// verify.hpp — Verification harness: detailed balance on enumerated state
// spaces, MCMC-versus-exact comparisons, and lambda x n convergence sweeps
// against the predicted limits.
//
// Statistical checks run at fixed level alpha = 0.01 with a 3-reseed retry
// policy (a failed check is retried on derived seeds before being declared a
// failure); see with_reseed_retries.
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "chain.hpp"
#include "limits.hpp"
#include "measure.hpp"

namespace moran {

// ── detailed balance ────────────────────────────────────────────────────────

/// Max over ordered state pairs of |pi(x) P(x,y) - pi(y) P(y,x)| for the exact
/// stationary law and exact transition matrix of a finite instance. The pair
/// set is every (x, y) with P(x, y) > 0, which covers all candidate violations
/// because the kernels move at most one coordinate.
inline double detailed_balance_residual(KernelKind kernel, const SpaceSpec& space, int n,
                                        const PriorSpec& prior, const FitnessSpec& fit) {
    const auto pi = exact_stationary_tuples(space, prior, fit, n);
    const auto mat = exact_transition_matrix(kernel, space, n, prior, fit);
    double residual = 0.0;
    for (std::size_t x = 0; x < mat.dim; ++x) {
        for (const auto& [y, pxy] : mat.rows[x]) {
            const double flow = pi[x] * pxy - pi[y] * mat.entry(y, x);
            residual = std::max(residual, std::fabs(flow));
        }
    }
    return residual;
}

// ── chi-square comparison ───────────────────────────────────────────────────

struct Chi2Result {
    double chi2 = 0.0;
    double pvalue = 1.0;
    std::size_t dof = 0;
};

/// Pearson chi-square with the usual pooling of low-expectation cells
/// (expected count < 5 pooled into one bucket).
inline Chi2Result chi_square_test(std::span<const double> observed,
                                  std::span<const double> expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("chi_square_test: size mismatch");
    double pooled_obs = 0.0, pooled_exp = 0.0;
    double chi2 = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 5.0) {
            pooled_obs += observed[i];
            pooled_exp += expected[i];
        } else {
            const double d = observed[i] - expected[i];
            chi2 += d * d / expected[i];
            ++kept;
        }
    }
    if (pooled_exp > 0.0) {
        const double d = pooled_obs - pooled_exp;
        chi2 += d * d / pooled_exp;
        ++kept;
    }
    if (kept < 2) throw std::domain_error("chi_square_test: not enough usable cells");
    Chi2Result res;
    res.chi2 = chi2;
    res.dof = kept - 1;
    res.pvalue = chi_square_sf(chi2, static_cast<double>(res.dof));
    return res;
}

/// Retry a stochastic check up to `tries` times on derived seeds. `attempt`
/// receives the seed to use and returns success.
template <typename Fn>
bool with_reseed_retries(int tries, std::uint64_t seed, Fn&& attempt) {
    for (int t = 0; t < tries; ++t)
        if (attempt(seed + static_cast<std::uint64_t>(t))) return true;
    return false;
}

// ── MCMC vs exact law ───────────────────────────────────────────────────────

struct McmcReport {
    double tv = 0.0;
    double chi2 = 0.0;
    double chi2_pvalue = 0.0;
    std::size_t dof = 0;
    std::uint64_t samples = 0;
};

/// Exact stationary counts law for either prior family on a finite space.
inline CountsLaw exact_stationary_law(const SpaceSpec& space, const PriorSpec& prior,
                                      const FitnessSpec& fit, int n) {
    if (const auto* dp = std::get_if<DpPrior>(&prior)) {
        const double m = dp->mass_for(fit.lambda, static_cast<std::uint64_t>(n));
        const auto base = dp->base.to_pmf();
        std::vector<double> alpha(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) alpha[k] = m * base[k];
        return exact_stationary_counts(space, alpha, fit, n);
    }
    return exact_stationary_mixture(space, std::get<MixturePrior>(prior), fit, n);
}

/// Runs the chain, accumulates the sampled counts histogram, and reports the
/// TV distance and chi-square test against the exact stationary law.
inline McmcReport mcmc_vs_exact(const ChainConfig& cfg, const PriorSpec& prior,
                                const FitnessSpec& fit) {
    const SpaceSpec& space = prior_space(prior);
    if (!space.is_finite()) throw std::invalid_argument("mcmc_vs_exact: finite spaces only");
    const auto law = exact_stationary_law(space, prior, fit, static_cast<int>(cfg.n));

    std::vector<double> hits(law.size(), 0.0);
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(law.labels));
    std::uint64_t total = 0;
    run_chain_stream(cfg, prior, fit, [&](std::size_t, std::span<const Genotype> pop) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (Genotype g : pop) ++counts[static_cast<std::size_t>(as_label(g))];
        hits[law.index_of(counts)] += 1.0;
        ++total;
    });

    McmcReport rep;
    rep.samples = total;
    std::vector<double> expected(law.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        const double freq = hits[i] / static_cast<double>(total);
        tv += std::fabs(freq - law.prob[i]);
        expected[i] = law.prob[i] * static_cast<double>(total);
    }
    rep.tv = 0.5 * tv;
    const auto chi2 = chi_square_test(hits, expected);
    rep.chi2 = chi2.chi2;
    rep.chi2_pvalue = chi2.pvalue;
    rep.dof = chi2.dof;
    return rep;
}

// ── exact stationary sampling for mixture priors ────────────────────────────

/// Draws exact stationary populations for a fixed mixture prior: the
/// stationary law factorizes over components with weights proportional to
/// weight_i * <w_n, q_i>^n, and conditionally on the component the population
/// is n iid draws from the w_n-tilt of that component. Tilted draws use
/// rejection against the component itself (acceptance w_n(x) / max w_n).
///
/// This sampler exists because the selection chain is reducible when mixture
/// components are mutually singular (their posterior never mixes across
/// components), so long-run MCMC frequencies cannot recover the component
/// weights; the factorized form is exact for every n.
template <typename Sink>
void sample_mixture_stationary_stream(const MixturePrior& prior, const FitnessSpec& fit,
                                      std::size_t n, std::uint64_t samples,
                                      std::uint64_t seed, Sink&& sink) {
    const SpaceSpec& space = prior.space();
    const FitnessContext fc(fit, n);

    // log <w_n, q_i> with exact per-cell averages of w_n on the grid
    std::vector<double> w_avg;
    if (space.is_interval())
        w_avg = cell_averages([&](double x) { return fc.weight(x); }, space.grid_cells,
                              fc.phi().minimizer());
    std::vector<double> lw(prior.weights.size());
    for (std::size_t i = 0; i < prior.weights.size(); ++i) {
        const auto& q = prior.components[i];
        double inner;
        if (space.is_finite()) {
            inner = q.expectation([&](double x) { return fc.weight(x); });
        } else {
            inner = q.expectation_cell_averages(w_avg, [&](double x) { return fc.weight(x); });
        }
        lw[i] = (prior.weights[i] > 0.0 ? std::log(prior.weights[i]) : kNegInf) +
                static_cast<double>(n) * std::log(inner);
    }
    normalize_log_weights(lw);

    const double max_w = fc.max_weight();
    RngStream rng(seed);
    std::vector<Genotype> pop(n);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const std::size_t comp = rng.categorical(lw);
        std::size_t filled = 0;
        while (filled < n) {
            const Genotype v = sample_measure(prior.components[comp], rng);
            if (rng.uniform01() * max_w < fc.weight(v)) pop[filled++] = v;
        }
        sink(std::span<const Genotype>(pop));
    }
}

inline SampleSet sample_mixture_stationary_exact(const MixturePrior& prior,
                                                 const FitnessSpec& fit, std::size_t n,
                                                 std::uint64_t samples, std::uint64_t seed) {
    SampleSet out;
    out.space = prior.space();
    out.cfg.n = n;
    out.cfg.seed = seed;
    out.populations.reserve(samples);
    sample_mixture_stationary_stream(prior, fit, n, samples, seed,
                                     [&](std::span<const Genotype> pop) {
                                         out.populations.emplace_back(pop.begin(), pop.end());
                                     });
    return out;
}

// ── convergence sweeps ──────────────────────────────────────────────────────

enum class SweepMetric { TV, W1, KS };

inline const char* sweep_metric_name(SweepMetric m) {
    switch (m) {
        case SweepMetric::TV: return "TV";
        case SweepMetric::W1: return "W1";
        case SweepMetric::KS: return "KS";
    }
    return "?";
}

struct SweepCell {
    double lambda = 0.0;
    std::uint64_t n = 0;
    std::string metric;
    double value = 0.0;
    std::string target_regime;
};

struct SweepOptions {
    std::vector<double> lambdas;
    std::vector<std::uint64_t> ns;
    SweepMetric metric = SweepMetric::TV;
    std::uint64_t seed = 0;
    std::uint64_t samples_per_cell = 4000;
    std::uint64_t thin_factor = 1;  // MCMC thinning = thin_factor * n
    KernelKind kernel = KernelKind::Tournament;
    std::size_t threads = 0;  // max concurrent cells; 0 = available cores
};

namespace detail {

/// Predicted limit for a (prior, lambda) pair: the DP mass rule routes
/// lambda < 1 to the tilted/objective limits, everything else to the
/// fixed-prior phase results.
inline LimitResult predicted_limit(const PriorSpec& prior, const FitnessSpec& fit) {
    if (const auto* dp = std::get_if<DpPrior>(&prior)) {
        if (!dp->fixed_mass && fit.lambda == 0.0)
            return limit_measure_lambda0(fit, dp->base, dp->c);
        if (!dp->fixed_mass && fit.lambda > 0.0 && fit.lambda < 1.0)
            return limit_measure_frac(fit, dp->base, dp->c);
    }
    return limit_fixed_prior(fit, prior);
}

/// n-sample counts law of the predicted limit (finite spaces).
inline CountsLaw target_counts_law(const LimitResult& target, const SpaceSpec& space, int n) {
    if (target.qn_mixture) return prior_exact_law(*target.qn_mixture, n);
    MixturePrior point({1.0}, {target.measure});
    (void)space;
    return prior_exact_law(point, n);
}

inline SweepCell evaluate_sweep_cell(const PriorSpec& prior, const PhiSpec& phi, double lambda,
                                     std::uint64_t n, const SweepOptions& opt,
                                     std::uint64_t cell_seed) {
    const FitnessSpec fit(phi, lambda);
    const SpaceSpec& space = prior_space(prior);
    const LimitResult target = predicted_limit(prior, fit);

    SweepCell cell;
    cell.lambda = lambda;
    cell.n = n;
    cell.metric = sweep_metric_name(opt.metric);
    cell.target_regime = regime_name(target.regime);

    // Mixture priors are sampled through the exact factorized stationary law
    // (see sample_mixture_stationary_exact): the selection chain is reducible
    // for mutually singular components and metastable for well-separated ones
    // (the posterior pins a chain to one component for exponentially long
    // stretches), so its long-run frequencies cannot be trusted here. DP
    // priors have no such structure and run through the chain itself.
    const auto* mix = std::get_if<MixturePrior>(&prior);

    if (opt.metric == SweepMetric::TV) {
        if (!space.is_finite())
            throw std::invalid_argument("sweep: TV cells need a finite space");
        const auto law = target_counts_law(target, space, static_cast<int>(n));
        std::vector<double> hits(law.size(), 0.0);
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(law.labels));
        std::uint64_t total = 0;
        auto tally = [&](std::span<const Genotype> pop) {
            std::fill(counts.begin(), counts.end(), 0u);
            for (Genotype g : pop) ++counts[static_cast<std::size_t>(as_label(g))];
            hits[law.index_of(counts)] += 1.0;
            ++total;
        };
        if (mix) {
            sample_mixture_stationary_stream(*mix, fit, n, opt.samples_per_cell, cell_seed,
                                             tally);
        } else {
            ChainConfig cfg;
            cfg.n = n;
            cfg.thin = std::max<std::uint64_t>(1, opt.thin_factor * n);
            cfg.burn_in = ChainConfig::default_burn_in(n);
            cfg.steps = cfg.burn_in + opt.samples_per_cell * cfg.thin;
            cfg.kernel = opt.kernel;
            cfg.seed = cell_seed;
            run_chain_stream(cfg, prior, fit,
                             [&](std::size_t, std::span<const Genotype> pop) { tally(pop); });
        }
        double tv = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i)
            tv += std::fabs(hits[i] / static_cast<double>(total) - law.prob[i]);
        cell.value = 0.5 * tv;
        return cell;
    }

    // W1 / KS cells sample populations on the interval
    SampleSet ss;
    if (mix) {
        ss = sample_mixture_stationary_exact(*mix, fit, n, opt.samples_per_cell, cell_seed);
    } else {
        ChainConfig cfg;
        cfg.n = n;
        cfg.thin = std::max<std::uint64_t>(1, opt.thin_factor * n);
        cfg.burn_in = ChainConfig::default_burn_in(n);
        cfg.steps = cfg.burn_in + opt.samples_per_cell * cfg.thin;
        cfg.kernel = opt.kernel;
        cfg.seed = cell_seed;
        ss = run_chain(cfg, prior, fit);
    }

    if (opt.metric == SweepMetric::W1) {
        double mean = 0.0;
        for (const auto& pop : ss.populations)
            mean += wasserstein1(empirical_measure(pop, space), target.measure);
        cell.value = mean / static_cast<double>(ss.populations.size());
    } else {
        const auto pooled = ss.pooled_values();
        cell.value = ks_statistic(empirical_measure(pooled, space), target.measure);
    }
    return cell;
}

}  // namespace detail

/// Distance-to-limit table over a lambda x n grid for one prior and one
/// metric. Cells run in parallel; every cell derives its own seed from
/// (seed, row, column), so the table is independent of scheduling.
inline std::vector<SweepCell> sweep_convergence(const PriorSpec& prior, const PhiSpec& phi,
                                                const SweepOptions& opt) {
    std::vector<SweepCell> cells(opt.lambdas.size() * opt.ns.size());
    run_indexed_parallel(cells.size(), opt.threads, [&](std::size_t idx) {
        const std::size_t li = idx / opt.ns.size();
        const std::size_t ni = idx % opt.ns.size();
        const std::uint64_t cell_seed = RngStream::derive(opt.seed, 1000 * li + ni);
        cells[idx] = detail::evaluate_sweep_cell(prior, phi, opt.lambdas[li], opt.ns[ni], opt,
                                                 cell_seed);
    });
    return cells;
}

/// One-sided Spearman trend p-value for a single lambda row of a sweep table
/// (distance expected to decrease with n).
inline double sweep_row_trend_pvalue(std::span<const SweepCell> row) {
    std::vector<double> ns, vals;
    for (const auto& c : row) {
        ns.push_back(static_cast<double>(c.n));
        vals.push_back(c.value);
    }
    return spearman_negative_trend_pvalue(ns, vals);
}

}  // namespace moran
