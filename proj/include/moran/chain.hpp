// =============================================================================
// chain.hpp — Stationary-distribution machinery: the MCMC driver for the
// selection chains, exact small-instance stationary laws, and empirical-
// measure sampling.
//
// A chain of population size n is initialized by running the breeding process
// forward from the empty population (n conditional draws), then applies
// burn_in kernel steps, then records every thin-th population. Replicas are
// independent chains on derived streams (seed, replica index), merged in
// replica order; results are identical whether replicas run serially or in
// parallel.
//
// Exact laws (finite spaces, in log space throughout):
//   exact_stationary_counts   — Dirichlet-multinomial base tilted by fitness,
//                               P(n_1..n_K) ∝ multinomial * prod (a_k)_{n_k}
//                               / (|a|)_n * prod w(k)^{n_k}.
//   exact_stationary_mixture  — P(counts) ∝ sum_i w_i multinomial
//                               * prod_k (q_i(k) w(k))^{n_k}.
//   exact_stationary_tuples   — the same laws on ordered tuples, used by the
//                               detailed-balance checks.
// =============================================================================
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include "selection.hpp"

namespace moran {

/// Run fn(0..count-1) with at most `max_parallel` concurrent workers
/// (0 = hardware concurrency). Each index must touch disjoint state; the
/// schedule never affects results.
template <typename Fn>
void run_indexed_parallel(std::size_t count, std::size_t max_parallel, Fn&& fn) {
    if (max_parallel == 0) max_parallel = std::max(1u, std::thread::hardware_concurrency());
    if (max_parallel <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min(count, max_parallel);
    std::vector<std::future<void>> jobs;
    jobs.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        }));
    for (auto& j : jobs) j.get();
}

struct ChainConfig {
    std::size_t n = 0;
    std::uint64_t steps = 0;
    std::uint64_t burn_in = 0;
    std::uint64_t thin = 1;
    KernelKind kernel = KernelKind::Tournament;
    std::uint64_t seed = 0;
    std::size_t replicas = 1;
    std::size_t threads = 0;  // max concurrent replicas; 0 = available cores

    static std::uint64_t default_burn_in(std::size_t n) {
        const double nn = static_cast<double>(n < 2 ? 2 : n);
        return static_cast<std::uint64_t>(std::ceil(20.0 * nn * std::log(nn)));
    }

    void validate() const {
        if (n == 0) throw std::invalid_argument("ChainConfig: n must be positive");
        if (thin == 0) throw std::invalid_argument("ChainConfig: thin must be >= 1");
        if (replicas == 0) throw std::invalid_argument("ChainConfig: replicas must be >= 1");
        if (burn_in >= steps)
            throw std::invalid_argument("ChainConfig: burn_in must be smaller than steps");
    }

    std::uint64_t samples_per_replica() const { return (steps - burn_in) / thin; }
};

struct SampleSet {
    ChainConfig cfg;
    SpaceSpec space;
    std::vector<std::vector<Genotype>> populations;

    std::vector<Genotype> pooled_values() const {
        std::vector<Genotype> out;
        out.reserve(populations.size() * cfg.n);
        for (const auto& p : populations) out.insert(out.end(), p.begin(), p.end());
        return out;
    }
};

// ── incremental breeding state for the hot loop ─────────────────────────────

namespace detail {

/// Mixture posterior tracker: per-component running log-likelihood with an
/// impossible-value counter so that removals of -inf contributions stay exact.
class MixtureTracker {
public:
    MixtureTracker(const MixturePrior& prior) : prior_(&prior) {
        finite_part_.assign(prior.weights.size(), 0.0);
        impossible_.assign(prior.weights.size(), 0);
        log_prior_.resize(prior.weights.size());
        for (std::size_t i = 0; i < prior.weights.size(); ++i)
            log_prior_[i] = prior.weights[i] > 0.0 ? std::log(prior.weights[i]) : kNegInf;
    }

    void add(Genotype v) {
        for (std::size_t i = 0; i < finite_part_.size(); ++i) {
            const double l = log_likelihood_of_value(prior_->components[i], v);
            if (l == kNegInf)
                ++impossible_[i];
            else
                finite_part_[i] += l;
        }
    }

    void remove(Genotype v) {
        for (std::size_t i = 0; i < finite_part_.size(); ++i) {
            const double l = log_likelihood_of_value(prior_->components[i], v);
            if (l == kNegInf)
                --impossible_[i];
            else
                finite_part_[i] -= l;
        }
    }

    /// Matches the draw order of mixture_conditional_sample: one categorical
    /// over posterior weights, then a component draw.
    Genotype sample(RngStream& rng) const {
        std::vector<double> lw(finite_part_.size());
        for (std::size_t i = 0; i < lw.size(); ++i)
            lw[i] = (impossible_[i] > 0 || log_prior_[i] == kNegInf)
                        ? kNegInf
                        : log_prior_[i] + finite_part_[i];
        if (log_sum_exp(lw) == kNegInf)
            throw std::domain_error("chain: population impossible under every mixture component");
        normalize_log_weights(lw);
        const std::size_t i = rng.categorical(lw);
        return sample_measure(prior_->components[i], rng);
    }

private:
    const MixturePrior* prior_;
    std::vector<double> finite_part_;
    std::vector<double> log_prior_;
    std::vector<int> impossible_;
};

class Breeder {
public:
    Breeder(const PriorSpec& prior, const FitnessSpec& fit, std::size_t n)
        : prior_(&prior), mass_(resolved_dp_mass(prior, fit, n)) {
        if (const auto* mix = std::get_if<MixturePrior>(&prior)) tracker_.emplace(*mix);
    }

    Genotype sample(std::span<const Genotype> pop, RngStream& rng) const {
        if (tracker_) return tracker_->sample(rng);
        return polya_conditional_sample(std::get<DpPrior>(*prior_), mass_, pop, rng);
    }

    void notify_append(Genotype v) {
        if (tracker_) tracker_->add(v);
    }
    void notify_replace(Genotype oldv, Genotype newv) {
        if (tracker_) {
            tracker_->remove(oldv);
            tracker_->add(newv);
        }
    }

    double dp_mass() const { return mass_; }

private:
    const PriorSpec* prior_;
    double mass_;
    std::optional<MixtureTracker> tracker_;
};

template <typename Sink>
void run_single_chain(const ChainConfig& cfg, const PriorSpec& prior, const FitnessSpec& fit,
                      std::size_t replica, Sink&& sink) {
    RngStream rng(cfg.seed, replica);
    Breeder breeder(prior, fit, cfg.n);
    const FitnessContext fc(fit, cfg.n);

    std::vector<Genotype> pop;
    pop.reserve(cfg.n);
    for (std::size_t t = 0; t < cfg.n; ++t) {
        const Genotype v = breeder.sample(pop, rng);
        pop.push_back(v);
        breeder.notify_append(v);
    }

    std::vector<double> inv_w;
    if (cfg.kernel == KernelKind::InverseFitness) inv_w.resize(cfg.n + 1);

    for (std::uint64_t step = 1; step <= cfg.steps; ++step) {
        const Genotype newcomer = breeder.sample(pop, rng);
        if (cfg.kernel == KernelKind::Tournament) {
            const std::size_t i = rng.uniform_index(cfg.n);
            const double accept =
                tournament_accept_prob(fc.scaled_phi(newcomer), fc.scaled_phi(pop[i]));
            if (rng.uniform01() < accept) {
                breeder.notify_replace(pop[i], newcomer);
                pop[i] = newcomer;
            }
        } else {
            for (std::size_t j = 0; j < cfg.n; ++j)
                inv_w[j] = std::exp(fc.scaled_phi(pop[j]));
            inv_w[cfg.n] = std::exp(fc.scaled_phi(newcomer));
            const std::size_t pick = rng.categorical(inv_w);
            if (pick < cfg.n) {
                breeder.notify_replace(pop[pick], newcomer);
                pop[pick] = newcomer;
            }
        }
        if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thin == 0)
            sink(std::span<const Genotype>(pop));
    }
}

}  // namespace detail

/// Stream every recorded population to `sink(replica, values)`. Replicas run
/// serially in index order; use run_chain for the parallel collecting variant.
template <typename Sink>
void run_chain_stream(const ChainConfig& cfg, const PriorSpec& prior, const FitnessSpec& fit,
                      Sink&& sink) {
    cfg.validate();
    for (std::size_t r = 0; r < cfg.replicas; ++r)
        detail::run_single_chain(cfg, prior, fit, r,
                                 [&](std::span<const Genotype> pop) { sink(r, pop); });
}

/// Run the configured chain(s) and collect every recorded population.
inline SampleSet run_chain(const ChainConfig& cfg, const PriorSpec& prior,
                           const FitnessSpec& fit) {
    cfg.validate();
    SampleSet out;
    out.cfg = cfg;
    out.space = prior_space(prior);

    std::vector<std::vector<std::vector<Genotype>>> per_replica(cfg.replicas);
    run_indexed_parallel(cfg.replicas, cfg.threads, [&](std::size_t r) {
        auto& bucket = per_replica[r];
        bucket.reserve(cfg.samples_per_replica());
        detail::run_single_chain(cfg, prior, fit, r, [&](std::span<const Genotype> pop) {
            bucket.emplace_back(pop.begin(), pop.end());
        });
    });

    for (auto& bucket : per_replica)
        for (auto& pop : bucket) out.populations.push_back(std::move(pop));
    return out;
}

/// Empirical measure of every recorded population.
inline std::vector<MeasureRepr> qn_samples(const SampleSet& ss) {
    std::vector<MeasureRepr> out;
    out.reserve(ss.populations.size());
    for (const auto& pop : ss.populations)
        out.push_back(empirical_measure(pop, ss.space));
    return out;
}

// ── exact stationary laws ───────────────────────────────────────────────────

/// Stationary counts law for the Dirichlet(-process, finite base) prior with
/// base weights alpha (all positive) and per-label fitness w from `fit` at
/// population size n.
inline CountsLaw exact_stationary_counts(const SpaceSpec& space, std::span<const double> alpha,
                                         const FitnessSpec& fit, int n) {
    if (!space.is_finite())
        throw std::invalid_argument("exact_stationary_counts: finite spaces only");
    if (static_cast<int>(alpha.size()) != space.labels)
        throw std::invalid_argument("exact_stationary_counts: alpha size mismatch");
    for (double a : alpha)
        if (a <= 0.0) throw std::invalid_argument("exact_stationary_counts: alpha must be > 0");
    if (detail::count_vector_total(space.labels, n) > detail::kCountsEnumerationGuard)
        throw std::invalid_argument("exact_stationary_counts: enumeration guard exceeded");

    const FitnessContext fc(fit, static_cast<std::uint64_t>(n));
    std::vector<double> log_w(static_cast<std::size_t>(space.labels));
    for (int k = 0; k < space.labels; ++k)
        log_w[static_cast<std::size_t>(k)] = -fc.scaled_phi(static_cast<Genotype>(k));
    double alpha_total = 0.0;
    for (double a : alpha) alpha_total += a;

    CountsLaw law;
    law.labels = space.labels;
    law.sample_size = n;
    detail::enumerate_counts(space.labels, n, law.counts);
    std::vector<double> lp(law.counts.size());
    for (std::size_t i = 0; i < law.counts.size(); ++i) {
        const auto& c = law.counts[i];
        double l = log_multinomial_coefficient(c) -
                   log_pochhammer(alpha_total, static_cast<std::uint64_t>(n));
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] == 0) continue;
            l += log_pochhammer(alpha[k], c[k]) + static_cast<double>(c[k]) * log_w[k];
        }
        lp[i] = l;
    }
    const double lz = log_sum_exp(lp);
    law.prob.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) law.prob[i] = std::exp(lp[i] - lz);
    return law;
}

/// Stationary counts law for a finite mixture prior.
inline CountsLaw exact_stationary_mixture(const SpaceSpec& space, const MixturePrior& prior,
                                          const FitnessSpec& fit, int n) {
    if (!space.is_finite() || !prior.space().is_finite())
        throw std::invalid_argument("exact_stationary_mixture: finite spaces only");
    if (!(prior.space() == space))
        throw std::invalid_argument("exact_stationary_mixture: space mismatch");
    if (detail::count_vector_total(space.labels, n) > detail::kCountsEnumerationGuard)
        throw std::invalid_argument("exact_stationary_mixture: enumeration guard exceeded");

    const FitnessContext fc(fit, static_cast<std::uint64_t>(n));
    std::vector<std::vector<double>> log_qw(prior.components.size());
    for (std::size_t i = 0; i < prior.components.size(); ++i) {
        const auto pmf = prior.components[i].to_pmf();
        log_qw[i].resize(pmf.size());
        for (std::size_t k = 0; k < pmf.size(); ++k)
            log_qw[i][k] = pmf[k] > 0.0
                               ? std::log(pmf[k]) - fc.scaled_phi(static_cast<Genotype>(k))
                               : kNegInf;
    }

    CountsLaw law;
    law.labels = space.labels;
    law.sample_size = n;
    detail::enumerate_counts(space.labels, n, law.counts);
    std::vector<double> lp(law.counts.size());
    for (std::size_t idx = 0; idx < law.counts.size(); ++idx) {
        const auto& c = law.counts[idx];
        const double log_coeff = log_multinomial_coefficient(c);
        std::vector<double> terms(prior.components.size(), kNegInf);
        for (std::size_t i = 0; i < prior.components.size(); ++i) {
            if (prior.weights[i] == 0.0) continue;
            double l = std::log(prior.weights[i]) + log_coeff;
            for (std::size_t k = 0; k < c.size() && l != kNegInf; ++k) {
                if (c[k] == 0) continue;
                l = log_qw[i][k] == kNegInf ? kNegInf
                                            : l + static_cast<double>(c[k]) * log_qw[i][k];
            }
            terms[i] = l;
        }
        lp[idx] = log_sum_exp(terms);
    }
    const double lz = log_sum_exp(lp);
    if (lz == kNegInf)
        throw std::domain_error("exact_stationary_mixture: law has zero total mass");
    law.prob.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i)
        law.prob[i] = lp[i] == kNegInf ? 0.0 : std::exp(lp[i] - lz);
    return law;
}

/// Stationary law on ordered tuples (base-K encoded), for either prior
/// family. Used by the detailed-balance verification, which must work on
/// ordered populations.
inline std::vector<double> exact_stationary_tuples(const SpaceSpec& space,
                                                   const PriorSpec& prior,
                                                   const FitnessSpec& fit, int n) {
    if (!space.is_finite())
        throw std::invalid_argument("exact_stationary_tuples: finite spaces only");
    const std::size_t dim = detail::state_count_guarded(space.labels, n);
    const double mass = detail::resolved_dp_mass(prior, fit, static_cast<std::size_t>(n));
    const FitnessContext fc(fit, static_cast<std::uint64_t>(n));

    std::vector<double> log_w(static_cast<std::size_t>(space.labels));
    for (int k = 0; k < space.labels; ++k)
        log_w[static_cast<std::size_t>(k)] = -fc.scaled_phi(static_cast<Genotype>(k));

    std::vector<double> lp(dim, kNegInf);
    std::vector<std::uint32_t> tuple(static_cast<std::size_t>(n));
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(space.labels));
    for (std::size_t s = 0; s < dim; ++s) {
        detail::decode_state(s, space.labels, tuple);
        std::fill(counts.begin(), counts.end(), 0u);
        double tilt = 0.0;
        for (auto v : tuple) {
            ++counts[v];
            tilt += log_w[v];
        }

        double base_log;
        if (const auto* dp = std::get_if<DpPrior>(&prior)) {
            const auto base = dp->base.to_pmf();
            base_log = -log_pochhammer(mass, static_cast<std::uint64_t>(n));
            for (std::size_t k = 0; k < counts.size(); ++k) {
                if (counts[k] == 0) continue;
                if (base[k] <= 0.0) {
                    base_log = kNegInf;
                    break;
                }
                base_log += log_pochhammer(mass * base[k], counts[k]);
            }
        } else {
            const auto& mix = std::get<MixturePrior>(prior);
            std::vector<double> terms(mix.weights.size(), kNegInf);
            for (std::size_t i = 0; i < mix.weights.size(); ++i) {
                if (mix.weights[i] == 0.0) continue;
                const auto pmf = mix.components[i].to_pmf();
                double l = std::log(mix.weights[i]);
                for (std::size_t k = 0; k < counts.size() && l != kNegInf; ++k) {
                    if (counts[k] == 0) continue;
                    l = pmf[k] > 0.0 ? l + static_cast<double>(counts[k]) * std::log(pmf[k])
                                     : kNegInf;
                }
                terms[i] = l;
            }
            base_log = log_sum_exp(terms);
        }
        lp[s] = base_log == kNegInf ? kNegInf : base_log + tilt;
    }
    const double lz = log_sum_exp(lp);
    std::vector<double> pi(dim);
    for (std::size_t s = 0; s < dim; ++s)
        pi[s] = lp[s] == kNegInf ? 0.0 : std::exp(lp[s] - lz);
    return pi;
}

/// Histogram of sampled count vectors aligned with `law`'s enumeration order.
inline std::vector<double> counts_histogram(const SampleSet& ss, const CountsLaw& law) {
    if (!ss.space.is_finite()) throw std::invalid_argument("counts_histogram: finite spaces only");
    std::vector<double> freq(law.size(), 0.0);
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(law.labels));
    for (const auto& pop : ss.populations) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (Genotype g : pop) ++counts[static_cast<std::size_t>(as_label(g))];
        freq[law.index_of(counts)] += 1.0;
    }
    const double total = static_cast<double>(ss.populations.size());
    for (double& f : freq) f /= total;
    return freq;
}

}  // namespace moran
