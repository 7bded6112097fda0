// =============================================================================
// prior.hpp — Exchangeable breeding processes.
//
// Two prior families are representable:
//
//   DpPrior       — Dirichlet-process prior DP(m_n, base). Only the predictive
//                   (generalized Polya urn) is implemented: given t current
//                   members, the next draw is fresh from the base with
//                   probability m/(m+t) and a uniformly chosen copy otherwise.
//                   The concentration is tied to the chain's population size
//                   through the mass rule m_n = c * n^(1-lambda) (lambda in
//                   [0,1]; for lambda >= 1 the prior is fixed with m_n = c).
//
//   MixturePrior  — finite mixture of fixed measures. The conditional law is
//                   the posterior predictive: component weights are updated by
//                   the population likelihood (in log space), the draw comes
//                   from the posterior-weighted mixture.
//
// Draw order contracts (one RngStream word each, in this order):
//   polya:   [fresh-vs-copy uniform], then [base draw] or [member index].
//   mixture: [component categorical], then [location draw], then, for a
//            density draw on the interval, [within-cell offset].
//   base / component location draw: single uniform u; atoms are scanned in
//            sorted order first, then density cells in index order.
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fitness.hpp"
#include "measure.hpp"
#include "rng.hpp"

namespace moran {

// ── prior specifications ────────────────────────────────────────────────────

struct DpPrior {
    double c = 1.0;            // concentration scale, > 0
    MeasureRepr base;          // probability measure (uniform on [0,1] or a finite pmf)
    bool fixed_mass = false;   // true: m_n = c regardless of lambda (fixed prior)

    DpPrior(double c_, MeasureRepr base_, bool fixed = false)
        : c(c_), base(std::move(base_)), fixed_mass(fixed) {
        if (c <= 0.0) throw std::invalid_argument("DpPrior: c must be positive");
        base.validate();
    }

    /// Concentration m_n for a chain of population size n.
    double mass_for(double lambda, std::uint64_t n) const {
        if (fixed_mass || lambda >= 1.0) return c;
        return c * std::pow(static_cast<double>(n), 1.0 - lambda);
    }
};

struct MixturePrior {
    std::vector<double> weights;
    std::vector<MeasureRepr> components;

    MixturePrior(std::vector<double> w, std::vector<MeasureRepr> comps)
        : weights(std::move(w)), components(std::move(comps)) {
        if (weights.empty() || weights.size() != components.size())
            throw std::invalid_argument("MixturePrior: weights/components mismatch");
        double total = 0.0;
        for (double x : weights) {
            if (x < 0.0) throw std::invalid_argument("MixturePrior: negative weight");
            total += x;
        }
        if (std::fabs(total - 1.0) > 1e-9)
            throw std::invalid_argument("MixturePrior: weights must sum to 1");
        for (std::size_t i = 1; i < components.size(); ++i)
            if (!(components[i].space == components[0].space))
                throw std::invalid_argument("MixturePrior: components on different spaces");
        for (const auto& q : components) q.validate();
    }

    const SpaceSpec& space() const { return components.front().space; }

    /// Marginal of a single draw, sum_i w_i q_i.
    MeasureRepr marginal() const;
};

using PriorSpec = std::variant<DpPrior, MixturePrior>;

inline const SpaceSpec& prior_space(const PriorSpec& prior) {
    if (const auto* dp = std::get_if<DpPrior>(&prior)) return dp->base.space;
    return std::get<MixturePrior>(prior).space();
}

// ── sampling from a MeasureRepr ─────────────────────────────────────────────

/// Draw from a measure: one uniform selects atom vs density cell by inverse
/// CDF (atoms first, in sorted order); a density draw spends a second uniform
/// on the within-cell offset.
inline Genotype sample_measure(const MeasureRepr& m, RngStream& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& [loc, mass] : m.atoms) {
        acc += mass;
        if (u < acc) return loc;
    }
    if (!m.density.empty()) {
        const double w = m.space.cell_width();
        for (std::size_t i = 0; i < m.density.size(); ++i) {
            acc += m.density[i] * w;
            if (u < acc)
                return (static_cast<double>(i) + rng.uniform01()) * w;
        }
    }
    // u landed in the rounding slack at the top of the CDF
    if (!m.atoms.empty() && m.density.empty()) return m.atoms.back().first;
    if (!m.density.empty())
        return (static_cast<double>(m.density.size() - 1) + rng.uniform01()) *
               m.space.cell_width();
    throw std::domain_error("sample_measure: empty measure");
}

inline MeasureRepr MixturePrior::marginal() const {
    if (space().is_finite()) {
        std::vector<double> pmf(static_cast<std::size_t>(space().labels), 0.0);
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto ci = components[i].to_pmf();
            for (std::size_t k = 0; k < pmf.size(); ++k) pmf[k] += weights[i] * ci[k];
        }
        return MeasureRepr::finite_pmf(std::move(pmf));
    }
    MeasureRepr out;
    out.space = space();
    out.density.assign(static_cast<std::size_t>(space().grid_cells), 0.0);
    for (std::size_t i = 0; i < components.size(); ++i) {
        for (const auto& [loc, mass] : components[i].atoms) {
            bool merged = false;
            for (auto& [oloc, omass] : out.atoms)
                if (oloc == loc) {
                    omass += weights[i] * mass;
                    merged = true;
                    break;
                }
            if (!merged) out.atoms.emplace_back(loc, weights[i] * mass);
        }
        for (std::size_t cidx = 0; cidx < components[i].density.size(); ++cidx)
            out.density[cidx] += weights[i] * components[i].density[cidx];
    }
    out.sort_atoms();
    return out;
}

// ── Polya urn conditional ───────────────────────────────────────────────────

/// One conditional draw given the current members: fresh from the base with
/// probability m/(m+t), otherwise a copy of a uniformly chosen member.
inline Genotype polya_conditional_sample(const DpPrior& prior, double m,
                                         std::span<const Genotype> pop, RngStream& rng) {
    const double t = static_cast<double>(pop.size());
    if (pop.empty() && m <= 0.0)
        throw std::domain_error("polya_conditional_sample: empty population with zero mass");
    const double u = rng.uniform01();
    if (u < m / (m + t) || pop.empty()) return sample_measure(prior.base, rng);
    return pop[rng.uniform_index(pop.size())];
}

// ── mixture conditional ─────────────────────────────────────────────────────

namespace detail {

/// ln of the component likelihood of one observed value: the atom mass on an
/// exact atom match, the cell density value otherwise.
inline double log_likelihood_of_value(const MeasureRepr& q, Genotype v) {
    const double atom = q.mass_at(v);
    if (atom > 0.0) return std::log(atom);
    if (q.space.is_interval() && !q.density.empty()) {
        const double d = q.density[static_cast<std::size_t>(q.space.cell_of(v))];
        if (d > 0.0) return std::log(d);
    }
    return kNegInf;
}

inline std::vector<double> mixture_posterior_log_weights(const MixturePrior& prior,
                                                         std::span<const Genotype> pop) {
    std::vector<double> lw(prior.weights.size());
    for (std::size_t i = 0; i < prior.weights.size(); ++i) {
        double l = prior.weights[i] > 0.0 ? std::log(prior.weights[i]) : kNegInf;
        for (Genotype v : pop) {
            if (l == kNegInf) break;
            l += log_likelihood_of_value(prior.components[i], v);
        }
        lw[i] = l;
    }
    return lw;
}

}  // namespace detail

/// Posterior-mixture predictive draw given the population.
inline Genotype mixture_conditional_sample(const MixturePrior& prior,
                                           std::span<const Genotype> pop, RngStream& rng) {
    auto lw = detail::mixture_posterior_log_weights(prior, pop);
    if (log_sum_exp(lw) == kNegInf)
        throw std::domain_error(
            "mixture_conditional_sample: population impossible under every component");
    normalize_log_weights(lw);
    const std::size_t i = rng.categorical(lw);
    return sample_measure(prior.components[i], rng);
}

/// Exact posterior-predictive measure given the population.
inline MeasureRepr mixture_predictive(const MixturePrior& prior,
                                      std::span<const Genotype> pop) {
    auto lw = detail::mixture_posterior_log_weights(prior, pop);
    if (log_sum_exp(lw) == kNegInf)
        throw std::domain_error("mixture_predictive: population impossible under every component");
    normalize_log_weights(lw);
    MixturePrior posterior(lw, prior.components);
    return posterior.marginal();
}

// ── exact laws over allele counts ───────────────────────────────────────────

/// All count vectors (n_1, ..., n_K) with sum n, in lexicographic order, with
/// a probability per vector.
struct CountsLaw {
    int labels = 0;
    int sample_size = 0;
    std::vector<std::vector<std::uint32_t>> counts;
    std::vector<double> prob;

    std::size_t size() const { return counts.size(); }

    std::size_t index_of(std::span<const std::uint32_t> c) const {
        auto cmp = [](const std::vector<std::uint32_t>& a, std::span<const std::uint32_t> b) {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
        };
        const auto it = std::lower_bound(counts.begin(), counts.end(), c, cmp);
        if (it == counts.end() || !std::equal(it->begin(), it->end(), c.begin(), c.end()))
            throw std::logic_error("CountsLaw: count vector not found");
        return static_cast<std::size_t>(it - counts.begin());
    }
};

namespace detail {

inline std::uint64_t count_vector_total(int labels, int n) {
    // C(n + K - 1, K - 1), computed in doubles with a safety margin
    double v = 1.0;
    for (int i = 1; i <= labels - 1; ++i)
        v *= static_cast<double>(n + i) / static_cast<double>(i);
    return static_cast<std::uint64_t>(v + 0.5);
}

inline void enumerate_counts(int labels, int n,
                             std::vector<std::vector<std::uint32_t>>& out) {
    std::vector<std::uint32_t> cur(static_cast<std::size_t>(labels), 0);
    // lexicographic recursion over n_1, then n_2, ...
    auto rec = [&](auto&& self, int k, int remaining) -> void {
        if (k == labels - 1) {
            cur[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(remaining);
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(v);
            self(self, k + 1, remaining - v);
        }
    };
    rec(rec, 0, n);
}

inline constexpr std::uint64_t kCountsEnumerationGuard = 1'000'000;

}  // namespace detail

/// Exact n-sample law of the mixture breeding process, aggregated to counts:
/// P(counts) = sum_i w_i * multinomial(n; counts) * prod_k q_i(k)^{n_k}.
inline CountsLaw prior_exact_law(const MixturePrior& prior, int n) {
    const SpaceSpec& space = prior.space();
    if (!space.is_finite())
        throw std::invalid_argument("prior_exact_law: finite spaces only");
    if (n < 0) throw std::invalid_argument("prior_exact_law: n must be >= 0");
    const int k = space.labels;
    if (detail::count_vector_total(k, n) > detail::kCountsEnumerationGuard)
        throw std::invalid_argument("prior_exact_law: count enumeration guard exceeded");

    CountsLaw law;
    law.labels = k;
    law.sample_size = n;
    detail::enumerate_counts(k, n, law.counts);
    law.prob.resize(law.counts.size());

    std::vector<std::vector<double>> log_q(prior.components.size());
    for (std::size_t i = 0; i < prior.components.size(); ++i) {
        const auto pmf = prior.components[i].to_pmf();
        log_q[i].resize(pmf.size());
        for (std::size_t j = 0; j < pmf.size(); ++j)
            log_q[i][j] = pmf[j] > 0.0 ? std::log(pmf[j]) : kNegInf;
    }

    for (std::size_t idx = 0; idx < law.counts.size(); ++idx) {
        const auto& c = law.counts[idx];
        const double log_coeff = log_multinomial_coefficient(c);
        std::vector<double> terms(prior.components.size(), kNegInf);
        for (std::size_t i = 0; i < prior.components.size(); ++i) {
            if (prior.weights[i] == 0.0) continue;
            double l = std::log(prior.weights[i]) + log_coeff;
            for (std::size_t j = 0; j < c.size(); ++j) {
                if (c[j] == 0) continue;
                l += static_cast<double>(c[j]) * log_q[i][j];
            }
            terms[i] = l;
        }
        const double lp = log_sum_exp(terms);
        law.prob[idx] = lp == kNegInf ? 0.0 : std::exp(lp);
    }
    return law;
}

// ── finite-space predictive pmfs (used by exact kernels) ────────────────────

/// Predictive pmf of the next draw given current counts, for either prior
/// family on a finite space. `dp_mass` is the resolved concentration m_n.
inline std::vector<double> predictive_pmf_finite(const PriorSpec& prior, double dp_mass,
                                                 std::span<const std::uint32_t> counts) {
    const SpaceSpec& space = prior_space(prior);
    if (!space.is_finite())
        throw std::invalid_argument("predictive_pmf_finite: finite spaces only");
    const std::size_t k = static_cast<std::size_t>(space.labels);
    std::uint64_t t = 0;
    for (auto c : counts) t += c;

    if (const auto* dp = std::get_if<DpPrior>(&prior)) {
        const auto base = dp->base.to_pmf();
        std::vector<double> pmf(k);
        const double denom = dp_mass + static_cast<double>(t);
        for (std::size_t j = 0; j < k; ++j)
            pmf[j] = (dp_mass * base[j] + static_cast<double>(counts[j])) / denom;
        return pmf;
    }

    const auto& mix = std::get<MixturePrior>(prior);
    std::vector<double> lw(mix.weights.size());
    for (std::size_t i = 0; i < mix.weights.size(); ++i) {
        double l = mix.weights[i] > 0.0 ? std::log(mix.weights[i]) : kNegInf;
        const auto pmf = mix.components[i].to_pmf();
        for (std::size_t j = 0; j < k && l != kNegInf; ++j) {
            if (counts[j] == 0) continue;
            l = pmf[j] > 0.0 ? l + static_cast<double>(counts[j]) * std::log(pmf[j]) : kNegInf;
        }
        lw[i] = l;
    }
    if (log_sum_exp(lw) == kNegInf)
        throw std::domain_error("predictive_pmf_finite: population impossible under every component");
    normalize_log_weights(lw);
    std::vector<double> pmf(k, 0.0);
    for (std::size_t i = 0; i < mix.weights.size(); ++i) {
        const auto ci = mix.components[i].to_pmf();
        for (std::size_t j = 0; j < k; ++j) pmf[j] += lw[i] * ci[j];
    }
    return pmf;
}

}  // namespace moran
