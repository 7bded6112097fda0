// =============================================================================
// selection.hpp — The two selection Markov kernels and their exact transition
// matrices on small finite instances.
//
// Single tournament: breed x_{n+1} from the conditional law, pick a member i
// uniformly, replace it with probability w(x_{n+1}) / (w(x_i) + w(x_{n+1})).
//
// Inverse fitness: breed x_{n+1}, then pick one of the n+1 individuals with
// probabilities proportional to 1/w; if the pick is a current member it is
// replaced by the newcomer, otherwise the newcomer is discarded.
//
// Simulation steps never form the stay-put probabilities explicitly — they
// emerge from the two-stage draw. The exact matrices do form them, so that
// every row sums to one by construction.
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fitness.hpp"
#include "prior.hpp"

namespace moran {

struct Population {
    SpaceSpec space;
    std::vector<Genotype> values;

    std::size_t size() const { return values.size(); }
};

enum class KernelKind { Tournament, InverseFitness };

inline const char* kernel_name(KernelKind k) {
    return k == KernelKind::Tournament ? "tournament" : "inverse";
}

/// Conditional breeding draw for either prior family. `dp_mass` is ignored
/// for mixture priors.
inline Genotype conditional_sample(const PriorSpec& prior, double dp_mass,
                                   std::span<const Genotype> pop, RngStream& rng) {
    if (const auto* dp = std::get_if<DpPrior>(&prior))
        return polya_conditional_sample(*dp, dp_mass, pop, rng);
    return mixture_conditional_sample(std::get<MixturePrior>(prior), pop, rng);
}

namespace detail {

inline double resolved_dp_mass(const PriorSpec& prior, const FitnessSpec& fit,
                               std::size_t n) {
    if (const auto* dp = std::get_if<DpPrior>(&prior))
        return dp->mass_for(fit.lambda, static_cast<std::uint64_t>(n));
    return 0.0;
}

/// Tournament acceptance probability written through phi differences,
/// 1 / (1 + exp(dphi_new - dphi_old)), to stay stable for extreme weights.
inline double tournament_accept_prob(double scaled_phi_new, double scaled_phi_old) {
    return 1.0 / (1.0 + std::exp(scaled_phi_new - scaled_phi_old));
}

}  // namespace detail

/// One tournament-selection step. Draw order: conditional draw(s), member
/// index, acceptance uniform.
inline Population tournament_step(Population pop, const PriorSpec& prior,
                                  const FitnessSpec& fit, RngStream& rng) {
    const std::size_t n = pop.size();
    if (n == 0) throw std::invalid_argument("tournament_step: empty population");
    const double mass = detail::resolved_dp_mass(prior, fit, n);
    const FitnessContext fc(fit, n);

    const Genotype newcomer = conditional_sample(prior, mass, pop.values, rng);
    const std::size_t i = rng.uniform_index(n);
    const double accept =
        detail::tournament_accept_prob(fc.scaled_phi(newcomer), fc.scaled_phi(pop.values[i]));
    if (rng.uniform01() < accept) pop.values[i] = newcomer;
    return pop;
}

/// One inverse-fitness step. Draw order: conditional draw(s), one categorical
/// over the n+1 inverse weights.
inline Population inverse_fitness_step(Population pop, const PriorSpec& prior,
                                       const FitnessSpec& fit, RngStream& rng) {
    const std::size_t n = pop.size();
    if (n == 0) throw std::invalid_argument("inverse_fitness_step: empty population");
    const double mass = detail::resolved_dp_mass(prior, fit, n);
    const FitnessContext fc(fit, n);

    const Genotype newcomer = conditional_sample(prior, mass, pop.values, rng);
    std::vector<double> inv_w(n + 1);
    for (std::size_t j = 0; j < n; ++j) inv_w[j] = std::exp(fc.scaled_phi(pop.values[j]));
    inv_w[n] = std::exp(fc.scaled_phi(newcomer));
    const std::size_t pick = rng.categorical(inv_w);
    if (pick < n) pop.values[pick] = newcomer;
    return pop;
}

// ── exact transition matrices on X^n, X finite ──────────────────────────────

/// Row-sparse stochastic matrix over base-K-encoded population tuples.
struct TransitionMatrix {
    int labels = 0;
    int population_size = 0;
    std::size_t dim = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // (col, prob), col-sorted

    double entry(std::size_t r, std::size_t c) const {
        for (const auto& [col, p] : rows[r])
            if (col == c) return p;
        return 0.0;
    }

    /// pi * P for a distribution over states.
    std::vector<double> apply_left(std::span<const double> pi) const {
        std::vector<double> out(dim, 0.0);
        for (std::size_t r = 0; r < dim; ++r)
            for (const auto& [c, p] : rows[r]) out[c] += pi[r] * p;
        return out;
    }
};

namespace detail {

inline constexpr std::size_t kStateGuard = 10'000;

inline std::size_t state_count_guarded(int labels, int n) {
    std::size_t dim = 1;
    for (int i = 0; i < n; ++i) {
        dim *= static_cast<std::size_t>(labels);
        if (dim > kStateGuard)
            throw std::invalid_argument("exact_transition_matrix: K^n guard exceeded");
    }
    return dim;
}

inline void decode_state(std::size_t s, int labels, std::span<std::uint32_t> tuple) {
    for (std::size_t k = 0; k < tuple.size(); ++k) {
        tuple[k] = static_cast<std::uint32_t>(s % static_cast<std::size_t>(labels));
        s /= static_cast<std::size_t>(labels);
    }
}

inline std::size_t encode_replace(std::size_t s, std::size_t pos, std::uint32_t old_label,
                                  std::uint32_t new_label, std::span<const std::size_t> pow) {
    return s + (static_cast<std::size_t>(new_label) - static_cast<std::size_t>(old_label)) *
                   pow[pos];
}

}  // namespace detail

/// Exact one-step transition matrix for either kernel on a finite space.
/// Rows are verified to sum to 1 within 1e-12.
inline TransitionMatrix exact_transition_matrix(KernelKind kernel, const SpaceSpec& space,
                                                int n, const PriorSpec& prior,
                                                const FitnessSpec& fit) {
    if (!space.is_finite())
        throw std::invalid_argument("exact_transition_matrix: finite spaces only");
    if (n < 1) throw std::invalid_argument("exact_transition_matrix: n must be >= 1");
    const int labels = space.labels;
    const std::size_t dim = detail::state_count_guarded(labels, n);
    const double mass = detail::resolved_dp_mass(prior, fit, static_cast<std::size_t>(n));
    const FitnessContext fc(fit, static_cast<std::uint64_t>(n));

    std::vector<double> w(static_cast<std::size_t>(labels));
    std::vector<double> inv_w(static_cast<std::size_t>(labels));
    for (int v = 0; v < labels; ++v) {
        w[static_cast<std::size_t>(v)] = fc.weight(static_cast<Genotype>(v));
        inv_w[static_cast<std::size_t>(v)] = 1.0 / w[static_cast<std::size_t>(v)];
    }
    std::vector<std::size_t> pow(static_cast<std::size_t>(n));
    pow[0] = 1;
    for (std::size_t k = 1; k < pow.size(); ++k)
        pow[k] = pow[k - 1] * static_cast<std::size_t>(labels);

    TransitionMatrix mat;
    mat.labels = labels;
    mat.population_size = n;
    mat.dim = dim;
    mat.rows.resize(dim);

    std::vector<std::uint32_t> tuple(static_cast<std::size_t>(n));
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(labels));
    std::vector<double> row(dim);
    for (std::size_t s = 0; s < dim; ++s) {
        detail::decode_state(s, labels, tuple);
        std::fill(counts.begin(), counts.end(), 0u);
        for (auto v : tuple) ++counts[v];
        const auto pred = predictive_pmf_finite(prior, mass, counts);

        std::fill(row.begin(), row.end(), 0.0);
        if (kernel == KernelKind::Tournament) {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t k = 0; k < tuple.size(); ++k) {
                const double w_old = w[tuple[k]];
                for (int v = 0; v < labels; ++v) {
                    const double w_new = w[static_cast<std::size_t>(v)];
                    const double p_breed = pred[static_cast<std::size_t>(v)] * inv_n;
                    const double p_win = w_new / (w_new + w_old);
                    row[detail::encode_replace(s, k, tuple[k], static_cast<std::uint32_t>(v),
                                               pow)] += p_breed * p_win;
                    row[s] += p_breed * (1.0 - p_win);  // newcomer loses to member k
                }
            }
        } else {
            double inv_sum_members = 0.0;
            for (auto v : tuple) inv_sum_members += inv_w[v];
            for (int v = 0; v < labels; ++v) {
                const double denom = inv_sum_members + inv_w[static_cast<std::size_t>(v)];
                const double p_breed = pred[static_cast<std::size_t>(v)];
                for (std::size_t k = 0; k < tuple.size(); ++k)
                    row[detail::encode_replace(s, k, tuple[k], static_cast<std::uint32_t>(v),
                                               pow)] +=
                        p_breed * inv_w[tuple[k]] / denom;
                row[s] += p_breed * inv_w[static_cast<std::size_t>(v)] / denom;  // self-discard
            }
        }

        double sum = 0.0;
        auto& sparse = mat.rows[s];
        for (std::size_t c = 0; c < dim; ++c) {
            if (row[c] != 0.0) sparse.emplace_back(c, row[c]);
            sum += row[c];
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw std::logic_error("exact_transition_matrix: row failed stochasticity check");
    }
    return mat;
}

}  // namespace moran
