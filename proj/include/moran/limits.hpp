// =============================================================================
// limits.hpp — Infinite-population limit objects: regime thresholds, theta
// fixed points, limit measures (with atoms where the threshold fails), the
// fitness-reweighted prior at lambda = 1, the entropy-regularized objective,
// and two standalone numeric propositions.
//
// Scaling regimes for w_n(x) = exp(-phi(x) / n^lambda):
//
//   Fixed prior (any mixture, or DP with fixed concentration):
//     lambda > 1   — selection washes out; the limit prior is the prior itself.
//     lambda = 1   — the prior is reweighted by exp(-<phi, q>) per component.
//     lambda < 1   — selection dominates; the limit is the point mass at the
//                    fitness optimum x_o, provided that point mass lies in the
//                    prior's support.
//
//   Dirichlet-process prior with mass rule m_n = c * n^(1-lambda):
//     lambda = 0        — per-individual limit r* is the w-tilt of q*, where
//                         q* maximizes ln<w,q> - c D(base||q). Whether q* is a
//                         pure density or carries an atom at x_o is decided by
//                         the threshold integral of w_max / (w_max - w).
//     lambda in (0,1)   — per-individual limit is q* itself, maximizing
//                         -<phi,q> - c D(base||q); threshold integrand
//                         1 / (phi - phi_o); the result does not depend on
//                         lambda inside (0,1).
//
// Density formulas (theta is the unique normalizing fixed point):
//     lambda = 0, density regime:   q* dens  f(x) = c / (1 + c - w(x)/theta),
//                                   r* dens  c w(x) / (theta(1+c) - w(x)).
//     lambda = 0, atom regime:      r* dens  c w(x) / (w_max - w(x)),
//                                   atom mass (1-beta)(1+c) at x_o,
//                                   beta = int c w_max / ((1+c)(w_max - w)).
//     lambda in (0,1), density:     q* dens  f(x) = c / (phi(x) + c - theta).
//     lambda in (0,1), atom:        q* dens  c / (phi(x) - phi_o),
//                                   atom mass 1 - beta at x_o.
// =============================================================================
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitness.hpp"
#include "prior.hpp"
#include "quadrature.hpp"

namespace moran {

enum class LimitRegime {
    LambdaGt1,
    LambdaEq1,
    LambdaIn01FixedPrior,
    DpLambda0Density,
    DpLambda0Atom,
    DpFracDensity,
    DpFracAtom,
};

inline const char* regime_name(LimitRegime r) {
    switch (r) {
        case LimitRegime::LambdaGt1: return "lambda_gt1";
        case LimitRegime::LambdaEq1: return "lambda_eq1";
        case LimitRegime::LambdaIn01FixedPrior: return "lambda_in_0_1_fixed_prior";
        case LimitRegime::DpLambda0Density: return "dp_lambda0_density";
        case LimitRegime::DpLambda0Atom: return "dp_lambda0_atom";
        case LimitRegime::DpFracDensity: return "dp_frac_density";
        case LimitRegime::DpFracAtom: return "dp_frac_atom";
    }
    return "unknown";
}

/// How the limit of the empirical-measure law is described.
enum class QnLimitKind { PointMass, MixtureOverMeasures, DirichletProcessPrior };

struct LimitResult {
    LimitRegime regime = LimitRegime::LambdaGt1;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();  // atom regimes only
    MeasureRepr measure;                 // predicted per-individual limit law
    std::optional<MeasureRepr> q_star;   // empirical-measure limit, when a single measure
    QnLimitKind qn_kind = QnLimitKind::PointMass;
    std::optional<MixturePrior> qn_mixture;  // lambda >= 1 mixture descriptions

    bool has_atom_at(Genotype x) const { return measure.mass_at(x) > 0.0; }
};

class ThresholdIndeterminateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ThresholdCheck {
    bool holds = false;     // true: density regime
    double integral = 0.0;  // +infinity when the threshold integral diverges
};

// ── threshold integrals ─────────────────────────────────────────────────────

namespace detail {

/// exp(-a) - exp(-b) for 0 <= a <= b without cancellation.
inline double exp_diff(double a, double b) {
    return -std::exp(-a) * std::expm1(-(b - a));
}

inline ThresholdCheck finite_threshold(const std::vector<double>& alpha_bar,
                                       const std::function<double(std::size_t)>& integrand_at,
                                       double threshold) {
    double total = 0.0;
    for (std::size_t k = 0; k < alpha_bar.size(); ++k) {
        if (alpha_bar[k] == 0.0) continue;
        const double v = integrand_at(k);
        if (v == kPosInf) return {true, kPosInf};
        total += alpha_bar[k] * v;
    }
    return {total >= threshold, total};
}

inline ThresholdCheck interval_threshold(const std::function<double(double)>& integrand,
                                         double x_o, double threshold, double quad_tol) {
    SingularOptions opts;
    opts.rel_tol = quad_tol;
    opts.early_threshold = threshold;
    auto res = integrate_with_singularity(integrand, 0.0, 1.0, x_o, opts);
    if (res.diverged) return {true, kPosInf};
    if (res.crossed_threshold) return {true, res.value};
    if (res.converged &&
        std::fabs(res.value - threshold) < 10.0 * quad_tol * std::max(1.0, threshold))
        throw ThresholdIndeterminateError(
            "threshold integral within quadrature tolerance of the decision boundary; "
            "refine the tolerance to classify this instance");
    return {res.value >= threshold, res.value};
}

}  // namespace detail

/// Decides the lambda = 0 regime: integral of w_max / (w_max - w) against the
/// base, singular at the fitness optimum, compared against (1+c)/c. Returns
/// holds = true (density regime) as soon as a truncated value crosses the
/// threshold; a divergent integral reports +infinity.
inline ThresholdCheck check_density_threshold_lambda0(const FitnessSpec& fit,
                                                      const MeasureRepr& base, double c,
                                                      double quad_tol = 1e-10) {
    if (fit.lambda != 0.0)
        throw std::invalid_argument("check_density_threshold_lambda0: requires lambda = 0");
    if (c <= 0.0) throw std::invalid_argument("threshold check: c must be positive");
    const double threshold = (1.0 + c) / c;
    const double phi_o = fit.phi.min_value();

    if (base.space.is_finite()) {
        const auto pmf = base.to_pmf();
        return detail::finite_threshold(
            pmf,
            [&](std::size_t k) {
                const double dphi = fit.phi(static_cast<Genotype>(k)) - phi_o;
                if (dphi <= 0.0) return kPosInf;  // w(k) = w_max on a positive-mass label
                return 1.0 / -std::expm1(-dphi);  // w_max / (w_max - w(k))
            },
            threshold);
    }
    const double x_o = fit.phi.minimizer();
    return detail::interval_threshold(
        [&](double x) {
            const double dphi = fit.phi(x) - phi_o;
            return 1.0 / -std::expm1(-dphi);
        },
        x_o, threshold, quad_tol);
}

/// The raw lambda = 0 threshold integral (no early acceptance, no boundary
/// guard); +infinity when divergent. Intended for root-finding across the
/// regime boundary, where the classifying check would refuse to answer.
inline double density_threshold_integral_lambda0(const FitnessSpec& fit,
                                                 const MeasureRepr& base,
                                                 double quad_tol = 1e-10) {
    const double phi_o = fit.phi.min_value();
    auto integrand = [&](double x) {
        const double dphi = fit.phi(x) - phi_o;
        return 1.0 / -std::expm1(-dphi);
    };
    if (base.space.is_finite()) {
        const auto pmf = base.to_pmf();
        double s = 0.0;
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            if (pmf[k] == 0.0) continue;
            const double dphi = fit.phi(static_cast<Genotype>(k)) - phi_o;
            if (dphi <= 0.0) return kPosInf;
            s += pmf[k] / -std::expm1(-dphi);
        }
        return s;
    }
    SingularOptions opts;
    opts.rel_tol = quad_tol;
    auto res = integrate_with_singularity(integrand, 0.0, 1.0, fit.phi.minimizer(), opts);
    return res.value_or_infinity();
}

/// Decides the lambda in (0,1) regime: integral of 1 / (phi - phi_o) against
/// the base, compared against 1/c.
inline ThresholdCheck check_density_threshold_frac(const FitnessSpec& fit,
                                                   const MeasureRepr& base, double c,
                                                   double quad_tol = 1e-10) {
    if (!(fit.lambda > 0.0 && fit.lambda < 1.0))
        throw std::invalid_argument("check_density_threshold_frac: requires lambda in (0,1)");
    if (c <= 0.0) throw std::invalid_argument("threshold check: c must be positive");
    const double threshold = 1.0 / c;
    const double phi_o = fit.phi.min_value();

    if (base.space.is_finite()) {
        const auto pmf = base.to_pmf();
        return detail::finite_threshold(
            pmf,
            [&](std::size_t k) {
                const double dphi = fit.phi(static_cast<Genotype>(k)) - phi_o;
                return dphi <= 0.0 ? kPosInf : 1.0 / dphi;
            },
            threshold);
    }
    const double x_o = fit.phi.minimizer();
    return detail::interval_threshold(
        [&](double x) {
            const double dphi = fit.phi(x) - phi_o;
            return 1.0 / dphi;
        },
        x_o, threshold, quad_tol);
}

// ── theta fixed points ──────────────────────────────────────────────────────

namespace detail {

/// Mass map theta -> integral of the candidate density against the base.
/// lambda0: f_theta = c / (1 + c - w/theta), strictly decreasing in theta.
/// frac:    f_theta = c / (phi + c - theta), strictly increasing in theta.
template <typename Density>
double base_mass(const MeasureRepr& base, const Density& f, std::optional<double> peak) {
    if (base.space.is_finite()) {
        const auto pmf = base.to_pmf();
        double s = 0.0;
        for (std::size_t k = 0; k < pmf.size(); ++k)
            if (pmf[k] > 0.0) s += pmf[k] * f(static_cast<Genotype>(k));
        return s;
    }
    try {
        return integrate_interval(f, 0.0, 1.0);
    } catch (const QuadratureError&) {
        // sharply peaked integrand near the optimum: resolve it by truncation
        SingularOptions opts;
        auto res = integrate_with_singularity(f, 0.0, 1.0, peak.value(), opts);
        if (res.diverged) return kPosInf;
        return res.value;
    }
}

/// Bisection for the unique root of mass(theta) = 1 on [lo, hi]. `increasing`
/// states the monotonicity of the mass map. Only the tame endpoint (where the
/// mass is <= 1) is ever evaluated directly: the singular endpoint may carry a
/// divergent integrand, and the existence of the root there is the caller's
/// threshold precondition. The bracket is shrunk to ulp level so the residual
/// is limited only by quadrature accuracy; a final residual check catches
/// threshold misclassification.
template <typename MassFn>
double bisect_unit_mass(const MassFn& mass, double lo, double hi, bool increasing) {
    const double tame_end = increasing ? lo : hi;
    if (mass(tame_end) >= 1.0 - 1e-13) return tame_end;  // constant-fitness edge
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double m = mass(mid);
        const bool root_above = increasing ? (m < 1.0) : (m > 1.0);
        if (root_above)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, std::fabs(hi))) break;
    }
    const double theta = 0.5 * (lo + hi);
    if (std::fabs(mass(theta) - 1.0) > 1e-6)
        throw std::domain_error(
            "theta bisection: bracket failure — threshold inequality misclassified");
    return theta;
}

}  // namespace detail

/// Mass of the lambda = 0 candidate density at a given theta (exposed for the
/// monotonicity property of the theta map).
inline double theta_mass_lambda0(const FitnessSpec& fit, const MeasureRepr& base, double c,
                                 double theta) {
    auto f = [&](double x) {
        const double w = std::exp(-fit.phi(x));
        return c / (1.0 + c - w / theta);
    };
    return detail::base_mass(base, f, fit.phi.minimizer());
}

inline double theta_mass_frac(const FitnessSpec& fit, const MeasureRepr& base, double c,
                              double theta) {
    auto f = [&](double x) { return c / (fit.phi(x) + c - theta); };
    return detail::base_mass(base, f, fit.phi.minimizer());
}

/// Unique theta in [w_max/(1+c), w_max] making c / (1 + c - w/theta) a
/// probability density w.r.t. the base; satisfies theta = <w, f_theta>.
inline double solve_theta_lambda0(const FitnessSpec& fit, const MeasureRepr& base, double c) {
    const double w_max = std::exp(-fit.phi.min_value());
    return detail::bisect_unit_mass(
        [&](double theta) { return theta_mass_lambda0(fit, base, c, theta); },
        w_max / (1.0 + c), w_max, /*increasing=*/false);
}

/// Unique theta in [phi_o, phi_o + c] making c / (phi + c - theta) a
/// probability density w.r.t. the base; satisfies theta = <phi, f_theta>.
inline double solve_theta_frac(const FitnessSpec& fit, const MeasureRepr& base, double c) {
    const double phi_o = fit.phi.min_value();
    return detail::bisect_unit_mass(
        [&](double theta) { return theta_mass_frac(fit, base, c, theta); }, phi_o, phi_o + c,
        /*increasing=*/true);
}

// ── limit measures under the DP prior ───────────────────────────────────────

namespace detail {

/// Grid discretization of a closed-form density, with exact per-cell averages
/// and a normalizing atom in the atom regime. `expected_atom` is checked
/// against the measured density deficit before the representation is closed
/// to unit mass.
inline MeasureRepr grid_measure_with_atom(int cells, const std::function<double(double)>& dens,
                                          std::optional<double> singular, double atom_loc,
                                          double expected_atom, double check_tol) {
    auto avg = cell_averages(dens, cells, singular);
    double density_mass = 0.0;
    for (double d : avg) density_mass += d;
    density_mass /= static_cast<double>(cells);
    const double atom = 1.0 - density_mass;
    if (std::fabs(atom - expected_atom) > check_tol)
        throw std::logic_error("limit measure: atom mass fails the regime identity, |" +
                               std::to_string(atom) + " - " + std::to_string(expected_atom) +
                               "| > " + std::to_string(check_tol));
    std::vector<std::pair<double, double>> atoms;
    if (atom > 0.0) atoms.emplace_back(atom_loc, atom);
    return MeasureRepr::interval(cells, std::move(avg), std::move(atoms));
}

inline MeasureRepr grid_density_measure(int cells, const std::function<double(double)>& dens,
                                        std::optional<double> cusp = std::nullopt) {
    auto avg = cell_averages(dens, cells, cusp);
    double mass = 0.0;
    for (double d : avg) mass += d;
    mass /= static_cast<double>(cells);
    if (std::fabs(mass - 1.0) > 1e-8)
        throw std::logic_error("limit measure: density fails to integrate to 1");
    for (double& d : avg) d /= mass;  // close to unit mass at rounding level
    return MeasureRepr::interval(cells, std::move(avg));
}

}  // namespace detail

/// Predicted limits for the DP prior at lambda = 0. The per-individual law is
/// the w-tilted r*, `q_star` is the objective maximizer q*.
inline LimitResult limit_measure_lambda0(const FitnessSpec& fit, const MeasureRepr& base,
                                         double c) {
    if (fit.lambda != 0.0)
        throw std::invalid_argument("limit_measure_lambda0: requires lambda = 0");
    const auto check = check_density_threshold_lambda0(fit, base, c);
    const double phi_o = fit.phi.min_value();
    const double w_max = std::exp(-phi_o);
    auto w = [&](double x) { return std::exp(-fit.phi(x)); };

    LimitResult out;
    out.regime = check.holds ? LimitRegime::DpLambda0Density : LimitRegime::DpLambda0Atom;

    if (check.holds) {
        const double theta = solve_theta_lambda0(fit, base, c);
        out.theta = theta;
        auto q_dens = [&](double x) { return c / (1.0 + c - w(x) / theta); };
        auto r_dens = [&](double x) { return c * w(x) / (theta * (1.0 + c) - w(x)); };
        if (base.space.is_finite()) {
            const auto pmf = base.to_pmf();
            std::vector<double> q(pmf.size()), r(pmf.size());
            for (std::size_t k = 0; k < pmf.size(); ++k) {
                q[k] = pmf[k] * q_dens(static_cast<double>(k));
                r[k] = pmf[k] * r_dens(static_cast<double>(k));
            }
            out.q_star = MeasureRepr::finite_pmf(q);
            out.measure = MeasureRepr::finite_pmf(r);
        } else {
            // the densities can carry a cusp at the optimum even in this regime
            const double x_o = fit.phi.minimizer();
            out.q_star = detail::grid_density_measure(base.space.grid_cells, q_dens, x_o);
            out.measure = detail::grid_density_measure(base.space.grid_cells, r_dens, x_o);
        }
        return out;
    }

    // atom regime: the base cannot charge the optimum, so this is interval-only
    if (base.space.is_finite())
        throw std::logic_error("limit_measure_lambda0: atom regime impossible on a finite base");
    const double x_o = fit.phi.minimizer();
    out.theta = w_max / (1.0 + c);  // <w, q*> in this regime
    auto beta_integrand = [&](double x) {
        const double dphi = fit.phi(x) - phi_o;
        return c / ((1.0 + c) * -std::expm1(-dphi));  // c w_max / ((1+c)(w_max - w))
    };
    {
        auto res = integrate_with_singularity(beta_integrand, 0.0, 1.0, x_o);
        if (res.diverged)
            throw std::logic_error("limit_measure_lambda0: beta diverged in the atom regime");
        out.beta = res.value;
    }
    auto r_dens = [&](double x) {
        const double dphi = fit.phi(x) - phi_o;
        return c * std::exp(-dphi) / -std::expm1(-dphi);  // c w / (w_max - w)
    };
    auto q_dens = [&](double x) { return beta_integrand(x); };
    out.measure = detail::grid_measure_with_atom(base.space.grid_cells, r_dens, x_o, x_o,
                                                 (1.0 - out.beta) * (1.0 + c), 1e-6);
    out.q_star = detail::grid_measure_with_atom(base.space.grid_cells, q_dens, x_o, x_o,
                                                1.0 - out.beta, 1e-6);
    return out;
}

/// Predicted limits for the DP prior at lambda in (0,1). The output does not
/// depend on the particular lambda inside the interval.
inline LimitResult limit_measure_frac(const FitnessSpec& fit, const MeasureRepr& base,
                                      double c) {
    if (!(fit.lambda > 0.0 && fit.lambda < 1.0))
        throw std::invalid_argument("limit_measure_frac: requires lambda in (0,1)");
    const auto check = check_density_threshold_frac(fit, base, c);
    const double phi_o = fit.phi.min_value();

    LimitResult out;
    out.regime = check.holds ? LimitRegime::DpFracDensity : LimitRegime::DpFracAtom;

    if (check.holds) {
        const double theta = solve_theta_frac(fit, base, c);
        out.theta = theta;
        auto q_dens = [&](double x) { return c / (fit.phi(x) + c - theta); };
        if (base.space.is_finite()) {
            const auto pmf = base.to_pmf();
            std::vector<double> q(pmf.size());
            for (std::size_t k = 0; k < pmf.size(); ++k)
                q[k] = pmf[k] * q_dens(static_cast<double>(k));
            out.measure = MeasureRepr::finite_pmf(q);
        } else {
            out.measure = detail::grid_density_measure(base.space.grid_cells, q_dens,
                                                       fit.phi.minimizer());
        }
        out.q_star = out.measure;
        return out;
    }

    if (base.space.is_finite())
        throw std::logic_error("limit_measure_frac: atom regime impossible on a finite base");
    const double x_o = fit.phi.minimizer();
    out.theta = phi_o + c;  // <phi, q*> in this regime
    auto q_dens = [&](double x) { return c / (fit.phi(x) - phi_o); };
    {
        auto res = integrate_with_singularity(q_dens, 0.0, 1.0, x_o);
        if (res.diverged)
            throw std::logic_error("limit_measure_frac: beta diverged in the atom regime");
        out.beta = res.value;
    }
    out.measure = detail::grid_measure_with_atom(base.space.grid_cells, q_dens, x_o, x_o,
                                                 1.0 - out.beta, 1e-6);
    out.q_star = out.measure;
    return out;
}

// ── fixed-prior limits ──────────────────────────────────────────────────────

/// Inner product <phi, q> with exact per-cell averages of phi on the grid.
inline double phi_inner_product(const PhiSpec& phi, const MeasureRepr& q) {
    if (q.space.is_finite()) {
        const auto pmf = q.to_pmf();
        double s = 0.0;
        for (std::size_t k = 0; k < pmf.size(); ++k)
            s += pmf[k] * phi(static_cast<double>(k));
        return s;
    }
    double s = 0.0;
    for (const auto& [loc, mass] : q.atoms) s += mass * phi(loc);
    if (!q.density.empty()) {
        const auto avg = cell_averages([&](double x) { return phi(x); }, q.space.grid_cells,
                                       phi.minimizer());
        const double w = q.space.cell_width();
        for (std::size_t i = 0; i < q.density.size(); ++i) s += q.density[i] * w * avg[i];
    }
    return s;
}

/// lambda = 1 limit of the prior: component weights are reweighted by
/// exp(-<phi, q_i>).
inline MixturePrior limit_prior_lambda1(const MixturePrior& prior, const FitnessSpec& fit) {
    if (fit.lambda != 1.0)
        throw std::invalid_argument("limit_prior_lambda1: requires lambda = 1");
    std::vector<double> lw(prior.weights.size());
    for (std::size_t i = 0; i < prior.weights.size(); ++i)
        lw[i] = prior.weights[i] > 0.0
                    ? std::log(prior.weights[i]) - phi_inner_product(fit.phi, prior.components[i])
                    : kNegInf;
    normalize_log_weights(lw);
    return MixturePrior(lw, prior.components);
}

/// Limit under a prior that does not change with n. For lambda > 1 the limit
/// prior is the prior itself; for lambda = 1 it is the reweighted prior; for
/// lambda in [0,1) it is the point mass at the fitness optimum, which must lie
/// in the support of the prior.
inline LimitResult limit_fixed_prior(const FitnessSpec& fit, const PriorSpec& prior) {
    const SpaceSpec& space = prior_space(prior);
    const double lambda = fit.lambda;

    if (lambda > 1.0) {
        LimitResult out;
        out.regime = LimitRegime::LambdaGt1;
        if (const auto* mix = std::get_if<MixturePrior>(&prior)) {
            out.measure = mix->marginal();
            out.qn_kind = QnLimitKind::MixtureOverMeasures;
            out.qn_mixture = *mix;
        } else {
            out.measure = std::get<DpPrior>(prior).base;
            out.qn_kind = QnLimitKind::DirichletProcessPrior;
        }
        return out;
    }
    if (lambda == 1.0) {
        const auto* mix = std::get_if<MixturePrior>(&prior);
        if (!mix)
            throw std::invalid_argument(
                "limit_fixed_prior: the lambda = 1 reweighted limit of a DP prior is not "
                "representable in this library; use a finite mixture prior");
        LimitResult out;
        out.regime = LimitRegime::LambdaEq1;
        const auto reweighted = limit_prior_lambda1(*mix, fit);
        out.measure = reweighted.marginal();
        out.qn_kind = QnLimitKind::MixtureOverMeasures;
        out.qn_mixture = reweighted;
        return out;
    }

    // lambda in [0,1): degenerate limit at the optimum, hypothesis permitting
    const Genotype x_o = fit.phi.minimizer();
    bool supported = false;
    if (const auto* mix = std::get_if<MixturePrior>(&prior)) {
        for (std::size_t i = 0; i < mix->weights.size(); ++i) {
            if (mix->weights[i] <= 0.0) continue;
            const auto& comp = mix->components[i];
            if (comp.mass_at(x_o) == 1.0) supported = true;
        }
    } else {
        const auto& dp = std::get<DpPrior>(prior);
        if (!dp.fixed_mass && lambda > 0.0)
            throw std::invalid_argument(
                "limit_fixed_prior: a mass-rule DP prior at lambda in (0,1) is not a fixed "
                "prior; use limit_measure_frac (or limit_measure_lambda0 at lambda = 0)");
        // a DP prior supports every measure on the support of its base
        supported = dp.base.space.is_finite() ? dp.base.mass_at(x_o) > 0.0 : true;
    }
    if (!supported)
        throw std::domain_error(
            "limit_fixed_prior: hypothesis violated — the support of the prior does not "
            "contain the point mass at the fitness optimum, so the degenerate limit does "
            "not apply");
    LimitResult out;
    out.regime = LimitRegime::LambdaIn01FixedPrior;
    out.measure = MeasureRepr::point_mass(space, x_o);
    out.q_star = out.measure;
    return out;
}

// ── entropy-regularized objective ───────────────────────────────────────────

enum class ObjectiveMode { Lambda0, Frac };

/// Evaluates F over measures on a fixed space, with the fitness/cost grid
/// averages precomputed once. Mode Lambda0: F(q) = ln<w,q> - c D(base||q);
/// mode Frac: F(q) = -<phi,q> - c D(base||q). Returns -infinity when the base
/// is not absolutely continuous w.r.t. q.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(const FitnessSpec& fit, const MeasureRepr& base, double c,
                       ObjectiveMode mode)
        : mode_(mode), c_(c), space_(base.space), phi_(&fit.phi) {
        if (c <= 0.0) throw std::invalid_argument("ObjectiveEvaluator: c must be positive");
        if (space_.is_finite()) {
            base_weights_ = base.to_pmf();
            phi_values_.resize(base_weights_.size());
            for (std::size_t k = 0; k < phi_values_.size(); ++k)
                phi_values_[k] = fit.phi(static_cast<double>(k));
        } else {
            base.validate();
            for (double d : base.density)
                if (d != base.density.front() || !base.atoms.empty())
                    throw std::invalid_argument(
                        "ObjectiveEvaluator: interval bases must be uniform");
            const int cells = space_.grid_cells;
            base_weights_.assign(static_cast<std::size_t>(cells), space_.cell_width());
            phi_values_ = cell_averages([&](double x) { return fit.phi(x); }, cells,
                                        fit.phi.minimizer());
        }
    }

    /// Per-point phi (finite labels) or exact per-cell phi averages (grid).
    std::span<const double> phi_values() const { return phi_values_; }

    double operator()(const MeasureRepr& q) const {
        if (!(q.space == space_))
            throw std::invalid_argument("objective: measure on the wrong space");
        double mean = 0.0;      // <w,q> (Lambda0) or <phi,q> (Frac)
        double log_term = 0.0;  // c * integral of ln(dq/dbase) d(base)

        if (space_.is_finite()) {
            const auto pmf = q.to_pmf();
            for (std::size_t k = 0; k < pmf.size(); ++k) {
                mean += pmf[k] * point_value(phi_values_[k]);
                if (base_weights_[k] == 0.0) continue;
                if (pmf[k] == 0.0) return kNegInf;
                log_term += base_weights_[k] * std::log(pmf[k] / base_weights_[k]);
            }
        } else {
            for (const auto& [loc, mass] : q.atoms) mean += mass * point_value((*phi_)(loc));
            if (q.density.empty()) return kNegInf;
            for (std::size_t i = 0; i < q.density.size(); ++i) {
                mean += q.density[i] * base_weights_[i] * point_value(phi_values_[i]);
                if (q.density[i] == 0.0) return kNegInf;
                log_term += base_weights_[i] * std::log(q.density[i]);
            }
        }
        if (mode_ == ObjectiveMode::Lambda0) return std::log(mean) + c_ * log_term;
        return -mean + c_ * log_term;
    }

    /// Exact maximizer of this (discretized) objective, including the atom at
    /// the optimum when the discrete threshold fails. On the grid this is the
    /// optimum of the same functional the evaluator computes, so perturbation
    /// comparisons carry true margins.
    MeasureRepr optimal_measure() const {
        const double phi_o = phi_->min_value();
        if (space_.is_finite()) return finite_optimum(phi_o);
        return grid_optimum(phi_o);
    }

private:
    // Lambda0 works through w = exp(-phi); Frac works through phi directly.
    double point_value(double phi_val) const {
        return mode_ == ObjectiveMode::Lambda0 ? std::exp(-phi_val) : phi_val;
    }

    MeasureRepr finite_optimum(double phi_o) const {
        auto dens = solve_discrete_density(base_weights_, phi_values_, phi_o,
                                           /*allow_atom=*/false);
        std::vector<double> pmf(base_weights_.size());
        for (std::size_t k = 0; k < pmf.size(); ++k) pmf[k] = base_weights_[k] * dens.f[k];
        return MeasureRepr::finite_pmf(pmf);
    }

    MeasureRepr grid_optimum(double phi_o) const {
        auto dens = solve_discrete_density(base_weights_, phi_values_, phi_o,
                                           /*allow_atom=*/true);
        if (dens.atom_mass == 0.0) {
            double mass = 0.0;
            for (std::size_t i = 0; i < dens.f.size(); ++i) mass += base_weights_[i] * dens.f[i];
            for (double& v : dens.f) v /= mass;
            return MeasureRepr::interval(space_.grid_cells, std::move(dens.f));
        }
        double mass = 0.0;
        for (std::size_t i = 0; i < dens.f.size(); ++i) mass += base_weights_[i] * dens.f[i];
        return MeasureRepr::interval(space_.grid_cells, std::move(dens.f),
                                     {{phi_->minimizer(), 1.0 - mass}});
    }

    struct DiscreteDensity {
        std::vector<double> f;  // density w.r.t. the base weights
        double atom_mass = 0.0;
    };

    /// Finite/grid fixed point: bisection on the discrete mass map; when the
    /// discrete threshold fails (grid only), the closed-form atom solution.
    DiscreteDensity solve_discrete_density(const std::vector<double>& alpha,
                                           const std::vector<double>& phi, double phi_o,
                                           bool allow_atom) const {
        const std::size_t K = alpha.size();
        DiscreteDensity out;
        out.f.resize(K);

        const bool lambda0 = mode_ == ObjectiveMode::Lambda0;
        const double w_max = std::exp(-phi_o);
        auto mass_at = [&](double theta) {
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double denom = lambda0
                                         ? 1.0 + c_ - std::exp(-phi[k]) / theta
                                         : phi[k] + c_ - theta;
                s += alpha[k] * (c_ / denom);
            }
            return s;
        };

        double threshold_sum = 0.0;
        bool infinite_sum = false;
        for (std::size_t k = 0; k < K; ++k) {
            const double dphi = phi[k] - phi_o;
            if (dphi <= 0.0) {
                infinite_sum = true;
                break;
            }
            threshold_sum += alpha[k] * (lambda0 ? 1.0 / -std::expm1(-dphi) : 1.0 / dphi);
        }
        const double threshold = lambda0 ? (1.0 + c_) / c_ : 1.0 / c_;
        const bool density_regime = infinite_sum || threshold_sum >= threshold;

        if (density_regime) {
            const double theta =
                lambda0 ? detail::bisect_unit_mass(mass_at, w_max / (1.0 + c_), w_max, false)
                        : detail::bisect_unit_mass(mass_at, phi_o, phi_o + c_, true);
            for (std::size_t k = 0; k < K; ++k) {
                const double denom = lambda0 ? 1.0 + c_ - std::exp(-phi[k]) / theta
                                             : phi[k] + c_ - theta;
                out.f[k] = c_ / denom;
            }
            return out;
        }
        if (!allow_atom)
            throw std::logic_error("objective optimum: atom regime on a finite base");
        double beta = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double dphi = phi[k] - phi_o;
            out.f[k] = lambda0 ? c_ / ((1.0 + c_) * -std::expm1(-dphi)) : c_ / dphi;
            beta += alpha[k] * out.f[k];
        }
        out.atom_mass = 1.0 - beta;
        return out;
    }

    ObjectiveMode mode_;
    double c_;
    SpaceSpec space_;
    const PhiSpec* phi_;
    std::vector<double> base_weights_;  // finite: base pmf; grid: cell width each
    std::vector<double> phi_values_;    // finite: phi per label; grid: cell averages
};

/// One-shot objective evaluation (see ObjectiveEvaluator).
inline double objective_f(const MeasureRepr& q, const FitnessSpec& fit, const MeasureRepr& base,
                          double c, ObjectiveMode mode) {
    return ObjectiveEvaluator(fit, base, c, mode)(q);
}

// ── standalone propositions ─────────────────────────────────────────────────

/// Residuals |<exp(-phi/m), q>^m - exp(-<phi,q>)| for a list of powers m.
struct PowerProductRow {
    double m;
    double residual;
};

inline std::vector<PowerProductRow> power_product_residuals(const PhiSpec& phi,
                                                            const MeasureRepr& q,
                                                            std::span<const double> m_list) {
    // exact cell averages keep the grid-measure inner products consistent
    std::vector<double> phi_avg;
    if (q.space.is_interval() && !q.density.empty())
        phi_avg = cell_averages([&](double x) { return phi(x); }, q.space.grid_cells,
                                phi.minimizer());

    const double mean_phi = [&] {
        if (phi_avg.empty()) return q.expectation([&](double x) { return phi(x); });
        return q.expectation_cell_averages(phi_avg, [&](double x) { return phi(x); });
    }();

    std::vector<PowerProductRow> rows;
    rows.reserve(m_list.size());
    for (double m : m_list) {
        // <exp(-phi/m), q>; the cell average of exp(-phi/m) is approximated
        // through the cell average of phi, exact in the limit of smooth phi
        double inner_exp;
        if (phi_avg.empty()) {
            inner_exp = q.expectation([&](double x) { return std::exp(-phi(x) / m); });
        } else {
            std::vector<double> favg(phi_avg.size());
            for (std::size_t i = 0; i < favg.size(); ++i) favg[i] = std::exp(-phi_avg[i] / m);
            inner_exp =
                q.expectation_cell_averages(favg, [&](double x) { return std::exp(-phi(x) / m); });
        }
        const double lhs = std::exp(m * std::log(inner_exp));
        rows.push_back({m, std::fabs(lhs - std::exp(-mean_phi))});
    }
    return rows;
}

/// Numerical maximum of (1+x)(1+1/x)^x a^x (1-a) over x >= 0, a in [0,1].
struct ElementaryMaxResult {
    double max_value;
    double at_x;
    double at_alpha;
};

namespace detail {

inline double elementary_surface(double x, double alpha) {
    if (alpha <= 0.0) return 0.0;
    if (alpha >= 1.0) return 0.0;
    if (x == 0.0) return 1.0 - alpha;  // limit value at x -> 0
    const double log_u = std::log1p(x) + x * std::log1p(1.0 / x) + x * std::log(alpha) +
                         std::log1p(-alpha);
    return std::exp(log_u);
}

}  // namespace detail

/// Value along the ridge x = a/(1-a), which attains the maximum for fixed a.
inline double elementary_max_ridge_value(double alpha) {
    return detail::elementary_surface(alpha / (1.0 - alpha), alpha);
}

inline ElementaryMaxResult elementary_max_bound(int grid = 2000) {
    ElementaryMaxResult best{0.0, 0.0, 0.0};
    for (int i = 1; i < grid; ++i) {
        const double alpha = static_cast<double>(i) / static_cast<double>(grid);
        // golden-section refinement in t = ln x; the surface is unimodal in x
        double lo = -30.0, hi = 30.0;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
        double f1 = detail::elementary_surface(std::exp(m1), alpha);
        double f2 = detail::elementary_surface(std::exp(m2), alpha);
        for (int it = 0; it < 80; ++it) {
            if (f1 < f2) {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + gr * (hi - lo);
                f2 = detail::elementary_surface(std::exp(m2), alpha);
            } else {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - gr * (hi - lo);
                f1 = detail::elementary_surface(std::exp(m1), alpha);
            }
        }
        const double x = std::exp(0.5 * (m1 + m2));
        const double v = detail::elementary_surface(x, alpha);
        if (v > best.max_value) best = {v, x, alpha};
    }
    // boundary alpha values contribute 0 and need no scan
    return best;
}

}  // namespace moran
