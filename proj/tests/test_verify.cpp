#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran/verify.hpp"

using namespace moran;

TEST_CASE("detailed balance holds to machine precision on small instances") {
    const auto space = SpaceSpec::finite(2);
    PriorSpec dp = DpPrior(0.5, MeasureRepr::finite_pmf({0.5, 0.5}));  // m = c*n at lambda 0
    PriorSpec mix = MixturePrior({0.4, 0.6}, {MeasureRepr::finite_pmf({0.9, 0.1}),
                                              MeasureRepr::finite_pmf({0.2, 0.8})});
    FitnessSpec neutral(PhiSpec::zero_on(space), 0.0);
    FitnessSpec generic(PhiSpec::finite_table({0.0, 0.8}), 0.0);

    for (auto kernel : {KernelKind::Tournament, KernelKind::InverseFitness}) {
        CHECK(detailed_balance_residual(kernel, space, 2, dp, generic) < 1e-12);
        CHECK(detailed_balance_residual(kernel, space, 2, dp, neutral) < 1e-12);
        CHECK(detailed_balance_residual(kernel, space, 2, mix, generic) < 1e-12);
    }

    // K = 3, n = 3, inverse kernel, mixture prior
    const auto space3 = SpaceSpec::finite(3);
    PriorSpec mix3 = MixturePrior({0.5, 0.5}, {MeasureRepr::finite_pmf({0.6, 0.3, 0.1}),
                                               MeasureRepr::finite_pmf({0.1, 0.2, 0.7})});
    FitnessSpec gen3(PhiSpec::finite_table({0.0, 0.4, 1.2}), 0.0);
    CHECK(detailed_balance_residual(KernelKind::InverseFitness, space3, 3, mix3, gen3) < 1e-12);
}

TEST_CASE("neutral fitness makes the breeding law stationary") {
    const auto space = SpaceSpec::finite(2);
    PriorSpec mix = MixturePrior({0.5, 0.5}, {MeasureRepr::finite_pmf({0.7, 0.3}),
                                              MeasureRepr::finite_pmf({0.2, 0.8})});
    FitnessSpec neutral(PhiSpec::zero_on(space), 0.0);
    CHECK(detailed_balance_residual(KernelKind::Tournament, space, 3, mix, neutral) < 1e-12);
    // the stationary tuple law equals the breeding tuple law when w == 1
    const auto pi = exact_stationary_tuples(space, mix, neutral, 2);
    // P(x1=0, x2=0) = 0.5*0.7^2 + 0.5*0.2^2
    CHECK(pi[0] == Catch::Approx(0.5 * 0.49 + 0.5 * 0.04).epsilon(1e-12));
}

TEST_CASE("chi-square helper behaves at the identity and under pooling") {
    std::vector<double> expected{50, 30, 15, 3, 2};  // last two pooled
    const auto same = chi_square_test(expected, expected);
    CHECK(same.chi2 == Catch::Approx(0.0).margin(1e-12));
    CHECK(same.pvalue == Catch::Approx(1.0));
    CHECK(same.dof == 3);  // 3 kept + 1 pooled - 1

    std::vector<double> shifted{55, 28, 12, 4, 1};
    const auto off = chi_square_test(shifted, expected);
    CHECK(off.chi2 > 0.0);
    CHECK(off.pvalue < 1.0);
    CHECK(off.pvalue > 0.0);
}

TEST_CASE("mcmc_vs_exact reports deterministic results per seed") {
    PriorSpec prior = DpPrior(1.0, MeasureRepr::finite_pmf({0.5, 0.5}));
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.5}), 0.0);
    ChainConfig cfg;
    cfg.n = 3;
    cfg.thin = 6;
    cfg.burn_in = 500;
    cfg.steps = cfg.burn_in + 20000 * cfg.thin;
    cfg.seed = 7;
    const auto a = mcmc_vs_exact(cfg, prior, fit);
    const auto b = mcmc_vs_exact(cfg, prior, fit);
    CHECK(a.tv == b.tv);
    CHECK(a.chi2 == b.chi2);
    CHECK(a.tv < 0.05);
    CHECK(a.samples == 20000);
}

TEST_CASE("exact mixture sampler matches the stationary counts law") {
    // finite-space cross-check of the factorized sampler against the exact law
    const auto space = SpaceSpec::finite(2);
    MixturePrior mix({0.5, 0.5}, {MeasureRepr::finite_pmf({0.9, 0.1}),
                                  MeasureRepr::finite_pmf({0.2, 0.8})});
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.6}), 0.0);
    const int n = 4;
    const auto law = exact_stationary_mixture(space, mix, fit, n);
    const auto ss = sample_mixture_stationary_exact(mix, fit, n, 200000, 99);
    const auto freq = counts_histogram(ss, law);
    double tv = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) tv += std::fabs(freq[i] - law.prob[i]);
    CHECK(0.5 * tv < 0.01);
}

TEST_CASE("sweep rows trend downward for the fixed-prior phases") {
    PriorSpec mix = MixturePrior({0.5, 0.5}, {MeasureRepr::finite_pmf({0.85, 0.15}),
                                              MeasureRepr::finite_pmf({0.25, 0.75})});
    SweepOptions opt;
    opt.lambdas = {2.0};
    opt.ns = {4, 10, 24};
    opt.metric = SweepMetric::TV;
    opt.samples_per_cell = 30000;
    opt.thin_factor = 3;
    opt.seed = 11;
    const auto phi = PhiSpec::finite_table({0.0, 2.0});
    const auto cells = sweep_convergence(mix, phi, opt);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].target_regime == "lambda_gt1");
    CHECK(cells[2].value < cells[0].value);

    // reproducibility of the whole table
    const auto again = sweep_convergence(mix, phi, opt);
    for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].value == again[i].value);
}

TEST_CASE("interval mixture rows use the factorized sampler and shrink W1") {
    const auto space = SpaceSpec::unit_interval(512);
    MixturePrior mix({0.5, 0.5}, {MeasureRepr::point_mass(space, 0.3),
                                  MeasureRepr::uniform_interval(512)});
    SweepOptions opt;
    opt.lambdas = {0.5};
    opt.ns = {20, 200};
    opt.metric = SweepMetric::W1;
    opt.samples_per_cell = 1500;
    opt.seed = 21;
    const auto cells = sweep_convergence(mix, PhiSpec::power_distance(0.3, 2.0), opt);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].target_regime == "lambda_in_0_1_fixed_prior");
    CHECK(cells[1].value < cells[0].value);
}

TEST_CASE("reseed retry helper stops at the first success") {
    int calls = 0;
    const bool ok = with_reseed_retries(3, 100, [&](std::uint64_t seed) {
        ++calls;
        return seed == 101;  // succeeds on the second attempt
    });
    CHECK(ok);
    CHECK(calls == 2);
    CHECK_FALSE(with_reseed_retries(2, 0, [](std::uint64_t) { return false; }));
}
