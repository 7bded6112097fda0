#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran/chain.hpp"
#include "moran/verify.hpp"

using namespace moran;

TEST_CASE("exact stationary counts: hand evaluation at K=2, alpha=(1,1), n=2") {
    // multinomial * (1)_{n1} (1)_{n2} / (2)_2 gives (1/3, 1/3, 1/3):
    // (2,0): 1 * 1*2 / (2*3) = 1/3, (1,1): 2 * 1*1 / 6 = 1/3, (0,2): 1/3
    const auto space = SpaceSpec::finite(2);
    FitnessSpec neutral(PhiSpec::zero_on(space), 0.0);
    const auto law = exact_stationary_counts(space, std::vector<double>{1.0, 1.0}, neutral, 2);
    REQUIRE(law.size() == 3);
    for (double p : law.prob) CHECK(p == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("stationary counts are invariant under rescaling the fitness") {
    const auto space = SpaceSpec::finite(3);
    const std::vector<double> alpha{1.0, 2.0, 0.7};
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.5, 1.0}), 0.0);
    // adding a constant to phi multiplies every weight by the same factor
    FitnessSpec shifted(PhiSpec::finite_table({0.8, 1.3, 1.8}), 0.0);
    const auto a = exact_stationary_counts(space, alpha, fit, 6);
    const auto b = exact_stationary_counts(space, alpha, shifted, 6);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.prob[i] == Catch::Approx(b.prob[i]).margin(1e-12));
}

TEST_CASE("stationary counts sum to one at K=3, n=10") {
    const auto space = SpaceSpec::finite(3);
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.5, 1.0}), 0.0);
    const auto law = exact_stationary_counts(space, std::vector<double>{1.0, 2.0, 3.0}, fit, 10);
    double total = 0.0;
    for (double p : law.prob) total += p;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("mixture stationary law: reductions and a brute-force check") {
    const auto space = SpaceSpec::finite(2);
    FitnessSpec neutral(PhiSpec::zero_on(space), 0.0);
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.7}), 0.0);

    // w == 1 reduces to the breeding law
    MixturePrior mix({0.3, 0.7}, {MeasureRepr::finite_pmf({0.8, 0.2}),
                                  MeasureRepr::finite_pmf({0.25, 0.75})});
    const auto breeding = prior_exact_law(mix, 4);
    const auto neutral_stat = exact_stationary_mixture(space, mix, neutral, 4);
    for (std::size_t i = 0; i < breeding.size(); ++i)
        CHECK(neutral_stat.prob[i] == Catch::Approx(breeding.prob[i]).margin(1e-13));

    // single component: the tilted iid law prod (q(k) w(k))^{n_k}
    MixturePrior single({1.0}, {MeasureRepr::finite_pmf({0.4, 0.6})});
    const auto tilted = exact_stationary_mixture(space, single, fit, 2);
    const double w1 = std::exp(-0.7);
    const double z = 0.4 * 0.4 + 2 * 0.4 * 0.6 * w1 + 0.6 * 0.6 * w1 * w1;
    CHECK(tilted.prob[tilted.index_of(std::vector<std::uint32_t>{2, 0})] ==
          Catch::Approx(0.16 / z).epsilon(1e-12));
    CHECK(tilted.prob[tilted.index_of(std::vector<std::uint32_t>{1, 1})] ==
          Catch::Approx(2 * 0.24 * w1 / z).epsilon(1e-12));

    // two components, n = 2: brute force over the two-point prior
    const auto two = exact_stationary_mixture(space, mix, fit, 2);
    auto brute = [&](int n0) {
        auto term = [&](const std::vector<double>& q) {
            const double coeff = n0 == 1 ? 2.0 : 1.0;
            return coeff * std::pow(q[0] * 1.0, n0) * std::pow(q[1] * w1, 2 - n0);
        };
        return 0.3 * term({0.8, 0.2}) + 0.7 * term({0.25, 0.75});
    };
    const double z2 = brute(0) + brute(1) + brute(2);
    CHECK(two.prob[two.index_of(std::vector<std::uint32_t>{2, 0})] ==
          Catch::Approx(brute(2) / z2).epsilon(1e-12));
    CHECK(two.prob[two.index_of(std::vector<std::uint32_t>{0, 2})] ==
          Catch::Approx(brute(0) / z2).epsilon(1e-12));
}

TEST_CASE("run_chain is reproducible and respects the config") {
    PriorSpec prior = DpPrior(1.0, MeasureRepr::finite_pmf({0.5, 0.5}));
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.4}), 0.0);
    ChainConfig cfg;
    cfg.n = 4;
    cfg.steps = 5000;
    cfg.burn_in = 500;
    cfg.thin = 9;
    cfg.seed = 99;
    cfg.replicas = 3;
    const auto a = run_chain(cfg, prior, fit);
    const auto b = run_chain(cfg, prior, fit);
    REQUIRE(a.populations.size() == b.populations.size());
    REQUIRE(a.populations.size() == cfg.replicas * cfg.samples_per_replica());
    CHECK(a.populations == b.populations);

    // serial and parallel replica execution agree
    auto serial_cfg = cfg;
    serial_cfg.threads = 1;
    CHECK(run_chain(serial_cfg, prior, fit).populations == a.populations);

    ChainConfig bad = cfg;
    bad.burn_in = cfg.steps;
    CHECK_THROWS(run_chain(bad, prior, fit));
}

TEST_CASE("neutral chain reproduces the pure breeding law (chi-square)") {
    // w == 1, K = 2, DP base (1/2,1/2) with fixed mass 2: stationary law is the
    // Dirichlet-multinomial with alpha = (1,1)
    const auto space = SpaceSpec::finite(2);
    PriorSpec prior = DpPrior(2.0, MeasureRepr::finite_pmf({0.5, 0.5}), /*fixed=*/true);
    FitnessSpec fit(PhiSpec::zero_on(space), 0.0);

    const bool ok = with_reseed_retries(3, 1001, [&](std::uint64_t seed) {
        ChainConfig cfg;
        cfg.n = 2;
        cfg.thin = 40;
        cfg.burn_in = 1000;
        cfg.steps = cfg.burn_in + 100000 * cfg.thin;
        cfg.seed = seed;
        const auto rep = mcmc_vs_exact(cfg, prior, fit);
        return rep.chi2_pvalue > 0.01;
    });
    CHECK(ok);
}

TEST_CASE("n = 1 stationary law is the tilted single-draw predictive") {
    const auto space = SpaceSpec::finite(3);
    const std::vector<double> alpha{0.5, 1.0, 1.5};
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.3, 0.9}), 0.0);
    const auto law = exact_stationary_counts(space, alpha, fit, 1);
    // by hand: pi(k) proportional to alpha_k w(k)
    double z = 0.0;
    std::vector<double> expect(3);
    for (int k = 0; k < 3; ++k)
        z += (expect[static_cast<std::size_t>(k)] =
                  alpha[static_cast<std::size_t>(k)] * std::exp(-fit.phi(k)));
    for (int k = 0; k < 3; ++k) {
        std::vector<std::uint32_t> c(3, 0);
        c[static_cast<std::size_t>(k)] = 1;
        CHECK(law.prob[law.index_of(c)] ==
              Catch::Approx(expect[static_cast<std::size_t>(k)] / z).epsilon(1e-12));
    }

    // and the chain agrees (three-sigma multinomial bands)
    PriorSpec prior = DpPrior(3.0, MeasureRepr::finite_pmf({0.5 / 3, 1.0 / 3, 1.5 / 3}),
                              /*fixed=*/true);
    ChainConfig cfg;
    cfg.n = 1;
    cfg.thin = 10;
    cfg.burn_in = 100;
    cfg.steps = cfg.burn_in + 50000 * cfg.thin;
    cfg.seed = 4242;
    const auto ss = run_chain(cfg, prior, fit);
    std::vector<double> freq(3, 0.0);
    for (const auto& p : ss.populations) freq[static_cast<std::size_t>(as_label(p[0]))] += 1.0;
    const double total = static_cast<double>(ss.populations.size());
    for (int k = 0; k < 3; ++k) {
        const double p = expect[static_cast<std::size_t>(k)] / z;
        CHECK(std::fabs(freq[static_cast<std::size_t>(k)] / total - p) <=
              4.0 * std::sqrt(p * (1 - p) / total));
    }
}

TEST_CASE("chain frequencies converge to the exact mixture stationary law") {
    // overlapping components keep the posterior mobile, so the chain itself
    // (not the factorized sampler) is compared against the exact law here
    const auto space = SpaceSpec::finite(2);
    MixturePrior mix({0.5, 0.5}, {MeasureRepr::finite_pmf({0.7, 0.3}),
                                  MeasureRepr::finite_pmf({0.4, 0.6})});
    PriorSpec prior = mix;
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.5}), 0.0);
    const int n = 4;
    const auto law = exact_stationary_mixture(space, mix, fit, n);

    const bool ok = with_reseed_retries(3, 909, [&](std::uint64_t seed) {
        ChainConfig cfg;
        cfg.n = n;
        cfg.thin = 40;
        cfg.burn_in = 5000;
        cfg.steps = cfg.burn_in + 100000 * cfg.thin;
        cfg.seed = seed;
        const auto ss = run_chain(cfg, prior, fit);
        const auto freq = counts_histogram(ss, law);
        double tv = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) tv += std::fabs(freq[i] - law.prob[i]);
        return 0.5 * tv < 0.02;
    });
    CHECK(ok);
}

TEST_CASE("stationarity under the exact matrix ties the chain to its target") {
    const auto space = SpaceSpec::finite(2);
    PriorSpec prior = DpPrior(0.7, MeasureRepr::finite_pmf({0.35, 0.65}));
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.8}), 0.0);
    for (auto kernel : {KernelKind::Tournament, KernelKind::InverseFitness}) {
        const auto mat = exact_transition_matrix(kernel, space, 3, prior, fit);
        const auto pi = exact_stationary_tuples(space, prior, fit, 3);
        const auto next = mat.apply_left(pi);
        for (std::size_t s = 0; s < pi.size(); ++s)
            CHECK(std::fabs(next[s] - pi[s]) < 1e-12);
    }
}

TEST_CASE("qn_samples maps populations to empirical measures") {
    SampleSet ss;
    ss.space = SpaceSpec::unit_interval(64);
    ss.cfg.n = 3;
    ss.populations = {{0.2, 0.2, 0.8}, {0.5, 0.5, 0.5}};
    const auto qs = qn_samples(ss);
    REQUIRE(qs.size() == 2);
    CHECK(qs[0].mass_at(0.2) == Catch::Approx(2.0 / 3.0));
    CHECK(qs[1].mass_at(0.5) == 1.0);
}
