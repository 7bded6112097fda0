#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran/measure.hpp"
#include "moran/rng.hpp"

using namespace moran;

namespace {

/// Random measure on the interval: a few atoms plus a rough density.
MeasureRepr random_interval_measure(RngStream& rng, int cells, int atoms) {
    std::vector<std::pair<double, double>> at;
    for (int i = 0; i < atoms; ++i) at.emplace_back(rng.uniform01(), rng.uniform01());
    std::vector<double> dens(static_cast<std::size_t>(cells));
    for (double& d : dens) d = 0.05 + rng.uniform01();
    MeasureRepr m;
    m.space = SpaceSpec::unit_interval(cells);
    m.atoms = std::move(at);
    m.density = std::move(dens);
    m.sort_atoms();
    m.normalize();
    return m;
}

}  // namespace

TEST_CASE("empirical measures count multiplicities exactly") {
    const auto space = SpaceSpec::unit_interval(64);
    std::vector<Genotype> pop{0.2, 0.2, 0.8};
    const auto m = empirical_measure(pop, space);
    REQUIRE(m.atoms.size() == 2);
    CHECK(m.atoms[0].first == 0.2);
    CHECK(m.atoms[0].second == Catch::Approx(2.0 / 3.0));
    CHECK(m.atoms[1].second == Catch::Approx(1.0 / 3.0));

    // singleton population gives a point mass
    std::vector<Genotype> one{0.42};
    const auto d = empirical_measure(one, space);
    REQUIRE(d.atoms.size() == 1);
    CHECK(d.atoms[0].second == 1.0);

    // finite space counts to a pmf
    const auto fin = SpaceSpec::finite(3);
    std::vector<Genotype> fpop{0, 1, 1, 2};
    const auto pmf = empirical_measure(fpop, fin).to_pmf();
    CHECK(pmf[0] == Catch::Approx(0.25));
    CHECK(pmf[1] == Catch::Approx(0.5));
    CHECK(pmf[2] == Catch::Approx(0.25));

    CHECK_THROWS(empirical_measure(std::vector<Genotype>{}, space));
}

TEST_CASE("W1 between a point mass and the uniform law") {
    // closed-form CDF integral: int_0^xo x dx + int_xo^1 (1-x) dx
    const double xo = 0.3;
    const double expected = 0.5 * xo * xo + 0.5 * (1.0 - xo) * (1.0 - xo);
    REQUIRE(expected == Catch::Approx(0.29));

    const auto space = SpaceSpec::unit_interval(4096);
    const auto delta = MeasureRepr::point_mass(space, xo);
    const auto unif = MeasureRepr::uniform_interval(4096);
    CHECK(wasserstein1(delta, unif) == Catch::Approx(expected).margin(1e-12));
    CHECK(ks_statistic(delta, unif) == Catch::Approx(0.7).margin(1e-12));
}

TEST_CASE("W1 between point masses is their separation") {
    const auto space = SpaceSpec::unit_interval(100);
    const auto a = MeasureRepr::point_mass(space, 0.2);
    const auto b = MeasureRepr::point_mass(space, 0.7);
    CHECK(wasserstein1(a, b) == Catch::Approx(0.5).margin(1e-15));
    CHECK(ks_statistic(a, b) == 1.0);
    CHECK(tv_distance(a, b) == 1.0);
    // atoms on cell boundaries behave the same
    const auto c = MeasureRepr::point_mass(space, 0.25);
    CHECK(wasserstein1(a, c) == Catch::Approx(0.05).margin(1e-15));
}

TEST_CASE("distances vanish only at identity") {
    RngStream rng(2024);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_interval_measure(rng, 128, 2);
        const auto b = random_interval_measure(rng, 128, 2);
        CHECK(tv_distance(a, a) == 0.0);
        CHECK(wasserstein1(a, a) == 0.0);
        CHECK(ks_statistic(a, a) == 0.0);
        CHECK(relative_entropy(a, a) == 0.0);
        CHECK(tv_distance(a, b) > 0.0);
        CHECK(tv_distance(a, b) <= 1.0);
        CHECK(tv_distance(a, b) == Catch::Approx(tv_distance(b, a)));
        CHECK(wasserstein1(a, b) <= ks_statistic(a, b) + 1e-15);  // both from one CDF walk
    }
}

TEST_CASE("tv on disjoint supports is 1") {
    const auto a = MeasureRepr::finite_pmf({1.0, 0.0});
    const auto b = MeasureRepr::finite_pmf({0.0, 1.0});
    CHECK(tv_distance(a, b) == Catch::Approx(1.0));
}

TEST_CASE("relative entropy handles support violations and hand values") {
    const auto a = MeasureRepr::finite_pmf({0.5, 0.5});
    const auto b = MeasureRepr::finite_pmf({1.0, 0.0});
    CHECK(relative_entropy(a, b) == kPosInf);
    CHECK(relative_entropy(b, a) == Catch::Approx(std::log(2.0)));

    // two-term hand sum: 1/2 ln 2 + 1/2 ln(2/3)
    const auto c = MeasureRepr::finite_pmf({0.25, 0.75});
    const double hand = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
    CHECK(relative_entropy(a, c) == Catch::Approx(hand).epsilon(1e-12));

    // atom against pure density is singular
    const auto space = SpaceSpec::unit_interval(64);
    const auto delta = MeasureRepr::point_mass(space, 0.25);
    const auto unif = MeasureRepr::uniform_interval(64);
    CHECK(relative_entropy(delta, unif) == kPosInf);
}

TEST_CASE("relative entropy is nonnegative on random pairs") {
    RngStream rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> p(4), q(4);
        double sp = 0, sq = 0;
        for (int k = 0; k < 4; ++k) {
            p[k] = 0.01 + rng.uniform01();
            q[k] = 0.01 + rng.uniform01();
            sp += p[k];
            sq += q[k];
        }
        for (int k = 0; k < 4; ++k) {
            p[k] /= sp;
            q[k] /= sq;
        }
        const auto a = MeasureRepr::finite_pmf(p);
        const auto b = MeasureRepr::finite_pmf(q);
        const double d = relative_entropy(a, b);
        CHECK(d >= 0.0);
        // Pinsker-flavoured sanity: identical measures only at zero
        if (d == 0.0) CHECK(tv_distance(a, b) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("measure invariants are enforced") {
    CHECK_THROWS(MeasureRepr::finite_pmf({0.5, 0.6}));  // mass 1.1
    CHECK_THROWS(MeasureRepr::finite_pmf({1.2, -0.2}));
    CHECK_THROWS(MeasureRepr::interval(16, std::vector<double>(16, 1.0), {{0.5, 0.25}}));
    CHECK_NOTHROW(MeasureRepr::uniform_interval(16).validate());
    // duplicate atom locations rejected
    MeasureRepr m;
    m.space = SpaceSpec::unit_interval(16);
    m.atoms = {{0.5, 0.5}, {0.5, 0.5}};
    CHECK_THROWS(m.validate());
    // mismatched spaces refuse to compare
    CHECK_THROWS(tv_distance(MeasureRepr::finite_pmf({1.0}),
                             MeasureRepr::finite_pmf({0.5, 0.5})));
    CHECK_THROWS(wasserstein1(MeasureRepr::finite_pmf({1.0}),
                              MeasureRepr::finite_pmf({1.0})));
}
