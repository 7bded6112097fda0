#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran/fitness.hpp"

using namespace moran;

TEST_CASE("weight_at spot values") {
    const auto space = SpaceSpec::unit_interval(64);
    // phi == 0: weight 1 for any lambda, n, x
    FitnessSpec neutral(PhiSpec::zero_on(space), 1.0);
    CHECK(weight_at(neutral, 5, 0.3) == 1.0);
    CHECK(weight_at(neutral, 500, 0.9) == 1.0);

    // at the minimizer, phi = 0, weight 1
    FitnessSpec quad(PhiSpec::power_distance(0.3, 2.0), 1.0);
    CHECK(weight_at(quad, 100, 0.3) == 1.0);

    // lambda = 0: exp(-|0.8-0.3|^2), cross-checked by direct arithmetic
    FitnessSpec fixed(PhiSpec::power_distance(0.3, 2.0), 0.0);
    const double direct = std::exp(-(0.8 - 0.3) * (0.8 - 0.3));
    CHECK(weight_at(fixed, 3, 0.8) == Catch::Approx(direct).epsilon(1e-15));
    CHECK(weight_at(fixed, 3000, 0.8) == Catch::Approx(direct).epsilon(1e-15));
}

TEST_CASE("weights are in (0, 1] and monotone in phi") {
    FitnessSpec fit(PhiSpec::finite_table({0.0, 0.4, 0.9, 2.0}), 0.5);
    double prev = 2.0;
    for (int k = 0; k < 4; ++k) {
        const double w = weight_at(fit, 10, static_cast<Genotype>(k));
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
        CHECK(w < prev);  // phi strictly increasing across the table
        prev = w;
    }
}

TEST_CASE("weights flatten to 1 as n grows when lambda > 0") {
    FitnessSpec fit(PhiSpec::power_distance(0.25, 1.0), 0.7);
    const double phi_max = fit.phi.max_value();
    for (std::uint64_t n : {2ull, 16ull, 256ull, 65536ull}) {
        for (double x : {0.0, 0.5, 1.0}) {
            const double bound = phi_max / std::pow(static_cast<double>(n), fit.lambda);
            CHECK(std::fabs(weight_at(fit, n, x) - 1.0) <= bound + 1e-15);
        }
    }
}

TEST_CASE("phi families report their minimizers") {
    CHECK(PhiSpec::power_distance(0.3, 0.5).minimizer() == 0.3);
    CHECK(PhiSpec::power_distance(0.3, 0.5).min_value() == 0.0);
    CHECK(PhiSpec::finite_table({0.5, 0.1, 0.7}).minimizer() == 1.0);
    const auto tab = PhiSpec::tabulated_interval({0.4, 0.0, 0.8});
    CHECK(tab.minimizer() == 0.5);
    CHECK(tab(0.25) == Catch::Approx(0.2));  // piecewise-linear interpolation
    CHECK(tab.is_constant() == false);
    CHECK(PhiSpec::zero_on(SpaceSpec::finite(3)).is_constant());
}

TEST_CASE("invalid specifications are rejected") {
    CHECK_THROWS(PhiSpec::power_distance(1.5, 2.0));
    CHECK_THROWS(PhiSpec::power_distance(0.5, 0.0));
    CHECK_THROWS(PhiSpec::finite_table({0.1, -0.2}));
    CHECK_THROWS(FitnessSpec(PhiSpec::power_distance(0.5, 1.0), -0.1));
    CHECK_THROWS(weight_at(FitnessSpec(PhiSpec::power_distance(0.5, 1.0), 1.0), 0, 0.5));
}
