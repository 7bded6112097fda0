#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran/math.hpp"
#include "moran/rng.hpp"

using namespace moran;

TEST_CASE("log_add and log_sum_exp agree with direct sums") {
    CHECK(log_add(std::log(2.0), std::log(3.0)) == Catch::Approx(std::log(5.0)));
    CHECK(log_add(kNegInf, std::log(3.0)) == Catch::Approx(std::log(3.0)));
    std::vector<double> xs{std::log(0.1), std::log(0.2), std::log(0.7)};
    CHECK(log_sum_exp(xs) == Catch::Approx(0.0).margin(1e-14));
    // extreme offsets stay finite
    std::vector<double> big{-1000.0, -1000.0};
    CHECK(log_sum_exp(big) == Catch::Approx(-1000.0 + std::log(2.0)));
}

TEST_CASE("log_pochhammer matches iterated products") {
    // (a)_n = a (a+1) ... (a+n-1), checked against direct multiplication
    for (double a : {0.5, 1.0, 2.5}) {
        for (std::uint64_t n : {0ull, 1ull, 4ull, 9ull}) {
            double direct = 0.0;
            for (std::uint64_t i = 0; i < n; ++i) direct += std::log(a + static_cast<double>(i));
            CHECK(log_pochhammer(a, n) == Catch::Approx(direct).margin(1e-12));
        }
    }
    CHECK(log_multinomial_coefficient(std::vector<std::uint32_t>{2, 1, 1}) ==
          Catch::Approx(std::log(12.0)));
}

TEST_CASE("regularized gamma tail against closed forms") {
    // Q(1, x) = exp(-x)
    CHECK(regularized_gamma_q(1.0, 1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(regularized_gamma_q(1.0, 5.0) == Catch::Approx(std::exp(-5.0)).epsilon(1e-12));
    // Q(1/2, x) = erfc(sqrt(x))
    for (double x : {0.25, 1.0, 4.0})
        CHECK(regularized_gamma_q(0.5, x) ==
              Catch::Approx(std::erfc(std::sqrt(x))).epsilon(1e-12));
    // chi-square: the classic 3.841 critical value at one dof
    CHECK(chi_square_sf(3.841458820694124, 1.0) == Catch::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(0.0, 7.0) == 1.0);
}

TEST_CASE("spearman exact trend p-values") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> down{5, 4, 3, 2, 1};
    std::vector<double> up{1, 2, 3, 4, 5};
    CHECK(spearman_rho(x, down) == Catch::Approx(-1.0));
    // exactly one of the 120 permutations is this anti-monotone
    CHECK(spearman_negative_trend_pvalue(x, down) == Catch::Approx(1.0 / 120.0));
    CHECK(spearman_negative_trend_pvalue(x, up) == Catch::Approx(1.0));
    std::vector<double> noisy{5, 4, 3.5, 3.6, 1};  // one inversion
    CHECK(spearman_negative_trend_pvalue(x, noisy) < 0.05);
}

TEST_CASE("rng streams are reproducible and uniform") {
    RngStream a(1234, 7), b(1234, 7), c(1234, 8);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform01();
        CHECK(u == b.uniform01());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    // distinct streams decouple
    bool all_equal = true;
    for (int i = 0; i < 10; ++i) all_equal &= (a.next_u64() == c.next_u64());
    CHECK_FALSE(all_equal);

    // uniform_index covers {0..n-1} with roughly equal mass
    RngStream r(99);
    std::vector<int> hits(5, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++hits[r.uniform_index(5)];
    for (int h : hits) CHECK(std::fabs(h - draws / 5.0) < 4.0 * std::sqrt(draws * 0.2 * 0.8));

    // categorical respects weights
    std::vector<double> w{1.0, 3.0};
    int ones = 0;
    for (int i = 0; i < draws; ++i) ones += static_cast<int>(r.categorical(w));
    CHECK(std::fabs(ones - 0.75 * draws) < 4.0 * std::sqrt(draws * 0.75 * 0.25));
}
