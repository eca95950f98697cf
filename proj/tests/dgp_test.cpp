#include <doctest.h>

#include <cmath>

#include "adaptrial/dgp.hpp"
#include "adaptrial/errors.hpp"
#include "adaptrial/harness.hpp"
#include "helpers.hpp"

using namespace adaptrial;

TEST_CASE("benchmark scenario: conditional means and variances") {
    const Scenario sc = benchmark_scenario();
    // direct evaluation of the stated formulas
    const double expit1 = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(sc.qbar0(1, 0.0) == doctest::Approx(25.0 + 10.0 * expit1).epsilon(1e-15));
    CHECK(sc.qbar0(1, 0.0) == doctest::Approx(32.3106).epsilon(1e-4));
    CHECK(sc.var0(0, 3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sc.var0(1, 1.0) == doctest::Approx(4.0).epsilon(1e-15));

    // variances strictly positive and >= 1 on the support; polynomial
    // coefficients agree with the closures
    for (double w : testutil::grid(0, 3, 61)) {
        CHECK(sc.var0(1, w) >= 1.0 - 1e-12);
        CHECK(sc.var0(0, w) >= 1.0 - 1e-12);
        CHECK(polyval(sc.var_coef1, w) == doctest::Approx(sc.var0(1, w)).epsilon(1e-12));
        CHECK(polyval(sc.var_coef0, w) == doctest::Approx(sc.var0(0, w)).epsilon(1e-12));
    }
}

TEST_CASE("sample_outcome") {
    const Scenario sc = benchmark_scenario();

    SUBCASE("deterministic given seed") {
        Rng r1(42), r2(42);
        CHECK(sample_outcome(sc, 1, 1.0, r1) == sample_outcome(sc, 1, 1.0, r2));
    }

    SUBCASE("zero noise returns the conditional mean exactly") {
        Scenario degen = degenerate_scenario([](int a, double w) { return a + 2 * w; }, 0.0);
        Rng rng(5);
        CHECK(sample_outcome(degen, 1, 1.5, rng) == 1.0 + 3.0);
    }

    SUBCASE("support check") {
        Rng rng(5);
        CHECK_THROWS_AS(sample_outcome(sc, 1, 3.5, rng), UsageError);
    }

    SUBCASE("covariate draws stay in the support") {
        Rng rng(4);
        for (int i = 0; i < 1000; ++i) {
            const double w = sc.sample_w(rng);
            CHECK(w >= sc.w_lo);
            CHECK(w <= sc.w_hi);
        }
    }

    SUBCASE("law of large numbers at (a=1, w=1)") {
        Rng rng(99);
        const int n = 100000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = sample_outcome(sc, 1, 1.0, rng);
            sum += y;
            sum2 += y * y;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        CHECK(std::abs(mean - sc.qbar0(1, 1.0)) <= 4.0 * std::sqrt(4.0 / n));
        CHECK(std::abs(var - 4.0) / 4.0 <= 0.05);
    }
}

TEST_CASE("true_ate") {
    SUBCASE("zero effect") {
        Scenario sc = testutil::poly_scenario({2, 1}, {2, 1}, {1}, {1});
        CHECK(true_ate(sc) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("constant effect") {
        Scenario sc = null_effect_scenario(1.75);
        CHECK(true_ate(sc) == doctest::Approx(1.75).epsilon(1e-10));
    }
    SUBCASE("benchmark value matches the closed form and a Monte Carlo oracle") {
        const Scenario sc = benchmark_scenario();
        const double by_quadrature = true_ate(sc);
        CHECK(by_quadrature ==
              doctest::Approx(testutil::appendix_b_true_ate_closed_form()).epsilon(1e-10));

        Rng rng(1234);
        const int n = 1000000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = sc.sample_w(rng);
            const double c = sc.qbar0(1, w) - sc.qbar0(0, w);
            sum += c;
            sum2 += c * c;
        }
        const double mc_mean = sum / n;
        const double mc_se = std::sqrt((sum2 / n - mc_mean * mc_mean) / n);
        CHECK(std::abs(by_quadrature - mc_mean) <= 3.0 * mc_se);
    }
    SUBCASE("invariant to adding a shared function of w") {
        Scenario sc = benchmark_scenario();
        Scenario shifted = sc;
        auto base = sc.qbar0;
        shifted.qbar0 = [base](int a, double w) { return base(a, w) + 4.0 * std::sin(w); };
        CHECK(true_ate(shifted) == doctest::Approx(true_ate(sc)).epsilon(1e-10));
    }
}

TEST_CASE("oracle_neyman") {
    SUBCASE("equal variances give 0.5") {
        Scenario sc = testutil::poly_scenario({1}, {0}, {4.0}, {4.0});
        CHECK(oracle_neyman(sc, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("3:1 standard deviations give 0.75") {
        Scenario sc = testutil::poly_scenario({1}, {0}, {9.0}, {1.0});
        CHECK(oracle_neyman(sc, 2.0) == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("benchmark at w=3") {
        const Scenario sc = benchmark_scenario();
        const double s1 = std::sqrt(82.0);
        CHECK(oracle_neyman(sc, 3.0) == doctest::Approx(s1 / (s1 + 1.0)).epsilon(1e-15));
        CHECK(oracle_neyman(sc, 3.0) == doctest::Approx(0.9005).epsilon(1e-4));
    }
    SUBCASE("arm probabilities are complementary") {
        const Scenario sc = benchmark_scenario();
        for (double w : testutil::grid(0, 3, 21)) {
            const double p1 = oracle_neyman(sc, w);
            const double p0 = std::sqrt(sc.var0(0, w)) /
                              (std::sqrt(sc.var0(1, w)) + std::sqrt(sc.var0(0, w)));
            CHECK(p1 + p0 == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("multisite scenario") {
    CHECK_THROWS_AS(multisite_scenario(2, {DesignFunction::constant(0.5)}, {0.5, 0.5}),
                    UsageError);
    CHECK_THROWS_AS(
        multisite_scenario(
            2, {DesignFunction::constant(0.5), DesignFunction::constant(0.5)}, {0.7, 0.7}),
        UsageError);

    auto run_multisite = [](std::vector<double> site_designs, std::vector<double> site_probs,
                            int n, std::uint64_t seed) {
        PolicyConfig pc;
        pc.kind = PolicyKind::Multisite;
        for (double p : site_designs) pc.site_designs.push_back(DesignFunction::constant(p));
        pc.site_probs = std::move(site_probs);
        return run_experiment(benchmark_scenario(), pc, n, seed);
    };

    SUBCASE("single site behaves like its constant design") {
        const Trajectory traj = run_multisite({0.5}, {1.0}, 400, 7);
        for (const auto& d : traj.designs()) CHECK(d.eval(1.0) == 0.5);
        CHECK(traj.max_consistency_gap() <= 1e-12);
    }

    SUBCASE("degenerate site probabilities pick one site") {
        const Trajectory traj = run_multisite({0.2, 0.8}, {1.0, 0.0}, 300, 11);
        for (const auto& d : traj.designs()) CHECK(d.eval(1.0) == 0.2);
    }

    SUBCASE("average design converges to the site mixture") {
        const int n = 4000;
        const Trajectory traj = run_multisite({0.2, 0.8}, {0.5, 0.5}, n, 13);
        // each site design contributes exactly 0.2 or 0.8; the mixture mean is 0.5
        CHECK(std::abs(traj.gbar(1, 1.0) - 0.5) <= 4.0 * 0.3 / std::sqrt(double(n)));
    }
}
