#include <doctest.h>

#include <cmath>

#include "adaptrial/quadrature.hpp"

using adaptrial::integrate;

TEST_CASE("polynomials are exact") {
    CHECK(integrate([](double x) { return x * x * x; }, 0, 1) ==
          doctest::Approx(0.25).epsilon(1e-14));
    CHECK(integrate([](double x) { return 3 * x * x - 2 * x + 1; }, -1, 2) ==
          doctest::Approx(9.0 - 3.0 + 3.0).epsilon(1e-14));
}

TEST_CASE("smooth transcendentals against closed forms") {
    CHECK(integrate([](double x) { return std::exp(x); }, 0, 1, 1e-12) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
    // int_0^3 expit(2w+1) dw = (log(1+e^7) - log(1+e)) / 2
    const double closed = (std::log1p(std::exp(7.0)) - std::log1p(std::exp(1.0))) / 2.0;
    CHECK(integrate([](double w) { return 1.0 / (1.0 + std::exp(-(2 * w + 1))); }, 0, 3,
                    1e-10) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("sharply peaked integrand forces subdivision") {
    const double s = 1e-2;
    auto f = [s](double x) { return 1.0 / (s * s + (x - 0.5) * (x - 0.5)); };
    const double closed = (std::atan(0.5 / s) - std::atan(-0.5 / s)) / s;
    CHECK(integrate(f, 0, 1, 1e-9) == doctest::Approx(closed).epsilon(1e-11));
}

TEST_CASE("degenerate interval") { CHECK(integrate([](double) { return 1.0; }, 2, 2) == 0.0); }
