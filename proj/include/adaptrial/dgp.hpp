#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adaptrial/core.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

// A data-generating scenario: covariate law on [w_lo, w_hi], per-arm
// conditional mean and variance, Gaussian outcome noise. Immutable; safe to
// share across Monte Carlo workers.
struct Scenario {
    std::string name;
    double w_lo = 0.0;
    double w_hi = 3.0;
    std::function<double(int, double)> qbar0;  // (a, w) -> E[Y | A=a, W=w]
    std::function<double(int, double)> var0;   // (a, w) -> Var[Y | A=a, W=w]
    // Polynomial coefficients for var0 when the scenario's variances are
    // polynomial (used by oracle Neyman designs, which must be serializable).
    std::vector<double> var_coef1, var_coef0;

    double sample_w(Rng& rng) const { return rng.uniform(w_lo, w_hi); }
    bool has_polynomial_variance() const { return !var_coef1.empty(); }
};

// The benchmark distribution:
//   qbar0(1,w) = 25 + 10  * expit(2w + 1)
//   qbar0(0,w) = 20 + 17.5* expit(w + 0.1)
//   var0(1,w)  = 1 + 3 w^3
//   var0(0,w)  = 1 + 1.5 (3 - w)^3
//   W ~ Uniform(0, 3), Gaussian noise.
Scenario benchmark_scenario();

// Constant treatment effect `effect` added to the arm-0 mean of the benchmark
// scenario; variances unchanged (so Neyman allocation stays heterogeneous).
Scenario null_effect_scenario(double effect = 0.0);

// Zero-noise variant for exactness tests: variance identically `eps_var`
// (draws still use it, so pass 0 for exact outcomes).
Scenario degenerate_scenario(std::function<double(int, double)> qbar0,
                             double var_value = 0.0);

// One outcome draw: mean qbar0(a,w), variance var0(a,w), Gaussian.
double sample_outcome(const Scenario& sc, int a, double w, Rng& rng);

// E[qbar0(1,W) - qbar0(0,W)] by adaptive quadrature (abs err <= 1e-10).
double true_ate(const Scenario& sc);

// Conditional Neyman allocation pi*(1|w) = s1 / (s1 + s0), s_a = sqrt(var0).
double oracle_neyman(const Scenario& sc, double w);

// Multi-site generator: each unit draws a site index from site_probs and uses
// that site's randomization function; the outcome law is site-independent
// (benchmark conditional law).
struct MultisiteScenario {
    Scenario outcome_law;
    std::vector<DesignFunction> site_designs;
    std::vector<double> site_probs;

    // Draws a site index (one uniform).
    int sample_site(Rng& rng) const;
};

MultisiteScenario multisite_scenario(int num_sites,
                                     std::vector<DesignFunction> site_designs,
                                     std::vector<double> site_probs);

}  // namespace adaptrial
