#include "adaptrial/dgp.hpp"

#include <cmath>

#include "adaptrial/errors.hpp"
#include "adaptrial/quadrature.hpp"

namespace adaptrial {

namespace {
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Scenario benchmark_scenario() {
    Scenario sc;
    sc.name = "appendix_b";
    sc.w_lo = 0.0;
    sc.w_hi = 3.0;
    sc.qbar0 = [](int a, double w) {
        return a == 1 ? 25.0 + 10.0 * expit(2.0 * w + 1.0)
                      : 20.0 + 17.5 * expit(w + 0.1);
    };
    sc.var0 = [](int a, double w) {
        return a == 1 ? 1.0 + 3.0 * w * w * w
                      : 1.0 + 1.5 * (3.0 - w) * (3.0 - w) * (3.0 - w);
    };
    // 1 + 3w^3 and 1 + 1.5(3-w)^3 = 41.5 - 40.5w + 13.5w^2 - 1.5w^3
    sc.var_coef1 = {1.0, 0.0, 0.0, 3.0};
    sc.var_coef0 = {41.5, -40.5, 13.5, -1.5};
    return sc;
}

Scenario null_effect_scenario(double effect) {
    Scenario sc = benchmark_scenario();
    sc.name = "null_effect";
    sc.qbar0 = [effect](int a, double w) {
        const double base = 20.0 + 17.5 * expit(w + 0.1);
        return a == 1 ? base + effect : base;
    };
    return sc;
}

Scenario degenerate_scenario(std::function<double(int, double)> qbar0, double var_value) {
    Scenario sc;
    sc.name = "degenerate";
    sc.w_lo = 0.0;
    sc.w_hi = 3.0;
    sc.qbar0 = std::move(qbar0);
    sc.var0 = [var_value](int, double) { return var_value; };
    sc.var_coef1 = {var_value};
    sc.var_coef0 = {var_value};
    return sc;
}

double sample_outcome(const Scenario& sc, int a, double w, Rng& rng) {
    if (w < sc.w_lo || w > sc.w_hi)
        throw UsageError("sample_outcome: covariate outside scenario support");
    const double v = sc.var0(a, w);
    const double z = rng.normal();
    return sc.qbar0(a, w) + std::sqrt(v) * z;
}

double true_ate(const Scenario& sc) {
    const double len = sc.w_hi - sc.w_lo;
    return integrate(
               [&](double w) { return sc.qbar0(1, w) - sc.qbar0(0, w); },
               sc.w_lo, sc.w_hi, 1e-10 * len) /
           len;
}

double oracle_neyman(const Scenario& sc, double w) {
    if (w < sc.w_lo || w > sc.w_hi)
        throw UsageError("oracle_neyman: covariate outside scenario support");
    const double s1 = std::sqrt(sc.var0(1, w));
    const double s0 = std::sqrt(sc.var0(0, w));
    return s1 / (s1 + s0);
}

int MultisiteScenario::sample_site(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < site_probs.size(); ++j) {
        acc += site_probs[j];
        if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(site_probs.size()) - 1;
}

MultisiteScenario multisite_scenario(int num_sites,
                                     std::vector<DesignFunction> site_designs,
                                     std::vector<double> site_probs) {
    if (num_sites <= 0) throw UsageError("multisite_scenario: need at least one site");
    if (site_designs.size() != static_cast<std::size_t>(num_sites) ||
        site_probs.size() != static_cast<std::size_t>(num_sites))
        throw UsageError("multisite_scenario: site design/probability length mismatch");
    double total = 0.0;
    for (double p : site_probs) {
        if (p < 0.0) throw UsageError("multisite_scenario: negative site probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw UsageError("multisite_scenario: site probabilities must sum to 1");
    MultisiteScenario ms;
    ms.outcome_law = benchmark_scenario();
    ms.outcome_law.name = "multisite";
    ms.site_designs = std::move(site_designs);
    ms.site_probs = std::move(site_probs);
    return ms;
}

}  // namespace adaptrial
