#pragma once

#include <cmath>
#include <vector>

#include "adaptrial/core.hpp"
#include "adaptrial/dgp.hpp"
#include "adaptrial/rng.hpp"

namespace testutil {

using namespace adaptrial;

// Scenario with polynomial conditional means and variances on [0, 3].
inline Scenario poly_scenario(std::vector<double> q1, std::vector<double> q0,
                              std::vector<double> v1, std::vector<double> v0) {
    Scenario sc;
    sc.name = "poly";
    sc.w_lo = 0.0;
    sc.w_hi = 3.0;
    sc.qbar0 = [q1, q0](int a, double w) {
        return polyval(a == 1 ? q1 : q0, w);
    };
    sc.var0 = [v1, v0](int a, double w) {
        return polyval(a == 1 ? v1 : v0, w);
    };
    sc.var_coef1 = v1;
    sc.var_coef0 = v0;
    return sc;
}

// Closed form for the benchmark ATE:
//   psi0 = 5 + (1/3) [ 10 * I1 - 17.5 * I0 ],
//   I1 = (log(1+e^7) - log(1+e)) / 2,   I0 = log(1+e^3.1) - log(1+e^0.1),
// using int expit(aw+b) dw = (1/a) log(1+e^(aw+b)).
inline double appendix_b_true_ate_closed_form() {
    const double i1 =
        (std::log1p(std::exp(7.0)) - std::log1p(std::exp(1.0))) / 2.0;
    const double i0 = std::log1p(std::exp(3.1)) - std::log1p(std::exp(0.1));
    return 5.0 + (10.0 * i1 - 17.5 * i0) / 3.0;
}

// Hand-rolled trajectory: alternating arms under one shared constant design.
inline Trajectory constant_design_trajectory(int n, double p, std::uint64_t seed,
                                             const Scenario& sc) {
    Rng rng(seed);
    DesignFunction d = DesignFunction::constant(p);
    std::vector<Observation> obs;
    std::vector<DesignFunction> designs;
    for (int i = 0; i < n; ++i) {
        const double w = sc.sample_w(rng);
        const int a = rng.bernoulli(p) ? 1 : 0;
        const double y = sample_outcome(sc, a, w, rng);
        obs.emplace_back(w, a, y, a == 1 ? p : 1.0 - p);
        designs.push_back(d);
    }
    return Trajectory(std::move(obs), std::move(designs), sc.name);
}

inline std::vector<double> grid(double lo, double hi, int points) {
    std::vector<double> g;
    for (int i = 0; i < points; ++i)
        g.push_back(lo + (hi - lo) * i / (points - 1.0));
    return g;
}

}  // namespace testutil
