#pragma once

#include <span>
#include <vector>

#include "adaptrial/core.hpp"
#include "adaptrial/learners.hpp"

namespace adaptrial {

struct EstimatorOptions {
    double alpha = 0.05;
    double delta_trunc = 1e-4;  // unit-scale truncation of initial predictions
    double score_tol = 1e-8;    // mean-score convergence requirement
    int max_iter = 100;
};

// Min-max map of outcomes onto [0, 1]. A degenerate trajectory (all outcomes
// equal) maps everything to 0.5 and back-transforms to the common value.
struct ScaledOutcomes {
    std::vector<double> y_unit;
    double lo = 0.0;
    double hi = 1.0;
    bool degenerate = false;

    double to_unit(double y) const { return degenerate ? 0.5 : (y - lo) / (hi - lo); }
    double from_unit(double s) const { return degenerate ? lo : lo + (hi - lo) * s; }
};

ScaledOutcomes scale_to_unit(const Trajectory& traj);

// (2a - 1) / gbar_n(a|w); throws PositivityError when the average design puts
// no mass on the arm.
double clever_covariate_adl(const Trajectory& traj, int a, double w);

// Result of the one-dimensional logistic fluctuation
//   logit Q_eps = logit Q + eps * H
// solved so the weighted score (1/n) sum H_i (y_i - Q_eps_i) vanishes.
struct FluctuationResult {
    double epsilon = 0.0;
    int iterations = 0;
    double score_residual = 0.0;  // mean score at the solution (unit scale)

    // Updated prediction for an initial unit-scale prediction q and clever
    // covariate value h.
    double update(double q_unit, double h) const;
};

// Newton solver for the fluctuation MLE with offset logit(q_unit), single
// covariate h, no intercept. y_unit, q_unit in [0,1]; q_unit must be interior.
// Throws NumericError on non-convergence and on separation (epsilon diverges).
FluctuationResult tmle_fluctuate(std::span<const double> y_unit,
                                 std::span<const double> q_unit,
                                 std::span<const double> h, double score_tol,
                                 int max_iter = 100);

// The four estimators. qbar_init must be an outcome-mean model on the
// original outcome scale.
EstimateReport adl_tmle(const Trajectory& traj, const OutcomeModel& qbar_init,
                        double alpha = 0.05, const EstimatorOptions& opt = {});
EstimateReport ad_tmle(const Trajectory& traj, const OutcomeModel& qbar_init,
                       double alpha = 0.05, const EstimatorOptions& opt = {});
EstimateReport aipw_adl(const Trajectory& traj, const OutcomeModel& qbar_init,
                        double alpha = 0.05);
EstimateReport aipw_ad(const Trajectory& traj, const OutcomeModel& qbar_init,
                       double alpha = 0.05);

}  // namespace adaptrial
