#pragma once

#include <string>
#include <vector>

#include "adaptrial/core.hpp"

namespace adaptrial {

enum class ModelKind { OutcomeMean, ConditionalVariance, Cate };

// Fitted polynomial regression: per-arm coefficients for outcome-mean and
// conditional-variance models, a single coefficient vector for CATE models.
// Predictions are deterministic; conditional-variance predictions are floored
// at var_floor.
class OutcomeModel {
public:
    OutcomeModel(ModelKind kind, int degree, std::vector<double> coef1,
                 std::vector<double> coef0, double var_floor = 0.0);

    // Constant model helper (e.g. deliberately misspecified initial fits).
    static OutcomeModel constant(double value, ModelKind kind = ModelKind::OutcomeMean);

    double predict(int a, double w) const;

    ModelKind kind() const { return kind_; }
    int degree() const { return degree_; }
    const std::vector<double>& coef(int arm) const { return arm == 1 ? coef1_ : coef0_; }
    double var_floor() const { return var_floor_; }

private:
    ModelKind kind_;
    int degree_;
    std::vector<double> coef1_, coef0_;  // cate models store coefficients in coef1_
    double var_floor_;
};

// Per-arm least squares of y on the polynomial basis 1, w, ..., w^degree.
OutcomeModel fit_outcome_regression(const Trajectory& traj, int degree);

// Per-arm least squares of squared residuals (y - mean(a,w))^2 on the basis;
// predictions are clamped below at var_floor.
OutcomeModel fit_conditional_variance(const Trajectory& traj, const OutcomeModel& mean_model,
                                      int degree, double var_floor);

// CATE regression on doubly robust pseudo-outcomes
//   phi_i = (2a_i - 1)/g_prob_i * (y_i - mean(a_i, w_i)) + mean(1, w_i) - mean(0, w_i).
OutcomeModel fit_cate_dr(const Trajectory& traj, const OutcomeModel& mean_model, int degree);

}  // namespace adaptrial
