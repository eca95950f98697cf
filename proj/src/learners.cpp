#include "adaptrial/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "adaptrial/errors.hpp"

namespace adaptrial {

OutcomeModel::OutcomeModel(ModelKind kind, int degree, std::vector<double> coef1,
                           std::vector<double> coef0, double var_floor)
    : kind_(kind),
      degree_(degree),
      coef1_(std::move(coef1)),
      coef0_(std::move(coef0)),
      var_floor_(var_floor) {
    if (degree_ < 0) throw UsageError("OutcomeModel: negative degree");
    if (kind_ == ModelKind::ConditionalVariance && !(var_floor_ > 0.0))
        throw UsageError("OutcomeModel: conditional variance model needs var_floor > 0");
}

OutcomeModel OutcomeModel::constant(double value, ModelKind kind) {
    return OutcomeModel(kind, 0, {value}, {value},
                        kind == ModelKind::ConditionalVariance ? std::max(value, 1e-12) : 0.0);
}

double OutcomeModel::predict(int a, double w) const {
    double v;
    if (kind_ == ModelKind::Cate) {
        v = polyval(coef1_, w);
    } else {
        v = polyval(a == 1 ? coef1_ : coef0_, w);
    }
    if (kind_ == ModelKind::ConditionalVariance) v = std::max(v, var_floor_);
    return v;
}

namespace {

// QR least squares of targets on the polynomial basis; throws on rank
// deficiency or too few rows.
std::vector<double> poly_ls(const std::vector<double>& w, const std::vector<double>& t,
                            int degree, const std::string& what) {
    const int n = static_cast<int>(w.size());
    const int p = degree + 1;
    if (n < degree + 2)
        throw FitError(what + ": need at least " + std::to_string(degree + 2) +
                       " observations, have " + std::to_string(n));
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        double pw = 1.0;
        for (int k = 0; k < p; ++k) {
            X(i, k) = pw;
            pw *= w[i];
        }
        b(i) = t[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
        throw FitError(what + ": rank-deficient design matrix (rank " +
                       std::to_string(qr.rank()) + " of " + std::to_string(p) +
                       " columns; " + std::to_string(n) + " rows)");
    Eigen::VectorXd beta = qr.solve(b);
    return std::vector<double>(beta.data(), beta.data() + p);
}

void split_by_arm(const Trajectory& traj, std::vector<double> w[2], std::vector<double> y[2]) {
    for (const auto& o : traj.obs()) {
        w[o.a].push_back(o.w);
        y[o.a].push_back(o.y);
    }
}

}  // namespace

OutcomeModel fit_outcome_regression(const Trajectory& traj, int degree) {
    std::vector<double> w[2], y[2];
    split_by_arm(traj, w, y);
    auto c1 = poly_ls(w[1], y[1], degree, "outcome regression (arm 1)");
    auto c0 = poly_ls(w[0], y[0], degree, "outcome regression (arm 0)");
    return OutcomeModel(ModelKind::OutcomeMean, degree, std::move(c1), std::move(c0));
}

OutcomeModel fit_conditional_variance(const Trajectory& traj, const OutcomeModel& mean_model,
                                      int degree, double var_floor) {
    if (mean_model.kind() != ModelKind::OutcomeMean)
        throw UsageError("fit_conditional_variance: mean_model must be an outcome-mean model");
    if (!(var_floor > 0.0)) throw UsageError("fit_conditional_variance: var_floor must be > 0");
    std::vector<double> w[2], r2[2];
    for (const auto& o : traj.obs()) {
        const double r = o.y - mean_model.predict(o.a, o.w);
        w[o.a].push_back(o.w);
        r2[o.a].push_back(r * r);
    }
    auto c1 = poly_ls(w[1], r2[1], degree, "variance regression (arm 1)");
    auto c0 = poly_ls(w[0], r2[0], degree, "variance regression (arm 0)");
    return OutcomeModel(ModelKind::ConditionalVariance, degree, std::move(c1), std::move(c0),
                        var_floor);
}

OutcomeModel fit_cate_dr(const Trajectory& traj, const OutcomeModel& mean_model, int degree) {
    if (mean_model.kind() != ModelKind::OutcomeMean)
        throw UsageError("fit_cate_dr: mean_model must be an outcome-mean model");
    std::vector<double> w, phi;
    w.reserve(traj.size());
    phi.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& o = traj.obs()[i];
        if (!(o.g_prob > 0.0))
            throw PositivityError("fit_cate_dr: unit " + std::to_string(i) +
                                  " has zero randomization probability");
        const double sign = o.a == 1 ? 1.0 : -1.0;
        const double resid = o.y - mean_model.predict(o.a, o.w);
        w.push_back(o.w);
        phi.push_back(sign / o.g_prob * resid + mean_model.predict(1, o.w) -
                      mean_model.predict(0, o.w));
    }
    auto c = poly_ls(w, phi, degree, "CATE regression");
    return OutcomeModel(ModelKind::Cate, degree, std::move(c), {});
}

}  // namespace adaptrial
