#include "adaptrial/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "adaptrial/errors.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

ScaledOutcomes scale_to_unit(const Trajectory& traj) {
    if (traj.size() == 0) throw UsageError("scale_to_unit: empty trajectory");
    ScaledOutcomes s;
    s.lo = traj.obs()[0].y;
    s.hi = traj.obs()[0].y;
    for (const auto& o : traj.obs()) {
        s.lo = std::min(s.lo, o.y);
        s.hi = std::max(s.hi, o.y);
    }
    s.degenerate = !(s.hi > s.lo);
    s.y_unit.reserve(traj.size());
    for (const auto& o : traj.obs()) s.y_unit.push_back(s.to_unit(o.y));
    return s;
}

double clever_covariate_adl(const Trajectory& traj, int a, double w) {
    const double g = traj.gbar(a, w);
    if (!(g > 0.0))
        throw PositivityError("clever covariate: average design has zero mass on arm " +
                              std::to_string(a) + " at w=" + std::to_string(w));
    return (2.0 * a - 1.0) / g;
}

double FluctuationResult::update(double q_unit, double h) const {
    return expit(logit(q_unit) + epsilon * h);
}

FluctuationResult tmle_fluctuate(std::span<const double> y_unit,
                                 std::span<const double> q_unit,
                                 std::span<const double> h, double score_tol,
                                 int max_iter) {
    const std::size_t n = y_unit.size();
    if (n == 0 || q_unit.size() != n || h.size() != n)
        throw UsageError("tmle_fluctuate: input size mismatch");
    if (!(score_tol > 0.0)) throw UsageError("tmle_fluctuate: score_tol must be > 0");

    std::vector<double> offset(n);
    double h_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(q_unit[i] > 0.0 && q_unit[i] < 1.0))
            throw UsageError("tmle_fluctuate: initial predictions must be interior");
        if (!std::isfinite(h[i])) throw UsageError("tmle_fluctuate: covariate not finite");
        offset[i] = logit(q_unit[i]);
        h_max = std::max(h_max, std::abs(h[i]));
    }

    // loglik, mean score and mean information at epsilon; the score-term sign
    // range detects monotone likelihoods (separation)
    double term_min = 0.0, term_max = 0.0;
    auto eval = [&](double eps, double& mean_score, double& mean_info) {
        double ll = 0.0, s = 0.0, info = 0.0;
        term_min = std::numeric_limits<double>::infinity();
        term_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = offset[i] + eps * h[i];
            const double mu = expit(eta);
            // log mu and log(1-mu) computed stably from eta on both tails
            const double log_mu = eta >= 0.0 ? -std::log1p(std::exp(-eta))
                                             : eta - std::log1p(std::exp(eta));
            const double log_1mu = log_mu - eta;
            ll += y_unit[i] * log_mu + (1.0 - y_unit[i]) * log_1mu;
            const double term = h[i] * (y_unit[i] - mu);
            term_min = std::min(term_min, term);
            term_max = std::max(term_max, term);
            s += term;
            info += h[i] * h[i] * mu * (1.0 - mu);
        }
        mean_score = s / n;
        mean_info = info / n;
        return ll;
    };

    // Converge well past the user tolerance so downstream estimates are
    // insensitive to the stopping point; the FP noise floor scales with |h|.
    const double machine_tol = std::max(1e-14, 1e-15 * h_max);

    double eps = 0.0, mean_score = 0.0, mean_info = 0.0;
    double ll = eval(eps, mean_score, mean_info);
    int it = 0;
    double best_abs_score = std::abs(mean_score);
    int stalled = 0;
    while (it < max_iter) {
        if (std::abs(mean_score) <= machine_tol) break;
        if (!(mean_info > 1e-300)) break;  // flat likelihood
        ++it;
        double step = mean_score / mean_info;
        // step halving if the likelihood would decrease
        double cand_eps = eps, cand_score = 0.0, cand_info = 0.0, cand_ll = 0.0;
        double factor = 1.0;
        for (int halve = 0; halve < 60; ++halve) {
            cand_eps = eps + factor * step;
            cand_ll = eval(cand_eps, cand_score, cand_info);
            if (cand_ll >= ll - 1e-12 * std::abs(ll)) break;
            factor *= 0.5;
        }
        eps = cand_eps;
        ll = cand_ll;
        mean_score = cand_score;
        mean_info = cand_info;
        // All logits saturated with the score still unsolved: no interior MLE.
        if (std::abs(eps) * std::max(h_max, 1.0) > 80.0 &&
            std::abs(mean_score) > score_tol)
            throw NumericError(
                "tmle_fluctuate: separation (epsilon diverges, last mean score " +
                std::to_string(mean_score) + ")");
        if (std::abs(mean_score) < best_abs_score * 0.5) {
            best_abs_score = std::abs(mean_score);
            stalled = 0;
        } else if (++stalled >= 4) {
            break;  // FP noise floor reached
        }
    }

    if (std::abs(mean_score) > score_tol)
        throw NumericError("tmle_fluctuate: no convergence after " + std::to_string(it) +
                           " iterations (mean score " + std::to_string(mean_score) + ")");
    // Monotone likelihood: the score terms never change sign, so the zero being
    // approached sits at epsilon = +-infinity rather than at an interior MLE.
    if (std::abs(eps) > 1.0 && (term_min >= 0.0 || term_max <= 0.0))
        throw NumericError("tmle_fluctuate: separation (one-sided residuals, epsilon " +
                           std::to_string(eps) + ")");
    FluctuationResult out;
    out.epsilon = eps;
    out.iterations = it;
    out.score_residual = mean_score;
    return out;
}

namespace {

// Randomization probabilities of both arms for every unit, per estimator
// flavor: the average design for ADL, each unit's own design for AD.
struct ArmProbs {
    std::vector<double> g1, g0;  // P(A=1|w_i), P(A=0|w_i)
};

ArmProbs adl_probs(const Trajectory& traj) {
    ArmProbs p;
    const std::size_t n = traj.size();
    p.g1.resize(n);
    p.g0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m1 = traj.gbar(1, traj.obs()[i].w);
        if (!(m1 > 0.0) || !(1.0 - m1 > 0.0))
            throw PositivityError("average design has zero mass on one arm at w=" +
                                  std::to_string(traj.obs()[i].w));
        p.g1[i] = m1;
        p.g0[i] = 1.0 - m1;
    }
    return p;
}

ArmProbs ad_probs(const Trajectory& traj) {
    ArmProbs p;
    const std::size_t n = traj.size();
    p.g1.resize(n);
    p.g0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& o = traj.obs()[i];
        const double g1 = o.a == 1 ? o.g_prob : 1.0 - o.g_prob;
        const double g0 = 1.0 - g1;
        if (!(g1 > 0.0) || !(g0 > 0.0))
            throw PositivityError("unit " + std::to_string(i) +
                                  ": per-unit design has zero mass on one arm "
                                  "(g_prob=" +
                                  std::to_string(o.g_prob) + ")");
        p.g1[i] = g1;
        p.g0[i] = g0;
    }
    return p;
}

EstimateReport tmle_impl(const Trajectory& traj, const OutcomeModel& qbar_init,
                         double alpha, const EstimatorOptions& opt, const ArmProbs& gp,
                         const char* label) {
    if (traj.size() == 0) throw UsageError("tmle: empty trajectory");
    if (qbar_init.kind() != ModelKind::OutcomeMean)
        throw UsageError("tmle: qbar_init must be an outcome-mean model");
    const std::size_t n = traj.size();
    const auto& obs = traj.obs();

    const ScaledOutcomes scaled = scale_to_unit(traj);
    const double dl = opt.delta_trunc;

    std::vector<double> q1(n), q0(n), qa(n), h_obs(n), h1(n), h0(n);
    for (std::size_t i = 0; i < n; ++i) {
        q1[i] = std::clamp(scaled.to_unit(qbar_init.predict(1, obs[i].w)), dl, 1.0 - dl);
        q0[i] = std::clamp(scaled.to_unit(qbar_init.predict(0, obs[i].w)), dl, 1.0 - dl);
        qa[i] = obs[i].a == 1 ? q1[i] : q0[i];
        h1[i] = 1.0 / gp.g1[i];
        h0[i] = -1.0 / gp.g0[i];
        h_obs[i] = obs[i].a == 1 ? h1[i] : h0[i];
    }

    const FluctuationResult fl =
        tmle_fluctuate(scaled.y_unit, qa, h_obs, opt.score_tol, opt.max_iter);

    // Back-transformed targeted predictions and the plug-in estimate.
    std::vector<double> Q1(n), Q0(n);
    double psi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Q1[i] = scaled.from_unit(fl.update(q1[i], h1[i]));
        Q0[i] = scaled.from_unit(fl.update(q0[i], h0[i]));
        psi += Q1[i] - Q0[i];
    }
    psi /= n;

    double sigma2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double Qa = obs[i].a == 1 ? Q1[i] : Q0[i];
        const double d = h_obs[i] * (obs[i].y - Qa) + Q1[i] - Q0[i] - psi;
        sigma2 += d * d;
    }
    sigma2 /= n;

    EstimateReport rep;
    rep.psi = psi;
    rep.se = std::sqrt(sigma2 / n);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    rep.ci_lo = psi - z * rep.se;
    rep.ci_hi = psi + z * rep.se;
    rep.has_epsilon = true;
    rep.epsilon = fl.epsilon;
    rep.score_residual = fl.score_residual;
    rep.estimator = label;
    return rep;
}

EstimateReport aipw_impl(const Trajectory& traj, const OutcomeModel& qbar_init,
                         double alpha, const ArmProbs& gp, const char* label) {
    if (traj.size() == 0) throw UsageError("aipw: empty trajectory");
    if (qbar_init.kind() != ModelKind::OutcomeMean)
        throw UsageError("aipw: qbar_init must be an outcome-mean model");
    const std::size_t n = traj.size();
    const auto& obs = traj.obs();

    double aug = 0.0, plug = 0.0;
    std::vector<double> h_obs(n), Q1(n), Q0(n);
    for (std::size_t i = 0; i < n; ++i) {
        Q1[i] = qbar_init.predict(1, obs[i].w);
        Q0[i] = qbar_init.predict(0, obs[i].w);
        h_obs[i] = obs[i].a == 1 ? 1.0 / gp.g1[i] : -1.0 / gp.g0[i];
        const double Qa = obs[i].a == 1 ? Q1[i] : Q0[i];
        aug += h_obs[i] * (obs[i].y - Qa);
        plug += Q1[i] - Q0[i];
    }
    aug /= n;
    plug /= n;
    const double psi = aug + plug;

    double sigma2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double Qa = obs[i].a == 1 ? Q1[i] : Q0[i];
        const double d = h_obs[i] * (obs[i].y - Qa) + Q1[i] - Q0[i] - psi;
        sigma2 += d * d;
    }
    sigma2 /= n;

    EstimateReport rep;
    rep.psi = psi;
    rep.se = std::sqrt(sigma2 / n);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    rep.ci_lo = psi - z * rep.se;
    rep.ci_hi = psi + z * rep.se;
    rep.has_epsilon = false;
    rep.score_residual = aug;
    rep.estimator = label;
    return rep;
}

}  // namespace

EstimateReport adl_tmle(const Trajectory& traj, const OutcomeModel& qbar_init,
                        double alpha, const EstimatorOptions& opt) {
    return tmle_impl(traj, qbar_init, alpha, opt, adl_probs(traj), "ADL-TMLE");
}

EstimateReport ad_tmle(const Trajectory& traj, const OutcomeModel& qbar_init,
                       double alpha, const EstimatorOptions& opt) {
    return tmle_impl(traj, qbar_init, alpha, opt, ad_probs(traj), "AD-TMLE");
}

EstimateReport aipw_adl(const Trajectory& traj, const OutcomeModel& qbar_init, double alpha) {
    return aipw_impl(traj, qbar_init, alpha, adl_probs(traj), "ADL-AIPW");
}

EstimateReport aipw_ad(const Trajectory& traj, const OutcomeModel& qbar_init, double alpha) {
    return aipw_impl(traj, qbar_init, alpha, ad_probs(traj), "AD-AIPW");
}

}  // namespace adaptrial
