#include "adaptrial/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "adaptrial/errors.hpp"
#include "adaptrial/quadrature.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

void Schedule::validate() const {
    if (n0 < 0 || per_period <= 0 || num_periods < 1)
        throw UsageError("schedule: need n0 >= 0, per_period > 0, num_periods >= 1");
    for (int t : logged)
        if (t < 1 || t > num_periods)
            throw UsageError("schedule: logged time point outside 1..num_periods");
}

Trajectory run_experiment(const Scenario& scenario, const PolicyConfig& policy,
                          int total_n, std::uint64_t seed) {
    if (total_n <= 0) throw UsageError("run_experiment: total_n must be positive");
    Rng rng(seed);
    DesignPolicy pol(policy, scenario);
    DesignSeq seq;
    std::vector<Observation> obs;
    obs.reserve(total_n);
    for (int i = 0; i < total_n; ++i) {
        const double w = scenario.sample_w(rng);
        DesignFunction d = [&] {
            try {
                return pol.next(obs, seq, rng);
            } catch (const std::exception& e) {
                throw NumericError("run_experiment: unit " + std::to_string(i) + ": " +
                                   e.what());
            }
        }();
        seq.push(d);
        const double p1 = seq.eval_at(i, w);
        const int a = rng.bernoulli(p1) ? 1 : 0;
        const double g_prob = a == 1 ? p1 : 1.0 - p1;
        const double y = sample_outcome(scenario, a, w, rng);
        obs.emplace_back(w, a, y, g_prob);
    }
    return Trajectory(std::move(obs), seq.designs(), scenario.name);
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

const McCell& McMetrics::cell(int time_point, const std::string& estimator) const {
    for (const auto& c : cells)
        if (c.time_point == time_point && c.estimator == estimator) return c;
    throw UsageError("McMetrics: no cell for time point " + std::to_string(time_point) +
                     ", estimator " + estimator);
}

double McMetrics::variance_of(int time_point, const std::string& estimator) const {
    return cell(time_point, estimator).variance;
}

namespace {

OutcomeModel initial_fit(const Trajectory& prefix, const McConfig& cfg) {
    if (cfg.misspecified_init) {
        double mean = 0.0;
        for (const auto& o : prefix.obs()) mean += o.y;
        mean /= static_cast<double>(prefix.size());
        return OutcomeModel::constant(mean);
    }
    return fit_outcome_regression(prefix, cfg.learner_degree);
}

EstimateReport run_estimator(int which, const Trajectory& prefix, const OutcomeModel& init,
                             const McConfig& cfg) {
    switch (which) {
        case 0: return adl_tmle(prefix, init, cfg.alpha, cfg.est);
        case 1: return ad_tmle(prefix, init, cfg.alpha, cfg.est);
        case 2: return aipw_adl(prefix, init, cfg.alpha);
        default: return aipw_ad(prefix, init, cfg.alpha);
    }
}

}  // namespace

McMetrics run_monte_carlo(const McConfig& cfg) {
    if (cfg.reps < 2) throw UsageError("run_monte_carlo: need at least 2 replications");
    cfg.schedule.validate();

    const int num_times = static_cast<int>(cfg.schedule.logged.size());
    const int total_n = cfg.schedule.total_n();

    McMetrics m;
    m.psi0 = true_ate(cfg.scenario);
    m.time_points = cfg.schedule.logged;
    for (int t : cfg.schedule.logged) m.n_at_time.push_back(cfg.schedule.n_at(t));
    m.psi_reps.resize(num_times);
    m.se_reps.resize(num_times);
    for (int ti = 0; ti < num_times; ++ti)
        for (int e = 0; e < 4; ++e) {
            m.psi_reps[ti][e].assign(cfg.reps, std::nullopt);
            m.se_reps[ti][e].assign(cfg.reps, std::nullopt);
        }

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, cfg.reps));

    std::atomic<int> next_rep{0};
    auto worker = [&]() {
        for (;;) {
            const int r = next_rep.fetch_add(1);
            if (r >= cfg.reps) return;
            Trajectory traj;
            try {
                traj = run_experiment(cfg.scenario, cfg.policy, total_n,
                                      cfg.base_seed ^ (static_cast<std::uint64_t>(r) *
                                                       Rng::kStreamStride));
            } catch (const std::exception&) {
                continue;  // whole-rep failure: every cell records it as missing
            }
            for (int ti = 0; ti < num_times; ++ti) {
                const int nt = cfg.schedule.n_at(cfg.schedule.logged[ti]);
                const Trajectory prefix = traj.prefix(nt);
                std::optional<OutcomeModel> init;
                try {
                    init = initial_fit(prefix, cfg);
                } catch (const std::exception&) {
                    continue;  // no initial fit: all four estimators missing
                }
                for (int e = 0; e < 4; ++e) {
                    try {
                        const EstimateReport rep = run_estimator(e, prefix, *init, cfg);
                        m.psi_reps[ti][e][r] = rep.psi;
                        m.se_reps[ti][e][r] = rep.se;
                    } catch (const std::exception&) {
                        // failure recorded as missing
                    }
                }
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < threads - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
    for (int ti = 0; ti < num_times; ++ti) {
        for (int e = 0; e < 4; ++e) {
            McCell cell;
            cell.estimator = kEstimatorNames[e];
            cell.time_point = cfg.schedule.logged[ti];
            cell.n = m.n_at_time[ti];
            double sum = 0.0, sum_se = 0.0;
            int ok = 0;
            for (int r = 0; r < cfg.reps; ++r) {
                if (!m.psi_reps[ti][e][r]) continue;
                sum += *m.psi_reps[ti][e][r];
                sum_se += *m.se_reps[ti][e][r];
                ++ok;
            }
            cell.reps_used = ok;
            cell.failures = cfg.reps - ok;
            if (ok > 0) {
                const double mean = sum / ok;
                double var = 0.0, mse = 0.0, cov = 0.0;
                for (int r = 0; r < cfg.reps; ++r) {
                    if (!m.psi_reps[ti][e][r]) continue;
                    const double psi = *m.psi_reps[ti][e][r];
                    var += (psi - mean) * (psi - mean);
                    mse += (psi - m.psi0) * (psi - m.psi0);
                    if (std::abs(psi - m.psi0) <= z * *m.se_reps[ti][e][r]) cov += 1.0;
                }
                var /= ok;
                mse /= ok;
                cov /= ok;
                const double sd_mc = std::sqrt(var);
                double oracle_cov = 0.0;
                for (int r = 0; r < cfg.reps; ++r) {
                    if (!m.psi_reps[ti][e][r]) continue;
                    if (std::abs(*m.psi_reps[ti][e][r] - m.psi0) <= z * sd_mc)
                        oracle_cov += 1.0;
                }
                oracle_cov /= ok;
                cell.bias = mean - m.psi0;
                cell.variance = var;
                cell.mse = mse;
                cell.coverage = cov;
                cell.oracle_coverage = oracle_cov;
                cell.mean_se = sum_se / ok;
            }
            m.cells.push_back(std::move(cell));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Quadrature oracles
// ---------------------------------------------------------------------------

double population_eic_second_moment(const Scenario& scenario,
                                    const std::function<double(int, double)>& gbar,
                                    const std::function<double(int, double)>* qbar,
                                    double psi_ref, double abs_tol) {
    const double len = scenario.w_hi - scenario.w_lo;
    auto integrand = [&](double w) {
        const double g1 = gbar(1, w);
        const double g0 = gbar(0, w);
        if (!(g1 > 0.0) || !(g0 > 0.0))
            throw PositivityError("population_eic_second_moment: design has zero mass at w=" +
                                  std::to_string(w));
        double m1, m0;
        double sm1, sm0;  // conditional second moments of Y - qbar(a, W)
        if (qbar) {
            m1 = (*qbar)(1, w);
            m0 = (*qbar)(0, w);
            const double d1 = scenario.qbar0(1, w) - m1;
            const double d0 = scenario.qbar0(0, w) - m0;
            sm1 = scenario.var0(1, w) + d1 * d1;
            sm0 = scenario.var0(0, w) + d0 * d0;
        } else {
            m1 = scenario.qbar0(1, w);
            m0 = scenario.qbar0(0, w);
            sm1 = scenario.var0(1, w);
            sm0 = scenario.var0(0, w);
        }
        const double cate_dev = m1 - m0 - psi_ref;
        return sm1 / g1 + sm0 / g0 + cate_dev * cate_dev;
    };
    return integrate(integrand, scenario.w_lo, scenario.w_hi, abs_tol * len) / len;
}

double population_eic_avg_over_designs(const Scenario& scenario,
                                       std::span<const DesignFunction> designs,
                                       const std::function<double(int, double)>* qbar,
                                       double psi_ref, double abs_tol) {
    if (designs.empty()) throw UsageError("population_eic_avg_over_designs: empty list");
    DesignSeq seq(designs);
    const int n = seq.size();
    const double len = scenario.w_hi - scenario.w_lo;
    auto integrand = [&](double w) {
        double m1, m0, sm1, sm0;
        if (qbar) {
            m1 = (*qbar)(1, w);
            m0 = (*qbar)(0, w);
            const double d1 = scenario.qbar0(1, w) - m1;
            const double d0 = scenario.qbar0(0, w) - m0;
            sm1 = scenario.var0(1, w) + d1 * d1;
            sm0 = scenario.var0(0, w) + d0 * d0;
        } else {
            m1 = scenario.qbar0(1, w);
            m0 = scenario.qbar0(0, w);
            sm1 = scenario.var0(1, w);
            sm0 = scenario.var0(0, w);
        }
        const auto g = seq.eval_all(w, n);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!(g[i] > 0.0) || !(g[i] < 1.0))
                throw PositivityError(
                    "population_eic_avg_over_designs: design " + std::to_string(i) +
                    " has zero mass at w=" + std::to_string(w));
            acc += sm1 / g[i] + sm0 / (1.0 - g[i]);
        }
        const double cate_dev = m1 - m0 - psi_ref;
        return acc / n + cate_dev * cate_dev;
    };
    return integrate(integrand, scenario.w_lo, scenario.w_hi, abs_tol * len) / len;
}

double jensen_margin_min(const Scenario& scenario, std::span<const DesignFunction> designs,
                         std::span<const double> w_grid) {
    if (designs.empty()) throw UsageError("jensen_margin_min: empty design list");
    DesignSeq seq(designs);
    const int n = seq.size();
    double worst = std::numeric_limits<double>::infinity();
    for (double w : w_grid) {
        const double v1 = scenario.var0(1, w);
        const double v0 = scenario.var0(0, w);
        const auto g = seq.eval_all(w, n);
        double avg_terms = 0.0;
        double mean1 = 0.0;
        for (int i = 0; i < n; ++i) {
            avg_terms += v1 / g[i] + v0 / (1.0 - g[i]);  // may be +inf
            mean1 += g[i];
        }
        avg_terms /= n;
        mean1 /= n;
        const double at_avg = v1 / mean1 + v0 / (1.0 - mean1);
        worst = std::min(worst, avg_terms - at_avg);
    }
    return worst;
}

std::vector<EicTrajectoryRow> design_convergence_trajectory(
    const Scenario& scenario, const std::vector<PolicyConfig>& policies,
    const Schedule& schedule, int reps, std::uint64_t base_seed) {
    schedule.validate();
    if (reps < 1) throw UsageError("design_convergence_trajectory: reps must be >= 1");
    const double psi0 = true_ate(scenario);

    // Reference: the oracle Neyman allocation applied from the outset.
    auto oracle_gbar = [&](int a, double w) {
        const double p = oracle_neyman(scenario, w);
        return a == 1 ? p : 1.0 - p;
    };
    const double oracle_value =
        population_eic_second_moment(scenario, oracle_gbar, nullptr, psi0);

    std::vector<EicTrajectoryRow> rows;
    for (const auto& pc : policies) {
        std::vector<Trajectory> trajs;
        trajs.reserve(reps);
        for (int r = 0; r < reps; ++r)
            trajs.push_back(run_experiment(
                scenario, pc, schedule.total_n(),
                base_seed ^ (static_cast<std::uint64_t>(r) * Rng::kStreamStride)));
        for (int t : schedule.logged) {
            const int nt = schedule.n_at(t);
            auto gbar = [&](int a, double w) {
                double mean1 = 0.0;
                for (const auto& traj : trajs) mean1 += traj.seq().average1(w, nt);
                mean1 /= static_cast<double>(trajs.size());
                return a == 1 ? mean1 : 1.0 - mean1;
            };
            auto gbar_rep0 = [&](int a, double w) {
                const double m1 = trajs.front().seq().average1(w, nt);
                return a == 1 ? m1 : 1.0 - m1;
            };
            EicTrajectoryRow row;
            row.design = policy_kind_name(pc.kind);
            if (pc.oracle_variance &&
                (pc.kind == PolicyKind::StandardNeyman || pc.kind == PolicyKind::GbarDriven))
                row.design += "_oracle_var";
            row.time_point = t;
            row.n = nt;
            row.value = population_eic_second_moment(scenario, gbar, nullptr, psi0);
            row.value_rep0 =
                population_eic_second_moment(scenario, gbar_rep0, nullptr, psi0);
            row.rel_to_oracle = row.value / oracle_value;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

namespace {
std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void write_metrics_csv(std::ostream& out, const McMetrics& m, const std::string& design) {
    out << "estimator,design,time_point,n,bias,var,mse,coverage,oracle_coverage,mean_se,"
           "reps,failures\n";
    for (const auto& c : m.cells) {
        out << c.estimator << ',' << design << ',' << c.time_point << ',' << c.n << ','
            << fmt_real(c.bias) << ',' << fmt_real(c.variance) << ',' << fmt_real(c.mse)
            << ',' << fmt_real(c.coverage) << ',' << fmt_real(c.oracle_coverage) << ','
            << fmt_real(c.mean_se) << ',' << c.reps_used << ',' << c.failures << '\n';
    }
}

void write_relvar_csv(std::ostream& out, const McMetrics& m, const std::string& design) {
    out << "design,time_point,n,var_adl_tmle,var_ad_tmle,rel_var,reps\n";
    for (std::size_t ti = 0; ti < m.time_points.size(); ++ti) {
        const auto& adl = m.cell(m.time_points[ti], "ADL-TMLE");
        const auto& ad = m.cell(m.time_points[ti], "AD-TMLE");
        const double rel = ad.variance > 0.0
                               ? adl.variance / ad.variance
                               : std::numeric_limits<double>::quiet_NaN();
        out << design << ',' << m.time_points[ti] << ',' << m.n_at_time[ti] << ','
            << fmt_real(adl.variance) << ',' << fmt_real(ad.variance) << ',' << fmt_real(rel)
            << ',' << std::min(adl.reps_used, ad.reps_used) << '\n';
    }
}

void write_eic_trajectory_csv(std::ostream& out, const std::vector<EicTrajectoryRow>& rows) {
    out << "design,time_point,n,d2,d2_rep0,rel_to_oracle\n";
    for (const auto& r : rows)
        out << r.design << ',' << r.time_point << ',' << r.n << ',' << fmt_real(r.value)
            << ',' << fmt_real(r.value_rep0) << ',' << fmt_real(r.rel_to_oracle) << '\n';
}

}  // namespace adaptrial
