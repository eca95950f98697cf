#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adaptrial/core.hpp"
#include "adaptrial/designs.hpp"
#include "adaptrial/dgp.hpp"
#include "adaptrial/estimators.hpp"

namespace adaptrial {

// Enrollment schedule: period 1 is the burn-in cohort of n0 units; each later
// period adds per_period units, so n at period T is n0 + (T-1) * per_period.
struct Schedule {
    int n0 = 1000;
    int per_period = 250;
    int num_periods = 10;
    std::vector<int> logged = {2, 4, 6, 8, 10};

    int n_at(int period) const { return n0 + (period - 1) * per_period; }
    int total_n() const { return n_at(num_periods); }
    void validate() const;
};

// One sequential experiment. Per unit the generator consumes, in order: one
// uniform for W, one uniform for the site (multisite only), one uniform for A,
// one uniform for the outcome's normal draw. Deterministic given the seed.
Trajectory run_experiment(const Scenario& scenario, const PolicyConfig& policy,
                          int total_n, std::uint64_t seed);

inline constexpr std::array<const char*, 4> kEstimatorNames = {"ADL-TMLE", "AD-TMLE",
                                                               "ADL-AIPW", "AD-AIPW"};

struct McConfig {
    Scenario scenario;
    PolicyConfig policy;
    Schedule schedule;
    int reps = 500;
    std::uint64_t base_seed = 20250801;
    double alpha = 0.05;
    int learner_degree = 3;
    EstimatorOptions est;
    int threads = 0;  // 0 = hardware concurrency
    // Replace the fitted initial outcome regression with the pooled outcome
    // mean (the deliberately misspecified initial estimate).
    bool misspecified_init = false;
};

struct McCell {
    std::string estimator;
    int time_point = 0;
    int n = 0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double coverage = 0.0;
    double oracle_coverage = 0.0;
    double mean_se = 0.0;
    int reps_used = 0;
    int failures = 0;
};

struct McMetrics {
    double psi0 = 0.0;  // true estimand the metrics are computed against
    std::vector<int> time_points;
    std::vector<int> n_at_time;
    std::vector<McCell> cells;  // ordered by (time point, estimator)

    // Raw replicate estimates: [time][estimator][rep], failures as nullopt.
    std::vector<std::array<std::vector<std::optional<double>>, 4>> psi_reps;
    std::vector<std::array<std::vector<std::optional<double>>, 4>> se_reps;

    const McCell& cell(int time_point, const std::string& estimator) const;
    // Population variance of an estimator's point estimates at a time point.
    double variance_of(int time_point, const std::string& estimator) const;
};

McMetrics run_monte_carlo(const McConfig& cfg);

// P_{Q0, gbar} D(Q, gbar)^2 for the ATE influence curve, by quadrature:
//   int [ (var0(1,w) + (qbar0-qbar)(1,w)^2) / gbar(1|w)
//       + (var0(0,w) + (qbar0-qbar)(0,w)^2) / gbar(0|w)
//       + (qbar(1,w) - qbar(0,w) - psi_ref)^2 ] dQ_W(w).
// Passing qbar = nullptr uses the scenario's true conditional mean.
double population_eic_second_moment(const Scenario& scenario,
                                    const std::function<double(int, double)>& gbar,
                                    const std::function<double(int, double)>* qbar,
                                    double psi_ref, double abs_tol = 1e-9);

// (1/n) sum_i P_{Q0, g_i} D(Q, g_i)^2 over a design list, as one quadrature.
double population_eic_avg_over_designs(const Scenario& scenario,
                                       std::span<const DesignFunction> designs,
                                       const std::function<double(int, double)>* qbar,
                                       double psi_ref, double abs_tol = 1e-9);

// Pointwise Jensen margin min over a grid:
//   min_w  (1/n) sum_i [v1/g_i(1|w) + v0/g_i(0|w)] - [v1/gbar(1|w) + v0/gbar(0|w)]
// (+inf entries where some g_i has zero mass are fine: the average dominates).
double jensen_margin_min(const Scenario& scenario, std::span<const DesignFunction> designs,
                         std::span<const double> w_grid);

struct EicTrajectoryRow {
    std::string design;
    int time_point = 0;
    int n = 0;
    double value = 0.0;         // with gbar_n averaged across reps
    double value_rep0 = 0.0;    // with the first rep's realized gbar_n
    double rel_to_oracle = 0.0; // value / oracle-design value
};

// D(Q0, gbar_n)^2 trajectories for the given policies, with gbar_n the
// realized average design averaged across reps, relative to the design that
// applies the oracle Neyman allocation from the outset.
std::vector<EicTrajectoryRow> design_convergence_trajectory(
    const Scenario& scenario, const std::vector<PolicyConfig>& policies,
    const Schedule& schedule, int reps, std::uint64_t base_seed);

// CSV emitters (fixed column orders).
void write_metrics_csv(std::ostream& out, const McMetrics& m, const std::string& design);
void write_relvar_csv(std::ostream& out, const McMetrics& m, const std::string& design);
void write_eic_trajectory_csv(std::ostream& out, const std::vector<EicTrajectoryRow>& rows);

}  // namespace adaptrial
