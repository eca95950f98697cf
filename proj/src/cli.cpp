#include "adaptrial/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "adaptrial/config.hpp"
#include "adaptrial/errors.hpp"
#include "adaptrial/harness.hpp"

namespace adaptrial {

namespace {

namespace fs = std::filesystem;

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

Config build_config(const CommonArgs& args) {
    Config cfg;
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const auto& kv : args.sets) cfg.set_kv(kv);
    if (args.seed_given) {
        cfg.set("mc.base_seed", std::to_string(args.seed));
        cfg.set("scenario.seed", std::to_string(args.seed));
    }
    return cfg;
}

int resolve_threads(const CommonArgs& args) {
    if (args.threads > 0) return args.threads;
    if (const char* env = std::getenv("ADAPTRIAL_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::logic_error&) {
            throw UsageError("ADAPTRIAL_THREADS is not an integer");
        }
    }
    return 0;  // harness default
}

void prepare_out_dir(const CommonArgs& args, const Config& cfg) {
    fs::create_directories(args.out_dir);
    std::ofstream echo(fs::path(args.out_dir) / "effective_config.txt");
    cfg.echo(echo);
}

std::ofstream open_output(const CommonArgs& args, const std::string& name) {
    std::ofstream out(fs::path(args.out_dir) / name);
    if (!out) throw UsageError("cannot write " + (fs::path(args.out_dir) / name).string());
    return out;
}

void print_time_summaries(const McMetrics& m, const std::string& design) {
    for (std::size_t ti = 0; ti < m.time_points.size(); ++ti) {
        const auto& c = m.cell(m.time_points[ti], "ADL-TMLE");
        std::printf(
            "%s t=%d n=%d ADL-TMLE bias=%.4g var=%.4g cov=%.3f oracle_cov=%.3f "
            "failures=%d\n",
            design.c_str(), c.time_point, c.n, c.bias, c.variance, c.coverage,
            c.oracle_coverage, c.failures);
    }
}

McMetrics run_mc_for_design(const Config& cfg, const std::string& design_kind, int threads) {
    Config local = cfg;
    local.set("design.kind", design_kind);
    McConfig mc = local.mc_config();
    mc.threads = threads;
    return run_monte_carlo(mc);
}

int cmd_simulate(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    const Scenario sc = cfg.scenario();
    const Schedule sched = cfg.schedule();
    const Trajectory traj =
        run_experiment(sc, cfg.policy(), sched.total_n(), cfg.get_u64("scenario.seed"));
    auto out = open_output(args, "traj.csv");
    traj.save_csv(out);
    double treated = 0.0;
    for (const auto& o : traj.obs()) treated += o.a;
    std::printf("simulated n=%zu design=%s treated_frac=%.4f -> traj.csv\n", traj.size(),
                cfg.get("design.kind").c_str(), treated / traj.size());
    return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& input) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    std::ifstream in(input);
    if (!in) throw UsageError("cannot open trajectory file: " + input);
    const Trajectory traj = Trajectory::load_csv(in);
    if (traj.size() == 0) throw UsageError("empty trajectory: " + input);
    const OutcomeModel init = fit_outcome_regression(traj, cfg.get_int("learner.degree"));
    const EstimatorOptions opt = cfg.estimator_options();

    auto out = open_output(args, "estimates.csv");
    out << "estimator,psi,se,ci_lo,ci_hi,epsilon,score_residual\n";
    int failures = 0;
    for (int e = 0; e < 4; ++e) {
        try {
            EstimateReport rep;
            switch (e) {
                case 0: rep = adl_tmle(traj, init, opt.alpha, opt); break;
                case 1: rep = ad_tmle(traj, init, opt.alpha, opt); break;
                case 2: rep = aipw_adl(traj, init, opt.alpha); break;
                default: rep = aipw_ad(traj, init, opt.alpha); break;
            }
            out << rep.estimator << ',' << fmt_real(rep.psi) << ',' << fmt_real(rep.se)
                << ',' << fmt_real(rep.ci_lo) << ',' << fmt_real(rep.ci_hi) << ','
                << (rep.has_epsilon ? fmt_real(rep.epsilon) : std::string()) << ','
                << fmt_real(rep.score_residual) << '\n';
            std::printf("%s psi=%.6g se=%.4g ci=[%.6g, %.6g]\n", rep.estimator.c_str(),
                        rep.psi, rep.se, rep.ci_lo, rep.ci_hi);
        } catch (const NumericError& err) {
            out << kEstimatorNames[e] << ",,,,,,\n";
            std::printf("%s failed: %s\n", kEstimatorNames[e], err.what());
            ++failures;
        }
    }
    return failures == 4 ? 2 : 0;
}

int cmd_montecarlo(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    McConfig mc = cfg.mc_config();
    mc.threads = resolve_threads(args);
    const McMetrics m = run_monte_carlo(mc);
    const std::string design = cfg.get("design.kind");
    {
        auto out = open_output(args, "metrics.csv");
        write_metrics_csv(out, m, design);
    }
    {
        auto out = open_output(args, "relvar.csv");
        write_relvar_csv(out, m, design);
    }
    print_time_summaries(m, design);
    return 0;
}

int cmd_figure2(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    const int threads = resolve_threads(args);
    auto out = open_output(args, "figure2.csv");
    out << "design,time_point,n,var_adl_tmle,var_ad_tmle,rel_var,reps\n";
    for (const std::string design : {"benefit_driven", "standard_neyman"}) {
        const McMetrics m = run_mc_for_design(cfg, design, threads);
        for (std::size_t ti = 0; ti < m.time_points.size(); ++ti) {
            const auto& adl = m.cell(m.time_points[ti], "ADL-TMLE");
            const auto& ad = m.cell(m.time_points[ti], "AD-TMLE");
            out << design << ',' << m.time_points[ti] << ',' << m.n_at_time[ti] << ','
                << fmt_real(adl.variance) << ',' << fmt_real(ad.variance) << ','
                << fmt_real(adl.variance / ad.variance) << ','
                << std::min(adl.reps_used, ad.reps_used) << '\n';
        }
        print_time_summaries(m, design);
    }
    return 0;
}

int cmd_figure3(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    const int threads = resolve_threads(args);
    const McMetrics base = run_mc_for_design(cfg, "non_adaptive", threads);
    auto out = open_output(args, "figure3.csv");
    out << "design,time_point,n,var_adl_tmle,var_nonadaptive,rel_var,reps\n";
    for (const std::string design :
         {"standard_neyman", "gbar_driven", "oracle_neyman"}) {
        const McMetrics m = run_mc_for_design(cfg, design, threads);
        for (std::size_t ti = 0; ti < m.time_points.size(); ++ti) {
            const auto& c = m.cell(m.time_points[ti], "ADL-TMLE");
            const auto& ref = base.cell(m.time_points[ti], "ADL-TMLE");
            out << design << ',' << m.time_points[ti] << ',' << m.n_at_time[ti] << ','
                << fmt_real(c.variance) << ',' << fmt_real(ref.variance) << ','
                << fmt_real(c.variance / ref.variance) << ',' << c.reps_used << '\n';
        }
        print_time_summaries(m, design);
    }
    return 0;
}

int cmd_figure4(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    const Scenario sc = cfg.scenario();
    const Schedule sched = cfg.schedule();

    std::vector<PolicyConfig> policies;
    {
        Config c = cfg;
        c.set("design.kind", "non_adaptive");
        policies.push_back(c.policy());
        c.set("design.kind", "standard_neyman");
        c.set("design.oracle_variance", "true");
        policies.push_back(c.policy());
        c.set("design.kind", "gbar_driven");
        policies.push_back(c.policy());
    }
    // The oracle-variance design paths are data-independent, so one rep is the
    // exact rep average.
    const auto rows = design_convergence_trajectory(sc, policies, sched, 1,
                                                    cfg.get_u64("mc.base_seed"));
    auto out = open_output(args, "eic_trajectory.csv");
    write_eic_trajectory_csv(out, rows);
    for (const auto& r : rows)
        std::printf("%s t=%d n=%d D2=%.6g rel=%.4f\n", r.design.c_str(), r.time_point,
                    r.n, r.value, r.rel_to_oracle);
    return 0;
}

int cmd_table1(const CommonArgs& args) {
    Config cfg = build_config(args);
    prepare_out_dir(args, cfg);
    const int threads = resolve_threads(args);
    auto out = open_output(args, "table1.csv");
    out << "design,time,bias,var,mse,cov,oracle_cov\n";
    for (const std::string design : {"benefit_driven", "standard_neyman"}) {
        const McMetrics m = run_mc_for_design(cfg, design, threads);
        for (std::size_t ti = 0; ti < m.time_points.size(); ++ti) {
            const auto& c = m.cell(m.time_points[ti], "ADL-TMLE");
            out << design << ',' << c.time_point << ',' << fmt_real(c.bias) << ','
                << fmt_real(c.variance) << ',' << fmt_real(c.mse) << ','
                << fmt_real(c.coverage) << ',' << fmt_real(c.oracle_coverage) << '\n';
        }
        print_time_summaries(m, design);
    }
    return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"adaptrial: adaptive-experiment simulation and ATE estimation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string estimate_input;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "config file (key = value lines)");
        sub->add_option("--set", args.sets, "override, key=value (repeatable)");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "seed override")
            ->each([&](const std::string&) { args.seed_given = true; });
        sub->add_option("--threads", args.threads, "worker threads");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate one trajectory CSV");
    CLI::App* estimate =
        app.add_subcommand("estimate", "run all four estimators on a saved trajectory");
    estimate->add_option("--input", estimate_input, "trajectory CSV")->required();
    CLI::App* montecarlo =
        app.add_subcommand("montecarlo", "Monte Carlo metrics for one design");
    CLI::App* figure2 =
        app.add_subcommand("figure2", "relative variance of ADL-TMLE vs AD-TMLE");
    CLI::App* figure3 =
        app.add_subcommand("figure3", "design variances relative to the non-adaptive design");
    CLI::App* figure4 =
        app.add_subcommand("figure4", "D(Q0, gbar_n)^2 trajectories vs the oracle design");
    CLI::App* table1 = app.add_subcommand("table1", "ADL-TMLE metrics table");
    for (CLI::App* sub : {simulate, estimate, montecarlo, figure2, figure3, figure4, table1})
        add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (estimate->parsed()) return cmd_estimate(args, estimate_input);
        if (montecarlo->parsed()) return cmd_montecarlo(args);
        if (figure2->parsed()) return cmd_figure2(args);
        if (figure3->parsed()) return cmd_figure3(args);
        if (figure4->parsed()) return cmd_figure4(args);
        if (table1->parsed()) return cmd_table1(args);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace adaptrial
