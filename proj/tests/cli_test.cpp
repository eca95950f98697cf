#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adaptrial/cli.hpp"
#include "adaptrial/config.hpp"
#include "adaptrial/errors.hpp"

using namespace adaptrial;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"adaptrial"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config: strict keys and typed getters") {
    Config cfg;
    CHECK(cfg.get("design.kind") == "non_adaptive");
    cfg.set_kv("design.kind=standard_neyman");
    CHECK(cfg.get("design.kind") == "standard_neyman");
    CHECK_THROWS_AS(cfg.set_kv("design.unknown=1"), UsageError);
    CHECK_THROWS_AS(cfg.set_kv("no-equals-sign"), UsageError);

    cfg.set("mc.time_points", "2,4,6");
    CHECK(cfg.get_ints("mc.time_points") == std::vector<int>{2, 4, 6});
    cfg.set("design.oracle_variance", "true");
    CHECK(cfg.get_bool("design.oracle_variance"));
    cfg.set("estimator.alpha", "bogus");
    CHECK_THROWS_AS(cfg.get_real("estimator.alpha"), UsageError);
}

TEST_CASE("config: scenario and schedule construction") {
    Config cfg;
    cfg.set("scenario.w_law", "uniform(0.5,2.5)");
    const Scenario sc = cfg.scenario();
    CHECK(sc.w_lo == 0.5);
    CHECK(sc.w_hi == 2.5);
    cfg.set("scenario.w_law", "normal(0,1)");
    CHECK_THROWS_AS(cfg.scenario(), UsageError);

    Config c2;
    c2.set("design.n0", "100");
    c2.set("mc.per_period", "50");
    c2.set("mc.num_periods", "4");
    c2.set("mc.time_points", "2,4");
    const Schedule s = c2.schedule();
    CHECK(s.total_n() == 250);
}

TEST_CASE("config: echo round trip") {
    TempDir tmp("adaptrial_cfg_echo");
    Config cfg;
    cfg.set_kv("mc.reps=7");
    cfg.set_kv("design.kind=benefit_driven");
    const fs::path file = tmp.path / "echo.txt";
    {
        std::ofstream out(file);
        cfg.echo(out);
    }
    Config back;
    back.load_file(file.string());
    std::stringstream a, b;
    cfg.echo(a);
    back.echo(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("cli: simulate then estimate") {
    TempDir tmp("adaptrial_cli_simest");
    const std::string out = tmp.path.string();
    CHECK(run_cli({"simulate", "--out", out, "--set", "design.n0=60", "--set",
                   "mc.per_period=30", "--set", "mc.num_periods=2", "--set",
                   "mc.time_points=2", "--set", "design.kind=standard_neyman", "--set",
                   "design.refit_stride=30", "--seed", "99"}) == 0);
    CHECK(fs::exists(tmp.path / "traj.csv"));
    CHECK(fs::exists(tmp.path / "effective_config.txt"));

    CHECK(run_cli({"estimate", "--input", (tmp.path / "traj.csv").string(), "--out", out}) ==
          0);
    const std::string est = slurp(tmp.path / "estimates.csv");
    CHECK(est.find("ADL-TMLE") != std::string::npos);
    CHECK(est.find("AD-AIPW") != std::string::npos);
}

TEST_CASE("cli: montecarlo emits metrics and is reproducible from its echo") {
    TempDir tmp1("adaptrial_cli_mc1");
    TempDir tmp2("adaptrial_cli_mc2");
    std::vector<std::string> base{"montecarlo",
                                  "--set",
                                  "mc.reps=4",
                                  "--set",
                                  "design.n0=60",
                                  "--set",
                                  "mc.per_period=30",
                                  "--set",
                                  "mc.num_periods=2",
                                  "--set",
                                  "mc.time_points=2",
                                  "--set",
                                  "mc.base_seed=31",
                                  "--threads",
                                  "2"};
    auto args1 = base;
    args1.insert(args1.end(), {"--out", tmp1.path.string()});
    CHECK(run_cli(args1) == 0);
    CHECK(fs::exists(tmp1.path / "metrics.csv"));
    CHECK(fs::exists(tmp1.path / "relvar.csv"));
    // the reps override lands in the aggregates (reps column, no failures)
    CHECK(slurp(tmp1.path / "metrics.csv").find(",4,0\n") != std::string::npos);

    // re-run purely from the echoed config
    CHECK(run_cli({"montecarlo", "--config",
                   (tmp1.path / "effective_config.txt").string(), "--out",
                   tmp2.path.string()}) == 0);
    CHECK(slurp(tmp1.path / "metrics.csv") == slurp(tmp2.path / "metrics.csv"));
    CHECK(slurp(tmp1.path / "relvar.csv") == slurp(tmp2.path / "relvar.csv"));
}

TEST_CASE("cli: exit codes") {
    TempDir tmp("adaptrial_cli_err");
    // unknown config key -> usage error
    CHECK(run_cli({"montecarlo", "--set", "bogus.key=1", "--out", tmp.path.string()}) == 1);
    // missing input file -> usage error
    CHECK(run_cli({"estimate", "--input", (tmp.path / "nope.csv").string(), "--out",
                   tmp.path.string()}) == 1);

    // trajectory where every estimator hits a positivity wall -> exit 2
    const fs::path bad = tmp.path / "bad.csv";
    {
        std::ofstream out(bad);
        out << "# scenario=patho\n";
        out << "unit_index,w,a,y,g_prob,design_kind,design_params\n";
        for (int i = 0; i < 12; ++i)
            out << i << ',' << 0.25 * i << ",1," << 1.0 + i << ",1,constant,1\n";
    }
    CHECK(run_cli({"estimate", "--input", bad.string(), "--out", tmp.path.string()}) == 2);
}
