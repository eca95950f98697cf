#include "adaptrial/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "adaptrial/errors.hpp"

namespace adaptrial {

namespace {

const std::map<std::string, std::string> kDefaults = {
    {"scenario.kind", "appendix_b"},
    {"scenario.w_law", "uniform(0,3)"},
    {"scenario.effect", "0"},
    {"scenario.seed", "20250801"},
    {"scenario.site_probs", "0.5,0.5"},
    {"scenario.site_designs", "0.2,0.8"},
    {"design.kind", "non_adaptive"},
    {"design.n0", "1000"},
    {"design.baseline_prob", "0.5"},
    {"design.b", "1"},
    {"design.clip_lo", "0.01"},
    {"design.refit_stride", "250"},
    {"design.oracle_variance", "false"},
    {"learner.degree", "3"},
    {"learner.var_floor", "0.5"},
    {"estimator.alpha", "0.05"},
    {"estimator.delta_trunc", "1e-4"},
    {"estimator.score_tol", "1e-8"},
    {"mc.reps", "500"},
    {"mc.base_seed", "20250801"},
    {"mc.per_period", "250"},
    {"mc.num_periods", "10"},
    {"mc.time_points", "2,4,6,8,10"},
    {"mc.misspecified_init", "false"},
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Config::Config() : values_(kDefaults) {}

void Config::set(const std::string& key, const std::string& value) {
    if (kDefaults.find(key) == kDefaults.end())
        throw UsageError("unknown config key: " + key);
    values_[key] = value;
}

void Config::set_kv(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got: " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            set_kv(line);
        } catch (const UsageError& e) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::string Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    return it->second;
}

double Config::get_real(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const std::string v = get(key);
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::logic_error&) {
        throw UsageError("config key " + key + " is not a real number: " + get(key));
    }
}

int Config::get_int(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const std::string v = get(key);
        int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::logic_error&) {
        throw UsageError("config key " + key + " is not an integer: " + get(key));
    }
}

std::uint64_t Config::get_u64(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const std::string v = get(key);
        std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::logic_error&) {
        throw UsageError("config key " + key + " is not an unsigned integer: " + get(key));
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key " + key + " is not a boolean: " + v);
}

std::vector<double> Config::get_reals(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(trim(tok)));
        } catch (const std::logic_error&) {
            throw UsageError("config key " + key + ": bad real list element: " + tok);
        }
    }
    return out;
}

std::vector<int> Config::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (double v : get_reals(key)) out.push_back(static_cast<int>(v));
    return out;
}

void Config::echo(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
}

Scenario Config::scenario() const {
    const std::string kind = get("scenario.kind");
    Scenario sc;
    if (kind == "appendix_b") {
        sc = benchmark_scenario();
    } else if (kind == "null_effect") {
        sc = null_effect_scenario(get_real("scenario.effect"));
    } else if (kind == "multisite") {
        sc = benchmark_scenario();
        sc.name = "multisite";
    } else {
        throw UsageError("scenario.kind must be appendix_b, null_effect or multisite");
    }
    // covariate law: uniform(lo,hi)
    const std::string law = get("scenario.w_law");
    if (law.rfind("uniform(", 0) != 0 || law.back() != ')')
        throw UsageError("scenario.w_law must have the form uniform(lo,hi)");
    std::stringstream ss(law.substr(8, law.size() - 9));
    std::string lo_s, hi_s;
    if (!std::getline(ss, lo_s, ',') || !std::getline(ss, hi_s))
        throw UsageError("scenario.w_law must have the form uniform(lo,hi)");
    try {
        sc.w_lo = std::stod(trim(lo_s));
        sc.w_hi = std::stod(trim(hi_s));
    } catch (const std::logic_error&) {
        throw UsageError("scenario.w_law: bad bounds");
    }
    if (!(sc.w_hi > sc.w_lo)) throw UsageError("scenario.w_law: need hi > lo");
    return sc;
}

PolicyConfig Config::policy() const {
    PolicyConfig pc;
    pc.kind = policy_kind_from_name(get("design.kind"));
    if (get("scenario.kind") == "multisite") pc.kind = PolicyKind::Multisite;
    pc.n0 = get_int("design.n0");
    pc.baseline_prob = get_real("design.baseline_prob");
    pc.b = get_real("design.b");
    pc.clip_lo = get_real("design.clip_lo");
    pc.refit_stride = get_int("design.refit_stride");
    pc.degree = get_int("learner.degree");
    pc.var_floor = get_real("learner.var_floor");
    pc.oracle_variance = get_bool("design.oracle_variance");
    pc.schedule_period = get_int("mc.per_period");
    if (pc.kind == PolicyKind::Multisite) {
        const auto probs = get_reals("scenario.site_probs");
        const auto designs = get_reals("scenario.site_designs");
        if (probs.size() != designs.size() || probs.empty())
            throw UsageError("multisite: site_probs and site_designs must match");
        pc.site_probs = probs;
        for (double p : designs) pc.site_designs.push_back(DesignFunction::constant(p));
    }
    return pc;
}

Schedule Config::schedule() const {
    Schedule s;
    s.n0 = get_int("design.n0");
    s.per_period = get_int("mc.per_period");
    s.num_periods = get_int("mc.num_periods");
    s.logged = get_ints("mc.time_points");
    s.validate();
    return s;
}

EstimatorOptions Config::estimator_options() const {
    EstimatorOptions opt;
    opt.alpha = get_real("estimator.alpha");
    opt.delta_trunc = get_real("estimator.delta_trunc");
    opt.score_tol = get_real("estimator.score_tol");
    return opt;
}

McConfig Config::mc_config() const {
    McConfig mc;
    mc.scenario = scenario();
    mc.policy = policy();
    mc.schedule = schedule();
    mc.reps = get_int("mc.reps");
    mc.base_seed = get_u64("mc.base_seed");
    mc.alpha = get_real("estimator.alpha");
    mc.learner_degree = get_int("learner.degree");
    mc.est = estimator_options();
    mc.misspecified_init = get_bool("mc.misspecified_init");
    return mc;
}

}  // namespace adaptrial
