#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "adaptrial/designs.hpp"
#include "adaptrial/dgp.hpp"
#include "adaptrial/harness.hpp"

namespace adaptrial {

// Flat key=value configuration with dotted namespaces. Parsing is strict:
// unknown keys are rejected with a UsageError naming the key.
class Config {
public:
    Config();  // defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void set_kv(const std::string& kv);  // "key=value"

    std::string get(const std::string& key) const;
    double get_real(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_reals(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;

    // Effective configuration, sorted by key; a round-trippable config file.
    void echo(std::ostream& out) const;

    Scenario scenario() const;
    PolicyConfig policy() const;
    Schedule schedule() const;
    McConfig mc_config() const;  // scenario + policy + schedule + estimator knobs
    EstimatorOptions estimator_options() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace adaptrial
