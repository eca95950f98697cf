#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptrial/core.hpp"
#include "adaptrial/dgp.hpp"
#include "adaptrial/learners.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

enum class PolicyKind {
    NonAdaptive,
    StandardNeyman,
    GbarDriven,
    OracleNeyman,
    BenefitDriven,
    Multisite,
};

const char* policy_kind_name(PolicyKind k);
PolicyKind policy_kind_from_name(const std::string& name);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::NonAdaptive;
    int n0 = 1000;               // burn-in cohort size
    double baseline_prob = 0.5;  // burn-in / non-adaptive randomization
    double b = 1.0;              // benefit-driven tilt half-width
    double clip_lo = 0.01;       // standard-Neyman probability clipping
    int refit_stride = 250;      // learner refit cadence (units)
    int degree = 3;
    double var_floor = 0.5;
    // Substitute the true conditional variances for the estimated ones in the
    // Neyman-allocation kinds (post burn-in), as in the oracle design sweeps.
    bool oracle_variance = false;
    int schedule_period = 250;  // period length for the benefit nu-schedule
    // Multisite only:
    std::vector<DesignFunction> site_designs;
    std::vector<double> site_probs;
};

// Stateful rule mapping the data accumulated so far to the next unit's
// treatment-randomization function. One instance per experiment run; instances
// are sequential (their state mutates per enrollment).
class DesignPolicy {
public:
    // The scenario provides oracle variances for the oracle kinds; policies
    // that never touch the oracle accept std::nullopt.
    DesignPolicy(PolicyConfig cfg, std::optional<Scenario> scenario);

    // Emit the design for unit index obs.size() (0-based). `seq` must hold the
    // designs already emitted for this run; rng is consumed by the multisite
    // kind only (one uniform per unit).
    DesignFunction next(std::span<const Observation> obs, const DesignSeq& seq, Rng& rng);

    const PolicyConfig& config() const { return cfg_; }

    // The benefit-driven lower-bound schedule: nu = exp(-t) with
    // t = ceil((i - n0) / period) for 1-based unit index i > n0.
    static double nu_schedule(int unit_index_1based, int n0, int period);

private:
    void refit_neyman(std::span<const Observation> obs, std::span<const DesignFunction> designs);
    void refit_cate(std::span<const Observation> obs, std::span<const DesignFunction> designs);

    PolicyConfig cfg_;
    std::optional<Scenario> scenario_;
    NeymanPrimitivePtr oracle_prim_;
    DesignFunction baseline_;

    NeymanPrimitivePtr current_prim_;            // Neyman kinds
    std::vector<double> current_cate_;           // benefit-driven
    int last_refit_ = -1;
    std::optional<DesignFunction> cached_emit_;  // re-emitted within a stride
    double cached_nu_ = -1.0;
    // Running mean of the post-burn-in Neyman targets, as multiplicity per
    // distinct primitive.
    std::vector<std::pair<double, NeymanPrimitivePtr>> target_counts_;
    double target_total_ = 0.0;
};

}  // namespace adaptrial
