#include "adaptrial/designs.hpp"

#include <cmath>

#include "adaptrial/errors.hpp"

namespace adaptrial {

const char* policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::NonAdaptive: return "non_adaptive";
        case PolicyKind::StandardNeyman: return "standard_neyman";
        case PolicyKind::GbarDriven: return "gbar_driven";
        case PolicyKind::OracleNeyman: return "oracle_neyman";
        case PolicyKind::BenefitDriven: return "benefit_driven";
        case PolicyKind::Multisite: return "multisite";
    }
    return "?";
}

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "non_adaptive") return PolicyKind::NonAdaptive;
    if (name == "standard_neyman") return PolicyKind::StandardNeyman;
    if (name == "gbar_driven") return PolicyKind::GbarDriven;
    if (name == "oracle_neyman") return PolicyKind::OracleNeyman;
    if (name == "benefit_driven") return PolicyKind::BenefitDriven;
    if (name == "multisite") return PolicyKind::Multisite;
    throw UsageError("unknown design kind: " + name);
}

DesignPolicy::DesignPolicy(PolicyConfig cfg, std::optional<Scenario> scenario)
    : cfg_(std::move(cfg)),
      scenario_(std::move(scenario)),
      baseline_(DesignFunction::constant(cfg_.baseline_prob)) {
    if (cfg_.n0 < 0) throw UsageError("design policy: negative burn-in");
    if (cfg_.refit_stride < 1) throw UsageError("design policy: refit_stride must be >= 1");
    const bool needs_oracle =
        cfg_.kind == PolicyKind::OracleNeyman ||
        ((cfg_.kind == PolicyKind::StandardNeyman || cfg_.kind == PolicyKind::GbarDriven) &&
         cfg_.oracle_variance);
    if (needs_oracle) {
        if (!scenario_ || !scenario_->has_polynomial_variance())
            throw UsageError(
                "design policy: oracle Neyman kinds need a scenario with polynomial "
                "variances");
        oracle_prim_ = std::make_shared<NeymanPrimitive>(scenario_->var_coef1,
                                                         scenario_->var_coef0, 1e-12);
    }
    if (cfg_.kind == PolicyKind::Multisite) {
        if (cfg_.site_designs.empty() || cfg_.site_designs.size() != cfg_.site_probs.size())
            throw UsageError("design policy: multisite needs matching site designs/probs");
    }
}

double DesignPolicy::nu_schedule(int unit_index_1based, int n0, int period) {
    const int t = (unit_index_1based - n0 + period - 1) / period;  // ceil
    return std::exp(-static_cast<double>(t));
}

void DesignPolicy::refit_neyman(std::span<const Observation> obs,
                                std::span<const DesignFunction> designs) {
    Trajectory traj(std::vector<Observation>(obs.begin(), obs.end()),
                    std::vector<DesignFunction>(designs.begin(), designs.end()), "refit");
    const OutcomeModel mean = fit_outcome_regression(traj, cfg_.degree);
    const OutcomeModel var =
        fit_conditional_variance(traj, mean, cfg_.degree, cfg_.var_floor);
    current_prim_ =
        std::make_shared<NeymanPrimitive>(var.coef(1), var.coef(0), cfg_.var_floor);
}

void DesignPolicy::refit_cate(std::span<const Observation> obs,
                              std::span<const DesignFunction> designs) {
    Trajectory traj(std::vector<Observation>(obs.begin(), obs.end()),
                    std::vector<DesignFunction>(designs.begin(), designs.end()), "refit");
    const OutcomeModel mean = fit_outcome_regression(traj, cfg_.degree);
    const OutcomeModel cate = fit_cate_dr(traj, mean, cfg_.degree);
    current_cate_ = cate.coef(1);
}

DesignFunction DesignPolicy::next(std::span<const Observation> obs, const DesignSeq& seq,
                                  Rng& rng) {
    const int i = static_cast<int>(obs.size());
    if (seq.size() != i)
        throw UsageError("design policy: design sequence out of sync with observations");

    switch (cfg_.kind) {
        case PolicyKind::NonAdaptive:
            return baseline_;

        case PolicyKind::OracleNeyman:
            // applied from the outset, no burn-in
            if (!cached_emit_) cached_emit_ = DesignFunction::neyman(oracle_prim_, 0.0);
            return *cached_emit_;

        case PolicyKind::Multisite: {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t site = cfg_.site_probs.size() - 1;
            for (std::size_t j = 0; j < cfg_.site_probs.size(); ++j) {
                acc += cfg_.site_probs[j];
                if (u < acc) {
                    site = j;
                    break;
                }
            }
            return cfg_.site_designs[site];
        }

        case PolicyKind::StandardNeyman: {
            if (i < cfg_.n0) return baseline_;
            if (!current_prim_ || i - last_refit_ >= cfg_.refit_stride) {
                if (cfg_.oracle_variance) {
                    current_prim_ = oracle_prim_;
                } else {
                    refit_neyman(obs, seq.designs());
                }
                last_refit_ = i;
                cached_emit_ = DesignFunction::neyman(current_prim_, cfg_.clip_lo);
            }
            return *cached_emit_;
        }

        case PolicyKind::GbarDriven: {
            if (i < cfg_.n0) return baseline_;
            if (!current_prim_ || i - last_refit_ >= cfg_.refit_stride) {
                if (cfg_.oracle_variance) {
                    current_prim_ = oracle_prim_;
                } else {
                    refit_neyman(obs, seq.designs());
                }
                last_refit_ = i;
            }
            // Target average over post-burn-in estimates: the new estimate
            // joins the running mean before the design is emitted.
            if (!target_counts_.empty() && target_counts_.back().second == current_prim_) {
                target_counts_.back().first += 1.0;
            } else {
                target_counts_.emplace_back(1.0, current_prim_);
            }
            target_total_ += 1.0;
            std::vector<std::pair<double, NeymanPrimitivePtr>> target;
            target.reserve(target_counts_.size());
            for (const auto& [count, prim] : target_counts_)
                target.emplace_back(count / target_total_, prim);
            return DesignFunction::gbar_step(i, std::move(target));
        }

        case PolicyKind::BenefitDriven: {
            if (i < cfg_.n0) return baseline_;
            bool refit = false;
            if (current_cate_.empty() || i - last_refit_ >= cfg_.refit_stride) {
                refit_cate(obs, seq.designs());
                last_refit_ = i;
                refit = true;
            }
            const double nu = nu_schedule(i + 1, cfg_.n0, cfg_.schedule_period);
            if (refit || nu != cached_nu_ || !cached_emit_) {
                cached_nu_ = nu;
                cached_emit_ = DesignFunction::gamma_cate(current_cate_, nu, cfg_.b);
            }
            return *cached_emit_;
        }
    }
    throw UsageError("design policy: unknown kind");
}

}  // namespace adaptrial
