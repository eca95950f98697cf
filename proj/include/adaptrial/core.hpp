#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace adaptrial {

// One enrolled unit: covariate, binary treatment, outcome, and the realized
// randomization probability g_i(a_i | w_i) of the arm actually taken.
struct Observation {
    double w = 0.0;
    int a = 0;
    double y = 0.0;
    double g_prob = 0.0;

    Observation() = default;
    Observation(double w_, int a_, double y_, double g_prob_);
};

// ---------------------------------------------------------------------------
// Design functions
// ---------------------------------------------------------------------------

// Unclipped Neyman ratio built from per-arm polynomial variance models:
//   pi(w) = s1(w) / (s1(w) + s0(w)),  s_a(w) = sqrt(max(var_floor, poly_a(w))).
// Shared immutable; pointer identity doubles as value identity within a run.
class NeymanPrimitive {
public:
    NeymanPrimitive(std::vector<double> var_coef1, std::vector<double> var_coef0,
                    double var_floor);

    double operator()(double w) const;
    double sd(int arm, double w) const;

    const std::vector<double>& var_coef(int arm) const {
        return arm == 1 ? var_coef1_ : var_coef0_;
    }
    double var_floor() const { return var_floor_; }

private:
    std::vector<double> var_coef1_, var_coef0_;
    double var_floor_;
};

using NeymanPrimitivePtr = std::shared_ptr<const NeymanPrimitive>;

enum class DesignKind { Constant, Neyman, GammaCate, GbarStep };

const char* design_kind_name(DesignKind k);
DesignKind design_kind_from_name(const std::string& name);

// A treatment-randomization function w -> P(A=1 | W=w), stored as a parameter
// record so it can be re-evaluated at any covariate after the fact.
//
// Kinds:
//   Constant   p
//   Neyman     clip(prim(w), clip_lo, 1-clip_lo)
//   GammaCate  Gamma_{nu,b}(poly(cate_coef, w))
//   GbarStep   clip((j+1) * target(w) - sum_{k<j} g_k(w), 0, 1), where j is the
//              design's position in its trajectory and target is a weighted
//              mix of Neyman primitives. Evaluation therefore needs the list
//              of preceding designs (see DesignSeq); the other kinds are
//              self-contained.
class DesignFunction {
public:
    struct Constant {
        double p;
    };
    struct Neyman {
        NeymanPrimitivePtr prim;
        double clip_lo;  // 0 disables clipping
    };
    struct GammaCate {
        std::vector<double> cate_coef;
        double nu;
        double b;
    };
    struct GbarStep {
        int prior_count;  // designs preceding this one in its trajectory
        std::vector<std::pair<double, NeymanPrimitivePtr>> target;  // weights sum to 1
    };

    static DesignFunction constant(double p);
    static DesignFunction neyman(NeymanPrimitivePtr prim, double clip_lo);
    static DesignFunction gamma_cate(std::vector<double> cate_coef, double nu, double b);
    static DesignFunction gbar_step(int prior_count,
                                    std::vector<std::pair<double, NeymanPrimitivePtr>> target);

    DesignKind kind() const;
    bool self_contained() const { return kind() != DesignKind::GbarStep; }

    // P(A=1 | W=w) for self-contained kinds; throws UsageError for GbarStep.
    double eval(double w) const;

    // Flat parameter vector matching the CSV design_params column.
    std::vector<double> params() const;
    static DesignFunction from_params(DesignKind kind, std::span<const double> params);

    // Identity of the underlying payload (designs are shared by handle).
    bool same_payload(const DesignFunction& other) const { return payload_ == other.payload_; }
    const void* payload_id() const { return payload_.get(); }

    const Constant* as_constant() const;
    const Neyman* as_neyman() const;
    const GammaCate* as_gamma_cate() const;
    const GbarStep* as_gbar_step() const;

private:
    using Payload = std::variant<Constant, Neyman, GammaCate, GbarStep>;
    explicit DesignFunction(std::shared_ptr<const Payload> p) : payload_(std::move(p)) {}
    std::shared_ptr<const Payload> payload_;
};

// The smooth tilting map used by the benefit-driven design: odd about 0,
// continuous, nondecreasing, with range [nu, 1-nu].
double gamma_blend(double x, double nu, double b);

// ---------------------------------------------------------------------------
// Design sequences
// ---------------------------------------------------------------------------

// An ordered design list with run-length grouping of repeated designs and a
// single forward-pass evaluator that resolves GbarStep recursion. All g_j(1|w)
// for j < m come out of one O(runs) sweep at a fixed w.
class DesignSeq {
public:
    DesignSeq() = default;
    explicit DesignSeq(std::span<const DesignFunction> designs);

    void push(const DesignFunction& d);

    int size() const { return total_; }
    const std::vector<DesignFunction>& designs() const { return designs_; }

    // g_j(1|w)
    double eval_at(int j, double w) const;
    // (1/prefix) * sum_{j<prefix} g_j(1|w)
    double average1(double w, int prefix) const;
    double average1(double w) const { return average1(w, total_); }
    // all of g_0(1|w) .. g_{m-1}(1|w)
    std::vector<double> eval_all(double w, int prefix) const;

private:
    struct Run {
        DesignFunction fn;
        int count;
    };
    // Sweeps runs until `upto` designs are consumed; returns the running sum of
    // g_j(1|w) and optionally captures per-design values / a single design.
    double sweep(double w, int upto, std::vector<double>* out_all, int want_j,
                 double* out_j) const;

    std::vector<DesignFunction> designs_;
    std::vector<Run> runs_;
    int total_ = 0;
};

// Mean over the list of g_j(a|w); the core average-design operation.
double average_design(std::span<const DesignFunction> designs, double w, int a);

// True iff min over the grid and both arms of the average design is >= zeta.
bool positivity_check(std::span<const DesignFunction> designs,
                      std::span<const double> w_grid, double zeta);

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

// The ordered experiment record: observations plus the design used for each
// unit. Immutable after construction. gbar() memoizes the average design per
// covariate (synchronized, so a trajectory can be shared across workers).
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<Observation> obs, std::vector<DesignFunction> designs,
               std::string scenario_meta);

    // The memo cache travels; the mutex does not.
    Trajectory(const Trajectory& other);
    Trajectory(Trajectory&& other) noexcept;
    Trajectory& operator=(const Trajectory& other);
    Trajectory& operator=(Trajectory&& other) noexcept;

    std::size_t size() const { return obs_.size(); }
    const std::vector<Observation>& obs() const { return obs_; }
    const std::vector<DesignFunction>& designs() const { return designs_; }
    const std::string& scenario_meta() const { return scenario_meta_; }
    const DesignSeq& seq() const { return seq_; }

    // Average design gbar_n(a|w) over all recorded designs (memoized).
    double gbar(int a, double w) const;

    // g_j(1|w), resolving GbarStep recursion against this trajectory.
    double design_prob(int j, double w) const { return seq_.eval_at(j, w); }

    // Max |g_prob - g_i(a_i|w_i)| over units; the consistency invariant.
    double max_consistency_gap() const;

    Trajectory prefix(std::size_t m) const;

    void save_csv(std::ostream& out) const;
    static Trajectory load_csv(std::istream& in);

private:
    std::vector<Observation> obs_;
    std::vector<DesignFunction> designs_;
    std::string scenario_meta_;
    DesignSeq seq_;
    mutable std::unordered_map<std::uint64_t, double> gbar_memo_;
    mutable std::mutex memo_mutex_;
};

// ---------------------------------------------------------------------------
// Estimate reports
// ---------------------------------------------------------------------------

struct EstimateReport {
    double psi = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool has_epsilon = false;
    double epsilon = 0.0;  // fluctuation coefficient; TMLEs only
    double score_residual = 0.0;
    std::string estimator;  // ADL-TMLE | AD-TMLE | ADL-AIPW | AD-AIPW
};

double polyval(std::span<const double> coef, double w);

}  // namespace adaptrial
