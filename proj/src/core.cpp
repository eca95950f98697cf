#include "adaptrial/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "adaptrial/errors.hpp"

namespace adaptrial {

double polyval(std::span<const double> coef, double w) {
    double v = 0.0;
    for (std::size_t k = coef.size(); k-- > 0;) v = v * w + coef[k];
    return v;
}

Observation::Observation(double w_, int a_, double y_, double g_prob_)
    : w(w_), a(a_), y(y_), g_prob(g_prob_) {
    if (a != 0 && a != 1) throw UsageError("Observation: treatment must be 0 or 1");
    if (!std::isfinite(y)) throw UsageError("Observation: outcome must be finite");
    if (!(g_prob >= 0.0 && g_prob <= 1.0))
        throw UsageError("Observation: g_prob must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// NeymanPrimitive
// ---------------------------------------------------------------------------

NeymanPrimitive::NeymanPrimitive(std::vector<double> var_coef1,
                                 std::vector<double> var_coef0, double var_floor)
    : var_coef1_(std::move(var_coef1)),
      var_coef0_(std::move(var_coef0)),
      var_floor_(var_floor) {
    if (var_coef1_.empty() || var_coef0_.empty())
        throw UsageError("NeymanPrimitive: empty variance coefficients");
    if (!(var_floor_ > 0.0)) throw UsageError("NeymanPrimitive: var_floor must be > 0");
}

double NeymanPrimitive::sd(int arm, double w) const {
    double v = polyval(arm == 1 ? var_coef1_ : var_coef0_, w);
    return std::sqrt(std::max(var_floor_, v));
}

double NeymanPrimitive::operator()(double w) const {
    const double s1 = sd(1, w);
    const double s0 = sd(0, w);
    return s1 / (s1 + s0);
}

// ---------------------------------------------------------------------------
// gamma_blend
// ---------------------------------------------------------------------------

double gamma_blend(double x, double nu, double b) {
    if (!(nu >= 0.0 && nu <= 0.5)) throw UsageError("gamma_blend: nu must lie in [0, 0.5]");
    if (!(b > 0.0)) throw UsageError("gamma_blend: b must be > 0");
    if (x <= -b) return nu;
    if (x >= b) return 1.0 - nu;
    const double c = 0.5 - nu;
    return -(c / (2.0 * b * b * b)) * x * x * x + (3.0 * c / (2.0 * b)) * x + 0.5;
}

// ---------------------------------------------------------------------------
// DesignFunction
// ---------------------------------------------------------------------------

const char* design_kind_name(DesignKind k) {
    switch (k) {
        case DesignKind::Constant: return "constant";
        case DesignKind::Neyman: return "neyman";
        case DesignKind::GammaCate: return "gamma_cate";
        case DesignKind::GbarStep: return "gbar_step";
    }
    return "?";
}

DesignKind design_kind_from_name(const std::string& name) {
    if (name == "constant") return DesignKind::Constant;
    if (name == "neyman") return DesignKind::Neyman;
    if (name == "gamma_cate") return DesignKind::GammaCate;
    if (name == "gbar_step") return DesignKind::GbarStep;
    throw UsageError("unknown design kind: " + name);
}

DesignFunction DesignFunction::constant(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("constant design: p must lie in [0, 1]");
    return DesignFunction(std::make_shared<Payload>(Constant{p}));
}

DesignFunction DesignFunction::neyman(NeymanPrimitivePtr prim, double clip_lo) {
    if (!prim) throw UsageError("neyman design: null primitive");
    if (!(clip_lo >= 0.0 && clip_lo < 0.5)) throw UsageError("neyman design: bad clip_lo");
    return DesignFunction(std::make_shared<Payload>(Neyman{std::move(prim), clip_lo}));
}

DesignFunction DesignFunction::gamma_cate(std::vector<double> cate_coef, double nu, double b) {
    if (cate_coef.empty()) throw UsageError("gamma_cate design: empty CATE coefficients");
    if (!(nu >= 0.0 && nu <= 0.5)) throw UsageError("gamma_cate design: nu must lie in [0, 0.5]");
    if (!(b > 0.0)) throw UsageError("gamma_cate design: b must be > 0");
    return DesignFunction(std::make_shared<Payload>(GammaCate{std::move(cate_coef), nu, b}));
}

DesignFunction DesignFunction::gbar_step(
    int prior_count, std::vector<std::pair<double, NeymanPrimitivePtr>> target) {
    if (prior_count < 0) throw UsageError("gbar_step design: negative prior count");
    if (target.empty()) throw UsageError("gbar_step design: empty target");
    return DesignFunction(std::make_shared<Payload>(GbarStep{prior_count, std::move(target)}));
}

DesignKind DesignFunction::kind() const {
    return static_cast<DesignKind>(payload_->index());
}

const DesignFunction::Constant* DesignFunction::as_constant() const {
    return std::get_if<Constant>(payload_.get());
}
const DesignFunction::Neyman* DesignFunction::as_neyman() const {
    return std::get_if<Neyman>(payload_.get());
}
const DesignFunction::GammaCate* DesignFunction::as_gamma_cate() const {
    return std::get_if<GammaCate>(payload_.get());
}
const DesignFunction::GbarStep* DesignFunction::as_gbar_step() const {
    return std::get_if<GbarStep>(payload_.get());
}

double DesignFunction::eval(double w) const {
    switch (kind()) {
        case DesignKind::Constant:
            return as_constant()->p;
        case DesignKind::Neyman: {
            const auto& d = *as_neyman();
            return std::clamp((*d.prim)(w), d.clip_lo, 1.0 - d.clip_lo);
        }
        case DesignKind::GammaCate: {
            const auto& d = *as_gamma_cate();
            return gamma_blend(polyval(d.cate_coef, w), d.nu, d.b);
        }
        case DesignKind::GbarStep:
            throw UsageError(
                "gbar_step design is only evaluable within its design sequence");
    }
    return 0.0;
}

std::vector<double> DesignFunction::params() const {
    std::vector<double> out;
    switch (kind()) {
        case DesignKind::Constant:
            out.push_back(as_constant()->p);
            break;
        case DesignKind::Neyman: {
            const auto& d = *as_neyman();
            out.push_back(d.clip_lo);
            out.push_back(d.prim->var_floor());
            out.push_back(static_cast<double>(d.prim->var_coef(1).size() - 1));
            for (double c : d.prim->var_coef(1)) out.push_back(c);
            for (double c : d.prim->var_coef(0)) out.push_back(c);
            break;
        }
        case DesignKind::GammaCate: {
            const auto& d = *as_gamma_cate();
            out.push_back(d.nu);
            out.push_back(d.b);
            out.push_back(static_cast<double>(d.cate_coef.size() - 1));
            for (double c : d.cate_coef) out.push_back(c);
            break;
        }
        case DesignKind::GbarStep: {
            const auto& d = *as_gbar_step();
            out.push_back(static_cast<double>(d.prior_count));
            out.push_back(static_cast<double>(d.target.size()));
            for (const auto& [weight, prim] : d.target) {
                out.push_back(weight);
                out.push_back(prim->var_floor());
                out.push_back(static_cast<double>(prim->var_coef(1).size() - 1));
                for (double c : prim->var_coef(1)) out.push_back(c);
                for (double c : prim->var_coef(0)) out.push_back(c);
            }
            break;
        }
    }
    return out;
}

namespace {

NeymanPrimitivePtr read_prim(std::span<const double> p, std::size_t& pos, double var_floor) {
    if (pos >= p.size()) throw UsageError("design params: truncated primitive");
    int degree = static_cast<int>(p[pos++]);
    if (degree < 0 || pos + 2 * (degree + 1) > p.size())
        throw UsageError("design params: bad primitive degree");
    std::vector<double> c1(p.begin() + pos, p.begin() + pos + degree + 1);
    pos += degree + 1;
    std::vector<double> c0(p.begin() + pos, p.begin() + pos + degree + 1);
    pos += degree + 1;
    return std::make_shared<NeymanPrimitive>(std::move(c1), std::move(c0), var_floor);
}

}  // namespace

DesignFunction DesignFunction::from_params(DesignKind kind, std::span<const double> p) {
    switch (kind) {
        case DesignKind::Constant:
            if (p.size() != 1) throw UsageError("constant design: expected 1 parameter");
            return constant(p[0]);
        case DesignKind::Neyman: {
            if (p.size() < 3) throw UsageError("neyman design: truncated parameters");
            double clip_lo = p[0], var_floor = p[1];
            std::size_t pos = 2;
            auto prim = read_prim(p, pos, var_floor);
            if (pos != p.size()) throw UsageError("neyman design: trailing parameters");
            return neyman(std::move(prim), clip_lo);
        }
        case DesignKind::GammaCate: {
            if (p.size() < 4) throw UsageError("gamma_cate design: truncated parameters");
            double nu = p[0], b = p[1];
            int degree = static_cast<int>(p[2]);
            if (degree < 0 || p.size() != 3 + static_cast<std::size_t>(degree) + 1)
                throw UsageError("gamma_cate design: bad coefficient count");
            return gamma_cate(std::vector<double>(p.begin() + 3, p.end()), nu, b);
        }
        case DesignKind::GbarStep: {
            if (p.size() < 2) throw UsageError("gbar_step design: truncated parameters");
            int prior_count = static_cast<int>(p[0]);
            int k = static_cast<int>(p[1]);
            std::size_t pos = 2;
            std::vector<std::pair<double, NeymanPrimitivePtr>> target;
            for (int j = 0; j < k; ++j) {
                if (pos + 2 > p.size()) throw UsageError("gbar_step design: truncated target");
                double weight = p[pos++];
                double var_floor = p[pos++];
                target.emplace_back(weight, read_prim(p, pos, var_floor));
            }
            if (pos != p.size()) throw UsageError("gbar_step design: trailing parameters");
            return gbar_step(prior_count, std::move(target));
        }
    }
    throw UsageError("design params: unknown kind");
}

// ---------------------------------------------------------------------------
// DesignSeq
// ---------------------------------------------------------------------------

DesignSeq::DesignSeq(std::span<const DesignFunction> designs) {
    for (const auto& d : designs) push(d);
}

void DesignSeq::push(const DesignFunction& d) {
    designs_.push_back(d);
    if (!runs_.empty() && runs_.back().fn.same_payload(d) &&
        d.kind() != DesignKind::GbarStep) {
        ++runs_.back().count;
    } else {
        runs_.push_back({d, 1});
    }
    ++total_;
}

double DesignSeq::sweep(double w, int upto, std::vector<double>* out_all, int want_j,
                        double* out_j) const {
    // Memo for Neyman primitives shared across steps (keyed by identity).
    std::vector<std::pair<const NeymanPrimitive*, double>> prim_memo;
    auto prim_val = [&](const NeymanPrimitivePtr& prim) {
        for (const auto& [ptr, val] : prim_memo)
            if (ptr == prim.get()) return val;
        double v = (*prim)(w);
        prim_memo.emplace_back(prim.get(), v);
        return v;
    };

    double running_sum = 0.0;
    int consumed = 0;
    for (const Run& run : runs_) {
        if (consumed >= upto) break;
        const int take = std::min(run.count, upto - consumed);
        if (run.fn.kind() == DesignKind::GbarStep) {
            // count is always 1 for gbar steps
            const auto& d = *run.fn.as_gbar_step();
            double target = 0.0;
            for (const auto& [weight, prim] : d.target) target += weight * prim_val(prim);
            const int j = consumed;
            const double v =
                std::clamp((j + 1) * target - running_sum, 0.0, 1.0);
            if (out_all) out_all->push_back(v);
            if (want_j == j && out_j) *out_j = v;
            running_sum += v;
            consumed += 1;
            continue;
        }
        double v;
        switch (run.fn.kind()) {
            case DesignKind::Constant:
                v = run.fn.as_constant()->p;
                break;
            case DesignKind::Neyman: {
                const auto& d = *run.fn.as_neyman();
                v = std::clamp(prim_val(d.prim), d.clip_lo, 1.0 - d.clip_lo);
                break;
            }
            case DesignKind::GammaCate:
                v = run.fn.eval(w);
                break;
            default:
                v = 0.0;
        }
        if (out_all)
            for (int t = 0; t < take; ++t) out_all->push_back(v);
        if (want_j >= consumed && want_j < consumed + take && out_j) *out_j = v;
        running_sum += v * take;
        consumed += take;
    }
    return running_sum;
}

double DesignSeq::eval_at(int j, double w) const {
    if (j < 0 || j >= total_) throw UsageError("DesignSeq::eval_at: index out of range");
    double out = 0.0;
    sweep(w, j + 1, nullptr, j, &out);
    return out;
}

double DesignSeq::average1(double w, int prefix) const {
    if (prefix <= 0 || prefix > total_)
        throw UsageError("DesignSeq::average1: bad prefix length");
    // A block of identical constants averages to that constant exactly.
    if (runs_.size() == 1 && runs_[0].fn.kind() == DesignKind::Constant)
        return runs_[0].fn.as_constant()->p;
    return sweep(w, prefix, nullptr, -1, nullptr) / prefix;
}

std::vector<double> DesignSeq::eval_all(double w, int prefix) const {
    if (prefix < 0 || prefix > total_)
        throw UsageError("DesignSeq::eval_all: bad prefix length");
    std::vector<double> out;
    out.reserve(prefix);
    sweep(w, prefix, &out, -1, nullptr);
    return out;
}

double average_design(std::span<const DesignFunction> designs, double w, int a) {
    if (designs.empty()) throw UsageError("average_design: empty design list");
    if (a != 0 && a != 1) throw UsageError("average_design: treatment must be 0 or 1");
    DesignSeq seq(designs);
    const double m1 = seq.average1(w, seq.size());
    return a == 1 ? m1 : 1.0 - m1;
}

bool positivity_check(std::span<const DesignFunction> designs,
                      std::span<const double> w_grid, double zeta) {
    if (!(zeta > 0.0 && zeta <= 0.5)) throw UsageError("positivity_check: zeta must lie in (0, 0.5]");
    if (designs.empty()) throw UsageError("positivity_check: empty design list");
    DesignSeq seq(designs);
    for (double w : w_grid) {
        const double m1 = seq.average1(w, seq.size());
        if (m1 < zeta || 1.0 - m1 < zeta) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

Trajectory::Trajectory(std::vector<Observation> obs, std::vector<DesignFunction> designs,
                       std::string scenario_meta)
    : obs_(std::move(obs)),
      designs_(std::move(designs)),
      scenario_meta_(std::move(scenario_meta)),
      seq_(designs_) {
    if (obs_.size() != designs_.size())
        throw UsageError("Trajectory: observation/design count mismatch");
}

Trajectory::Trajectory(const Trajectory& other)
    : obs_(other.obs_),
      designs_(other.designs_),
      scenario_meta_(other.scenario_meta_),
      seq_(other.seq_) {
    std::lock_guard<std::mutex> lock(other.memo_mutex_);
    gbar_memo_ = other.gbar_memo_;
}

Trajectory::Trajectory(Trajectory&& other) noexcept
    : obs_(std::move(other.obs_)),
      designs_(std::move(other.designs_)),
      scenario_meta_(std::move(other.scenario_meta_)),
      seq_(std::move(other.seq_)) {
    std::lock_guard<std::mutex> lock(other.memo_mutex_);
    gbar_memo_ = std::move(other.gbar_memo_);
}

Trajectory& Trajectory::operator=(const Trajectory& other) {
    if (this == &other) return *this;
    Trajectory tmp(other);
    *this = std::move(tmp);
    return *this;
}

Trajectory& Trajectory::operator=(Trajectory&& other) noexcept {
    if (this == &other) return *this;
    obs_ = std::move(other.obs_);
    designs_ = std::move(other.designs_);
    scenario_meta_ = std::move(other.scenario_meta_);
    seq_ = std::move(other.seq_);
    std::lock_guard<std::mutex> lock(other.memo_mutex_);
    gbar_memo_ = std::move(other.gbar_memo_);
    return *this;
}

double Trajectory::gbar(int a, double w) const {
    if (obs_.empty()) throw UsageError("Trajectory::gbar: empty trajectory");
    if (a != 0 && a != 1) throw UsageError("Trajectory::gbar: treatment must be 0 or 1");
    const std::uint64_t key = std::bit_cast<std::uint64_t>(w);
    double m1;
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = gbar_memo_.find(key);
        if (it != gbar_memo_.end()) {
            m1 = it->second;
        } else {
            m1 = seq_.average1(w, seq_.size());
            gbar_memo_.emplace(key, m1);
        }
    }
    return a == 1 ? m1 : 1.0 - m1;
}

double Trajectory::max_consistency_gap() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const double p1 = seq_.eval_at(static_cast<int>(i), obs_[i].w);
        const double expect = obs_[i].a == 1 ? p1 : 1.0 - p1;
        worst = std::max(worst, std::abs(obs_[i].g_prob - expect));
    }
    return worst;
}

Trajectory Trajectory::prefix(std::size_t m) const {
    if (m == 0 || m > obs_.size()) throw UsageError("Trajectory::prefix: bad length");
    return Trajectory(std::vector<Observation>(obs_.begin(), obs_.begin() + m),
                      std::vector<DesignFunction>(designs_.begin(), designs_.begin() + m),
                      scenario_meta_);
}

// ---------------------------------------------------------------------------
// CSV round trip
// ---------------------------------------------------------------------------

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void Trajectory::save_csv(std::ostream& out) const {
    out << "# scenario=" << scenario_meta_ << "\n";
    out << "unit_index,w,a,y,g_prob,design_kind,design_params\n";
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const auto& o = obs_[i];
        out << i << ',' << fmt_real(o.w) << ',' << o.a << ',' << fmt_real(o.y) << ','
            << fmt_real(o.g_prob) << ',' << design_kind_name(designs_[i].kind()) << ',';
        const auto params = designs_[i].params();
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (k) out << ';';
            out << fmt_real(params[k]);
        }
        out << '\n';
    }
}

Trajectory Trajectory::load_csv(std::istream& in) {
    std::string line;
    std::string meta;
    std::vector<Observation> obs;
    std::vector<DesignFunction> designs;
    // Primitive payload dedup so reloaded gbar_step runs share primitives.
    std::map<std::vector<double>, DesignFunction> payload_cache;

    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq != std::string::npos) meta = line.substr(eq + 1);
            continue;
        }
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        auto fields = split(line, ',');
        if (fields.size() != 7) throw UsageError("trajectory csv: expected 7 columns");
        const double w = std::stod(fields[1]);
        const int a = std::stoi(fields[2]);
        const double y = std::stod(fields[3]);
        const double g_prob = std::stod(fields[4]);
        const DesignKind kind = design_kind_from_name(fields[5]);
        std::vector<double> params;
        if (!fields[6].empty())
            for (const auto& tok : split(fields[6], ';')) params.push_back(std::stod(tok));

        std::vector<double> cache_key = params;
        cache_key.push_back(static_cast<double>(kind));
        auto it = payload_cache.find(cache_key);
        if (it == payload_cache.end())
            it = payload_cache.emplace(cache_key, DesignFunction::from_params(kind, params)).first;
        designs.push_back(it->second);
        obs.emplace_back(w, a, y, g_prob);
    }
    return Trajectory(std::move(obs), std::move(designs), meta);
}

}  // namespace adaptrial
