#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <toml.hpp>

#include "cascade/couplings.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/errors.hpp"

namespace cascade {

enum class Pipeline { Simulate, Analytic, Reduced, Compare, Classify };
enum class SourceKind { Analytic, Manifold, Invariants, Explicit, Stationary, Random };

inline std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::Simulate: return "simulate";
        case Pipeline::Analytic: return "analytic";
        case Pipeline::Reduced: return "reduced";
        case Pipeline::Compare: return "compare";
        case Pipeline::Classify: return "classify";
    }
    return "?";
}

inline std::string to_string(SourceKind k) {
    switch (k) {
        case SourceKind::Analytic: return "analytic";
        case SourceKind::Manifold: return "manifold";
        case SourceKind::Invariants: return "invariants";
        case SourceKind::Explicit: return "explicit";
        case SourceKind::Stationary: return "stationary";
        case SourceKind::Random: return "random";
    }
    return "?";
}

struct SourceConfig {
    SourceKind kind = SourceKind::Analytic;
    double N = 1.0, E = 0.5;
    double S = std::numeric_limits<double>::quiet_NaN();  // invariants only
    double F0 = 0.0;                                       // invariants, stationary
    int direction = 1;
    int index = 1;   // stationary family
    cplx b{}, c{}, p{};
    std::vector<cplx> alpha;  // explicit
    double decay = 0.25;      // random: |alpha_n| ~ exp(-decay n)
};

struct OutputConfig {
    int snapshot_stride = 0;
    std::vector<double> sobolev_xi;
    std::vector<std::pair<int, int>> bands;
    int theta_grid = 4096;
    int fit_n_min = 32;
    int fit_n_max = 200;
    int samples = 200;         // analytic pipeline sample count
    double stop_defect = 0.0;  // 1 - x/xc at which analytic and reduced pipelines stop; 0 = default
    double compare_t_frac = 0.9;
};

struct CheckConfig {
    std::optional<double> gamma;
    double gamma_tol = 0.02;
    std::optional<double> amplitude;  // relative tolerance amplitude_tol
    double amplitude_tol = 0.02;
    std::vector<std::pair<double, double>> sobolev;  // (xi, expected slope)
    double sobolev_tol = 0.05;
    std::optional<double> drift_max;
    std::optional<double> deviation_max;
    std::optional<std::string> classification;
};

struct ScenarioConfig {
    std::string name = "scenario";
    Family family = Family::Z;
    double s = 2.0;
    double beta = 0.0;
    int L = 64;
    std::uint64_t seed = 0;
    Pipeline pipeline = Pipeline::Simulate;
    SourceConfig source;
    IntegratorConfig integrator;
    StopConditions stop;
    OutputConfig outputs;
    CheckConfig check;
};

inline Pipeline pipeline_from_string(const std::string& s) {
    for (auto p : {Pipeline::Simulate, Pipeline::Analytic, Pipeline::Reduced, Pipeline::Compare, Pipeline::Classify})
        if (to_string(p) == s) return p;
    throw ConfigError("pipeline: unknown value '" + s + "'");
}

inline SourceKind source_from_string(const std::string& s) {
    for (auto k : {SourceKind::Analytic, SourceKind::Manifold, SourceKind::Invariants, SourceKind::Explicit,
                   SourceKind::Stationary, SourceKind::Random})
        if (to_string(k) == s) return k;
    throw ConfigError("source.kind: unknown value '" + s + "'");
}

namespace detail {

class TomlReader {
public:
    TomlReader(const toml::table& t, std::string prefix) : t_(t), prefix_(std::move(prefix)) {}

    std::string path(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

    bool has(const std::string& k) const { return t_.contains(k); }

    double num(const std::string& k, double def) const {
        seen_.push_back(k);
        const toml::node* n = t_.get(k);
        if (!n) return def;
        if (auto v = n->value_exact<double>()) return *v;
        if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
        if (auto v = n->value_exact<std::string>()) {
            if (*v == "inf") return std::numeric_limits<double>::infinity();
            if (*v == "nan") return std::numeric_limits<double>::quiet_NaN();
        }
        throw ConfigError(path(k) + ": expected a number");
    }

    std::int64_t integer(const std::string& k, std::int64_t def) const {
        seen_.push_back(k);
        const toml::node* n = t_.get(k);
        if (!n) return def;
        if (auto v = n->value_exact<std::int64_t>()) return *v;
        throw ConfigError(path(k) + ": expected an integer");
    }

    bool boolean(const std::string& k, bool def) const {
        seen_.push_back(k);
        const toml::node* n = t_.get(k);
        if (!n) return def;
        if (auto v = n->value_exact<bool>()) return *v;
        throw ConfigError(path(k) + ": expected true or false");
    }

    std::string str(const std::string& k, const std::string& def) const {
        seen_.push_back(k);
        const toml::node* n = t_.get(k);
        if (!n) return def;
        if (auto v = n->value_exact<std::string>()) return *v;
        throw ConfigError(path(k) + ": expected a string");
    }

    std::vector<double> nums(const std::string& k) const {
        seen_.push_back(k);
        std::vector<double> out;
        const toml::node* n = t_.get(k);
        if (!n) return out;
        const toml::array* a = n->as_array();
        if (!a) throw ConfigError(path(k) + ": expected an array of numbers");
        for (std::size_t i = 0; i < a->size(); ++i) {
            const toml::node& e = *a->get(i);
            if (auto v = e.value_exact<double>()) out.push_back(*v);
            else if (auto w = e.value_exact<std::int64_t>()) out.push_back(static_cast<double>(*w));
            else throw ConfigError(path(k) + "[" + std::to_string(i) + "]: expected a number");
        }
        return out;
    }

    std::vector<std::vector<double>> pairs(const std::string& k) const {
        seen_.push_back(k);
        std::vector<std::vector<double>> out;
        const toml::node* n = t_.get(k);
        if (!n) return out;
        const toml::array* a = n->as_array();
        if (!a) throw ConfigError(path(k) + ": expected an array of pairs");
        for (std::size_t i = 0; i < a->size(); ++i) {
            const toml::array* e = a->get(i)->as_array();
            const std::string where = path(k) + "[" + std::to_string(i) + "]";
            if (!e || e->size() != 2) throw ConfigError(where + ": expected a two-element array");
            std::vector<double> pr;
            for (std::size_t j = 0; j < 2; ++j) {
                const toml::node& x = *e->get(j);
                if (auto v = x.value_exact<double>()) pr.push_back(*v);
                else if (auto w = x.value_exact<std::int64_t>()) pr.push_back(static_cast<double>(*w));
                else throw ConfigError(where + ": expected numbers");
            }
            out.push_back(pr);
        }
        return out;
    }

    const toml::table* sub(const std::string& k) const {
        seen_.push_back(k);
        const toml::node* n = t_.get(k);
        if (!n) return nullptr;
        if (!n->is_table()) throw ConfigError(path(k) + ": expected a table");
        return n->as_table();
    }

    void reject_unknown() const {
        for (auto&& [key, _] : t_) {
            const std::string k(key.str());
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
                throw ConfigError(path(k) + ": unknown key");
        }
    }

private:
    const toml::table& t_;
    std::string prefix_;
    mutable std::vector<std::string> seen_;
};

inline std::vector<cplx> complex_list(const std::vector<double>& re, const std::vector<double>& im,
                                      const std::string& where) {
    if (re.size() != im.size()) throw ConfigError(where + ": alpha_re and alpha_im differ in length");
    std::vector<cplx> out(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) out[i] = {re[i], im[i]};
    return out;
}

}  // namespace detail

/// Field-level validation; messages name the offending key.
inline void validate(const ScenarioConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!std::isfinite(c.s) || c.s < 1.0) fail("s: must be a finite number >= 1");
    if (c.family == Family::SzegoCubic && c.s != 1.0) fail("s: SzegoCubic requires s = 1");
    if ((c.family == Family::Y) && !(c.s > 1.0)) fail("s: family Y requires s > 1");
    if (!std::isfinite(c.beta)) fail("beta: must be finite");
    if (c.L < 1 || c.L > 1 << 16) fail("L: must lie in [1, 65536]");
    const auto& I = c.integrator;
    if (!(I.rel_tol > 0.0 && I.rel_tol < 1.0)) fail("integrator.rel_tol: must lie in (0, 1)");
    if (!(I.abs_tol >= 0.0)) fail("integrator.abs_tol: must be >= 0");
    if (!(I.max_step > 0.0)) fail("integrator.max_step: must be > 0");
    if (!(I.min_step > 0.0) || I.min_step > I.max_step) fail("integrator.min_step: must lie in (0, max_step]");
    if (!(I.initial_step > 0.0)) fail("integrator.initial_step: must be > 0");
    if (!(I.t_end >= 0.0) || !std::isfinite(I.t_end)) fail("integrator.t_end: must be finite and >= 0");
    if (I.max_steps < 1) fail("integrator.max_steps: must be >= 1");
    const auto& S = c.stop;
    if (S.x_over_xc_max < 0.0 || S.x_over_xc_max > 1.0) fail("stop.x_over_xc_max: must lie in [0, 1]");
    if (S.tail_mass_max < 0.0 || S.tail_mass_max > 1.0) fail("stop.tail_mass_max: must lie in [0, 1]");
    if (S.sobolev_cap < 0.0) fail("stop.sobolev_cap: must be >= 0");
    const auto& src = c.source;
    const bool manifold_family = c.family == Family::Z || c.family == Family::Y;
    switch (src.kind) {
        case SourceKind::Analytic:
            if (!manifold_family && c.family != Family::BetaZ)
                fail("source.kind: analytic data exists only for families Z, Y and BetaZ");
            if (!(src.N > 0.0)) fail("source.N: must be > 0");
            if (c.family != Family::Y && !(c.s > 1.0)) fail("s: analytic Z data requires s > 1");
            break;
        case SourceKind::Manifold:
        case SourceKind::Invariants:
            if (!manifold_family) fail("source.kind: manifold data exists only for families Z and Y");
            if (src.kind == SourceKind::Invariants) {
                if (!(src.N > 0.0)) fail("source.N: must be > 0");
                if (!(src.E >= 0.0)) fail("source.E: must be >= 0");
                if (!std::isfinite(src.S)) fail("source.S: required for invariants data");
                if (src.direction != 1 && src.direction != -1) fail("source.direction: must be +1 or -1");
            }
            break;
        case SourceKind::Explicit:
            if (static_cast<int>(src.alpha.size()) > c.L + 1) fail("source.alpha_re: more entries than L + 1");
            if (src.alpha.empty()) fail("source.alpha_re: must not be empty");
            break;
        case SourceKind::Stationary:
            if (c.family != Family::Z) fail("source.kind: stationary families are defined for family Z");
            if (src.index < 1 || src.index > 3) fail("source.index: must be 1, 2 or 3");
            if (!(src.N > 0.0)) fail("source.N: must be > 0");
            break;
        case SourceKind::Random:
            if (!(src.N > 0.0)) fail("source.N: must be > 0");
            if (!(src.decay >= 0.0)) fail("source.decay: must be >= 0");
            break;
    }
    if (!manifold_family && (c.pipeline == Pipeline::Analytic || c.pipeline == Pipeline::Reduced ||
                             c.pipeline == Pipeline::Compare))
        fail("pipeline: " + to_string(c.pipeline) + " needs family Z or Y");
    const auto& o = c.outputs;
    if (o.snapshot_stride < 0) fail("outputs.snapshot_stride: must be >= 0");
    for (auto [lo, hi] : o.bands) {
        if (lo > hi) fail("outputs.bands: empty band [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        if (lo < 0 || hi > c.L) fail("outputs.bands: band outside [0, L]");
    }
    for (std::size_t i = 0; i < o.bands.size(); ++i)
        for (std::size_t j = i + 1; j < o.bands.size(); ++j)
            if (!(o.bands[i].second < o.bands[j].first || o.bands[j].second < o.bands[i].first))
                fail("outputs.bands: bands overlap");
    if (o.theta_grid != 0 && o.theta_grid < 2 * c.L) fail("outputs.theta_grid: must be 0 or >= 2L");
    if (o.fit_n_min < 8) fail("outputs.fit_n_min: must be >= 8");
    if (o.fit_n_max <= o.fit_n_min) fail("outputs.fit_n_max: must exceed fit_n_min");
    if (o.samples < 8) fail("outputs.samples: must be >= 8");
    if (o.stop_defect < 0.0 || o.stop_defect >= 1.0) fail("outputs.stop_defect: must lie in [0, 1)");
    if (!(o.compare_t_frac > 0.0 && o.compare_t_frac <= 1.0)) fail("outputs.compare_t_frac: must lie in (0, 1]");
    if (!(c.check.gamma_tol > 0.0)) fail("check.gamma_tol: must be > 0");
    if (!(c.check.sobolev_tol > 0.0)) fail("check.sobolev_tol: must be > 0");
    if (!(c.check.amplitude_tol > 0.0)) fail("check.amplitude_tol: must be > 0");
}

inline ScenarioConfig parse_config(const toml::table& root) {
    using detail::TomlReader;
    ScenarioConfig c;
    TomlReader r(root, "");
    c.name = r.str("name", c.name);
    try {
        c.family = family_from_string(r.str("family", "Z"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("family: ") + e.what());
    }
    c.s = r.num("s", c.s);
    c.beta = r.num("beta", c.beta);
    c.L = static_cast<int>(r.integer("L", c.L));
    const std::int64_t seed = r.integer("seed", 0);
    if (seed < 0) throw ConfigError("seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.pipeline = pipeline_from_string(r.str("pipeline", "simulate"));

    if (auto* t = r.sub("source")) {
        TomlReader q(*t, "source");
        auto& s = c.source;
        s.kind = source_from_string(q.str("kind", "analytic"));
        s.N = q.num("N", s.N);
        s.E = q.num("E", s.E);
        s.S = q.num("S", s.S);
        s.F0 = q.num("F0", s.F0);
        s.direction = static_cast<int>(q.integer("direction", s.direction));
        s.index = static_cast<int>(q.integer("index", s.index));
        s.b = {q.num("b_re", 0.0), q.num("b_im", 0.0)};
        s.c = {q.num("c_re", 0.0), q.num("c_im", 0.0)};
        s.p = {q.num("p_re", 0.0), q.num("p_im", 0.0)};
        s.alpha = detail::complex_list(q.nums("alpha_re"), q.nums("alpha_im"), "source");
        s.decay = q.num("decay", s.decay);
        q.reject_unknown();
    }
    if (auto* t = r.sub("integrator")) {
        TomlReader q(*t, "integrator");
        auto& I = c.integrator;
        I.rel_tol = q.num("rel_tol", I.rel_tol);
        I.abs_tol = q.num("abs_tol", I.abs_tol);
        I.max_step = q.num("max_step", I.max_step);
        I.min_step = q.num("min_step", I.min_step);
        I.initial_step = q.num("initial_step", I.initial_step);
        I.t_end = q.num("t_end", I.t_end);
        I.max_steps = q.integer("max_steps", I.max_steps);
        q.reject_unknown();
    }
    if (auto* t = r.sub("stop")) {
        TomlReader q(*t, "stop");
        auto& S = c.stop;
        S.x_over_xc_max = q.num("x_over_xc_max", S.x_over_xc_max);
        S.tail_mass_max = q.num("tail_mass_max", S.tail_mass_max);
        S.sobolev_cap = q.num("sobolev_cap", S.sobolev_cap);
        S.sobolev_cap_xi = q.num("sobolev_cap_xi", S.sobolev_cap_xi);
        q.reject_unknown();
    }
    if (auto* t = r.sub("outputs")) {
        TomlReader q(*t, "outputs");
        auto& o = c.outputs;
        o.snapshot_stride = static_cast<int>(q.integer("snapshot_stride", o.snapshot_stride));
        o.sobolev_xi = q.nums("sobolev_xi");
        for (auto& pr : q.pairs("bands")) {
            if (pr[0] != std::floor(pr[0]) || pr[1] != std::floor(pr[1]))
                throw ConfigError("outputs.bands: mode indices must be integers");
            o.bands.emplace_back(static_cast<int>(pr[0]), static_cast<int>(pr[1]));
        }
        if (q.has("bands") && o.bands.empty()) throw ConfigError("outputs.bands: empty band list");
        o.theta_grid = static_cast<int>(q.integer("theta_grid", o.theta_grid));
        o.fit_n_min = static_cast<int>(q.integer("fit_n_min", o.fit_n_min));
        o.fit_n_max = static_cast<int>(q.integer("fit_n_max", o.fit_n_max));
        o.samples = static_cast<int>(q.integer("samples", o.samples));
        o.stop_defect = q.num("stop_defect", o.stop_defect);
        o.compare_t_frac = q.num("compare_t_frac", o.compare_t_frac);
        q.reject_unknown();
    }
    if (auto* t = r.sub("check")) {
        TomlReader q(*t, "check");
        auto& k = c.check;
        if (q.has("gamma")) k.gamma = q.num("gamma", 0.0);
        k.gamma_tol = q.num("gamma_tol", k.gamma_tol);
        if (q.has("amplitude")) k.amplitude = q.num("amplitude", 0.0);
        k.amplitude_tol = q.num("amplitude_tol", k.amplitude_tol);
        for (auto& pr : q.pairs("sobolev")) k.sobolev.emplace_back(pr[0], pr[1]);
        k.sobolev_tol = q.num("sobolev_tol", k.sobolev_tol);
        if (q.has("drift_max")) k.drift_max = q.num("drift_max", 0.0);
        if (q.has("deviation_max")) k.deviation_max = q.num("deviation_max", 0.0);
        if (q.has("classification")) k.classification = q.str("classification", "");
        q.reject_unknown();
    }
    r.reject_unknown();
    validate(c);
    return c;
}

inline ScenarioConfig parse_config_string(const std::string& text, const std::string& origin = "<string>") {
    try {
        return parse_config(toml::parse(text, origin));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw ConfigError(os.str());
    }
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path);
}

/// 17 significant digits, so every double survives a round trip.
inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

// TOML floats need a '.', an exponent, or a special value.
inline std::string toml_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::string s = fmt17(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline std::string toml_str(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out + "\"";
}

inline std::string toml_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + toml_num(v[i]);
    return out + "]";
}

}  // namespace detail

inline std::string to_toml(const ScenarioConfig& c) {
    using detail::toml_list;
    using detail::toml_num;
    using detail::toml_str;
    std::ostringstream o;
    o << "name = " << toml_str(c.name) << "\n";
    o << "family = " << toml_str(to_string(c.family)) << "\n";
    o << "s = " << toml_num(c.s) << "\n";
    o << "beta = " << toml_num(c.beta) << "\n";
    o << "L = " << c.L << "\n";
    o << "seed = " << c.seed << "\n";
    o << "pipeline = " << toml_str(to_string(c.pipeline)) << "\n";

    const auto& s = c.source;
    o << "\n[source]\nkind = " << toml_str(to_string(s.kind)) << "\n";
    o << "N = " << toml_num(s.N) << "\nE = " << toml_num(s.E) << "\n";
    if (!std::isnan(s.S)) o << "S = " << toml_num(s.S) << "\n";
    o << "F0 = " << toml_num(s.F0) << "\ndirection = " << s.direction << "\nindex = " << s.index << "\n";
    o << "b_re = " << toml_num(s.b.real()) << "\nb_im = " << toml_num(s.b.imag()) << "\n";
    o << "c_re = " << toml_num(s.c.real()) << "\nc_im = " << toml_num(s.c.imag()) << "\n";
    o << "p_re = " << toml_num(s.p.real()) << "\np_im = " << toml_num(s.p.imag()) << "\n";
    if (!s.alpha.empty()) {
        std::vector<double> re, im;
        for (auto& a : s.alpha) {
            re.push_back(a.real());
            im.push_back(a.imag());
        }
        o << "alpha_re = " << toml_list(re) << "\nalpha_im = " << toml_list(im) << "\n";
    }
    o << "decay = " << toml_num(s.decay) << "\n";

    const auto& I = c.integrator;
    o << "\n[integrator]\nrel_tol = " << toml_num(I.rel_tol) << "\nabs_tol = " << toml_num(I.abs_tol)
      << "\nmax_step = " << toml_num(I.max_step) << "\nmin_step = " << toml_num(I.min_step)
      << "\ninitial_step = " << toml_num(I.initial_step) << "\nt_end = " << toml_num(I.t_end)
      << "\nmax_steps = " << I.max_steps << "\n";

    const auto& S = c.stop;
    o << "\n[stop]\nx_over_xc_max = " << toml_num(S.x_over_xc_max) << "\ntail_mass_max = " << toml_num(S.tail_mass_max)
      << "\nsobolev_cap = " << toml_num(S.sobolev_cap) << "\nsobolev_cap_xi = " << toml_num(S.sobolev_cap_xi) << "\n";

    const auto& out = c.outputs;
    o << "\n[outputs]\nsnapshot_stride = " << out.snapshot_stride << "\nsobolev_xi = " << toml_list(out.sobolev_xi)
      << "\n";
    if (!out.bands.empty()) {
        o << "bands = [";
        for (std::size_t i = 0; i < out.bands.size(); ++i)
            o << (i ? ", " : "") << "[" << out.bands[i].first << ", " << out.bands[i].second << "]";
        o << "]\n";
    }
    o << "theta_grid = " << out.theta_grid << "\nfit_n_min = " << out.fit_n_min << "\nfit_n_max = " << out.fit_n_max
      << "\nsamples = " << out.samples << "\nstop_defect = " << toml_num(out.stop_defect)
      << "\ncompare_t_frac = " << toml_num(out.compare_t_frac) << "\n";

    const auto& k = c.check;
    o << "\n[check]\n";
    if (k.gamma) o << "gamma = " << toml_num(*k.gamma) << "\n";
    o << "gamma_tol = " << toml_num(k.gamma_tol) << "\n";
    if (k.amplitude) o << "amplitude = " << toml_num(*k.amplitude) << "\n";
    o << "amplitude_tol = " << toml_num(k.amplitude_tol) << "\n";
    if (!k.sobolev.empty()) {
        o << "sobolev = [";
        for (std::size_t i = 0; i < k.sobolev.size(); ++i)
            o << (i ? ", " : "") << "[" << toml_num(k.sobolev[i].first) << ", " << toml_num(k.sobolev[i].second) << "]";
        o << "]\n";
    }
    o << "sobolev_tol = " << toml_num(k.sobolev_tol) << "\n";
    if (k.drift_max) o << "drift_max = " << toml_num(*k.drift_max) << "\n";
    if (k.deviation_max) o << "deviation_max = " << toml_num(*k.deviation_max) << "\n";
    if (k.classification) o << "classification = " << toml_str(*k.classification) << "\n";
    return o.str();
}

namespace detail {
inline bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
}  // namespace detail

/// Field-by-field equality; returns the first differing field name, empty if equal.
inline std::string config_difference(const ScenarioConfig& a, const ScenarioConfig& b) {
    using detail::same;
    if (a.name != b.name) return "name";
    if (a.family != b.family) return "family";
    if (!same(a.s, b.s)) return "s";
    if (!same(a.beta, b.beta)) return "beta";
    if (a.L != b.L) return "L";
    if (a.seed != b.seed) return "seed";
    if (a.pipeline != b.pipeline) return "pipeline";
    const auto &x = a.source, &y = b.source;
    if (x.kind != y.kind) return "source.kind";
    if (!same(x.N, y.N)) return "source.N";
    if (!same(x.E, y.E)) return "source.E";
    if (!same(x.S, y.S)) return "source.S";
    if (!same(x.F0, y.F0)) return "source.F0";
    if (x.direction != y.direction) return "source.direction";
    if (x.index != y.index) return "source.index";
    if (x.b != y.b) return "source.b";
    if (x.c != y.c) return "source.c";
    if (x.p != y.p) return "source.p";
    if (x.alpha != y.alpha) return "source.alpha";
    if (!same(x.decay, y.decay)) return "source.decay";
    const auto &I = a.integrator, &J = b.integrator;
    if (!same(I.rel_tol, J.rel_tol)) return "integrator.rel_tol";
    if (!same(I.abs_tol, J.abs_tol)) return "integrator.abs_tol";
    if (!same(I.max_step, J.max_step)) return "integrator.max_step";
    if (!same(I.min_step, J.min_step)) return "integrator.min_step";
    if (!same(I.initial_step, J.initial_step)) return "integrator.initial_step";
    if (!same(I.t_end, J.t_end)) return "integrator.t_end";
    if (I.max_steps != J.max_steps) return "integrator.max_steps";
    if (!same(a.stop.x_over_xc_max, b.stop.x_over_xc_max)) return "stop.x_over_xc_max";
    if (!same(a.stop.tail_mass_max, b.stop.tail_mass_max)) return "stop.tail_mass_max";
    if (!same(a.stop.sobolev_cap, b.stop.sobolev_cap)) return "stop.sobolev_cap";
    if (!same(a.stop.sobolev_cap_xi, b.stop.sobolev_cap_xi)) return "stop.sobolev_cap_xi";
    const auto &o = a.outputs, &p = b.outputs;
    if (o.snapshot_stride != p.snapshot_stride) return "outputs.snapshot_stride";
    if (o.sobolev_xi != p.sobolev_xi) return "outputs.sobolev_xi";
    if (o.bands != p.bands) return "outputs.bands";
    if (o.theta_grid != p.theta_grid) return "outputs.theta_grid";
    if (o.fit_n_min != p.fit_n_min) return "outputs.fit_n_min";
    if (o.fit_n_max != p.fit_n_max) return "outputs.fit_n_max";
    if (o.samples != p.samples) return "outputs.samples";
    if (!same(o.stop_defect, p.stop_defect)) return "outputs.stop_defect";
    if (!same(o.compare_t_frac, p.compare_t_frac)) return "outputs.compare_t_frac";
    const auto &k = a.check, &m = b.check;
    if (k.gamma != m.gamma) return "check.gamma";
    if (!same(k.gamma_tol, m.gamma_tol)) return "check.gamma_tol";
    if (k.amplitude != m.amplitude) return "check.amplitude";
    if (!same(k.amplitude_tol, m.amplitude_tol)) return "check.amplitude_tol";
    if (k.sobolev != m.sobolev) return "check.sobolev";
    if (!same(k.sobolev_tol, m.sobolev_tol)) return "check.sobolev_tol";
    if (k.drift_max != m.drift_max) return "check.drift_max";
    if (k.deviation_max != m.deviation_max) return "check.deviation_max";
    if (k.classification != m.classification) return "check.classification";
    return "";
}

}  // namespace cascade
