#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/couplings.hpp"
#include "cascade/errors.hpp"

namespace cascade {

enum class StopReason { TEnd, Criticality, Tail, SobolevCap, StepUnderflow };

inline std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::TEnd: return "t_end";
        case StopReason::Criticality: return "criticality";
        case StopReason::Tail: return "tail";
        case StopReason::SobolevCap: return "sobolev_cap";
        case StopReason::StepUnderflow: return "step_underflow";
    }
    return "?";
}

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double max_step = 0.05;
    double min_step = 1e-14;
    double initial_step = 1e-3;
    double t_end = 1.0;
    long max_steps = 50000000;
    // Each accepted step is a sample unless sample_times is set.
    std::vector<double> sample_times;
    int snapshot_stride = 0;  // 0 disables snapshots
    bool throw_on_underflow = false;
};

struct StopConditions {
    double x_over_xc_max = 0.0;  // 0 disables
    double tail_mass_max = 0.0;
    double sobolev_cap = 0.0;
    double sobolev_cap_xi = 1.0;
};

/// One row of named diagnostics per sample.
struct RunRecord {
    std::vector<double> times;
    std::map<std::string, std::vector<double>> series;
    std::vector<double> snapshot_times;
    std::vector<std::vector<cplx>> snapshots;
    StopReason stop = StopReason::TEnd;
    long accepted_steps = 0;
    long rejected_steps = 0;
    std::vector<cplx> final_state;
    double final_time = 0.0;

    const std::vector<double>& column(const std::string& k) const {
        auto it = series.find(k);
        if (it == series.end()) throw DomainError("RunRecord has no column '" + k + "'");
        return it->second;
    }
};

using State = std::vector<cplx>;
using RhsFn = std::function<void(double, std::span<const cplx>, std::span<cplx>)>;
using Diagnostics = std::function<void(double, std::span<const cplx>, std::map<std::string, double>&)>;
using StopCheck = std::function<std::optional<StopReason>(double, std::span<const cplx>)>;

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DP5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/**
 * Adaptive Dormand-Prince 5(4) with PI step control.
 *
 * An RHS that throws AdmissibilityError during a trial step causes a rejection.
 * Stops at t_end, at the first stop check that fires, or on step underflow.
 */
inline RunRecord integrate(const RhsFn& rhs, State y, double t0, const IntegratorConfig& cfg,
                           const Diagnostics& diag = {}, const StopCheck& stop = {}) {
    using D = detail::DP5;
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol >= 0.0)) throw DomainError("tolerances must be positive");
    if (!(cfg.t_end > t0) && cfg.t_end != t0) throw DomainError("t_end must be >= t0");
    const std::size_t n = y.size();
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), yn(n);
    RunRecord rec;
    std::map<std::string, double> row;
    long sample_count = 0;

    auto record = [&](double t, const State& s) {
        rec.times.push_back(t);
        if (diag) {
            row.clear();
            diag(t, s, row);
            for (auto& [k, v] : row) rec.series[k].push_back(v);
        }
        if (cfg.snapshot_stride > 0 && sample_count % cfg.snapshot_stride == 0) {
            rec.snapshot_times.push_back(t);
            rec.snapshots.push_back(s);
        }
        ++sample_count;
    };

    double t = t0;
    record(t, y);
    if (stop) {
        if (auto r = stop(t, y)) {
            rec.stop = *r;
            rec.final_state = y;
            rec.final_time = t;
            return rec;
        }
    }
    std::size_t next_sample = 0;
    std::vector<double> samples = cfg.sample_times;
    std::sort(samples.begin(), samples.end());
    while (next_sample < samples.size() && samples[next_sample] <= t0) ++next_sample;

    rhs(t, y, k1);
    double h = std::min(cfg.initial_step, cfg.max_step);
    double err_old = 1e-4;
    bool last_rejected = false;

    auto norm_err = [&](const State& a, const State& b, const State& e) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
            acc += std::norm(e[i]) / (sc * sc);
        }
        return std::sqrt(acc / std::max<std::size_t>(n, 1));
    };

    while (t < cfg.t_end) {
        if (rec.accepted_steps + rec.rejected_steps > cfg.max_steps) throw StepUnderflow("step budget exhausted");
        double target = cfg.t_end;
        if (next_sample < samples.size()) target = std::min(target, samples[next_sample]);
        bool clipped = false;
        if (t + h >= target) {
            h = target - t;
            clipped = true;
        }
        if (h < cfg.min_step && !clipped) {
            rec.stop = StopReason::StepUnderflow;
            if (cfg.throw_on_underflow) throw StepUnderflow("step size below min_step at t=" + std::to_string(t));
            break;
        }
        bool ok = true;
        try {
            for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * D::a21 * k1[i];
            rhs(t + D::c2 * h, yt, k2);
            for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (D::a31 * k1[i] + D::a32 * k2[i]);
            rhs(t + D::c3 * h, yt, k3);
            for (std::size_t i = 0; i < n; ++i)
                yt[i] = y[i] + h * (D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]);
            rhs(t + D::c4 * h, yt, k4);
            for (std::size_t i = 0; i < n; ++i)
                yt[i] = y[i] + h * (D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] + D::a54 * k4[i]);
            rhs(t + D::c5 * h, yt, k5);
            for (std::size_t i = 0; i < n; ++i)
                yt[i] = y[i] + h * (D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] + D::a64 * k4[i] +
                                    D::a65 * k5[i]);
            rhs(t + h, yt, k6);
            for (std::size_t i = 0; i < n; ++i)
                yn[i] = y[i] + h * (D::b1 * k1[i] + D::b3 * k3[i] + D::b4 * k4[i] + D::b5 * k5[i] +
                                    D::b6 * k6[i]);
            rhs(t + h, yn, k7);
        } catch (const AdmissibilityError&) {
            ok = false;
        }
        double err = 0.0;
        if (ok) {
            for (std::size_t i = 0; i < n; ++i)
                yt[i] = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] + D::e6 * k6[i] +
                             D::e7 * k7[i]);
            err = norm_err(y, yn, yt);
            if (!std::isfinite(err)) ok = false;
        }
        if (!ok) {
            ++rec.rejected_steps;
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if (err <= 1.0) {
            t = clipped ? target : t + h;
            y.swap(yn);
            k1.swap(k7);
            ++rec.accepted_steps;
            if (clipped && next_sample < samples.size() && target == samples[next_sample]) ++next_sample;
            if (samples.empty() || clipped) record(t, y);
            double fac = 0.9 * std::pow(err, -0.17) * std::pow(std::max(err_old, 1e-10), 0.04);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            // A clipped step says nothing about the natural step size.
            if (!clipped) h = h * fac;
            h = std::min(h, cfg.max_step);
            err_old = std::max(err, 1e-10);
            last_rejected = false;
            if (stop) {
                if (auto r = stop(t, y)) {
                    if (!(samples.empty() || clipped)) record(t, y);
                    rec.stop = *r;
                    rec.final_state = y;
                    rec.final_time = t;
                    return rec;
                }
            }
        } else {
            ++rec.rejected_steps;
            double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
            last_rejected = true;
        }
    }
    if (rec.stop != StopReason::StepUnderflow) rec.stop = StopReason::TEnd;
    rec.final_state = y;
    rec.final_time = t;
    return rec;
}

inline double total_N(std::span<const cplx> a) {
    double s = 0.0;
    for (auto& v : a) s += std::norm(v);
    return s;
}

inline double total_E(std::span<const cplx> a) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += double(n) * std::norm(a[n]);
    return s;
}

/// Full-system integration with N, E, H and the supplied Sobolev orders recorded.
inline RunRecord integrate_modes(const CouplingFamily& fam, const ModeState& init, const IntegratorConfig& cfg,
                                 const StopConditions& sc = {}, const std::vector<double>& sobolev_xi = {}) {
    if (init.L() != fam.L()) throw ContractViolation("state L differs from family L");
    auto ev = std::make_shared<RhsEvaluator>(fam);
    RhsFn rhs = [ev](double, std::span<const cplx> y, std::span<cplx> dy) { ev->fast(y, dy); };
    auto ev2 = std::make_shared<RhsEvaluator>(fam);
    Diagnostics diag = [ev2, sobolev_xi](double, std::span<const cplx> y, std::map<std::string, double>& row) {
        row["N"] = total_N(y);
        row["E"] = total_E(y);
        row["H"] = ev2->hamiltonian(y);
        for (double xi : sobolev_xi) {
            double acc = 0.0;
            for (std::size_t n = 0; n < y.size(); ++n) acc += std::pow(n + 1.0, 2.0 * xi) * std::norm(y[n]);
            char key[64];
            std::snprintf(key, sizeof key, "H^%.17g", xi);
            row[key] = std::sqrt(acc);
        }
    };
    StopCheck stop;
    if (sc.tail_mass_max > 0.0 || sc.sobolev_cap > 0.0) {
        stop = [sc](double, std::span<const cplx> y) -> std::optional<StopReason> {
            const std::size_t L = y.size() - 1;
            if (sc.tail_mass_max > 0.0) {
                double tot = total_N(y), tail = 0.0;
                for (std::size_t n = static_cast<std::size_t>(std::ceil(0.9 * L)); n <= L; ++n) tail += std::norm(y[n]);
                if (tail > sc.tail_mass_max * tot) return StopReason::Tail;
            }
            if (sc.sobolev_cap > 0.0) {
                double acc = 0.0;
                for (std::size_t n = 0; n <= L; ++n) acc += std::pow(n + 1.0, 2.0 * sc.sobolev_cap_xi) * std::norm(y[n]);
                if (std::sqrt(acc) > sc.sobolev_cap) return StopReason::SobolevCap;
            }
            return std::nullopt;
        };
    }
    return integrate(rhs, init.alpha, init.t, cfg, diag, stop);
}

/// max over samples and over {N, E, H} of |v(t) - v(0)| / |v(0)|.
struct Drift {
    double N = 0.0, E = 0.0, H = 0.0;
    double max() const { return std::max({N, E, H}); }
};

inline Drift conserved_drift(const RunRecord& rec) {
    auto one = [&](const char* k) {
        auto it = rec.series.find(k);
        if (it == rec.series.end() || it->second.empty()) return 0.0;
        const auto& v = it->second;
        double ref = std::abs(v.front());
        double worst = 0.0;
        for (double x : v) worst = std::max(worst, std::abs(x - v.front()));
        return ref > 0.0 ? worst / ref : worst;
    };
    return Drift{one("N"), one("E"), one("H")};
}

struct Symmetry {
    enum Kind { Phase, ModePhase, Scale, TimeReverse } kind = Phase;
    double theta = 0.0;    // Phase: e^{i theta}; ModePhase: e^{i n theta}
    double epsilon = 1.0;  // Scale
};

/// Maps a state to the corresponding point of the transformed trajectory.
inline ModeState apply_symmetry(const ModeState& st, const Symmetry& sym) {
    ModeState out = st;
    switch (sym.kind) {
        case Symmetry::Phase:
            for (auto& a : out.alpha) a *= std::polar(1.0, sym.theta);
            break;
        case Symmetry::ModePhase:
            for (std::size_t n = 0; n < out.alpha.size(); ++n) out.alpha[n] *= std::polar(1.0, n * sym.theta);
            break;
        case Symmetry::Scale:
            if (!(sym.epsilon > 0.0)) throw DomainError("scale epsilon must be positive");
            for (auto& a : out.alpha) a *= sym.epsilon;
            out.t = st.t / (sym.epsilon * sym.epsilon);
            break;
        case Symmetry::TimeReverse:
            for (auto& a : out.alpha) a = std::conj(a);
            out.t = -st.t;
            break;
    }
    return out;
}

inline RunRecord apply_symmetry(const RunRecord& rec, const Symmetry& sym) {
    RunRecord out = rec;
    auto tmap = [&](double t) {
        if (sym.kind == Symmetry::Scale) return t / (sym.epsilon * sym.epsilon);
        if (sym.kind == Symmetry::TimeReverse) return -t;
        return t;
    };
    for (auto& t : out.times) t = tmap(t);
    for (auto& t : out.snapshot_times) t = tmap(t);
    for (std::size_t i = 0; i < out.snapshots.size(); ++i)
        out.snapshots[i] = apply_symmetry(ModeState{rec.snapshot_times[i], rec.snapshots[i]}, sym).alpha;
    out.final_state = apply_symmetry(ModeState{rec.final_time, rec.final_state}, sym).alpha;
    out.final_time = tmap(rec.final_time);
    if (sym.kind == Symmetry::Scale) {
        // N, E scale by eps^2 and H by eps^4: relative drift is unchanged.
        double e2 = sym.epsilon * sym.epsilon;
        for (const char* k : {"N", "E"})
            if (out.series.count(k)) for (auto& v : out.series[k]) v *= e2;
        if (out.series.count("H")) for (auto& v : out.series["H"]) v *= e2 * e2;
    }
    return out;
}

}  // namespace cascade
