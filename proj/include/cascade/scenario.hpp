#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cascade/analytic.hpp"
#include "cascade/config.hpp"
#include "cascade/couplings.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/manifold.hpp"
#include "cascade/observables.hpp"

namespace cascade {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Label used in summaries and by the classify subcommand.
inline std::string classification_label(const MotionClass& mc, ManifoldFamily fam) {
    switch (mc.kind) {
        case MotionKind::Cascade: return "cascade_finite_T";
        case MotionKind::Periodic: return "periodic";
        case MotionKind::Stationary:
            if (fam == ManifoldFamily::Z && mc.stationary_family > 0)
                return "stationary_family_" + std::to_string(mc.stationary_family);
            return "stationary";
    }
    return "unclassified";
}

struct Summary {
    std::string family;
    double s = kNaN, N = kNaN, E = kNaN, S = kNaN;
    std::string classification = "unclassified";
    std::optional<double> T_estimate;
    std::optional<double> gamma;
    std::optional<double> amplitude;  // power-law prefactor of the gamma fit
    std::vector<std::pair<double, double>> sobolev_exponents;
    std::optional<Drift> drift;
    std::optional<double> max_deviation;  // compare pipeline
};

struct CheckOutcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<std::string> ts_columns;           // after t
    std::vector<std::vector<double>> ts_rows;      // t first
    std::vector<std::pair<double, std::vector<cplx>>> spectra;
    std::vector<std::pair<double, std::vector<cplx>>> positions;  // theta grid is uniform
    std::vector<std::pair<double, std::vector<BandSums>>> bands;
    std::vector<std::pair<double, double>> deviation;  // (t, relative deviation)
    Summary summary;
    std::vector<CheckOutcome> checks;
    StopReason stop = StopReason::TEnd;

    bool all_checks_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.pass; });
    }
};

// ---------------------------------------------------------------- random states

/**
 * Seeded source of doubles that does not depend on the standard library's
 * distribution implementations: mt19937_64 bits mapped by hand.
 */
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double normal() {
        double u1;
        do u1 = uniform();
        while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
    cplx complex_normal() {
        const double re = normal();
        return {re, normal()};
    }

private:
    std::mt19937_64 gen_;
};

/// Gaussian modes with |alpha_n| ~ exp(-decay n), scaled to mass N.
inline ModeState random_state(int L, double N, double decay, std::uint64_t seed) {
    DeterministicRng rng(seed);
    ModeState st{0.0, std::vector<cplx>(L + 1)};
    for (int n = 0; n <= L; ++n) st.alpha[n] = rng.complex_normal() * std::exp(-decay * n);
    const double m = total_N(st.alpha);
    for (auto& a : st.alpha) a *= std::sqrt(N / m);
    return st;
}

// ---------------------------------------------------------------- sources

inline bool is_manifold_family(Family f) { return f == Family::Z || f == Family::Y; }

inline CascadeSolution analytic_solution(const ScenarioConfig& c) {
    if (c.family == Family::Z || c.family == Family::BetaZ) return z_solution(c.s, c.source.N, c.source.E);
    if (c.family == Family::Y) return y_explicit_solution(c.s, c.source.N);
    throw ConfigError("source.kind: analytic data exists only for families Z and Y");
}

/// Manifold data of the configured source, when the source has one.
inline std::optional<ManifoldState> source_manifold_state(const ScenarioConfig& c) {
    const auto& src = c.source;
    switch (src.kind) {
        case SourceKind::Analytic: {
            const auto sol = analytic_solution(c);
            return sol.family == ManifoldFamily::Z ? z_condensation_initial_data(c.s, src.N, src.E)
                                                   : y_initial_data(c.s, src.N);
        }
        case SourceKind::Manifold:
            return ManifoldState{manifold_family_of(c.family), c.s, src.b, src.c, src.p};
        case SourceKind::Invariants:
            return manifold_from_invariants(manifold_family_of(c.family), c.s, src.N, src.E, src.S, src.F0,
                                            src.direction);
        case SourceKind::Stationary:
            return stationary_state(src.index, c.s, src.F0, src.N).state;
        default:
            return std::nullopt;
    }
}

inline ModeState initial_modes(const ScenarioConfig& c, const CouplingFamily& fam) {
    const auto& src = c.source;
    if (src.kind == SourceKind::Explicit) {
        ModeState st{0.0, std::vector<cplx>(c.L + 1)};
        std::copy(src.alpha.begin(), src.alpha.end(), st.alpha.begin());
        return st;
    }
    if (src.kind == SourceKind::Random) return random_state(c.L, src.N, src.decay, c.seed);
    auto ms = source_manifold_state(c);
    if (c.family == Family::BetaZ || c.family == Family::SzegoCubic) {
        // Z-shaped data for the deformed and s = 1 families.
        ms->family = ManifoldFamily::Z;
    }
    return lift(*ms, *fam.table, c.L);
}

// ---------------------------------------------------------------- shared helpers

namespace detail {

inline std::string xi_key(double xi) {
    char key[64];
    std::snprintf(key, sizeof key, "H^%.17g", xi);
    return key;
}

/// (x/xc, F) read off modes 0..2 as if the state lay on the manifold.
inline std::pair<double, double> projected_xF(std::span<const cplx> a, ManifoldFamily fam,
                                              const SequenceTable& table) {
    if (a.size() < 3) return {kNaN, kNaN};
    const double s = table.s();
    const double w1 = fam == ManifoldFamily::Z ? table.f(1) : table.g(1);
    const double w2 = fam == ManifoldFamily::Z ? table.f(2) : table.g(2);
    if (a[1] == 0.0) return {0.0, 0.0};
    const double x = std::norm(a[2] * w1 / (w2 * a[1]));
    const double xc = s > 1.0 ? critical_x(s) : 1.0;
    const double q = x / xc;
    double F = kNaN;
    if (x < xc) F = F_of_x(GenFunContext(s), x);
    return {q, F};
}

inline double relative_deviation(std::span<const cplx> a, std::span<const cplx> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        num += std::norm(a[n] - b[n]);
        den += std::norm(b[n]);
    }
    return std::sqrt(num / den);
}

inline double default_stop_defect(const ScenarioConfig& c) {
    return c.outputs.stop_defect > 0.0 ? c.outputs.stop_defect : 1e-12;
}

/// Exponent k in Fc - F ~ (T - t)^k for a cascade of the given family and invariants.
inline double defect_power(ManifoldFamily fam, double N, double E, double S, double s) {
    if (fam == ManifoldFamily::Z) return 2.0;
    const auto [Sm, Sp] = cascade_S_bounds_y(N, E, s);
    const double scale = std::max({std::abs(N), std::abs(E), std::abs(S)});
    const bool boundary = std::abs(S - Sm) <= 1e-9 * scale || std::abs(S - Sp) <= 1e-9 * scale;
    return boundary ? 2.0 : 1.0;
}

inline void fit_sobolev(Summary& sum, const ScenarioResult& r, ManifoldFamily fam) {
    if (!sum.T_estimate) return;
    const double T = *sum.T_estimate;
    std::vector<double> t;
    for (auto& row : r.ts_rows) t.push_back(row[0]);
    for (double xi : r.config.outputs.sobolev_xi) {
        const auto it = std::find(r.ts_columns.begin(), r.ts_columns.end(), xi_key(xi));
        if (it == r.ts_columns.end()) continue;
        const std::size_t col = 1 + (it - r.ts_columns.begin());
        std::vector<double> v;
        // Y rates are stated for the sum itself, Z rates for its square root.
        for (auto& row : r.ts_rows) v.push_back(fam == ManifoldFamily::Y ? row[col] * row[col] : row[col]);
        try {
            auto [lt, lv] = last_decade(t, v, T);
            sum.sobolev_exponents.emplace_back(xi, blowup_rate_fit(lt, lv, T, RateKind::Power).exponent);
        } catch (const DomainError&) {
        }
    }
}

inline void fit_gamma(Summary& sum, std::span<const double> msq, double log_q, const OutputConfig& o) {
    try {
        PowerlawOptions opt;
        opt.n_max = o.fit_n_max;
        opt.log_q = std::isfinite(log_q) ? log_q : 0.0;
        opt.fit_geometric = !std::isfinite(log_q);
        opt.subleading = 2;
        auto fr = powerlaw_fit(msq, o.fit_n_min, opt);
        sum.gamma = fr.exponent;
        sum.amplitude = fr.amplitude;
    } catch (const DomainError&) {
    }
}

inline void set_invariants(Summary& sum, const ScenarioConfig& c, double N, double E, double H) {
    sum.family = to_string(c.family);
    sum.s = c.s;
    sum.N = N;
    sum.E = E;
    sum.S = E > 0.0 ? (2.0 * H - N * N) / E : kNaN;
    if (!is_manifold_family(c.family) || !std::isfinite(sum.S)) return;
    try {
        sum.classification =
            classification_label(classify_motion(manifold_family_of(c.family), N, E, sum.S, c.s), manifold_family_of(c.family));
    } catch (const DomainError&) {
        sum.classification = "unclassified";
    }
}

inline Drift drift_of_rows(const ScenarioResult& r) {
    Drift d;
    auto one = [&](const char* name) {
        auto it = std::find(r.ts_columns.begin(), r.ts_columns.end(), name);
        if (it == r.ts_columns.end() || r.ts_rows.empty()) return 0.0;
        const std::size_t col = 1 + (it - r.ts_columns.begin());
        const double ref = r.ts_rows.front()[col];
        double worst = 0.0;
        for (auto& row : r.ts_rows) worst = std::max(worst, std::abs(row[col] - ref));
        return ref != 0.0 ? worst / std::abs(ref) : worst;
    };
    d.N = one("N");
    d.E = one("E");
    d.H = one("H");
    return d;
}

inline std::vector<std::string> standard_columns(const OutputConfig& o) {
    std::vector<std::string> cols{"N", "E", "H"};
    for (double xi : o.sobolev_xi) cols.push_back(xi_key(xi));
    cols.push_back("x_over_xc");
    cols.push_back("F");
    return cols;
}

inline void add_bands(ScenarioResult& r, double t, std::span<const cplx> a) {
    if (r.config.outputs.bands.empty()) return;
    r.bands.emplace_back(t, band_fractions(modsq(a), r.config.outputs.bands));
}

}  // namespace detail

// ---------------------------------------------------------------- pipelines

inline ScenarioResult run_simulate(const ScenarioConfig& c) {
    ScenarioResult r;
    r.config = c;
    const CouplingFamily fam = make_family(c.family, c.s, c.L, c.beta);
    const ModeState init = initial_modes(c, fam);
    const ManifoldFamily mfam = c.family == Family::Y ? ManifoldFamily::Y : ManifoldFamily::Z;
    r.ts_columns = detail::standard_columns(c.outputs);

    auto ev = std::make_shared<RhsEvaluator>(fam);
    RhsFn rhs = [ev](double, std::span<const cplx> y, std::span<cplx> dy) { ev->fast(y, dy); };
    auto ev2 = std::make_shared<RhsEvaluator>(fam);
    const auto xis = c.outputs.sobolev_xi;
    const auto table = fam.table;
    Diagnostics diag = [&, ev2, xis, table, mfam](double, std::span<const cplx> y, std::map<std::string, double>& row) {
        row["N"] = total_N(y);
        row["E"] = total_E(y);
        row["H"] = ev2->hamiltonian(y);
        auto msq = modsq(y);
        for (double xi : xis) row[detail::xi_key(xi)] = sobolev(msq, xi);
        auto [q, F] = detail::projected_xF(y, mfam, *table);
        row["x_over_xc"] = q;
        row["F"] = F;
    };
    StopCheck stop;
    const StopConditions sc = c.stop;
    if (sc.x_over_xc_max > 0.0 || sc.tail_mass_max > 0.0 || sc.sobolev_cap > 0.0) {
        stop = [sc, table, mfam](double, std::span<const cplx> y) -> std::optional<StopReason> {
            const std::size_t L = y.size() - 1;
            if (sc.x_over_xc_max > 0.0 && detail::projected_xF(y, mfam, *table).first >= sc.x_over_xc_max)
                return StopReason::Criticality;
            if (sc.tail_mass_max > 0.0) {
                double tail = 0.0;
                for (std::size_t n = static_cast<std::size_t>(std::ceil(0.9 * L)); n <= L; ++n) tail += std::norm(y[n]);
                if (tail > sc.tail_mass_max * total_N(y)) return StopReason::Tail;
            }
            if (sc.sobolev_cap > 0.0 && sobolev(modsq(y), sc.sobolev_cap_xi) > sc.sobolev_cap)
                return StopReason::SobolevCap;
            return std::nullopt;
        };
    }
    IntegratorConfig ic = c.integrator;
    ic.snapshot_stride = c.outputs.snapshot_stride;
    RunRecord rec = integrate(rhs, init.alpha, 0.0, ic, diag, stop);
    r.stop = rec.stop;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        std::vector<double> row{rec.times[i]};
        for (auto& k : r.ts_columns) row.push_back(rec.column(k)[i]);
        r.ts_rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
        r.spectra.emplace_back(rec.snapshot_times[i], rec.snapshots[i]);
        detail::add_bands(r, rec.snapshot_times[i], rec.snapshots[i]);
    }
    if (rec.snapshots.empty() || rec.snapshot_times.back() != rec.final_time) {
        r.spectra.emplace_back(rec.final_time, rec.final_state);
        detail::add_bands(r, rec.final_time, rec.final_state);
    }
    if (c.outputs.theta_grid > 0) r.positions.emplace_back(rec.final_time, position_space(rec.final_state, c.outputs.theta_grid));

    auto& sum = r.summary;
    detail::set_invariants(sum, c, total_N(init.alpha), total_E(init.alpha), hamiltonian(fam, init));
    sum.drift = detail::drift_of_rows(r);
    auto [qf, Ff] = detail::projected_xF(rec.final_state, mfam, *fam.table);
    (void)Ff;
    // A spectrum fit is only meaningful for a cascade that got close to criticality.
    if (sum.classification == "cascade_finite_T" && qf >= 0.999 && c.L >= c.outputs.fit_n_min + 8)
        detail::fit_gamma(sum, modsq(rec.final_state), std::log(qf), c.outputs);
    if (sum.classification == "cascade_finite_T" && qf > 0.99 && rec.times.size() >= 8) {
        // Extrapolate from the last samples: 1 - x/xc ~ (T - t)^{2k}.
        const double k = 2.0 * detail::defect_power(mfam, sum.N, sum.E, sum.S, c.s);
        const auto& q = rec.column("x_over_xc");
        const std::size_t m = rec.times.size(), m0 = m - std::min<std::size_t>(m, 12);
        std::vector<double> tt(rec.times.begin() + m0, rec.times.end()), dd;
        for (std::size_t i = m0; i < m; ++i) dd.push_back(1.0 - q[i]);
        try {
            sum.T_estimate = estimate_blowup_time(tt, dd, k);
        } catch (const DomainError&) {
        }
        detail::fit_sobolev(sum, r, mfam);
    }
    return r;
}

namespace detail {

/// Sample times covering [0, t_stop] uniformly and the approach to T geometrically.
inline std::vector<double> approach_times(double T, double t_stop, int samples) {
    std::vector<double> ts;
    const int half = samples / 2;
    for (int i = 0; i < half; ++i) ts.push_back(t_stop * i / half);
    const double tau_stop = T - t_stop;
    const double tau_hi = std::max(0.5 * T, tau_stop);
    const int rest = samples - half;
    for (int i = 0; i < rest; ++i) {
        const double tau = tau_hi * std::pow(tau_stop / tau_hi, double(i) / (rest - 1));
        ts.push_back(T - tau);
    }
    ts.back() = t_stop;
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

}  // namespace detail

inline ScenarioResult run_analytic(const ScenarioConfig& c) {
    ScenarioResult r;
    r.config = c;
    const CascadeSolution sol = analytic_solution(c);
    const ManifoldFamily mfam = sol.family;
    const double t_stop = time_at_criticality(sol, detail::default_stop_defect(c));
    const auto times = detail::approach_times(sol.T, t_stop, c.outputs.samples);
    r.ts_columns = detail::standard_columns(c.outputs);
    std::vector<ManifoldSobolev> norms;
    for (double xi : c.outputs.sobolev_xi) norms.emplace_back(mfam, c.s, xi);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const ManifoldPoint mp = analytic_point(sol, times[i]);
        const ConservedSet cs = conserved_at(mp, mfam, c.s);
        std::vector<double> row{times[i], cs.N, cs.E, cs.H};
        const double b2 = mp.b_abs * mp.b_abs, c2 = mp.c_abs * mp.c_abs;
        for (auto& ns : norms) row.push_back(std::sqrt(ns.squared(b2, c2, mp.log_q)));
        row.push_back(std::exp(mp.log_q));
        row.push_back(mp.F);
        r.ts_rows.push_back(std::move(row));
        const bool last = i + 1 == times.size();
        if ((c.outputs.snapshot_stride > 0 && i % c.outputs.snapshot_stride == 0) || last) {
            auto st = state_from_point(mp, mfam, c.s, c.L);
            detail::add_bands(r, times[i], st.alpha);
            r.spectra.emplace_back(times[i], std::move(st.alpha));
        }
    }
    const ManifoldPoint fin = analytic_point(sol, t_stop);
    if (c.outputs.theta_grid > 0) {
        // Tail-compensated u(T - tau, theta); a truncated sum cannot resolve it this close to T.
        ManifoldProfile prof(mfam, c.s);
        std::vector<cplx> u(c.outputs.theta_grid);
        for (int j = 0; j < c.outputs.theta_grid; ++j)
            u[j] = prof.u(fin, 2.0 * kPi * j / c.outputs.theta_grid + fin.phi_p);
        r.positions.emplace_back(t_stop, std::move(u));
    }
    auto& sum = r.summary;
    const ConservedSet cs0 = conserved_at(analytic_point(sol, 0.0), mfam, c.s);
    detail::set_invariants(sum, c, cs0.N, cs0.E, cs0.H);
    sum.drift = detail::drift_of_rows(r);
    sum.T_estimate = sol.T;
    const int L_fit = std::max(c.L, c.outputs.fit_n_max);
    detail::fit_gamma(sum, modsq(state_from_point(fin, mfam, c.s, L_fit).alpha), fin.log_q, c.outputs);
    detail::fit_sobolev(sum, r, mfam);
    return r;
}

/// Full two-pass reduced run: the first pass locates T, the second samples the approach.
inline ScenarioResult run_reduced(const ScenarioConfig& c) {
    ScenarioResult r;
    r.config = c;
    if (!is_manifold_family(c.family)) throw ConfigError("pipeline: reduced runs need family Z or Y");
    auto ms0 = source_manifold_state(c);
    if (!ms0) throw ConfigError("source.kind: reduced runs need manifold data");
    const ManifoldFamily mfam = ms0->family;
    const ConservedSet cs0 = conserved_from_manifold(*ms0);
    auto& sum = r.summary;
    detail::set_invariants(sum, c, cs0.N, cs0.E, cs0.H);
    const bool cascade = sum.classification == "cascade_finite_T";
    const double xmax = cascade ? 1.0 - detail::default_stop_defect(c) : 0.0;
    const double Fc = critical_F(c.s);

    ReducedRun rr = integrate_reduced(*ms0, c.integrator, xmax);
    if (cascade && rr.record.stop == StopReason::Criticality) {
        const double k = detail::defect_power(mfam, cs0.N, cs0.E, cs0.S, c.s);
        auto estimate = [&](const ReducedRun& run, double window) {
            const auto& t = run.record.times;
            const auto& F = run.record.column("F");
            std::vector<double> tt, dd;
            const double tf = run.record.final_time;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (window > 0.0 && tf - t[i] > window) continue;
                tt.push_back(t[i]);
                dd.push_back(Fc - F[i]);
            }
            if (window <= 0.0 && tt.size() > 12) {
                tt.erase(tt.begin(), tt.end() - 12);
                dd.erase(dd.begin(), dd.end() - 12);
            }
            return estimate_blowup_time(tt, dd, k);
        };
        double T = estimate(rr, 0.0);
        const double tau_stop = std::max(T - rr.record.final_time, 1e-300);
        IntegratorConfig ic = c.integrator;
        const int n = std::max(c.outputs.samples, 40);
        for (int i = 0; i < n / 2; ++i) ic.sample_times.push_back(rr.record.final_time * i / (n / 2));
        for (int i = 1; i <= n / 2; ++i) ic.sample_times.push_back(T - tau_stop * std::pow(10.0, 2.0 * i / (n / 2)));
        rr = integrate_reduced(*ms0, ic, xmax);
        try {
            T = estimate(rr, 9.0 * tau_stop);
        } catch (const DomainError&) {
        }
        sum.T_estimate = T;
    }
    r.stop = rr.record.stop;
    r.ts_columns = detail::standard_columns(c.outputs);
    std::vector<ManifoldSobolev> norms;
    for (double xi : c.outputs.sobolev_xi) norms.emplace_back(mfam, c.s, xi);
    const SequenceTable table(c.s, c.L);
    const double lxc = log_critical_x(c.s);
    for (std::size_t i = 0; i < rr.record.times.size(); ++i) {
        const ManifoldState& ms = rr.states[i];
        const double t = rr.record.times[i];
        std::vector<double> row{t, rr.record.column("N")[i], rr.record.column("E")[i], rr.record.column("H")[i]};
        const double lq = ms.x() > 0.0 ? std::log(ms.x()) - lxc : -std::numeric_limits<double>::infinity();
        for (auto& ns : norms) row.push_back(std::sqrt(ns.squared(std::norm(ms.b), std::norm(ms.c), lq)));
        row.push_back(rr.record.column("x_over_xc")[i]);
        row.push_back(rr.record.column("F")[i]);
        r.ts_rows.push_back(std::move(row));
        const bool last = i + 1 == rr.record.times.size();
        if ((c.outputs.snapshot_stride > 0 && i % c.outputs.snapshot_stride == 0) || last) {
            auto st = lift(ms, table, c.L, t);
            detail::add_bands(r, t, st.alpha);
            r.spectra.emplace_back(t, std::move(st.alpha));
        }
    }
    sum.drift = detail::drift_of_rows(r);
    const ManifoldState& fin = rr.states.back();
    if (c.outputs.theta_grid > 0) r.positions.emplace_back(rr.record.times.back(), position_space(lift(fin, table, c.L).alpha, c.outputs.theta_grid));
    const int L_fit = std::max(c.L, c.outputs.fit_n_max);
    const SequenceTable fit_table(c.s, L_fit);
    detail::fit_gamma(sum, modsq(lift(fin, fit_table, L_fit).alpha), std::log(fin.x()) - lxc, c.outputs);
    detail::fit_sobolev(sum, r, mfam);
    return r;
}

/// Full system integrated from analytic data against the closed form on t <= compare_t_frac T.
inline ScenarioResult run_compare(const ScenarioConfig& c) {
    const CascadeSolution sol = analytic_solution(c);
    ScenarioConfig sim = c;
    sim.source.kind = SourceKind::Analytic;
    const double t_max =
        std::min(c.outputs.compare_t_frac * sol.T, time_at_criticality(sol, detail::default_stop_defect(c)));
    sim.integrator.t_end = t_max;
    sim.integrator.sample_times.clear();
    for (int i = 1; i <= c.outputs.samples; ++i) sim.integrator.sample_times.push_back(t_max * i / c.outputs.samples);
    // Every sample becomes a snapshot so the deviation is known on the whole grid.
    sim.outputs.snapshot_stride = 1;
    ScenarioResult r = run_simulate(sim);
    r.config = c;
    double worst = 0.0;
    for (auto& [t, alpha] : r.spectra) {
        const double d = detail::relative_deviation(alpha, analytic_state(sol, t, c.L).alpha);
        r.deviation.emplace_back(t, d);
        worst = std::max(worst, d);
    }
    const int stride = c.outputs.snapshot_stride;
    auto thin = [stride](auto& v) {
        if (v.empty()) return;
        auto last = v.back();
        decltype(v.size()) k = 0;
        for (decltype(v.size()) i = 0; i < v.size(); ++i)
            if (stride > 0 && i % stride == 0) v[k++] = v[i];
        v.resize(k);
        if (v.empty() || v.back().first != last.first) v.push_back(last);
    };
    thin(r.spectra);
    thin(r.bands);
    r.summary.max_deviation = worst;
    r.summary.T_estimate = sol.T;
    return r;
}

inline ScenarioResult run_classify(const ScenarioConfig& c) {
    ScenarioResult r;
    r.config = c;
    auto& sum = r.summary;
    if (c.source.kind == SourceKind::Invariants) {
        sum.family = to_string(c.family);
        sum.s = c.s;
        sum.N = c.source.N;
        sum.E = c.source.E;
        sum.S = c.source.S;
        const ManifoldFamily mfam = manifold_family_of(c.family);
        sum.classification = classification_label(classify_motion(mfam, sum.N, sum.E, sum.S, c.s), mfam);
    } else {
        const CouplingFamily fam = make_family(c.family, c.s, c.L, c.beta);
        const ModeState init = initial_modes(c, fam);
        detail::set_invariants(sum, c, total_N(init.alpha), total_E(init.alpha), hamiltonian(fam, init));
    }
    if (is_manifold_family(c.family) && sum.classification == "cascade_finite_T") {
        try {
            if (c.family == Family::Z && c.source.kind == SourceKind::Analytic) sum.T_estimate = analytic_solution(c).T;
            if (c.family == Family::Y && c.source.kind == SourceKind::Analytic) sum.T_estimate = analytic_solution(c).T;
        } catch (const DomainError&) {
        }
    }
    return r;
}

// ---------------------------------------------------------------- checks

inline void evaluate_checks(ScenarioResult& r) {
    const auto& k = r.config.check;
    const auto& s = r.summary;
    auto add = [&](std::string name, bool pass, std::string detail) {
        r.checks.push_back({std::move(name), pass, std::move(detail)});
    };
    if (k.drift_max) {
        const double d = s.drift ? s.drift->max() : kNaN;
        add("drift", d <= *k.drift_max, "max drift " + fmt17(d) + " <= " + fmt17(*k.drift_max));
    }
    if (k.gamma) {
        const bool ok = s.gamma && std::abs(*s.gamma - *k.gamma) <= k.gamma_tol;
        add("gamma", ok, "gamma " + (s.gamma ? fmt17(*s.gamma) : std::string("null")) + " vs " + fmt17(*k.gamma) +
                             " +- " + fmt17(k.gamma_tol));
    }
    if (k.amplitude) {
        const bool ok = s.amplitude && std::abs(*s.amplitude / *k.amplitude - 1.0) <= k.amplitude_tol;
        add("amplitude", ok,
            "amplitude " + (s.amplitude ? fmt17(*s.amplitude) : std::string("null")) + " vs " + fmt17(*k.amplitude));
    }
    for (auto [xi, expect] : k.sobolev) {
        std::optional<double> got;
        for (auto [x, v] : s.sobolev_exponents)
            if (x == xi) got = v;
        const bool ok = got && std::abs(*got - expect) <= k.sobolev_tol;
        add("sobolev(" + fmt17(xi) + ")", ok,
            "slope " + (got ? fmt17(*got) : std::string("null")) + " vs " + fmt17(expect) + " +- " + fmt17(k.sobolev_tol));
    }
    if (k.deviation_max) {
        const double d = s.max_deviation.value_or(kNaN);
        add("deviation", d <= *k.deviation_max, "max deviation " + fmt17(d) + " <= " + fmt17(*k.deviation_max));
    }
    if (k.classification)
        add("classification", s.classification == *k.classification, s.classification + " vs " + *k.classification);
}

inline ScenarioResult run_scenario(const ScenarioConfig& c) {
    validate(c);
    ScenarioResult r;
    switch (c.pipeline) {
        case Pipeline::Simulate: r = run_simulate(c); break;
        case Pipeline::Analytic: r = run_analytic(c); break;
        case Pipeline::Reduced: r = run_reduced(c); break;
        case Pipeline::Compare: r = run_compare(c); break;
        case Pipeline::Classify: r = run_classify(c); break;
    }
    evaluate_checks(r);
    return r;
}

// ---------------------------------------------------------------- built-in scenarios

inline ScenarioConfig builtin_scenario(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    c.outputs.bands = {};
    if (name == "z_condensation") {
        c.family = Family::Z;
        c.s = 2.0;
        c.L = 256;
        c.pipeline = Pipeline::Analytic;
        c.source.kind = SourceKind::Analytic;
        c.source.N = 1.0;
        c.source.E = 0.5;
        c.outputs.sobolev_xi = {0.5, 0.75, 1.0, 1.5};
        c.outputs.bands = {{0, 0}, {1, 16}, {17, 256}};
        c.outputs.snapshot_stride = 20;
        c.outputs.theta_grid = 0;
        c.check.gamma = -1.5;
        c.check.sobolev = {{0.75, -1.0}, {1.0, -2.0}, {1.5, -4.0}};
        c.check.drift_max = 1e-10;
        c.check.classification = "cascade_finite_T";
        return c;
    }
    if (name == "y_explicit") {
        c.family = Family::Y;
        c.s = 2.0;
        c.L = 256;
        c.pipeline = Pipeline::Analytic;
        c.source.kind = SourceKind::Analytic;
        c.source.N = 1.0;
        c.outputs.sobolev_xi = {0.75, 1.0, 1.5};
        c.outputs.snapshot_stride = 20;
        c.outputs.theta_grid = 0;
        c.check.gamma = -2.5;
        c.check.amplitude = y_powerlaw_amplitude(c.s, c.source.N, y_explicit_solution(c.s, c.source.N).E);
        c.check.sobolev = {{1.0, -1.0}, {1.5, -3.0}};
        c.check.sobolev_tol = 0.1;
        c.check.drift_max = 1e-10;
        c.check.classification = "cascade_finite_T";
        return c;
    }
    throw ConfigError("unknown scenario '" + name + "' (known: z_condensation, y_explicit)");
}

// ---------------------------------------------------------------- sweep

struct SweepCell {
    double E = 0.0, S = 0.0;
    std::string classification;
    double V_Fc = 0.0;
    double S_minus = 0.0, S_plus = 0.0;
};

struct SweepGrid {
    int nE = 0, nS = 0;
    std::vector<SweepCell> cells;  // row-major in E
    const SweepCell& at(int i, int j) const { return cells[static_cast<std::size_t>(i) * nS + j]; }
};

/// Y classification on a uniform (E, S) grid; rows are independent and may run concurrently.
inline SweepGrid sweep_classification(double s, double N, int nE, int nS, double E_lo, double E_hi, double S_lo,
                                      double S_hi, int threads = 1) {
    if (nE < 2 || nS < 2) throw DomainError("sweep needs at least 2 x 2 points");
    SweepGrid g;
    g.nE = nE;
    g.nS = nS;
    g.cells.resize(static_cast<std::size_t>(nE) * nS);
    const double Fc = critical_F(s);
    auto row = [&](int i) {
        const double E = E_lo + (E_hi - E_lo) * i / (nE - 1);
        const auto [Sm, Sp] = cascade_S_bounds_y(N, E, s);
        for (int j = 0; j < nS; ++j) {
            SweepCell& cell = g.cells[static_cast<std::size_t>(i) * nS + j];
            cell.E = E;
            cell.S = S_lo + (S_hi - S_lo) * j / (nS - 1);
            cell.S_minus = Sm;
            cell.S_plus = Sp;
            cell.V_Fc = potential(ManifoldFamily::Y, Fc, N, E, cell.S, s);
            try {
                cell.classification =
                    classification_label(classify_motion(ManifoldFamily::Y, N, E, cell.S, s), ManifoldFamily::Y);
            } catch (const DomainError&) {
                cell.classification = "inadmissible";
            }
        }
    };
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int i = 0; i < nE; ++i) row(i);
    } else {
        std::vector<std::jthread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < nE; i = next++) row(i);
            });
    }
    return g;
}

/// Default window: E over (0, Ec), S padded around the S-bounds envelope.
inline SweepGrid default_sweep(double s, double N, int nE, int nS, int threads = 1) {
    const double Ec = 2.0 * s * N / (s - 1.0);
    const double E_lo = Ec * 0.5 / nE, E_hi = Ec * (1.0 - 0.5 / nE);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i <= 400; ++i) {
        auto [a, b] = cascade_S_bounds_y(N, Ec * i / 400.0, s);
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    const double pad = 0.15 * (hi - lo);
    return sweep_classification(s, N, nE, nS, E_lo, E_hi, lo - pad, hi + pad, threads);
}

struct SweepTopology {
    int cascade_cells = 0;
    int components = 0;
    int inside_sign_violations = 0;   // cascade cell with V(Fc) >= 0
    int outside_sign_violations = 0;  // non-cascade cell with V(Fc) <= 0
    int bound_violations = 0;         // cascade membership differs from S- < S < S+
    bool ok() const {
        return cascade_cells > 0 && components == 1 && inside_sign_violations == 0 && outside_sign_violations == 0 &&
               bound_violations == 0;
    }
};

inline SweepTopology sweep_topology(const SweepGrid& g) {
    SweepTopology t;
    std::vector<int> label(g.cells.size(), -1);
    auto is_c = [&](int i, int j) { return g.at(i, j).classification == "cascade_finite_T"; };
    for (int i = 0; i < g.nE; ++i)
        for (int j = 0; j < g.nS; ++j) {
            const auto& c = g.at(i, j);
            const bool in = is_c(i, j);
            const bool between = c.S > c.S_minus && c.S < c.S_plus;
            if (in) ++t.cascade_cells;
            if (in != between) ++t.bound_violations;
            if (in && !(c.V_Fc < 0.0)) ++t.inside_sign_violations;
            if (!in && c.classification != "inadmissible" && !(c.V_Fc > 0.0)) ++t.outside_sign_violations;
        }
    for (int i = 0; i < g.nE; ++i)
        for (int j = 0; j < g.nS; ++j) {
            if (!is_c(i, j) || label[i * g.nS + j] >= 0) continue;
            std::vector<std::pair<int, int>> stack{{i, j}};
            label[i * g.nS + j] = t.components;
            while (!stack.empty()) {
                auto [a, b] = stack.back();
                stack.pop_back();
                const int da[4] = {1, -1, 0, 0}, db[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int x = a + da[d], y = b + db[d];
                    if (x < 0 || y < 0 || x >= g.nE || y >= g.nS) continue;
                    if (!is_c(x, y) || label[x * g.nS + y] >= 0) continue;
                    label[x * g.nS + y] = t.components;
                    stack.emplace_back(x, y);
                }
            }
            ++t.components;
        }
    return t;
}

}  // namespace cascade
