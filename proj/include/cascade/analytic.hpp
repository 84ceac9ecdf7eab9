#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "cascade/couplings.hpp"
#include "cascade/errors.hpp"
#include "cascade/genfun.hpp"
#include "cascade/manifold.hpp"
#include "cascade/sequences.hpp"

namespace cascade {

enum class ZBranch { Generic, TwoMode, ZeroB };

inline std::string to_string(ZBranch b) {
    switch (b) {
        case ZBranch::Generic: return "generic";
        case ZBranch::TwoMode: return "two_mode";
        case ZBranch::ZeroB: return "zero_b";
    }
    return "?";
}

struct CascadeSolution {
    ManifoldFamily family = ManifoldFamily::Z;
    double s = 2.0, N = 1.0, E = 0.5;
    double F0 = 0.0;
    double Omega = 0.0;
    double T = 0.0;
    ZBranch branch = ZBranch::Generic;
    double phi_b0 = 0.0;
    double phi_p0 = 0.0;
};

/// Polar description of a manifold point, with log(x/xc) kept separately for precision near T.
struct ManifoldPoint {
    double t = 0.0;
    double F = 0.0;
    double defect = 0.0;  // Fc - F
    double log_q = 0.0;   // log(x / xc)
    double b_abs = 0.0, c_abs = 0.0;
    double phi_b = 0.0, phi_c = 0.0, phi_p = 0.0;

    ManifoldState state(ManifoldFamily fam, double s) const {
        const double x = std::exp(log_q + log_critical_x(s));
        return ManifoldState{fam, s, std::polar(b_abs, phi_b), std::polar(c_abs, phi_c),
                             std::polar(std::sqrt(x), phi_p)};
    }
};

namespace detail {

// arctan(k tan w) continued through every w = pi/2 + j pi.
inline double arctan_k_tan(double k, double w) {
    if (k == 0.0) return 0.0;
    const double sgn = k > 0 ? 1.0 : -1.0;
    k = std::abs(k);
    const double principal = std::atan2(k * std::sin(w), std::cos(w));
    const double ref = std::atan2(std::sin(w), std::cos(w));
    return sgn * (principal + (w - ref));
}

inline double branch_tol() { return 1e-12; }

inline double log_q_of(double s, double F, double defect) {
    if (F == 0.0) return -std::numeric_limits<double>::infinity();
    if ((s - 1.0) * defect <= 0.5) return log_x_over_xc_from_defect(s, defect);
    return std::log(F) - s * std::log1p(F) - log_critical_x(s);
}

}  // namespace detail

inline CascadeSolution z_solution(double s, double N, double E) {
    if (!(s > 1.0) || !(N > 0.0) || !(E > 0.0)) throw DomainError("Z condensation requires s > 1, N > 0, E > 0");
    CascadeSolution sol;
    sol.family = ManifoldFamily::Z;
    sol.s = s;
    sol.N = N;
    sol.E = E;
    const double D = std::pow(N - s * E, 2) + (s - 1.0) * std::pow(N + s * E, 2);
    sol.Omega = std::sqrt(D / (4.0 * s));
    sol.T = kPi / (2.0 * sol.Omega);
    sol.F0 = critical_F(s) * std::pow(N - s * E, 2) / std::pow(N + s * E, 2);
    const double tol = detail::branch_tol() * std::max(N, E);
    if (std::abs(N - s * E) <= tol) {
        sol.branch = ZBranch::TwoMode;
        sol.F0 = 0.0;
    } else if (std::abs(N - (2.0 - s) * E) <= tol) {
        sol.branch = ZBranch::ZeroB;
    } else {
        sol.branch = ZBranch::Generic;
    }
    sol.phi_p0 = N < s * E ? 0.0 : -kPi;
    sol.phi_b0 = N < (2.0 - s) * E ? -kPi : 0.0;
    if (sol.branch == ZBranch::TwoMode) sol.phi_p0 = -kPi / 2.0;
    if (sol.branch == ZBranch::ZeroB) sol.phi_b0 = -kPi / 2.0;
    return sol;
}

/// Canonical condensation data (b, c, p) at t = 0.
inline ManifoldState z_condensation_initial_data(double s, double N, double E) {
    if (!(s > 1.0) || !(N > 0.0) || !(E > 0.0)) throw DomainError("Z condensation requires s > 1, N > 0, E > 0");
    const double D = std::pow(N - s * E, 2) + (s - 1.0) * std::pow(N + s * E, 2);
    const double p = (s * E - N) / (std::sqrt(s - 1.0) * (N + s * E)) *
                     std::pow((s - 1.0) * std::pow(N + s * E, 2) / D, s / 2.0);
    const double b = (N + (s - 2.0) * E) * std::sqrt(s * N / D);
    const double c = 2.0 * E * std::sqrt(s * N) * std::pow(N + s * E, s) * std::pow((s - 1.0) / D, (s + 1.0) / 2.0);
    return ManifoldState{ManifoldFamily::Z, s, b, c, p};
}

inline void require_time(const CascadeSolution& sol, double t, bool allow_T = true) {
    if (!(t >= 0.0) || (allow_T ? t > sol.T * (1 + 1e-15) : t >= sol.T))
        throw DomainError("t outside [0, T]");
}

inline double z_F_of_t(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    const double k = 1.0 - sol.F0 / critical_F(sol.s);
    const double sg = std::pow(std::sin(sol.Omega * t), 2);
    return (sol.s * sol.F0 + k * sg) / (sol.s - k * sg);
}

/// Fc - F(t) written in terms of T - t so it stays accurate as t -> T.
inline double z_F_defect(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    const double Fc = critical_F(sol.s);
    const double k = 1.0 - sol.F0 / Fc;
    const double w = sol.Omega * (sol.T - t);
    const double sw = std::sin(w), cw = std::cos(w);
    return k * (Fc + 1.0) * sw * sw / (sol.s - k * cw * cw);
}

struct Phases {
    double phi_b = 0.0, phi_c = 0.0, phi_p = 0.0;
};

/// Continuous phases of b, c, p. Beyond T the formulas are continued analytically.
inline Phases z_phases(const CascadeSolution& sol, double t) {
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    const double s = sol.s, N = sol.N, E = sol.E, W = sol.Omega;
    const double w = W * t;
    using detail::arctan_k_tan;
    Phases ph;
    switch (sol.branch) {
        case ZBranch::Generic: {
            if (std::abs(N - s * E) <= detail::branch_tol() * std::max(N, E) ||
                std::abs(N - (2.0 - s) * E) <= detail::branch_tol() * std::max(N, E))
                throw DomainError("generic phase formulas requested on a degenerate branch");
            ph.phi_b = sol.phi_b0 - 0.5 * (s * E + N) * t - arctan_k_tan(2.0 * W / ((s - 2.0) * E + N), w);
            ph.phi_c = 0.5 * ((s - 1.0) * s * E - (s + 1.0) * N) * t - s * arctan_k_tan(2.0 * W / (s * E + N), w);
            ph.phi_p = sol.phi_p0 + 0.5 * s * (s * E - N) * t + arctan_k_tan(2.0 * W / (N - s * E), w) -
                       (s - 1.0) * arctan_k_tan(2.0 * W / (s * E + N), w);
            break;
        }
        case ZBranch::TwoMode: {
            const double k = std::sqrt((s - 1.0) / s);
            ph.phi_b = -s * E * t - arctan_k_tan(1.0 / k, w);
            ph.phi_c = -s * E * t - s * arctan_k_tan(k, w);
            ph.phi_p = -kPi / 2.0 - (s - 1.0) * arctan_k_tan(k, w);
            break;
        }
        case ZBranch::ZeroB: {
            const double k = std::sqrt(s - 1.0);
            ph.phi_b = -kPi / 2.0 - E * t;
            ph.phi_c = (s * s - s - 1.0) * E * t - s * arctan_k_tan(k, w);
            ph.phi_p = s * (s - 1.0) * E * t - arctan_k_tan(1.0 / k, w) - (s - 1.0) * arctan_k_tan(k, w);
            break;
        }
    }
    return ph;
}

inline ManifoldPoint z_point(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    const double s = sol.s, N = sol.N, E = sol.E;
    ManifoldPoint mp;
    mp.t = t;
    // Direct F at small F, the defect form near Fc; each side keeps full relative precision.
    const double Fd = z_F_of_t(sol, t);
    if (Fd <= 0.5 * critical_F(s)) {
        mp.F = Fd;
        mp.defect = critical_F(s) - Fd;
    } else {
        mp.defect = z_F_defect(sol, t);
        mp.F = critical_F(s) - mp.defect;
    }
    mp.log_q = detail::log_q_of(s, mp.F, mp.defect);
    const double u = (s - 1.0) * mp.defect;  // 1 - F/Fc
    mp.c_abs = std::sqrt(E * u / std::pow(mp.F + 1.0, s + 1.0));
    mp.b_abs = std::sqrt(std::max(0.0, N - E * u / (mp.F + 1.0)));
    if (t < sol.T) {
        const Phases ph = z_phases(sol, t);
        mp.phi_b = ph.phi_b;
        mp.phi_c = ph.phi_c;
        mp.phi_p = ph.phi_p;
    }
    return mp;
}

inline ManifoldState z_manifold_at(const CascadeSolution& sol, double t) {
    return z_point(sol, t).state(ManifoldFamily::Z, sol.s);
}

// alpha_n from a polar manifold point; w-weights are f (Z) or g (Y).
inline cplx alpha_from_point(const ManifoldPoint& mp, ManifoldFamily fam, double s, int n) {
    if (n < 0) throw ContractViolation("negative mode");
    if (n == 0) return std::polar(mp.b_abs, mp.phi_b);
    double lw = 0.5 * log_fuss_catalan_compensated(s, double(n));
    if (fam == ManifoldFamily::Y) lw -= 0.5 * std::log((s - 1.0) * n / 2.0 + 1.0);
    const double geo = n > 1 ? 0.5 * (n - 1) * mp.log_q : 0.0;
    const double mag = mp.c_abs * std::exp(lw + geo - 0.5 * log_critical_x(s));
    return std::polar(mag, mp.phi_c + (n - 1) * mp.phi_p);
}

inline ModeState state_from_point(const ManifoldPoint& mp, ManifoldFamily fam, double s, int L) {
    ModeState st{mp.t, std::vector<cplx>(L + 1)};
    for (int n = 0; n <= L; ++n) st.alpha[n] = alpha_from_point(mp, fam, s, n);
    return st;
}

/// Conserved set at a polar point; uses the stored defect so E stays accurate as F -> Fc.
inline ConservedSet conserved_at(const ManifoldPoint& mp, ManifoldFamily fam, double s) {
    const double sx = std::exp(0.5 * (mp.log_q + log_critical_x(s)));
    const double ph = fam == ManifoldFamily::Z ? mp.phi_b + mp.phi_p - mp.phi_c : mp.phi_c - mp.phi_b - mp.phi_p;
    const double R = mp.b_abs * mp.c_abs * sx * std::cos(ph);
    const double w = (s - 1.0) * mp.F <= 0.5 ? 1.0 - (s - 1.0) * mp.F : (s - 1.0) * mp.defect;
    return detail::conserved_core(fam, s, mp.b_abs * mp.b_abs, mp.c_abs * mp.c_abs, R, mp.F, w);
}

inline cplx z_alpha(const CascadeSolution& sol, double t, int n) {
    return alpha_from_point(z_point(sol, t), ManifoldFamily::Z, sol.s, n);
}

inline ModeState z_state(const CascadeSolution& sol, double t, int L) {
    return state_from_point(z_point(sol, t), ManifoldFamily::Z, sol.s, L);
}

// ---------------------------------------------------------------- Y explicit cascade

inline CascadeSolution y_explicit_solution(double s, double N) {
    if (!(s > 1.0) || !(N > 0.0)) throw DomainError("Y explicit cascade requires s > 1, N > 0");
    CascadeSolution sol;
    sol.family = ManifoldFamily::Y;
    sol.s = s;
    sol.N = N;
    sol.E = 4.0 * N / (5.0 + s);
    sol.F0 = 0.0;
    sol.Omega = std::sqrt(15.0) * (s + 1.0) * N / (2.0 * (s + 5.0));
    sol.T = std::asinh(std::sqrt(15.0 * critical_F(s) / 8.0)) / sol.Omega;
    sol.phi_p0 = -kPi / 2.0;
    return sol;
}

inline ManifoldState y_initial_data(double s, double N) {
    if (!(s > 1.0) || !(N > 0.0)) throw DomainError("Y explicit cascade requires s > 1, N > 0");
    const double a0 = std::sqrt((s + 1.0) * N / (s + 5.0));
    const double a1 = std::sqrt(4.0 * N / (s + 5.0));
    // g_1 = 1 / sqrt((s+1)/2)
    return ManifoldState{ManifoldFamily::Y, s, a0, a1 * std::sqrt((s + 1.0) / 2.0), 0.0};
}

inline double y_F_of_t(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    return 8.0 / 15.0 * std::pow(std::sinh(sol.Omega * t), 2);
}

inline double y_F_defect(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    const double W = sol.Omega;
    return 8.0 / 15.0 * std::sinh(W * (sol.T + t)) * std::sinh(W * (sol.T - t));
}

inline Phases y_phases(const CascadeSolution& sol, double t) {
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    const double s = sol.s, W = sol.Omega;
    const double th = std::tanh(W * t);
    const double a = std::atanh(std::sqrt(7.0 / 15.0) * th) / std::sqrt(7.0);
    const double r35 = std::sqrt(3.0 / 5.0);
    Phases ph;
    ph.phi_c = -r35 * (s + 1.0) * W * t + (s + 1.0) * a;
    ph.phi_p = -kPi / 2.0 - r35 * (s - 1.0) * W * t + (s + 2.0) * a;
    ph.phi_b = -2.0 * r35 * W * t - a - std::atan(r35 * th);
    return ph;
}

inline ManifoldPoint y_point(const CascadeSolution& sol, double t) {
    require_time(sol, t);
    const double s = sol.s, N = sol.N, E = sol.E;
    ManifoldPoint mp;
    mp.t = t;
    const double Fd = y_F_of_t(sol, t);
    if (Fd <= 0.5 * critical_F(s)) {
        mp.F = Fd;
        mp.defect = critical_F(s) - Fd;
    } else {
        mp.defect = y_F_defect(sol, t);
        mp.F = critical_F(s) - mp.defect;
    }
    const double F1 = mp.F + 1.0;
    mp.log_q = detail::log_q_of(s, mp.F, mp.defect);
    mp.b_abs = std::sqrt(std::max(0.0, N - E * (2.0 - (s - 1.0) * mp.F) / (2.0 * F1)));
    mp.c_abs = std::sqrt((s + 1.0) * E / (2.0 * std::pow(F1, s + 1.0)));
    const Phases ph = y_phases(sol, t);
    mp.phi_b = ph.phi_b;
    mp.phi_c = ph.phi_c;
    mp.phi_p = ph.phi_p;
    return mp;
}

inline ManifoldState y_manifold_at(const CascadeSolution& sol, double t) {
    return y_point(sol, t).state(ManifoldFamily::Y, sol.s);
}

inline cplx y_alpha(const CascadeSolution& sol, double t, int n) {
    return alpha_from_point(y_point(sol, t), ManifoldFamily::Y, sol.s, n);
}

inline ModeState y_state(const CascadeSolution& sol, double t, int L) {
    return state_from_point(y_point(sol, t), ManifoldFamily::Y, sol.s, L);
}

/// Dispatch on the solution family.
inline ManifoldPoint analytic_point(const CascadeSolution& sol, double t) {
    return sol.family == ManifoldFamily::Z ? z_point(sol, t) : y_point(sol, t);
}

inline ModeState analytic_state(const CascadeSolution& sol, double t, int L) {
    return sol.family == ManifoldFamily::Z ? z_state(sol, t, L) : y_state(sol, t, L);
}

inline double analytic_F(const CascadeSolution& sol, double t) {
    return sol.family == ManifoldFamily::Z ? z_F_of_t(sol, t) : y_F_of_t(sol, t);
}

/// Time at which 1 - x/xc reaches delta, by bisection on the precise log ratio.
inline double time_at_criticality(const CascadeSolution& sol, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    const double target = std::log1p(-delta);
    double lo = 0.0, hi = sol.T;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (analytic_point(sol, mid).log_q < target ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace cascade
