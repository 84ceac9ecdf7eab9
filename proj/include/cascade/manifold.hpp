#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "cascade/couplings.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/errors.hpp"
#include "cascade/genfun.hpp"
#include "cascade/sequences.hpp"

namespace cascade {

enum class ManifoldFamily { Z, Y };

inline std::string to_string(ManifoldFamily f) { return f == ManifoldFamily::Z ? "Z" : "Y"; }

inline ManifoldFamily manifold_family_of(Family f) {
    switch (f) {
        case Family::Z:
        case Family::SzegoCubic:
        case Family::BetaZ: return ManifoldFamily::Z;
        case Family::Y: return ManifoldFamily::Y;
    }
    return ManifoldFamily::Z;
}

/// alpha_0 = b, alpha_n = w_n c p^{n-1}; w = f for Z and g for Y.
struct ManifoldState {
    ManifoldFamily family = ManifoldFamily::Z;
    double s = 2.0;
    cplx b{}, c{}, p{};

    double x() const { return std::norm(p); }
};

struct ConservedSet {
    double N = 0.0, E = 0.0, S = 0.0, H = 0.0;
};

enum class MotionKind { Stationary, Periodic, Cascade };

inline std::string to_string(MotionKind k) {
    switch (k) {
        case MotionKind::Stationary: return "stationary";
        case MotionKind::Periodic: return "periodic";
        case MotionKind::Cascade: return "cascade";
    }
    return "?";
}

struct MotionClass {
    MotionKind kind = MotionKind::Periodic;
    double F_min = 0.0;
    double F_max = 0.0;
    int stationary_family = 0;  // Z only; 0 when not stationary
};

inline void require_admissible(const ManifoldState& ms) {
    require_admissible_s(ms.s);
    const double x = ms.x();
    if (!std::isfinite(x)) throw AdmissibilityError("non-finite p");
    if (ms.s > 1.0 ? x >= critical_x(ms.s) : x >= 1.0) throw AdmissibilityError("|p|^2 >= xc");
}

/// F at the state, with F_of_x's precision.
inline double manifold_F(const ManifoldState& ms) {
    require_admissible(ms);
    return F_of_x(GenFunContext(ms.s), ms.x());
}

/// Lifts the three variables to modes 0..L.
inline ModeState lift(const ManifoldState& ms, const SequenceTable& table, int L, double t = 0.0) {
    require_admissible(ms);
    if (L > table.L()) throw ContractViolation("table shorter than requested L");
    ModeState st{t, std::vector<cplx>(L + 1)};
    st.alpha[0] = ms.b;
    const double sxc = std::sqrt(table.xc());
    const cplx r = ms.p / sxc;
    cplx pw = 1.0;  // (p / sqrt xc)^{n-1}
    for (int n = 1; n <= L; ++n) {
        double lw = table.log_f_scaled(n);
        if (ms.family == ManifoldFamily::Y) lw -= 0.5 * std::log((ms.s - 1.0) * n / 2.0 + 1.0);
        st.alpha[n] = std::exp(lw) / sxc * ms.c * pw;
        pw *= r;
    }
    return st;
}

/// Recovers (b, c, p) from modes 0..2 of a state on the manifold.
inline ManifoldState project(const ModeState& st, ManifoldFamily fam, const SequenceTable& table) {
    if (st.L() < 2) throw ContractViolation("need at least modes 0..2");
    const double s = table.s();
    auto w = [&](int n) {
        return fam == ManifoldFamily::Z ? table.f(n) : table.g(n);
    };
    ManifoldState ms{fam, s, st.alpha[0], st.alpha[1] / w(1), 0.0};
    if (ms.c != 0.0) ms.p = st.alpha[2] / (w(2) * ms.c);
    return ms;
}

namespace detail {

/**
 * N, E, S, H from |b|^2, |c|^2, the phase-coupling R and F.
 * w = 1 - (s-1)F is passed separately so callers holding Fc - F exactly keep E finite near Fc.
 */
inline ConservedSet conserved_core(ManifoldFamily fam, double s, double b2, double c2, double R, double F, double w) {
    ConservedSet cs;
    if (fam == ManifoldFamily::Z) {
        const double growth = c2 * std::pow(1.0 + F, s + 1.0);  // c2 (1+F)^{s+1} = w E
        cs.N = b2 + c2 * F_over_x(s, F);
        cs.E = growth / w;
        cs.S = 2.0 * s / (F + 1.0) * (cs.N + (F - 1.0) / (F + 1.0) * growth + std::pow(F + 1.0, s) * 2.0 * R);
    } else {
        cs.N = b2 + c2 * G_over_x(s, F);
        cs.E = c2 * G_prime(s, F);
        const double u = (s - 1.0) * F;  // F / Fc
        cs.S = cs.E * (u - 2.0) * (u + 4.0 * s + 2.0) / (4.0 * (F + 1.0) * (F + 1.0)) +
               cs.N * (u + 2.0 * s) / (F + 1.0) + (s + 1.0) * std::pow(F + 1.0, s - 1.0) * 2.0 * R;
    }
    cs.H = 0.5 * (cs.N * cs.N + cs.E * cs.S);
    return cs;
}

}  // namespace detail

inline ConservedSet conserved_from_manifold(const ManifoldState& ms) {
    require_admissible(ms);
    const double s = ms.s;
    const double F = manifold_F(ms);
    const double R = ms.family == ManifoldFamily::Z ? std::real(ms.b * ms.p * std::conj(ms.c))
                                                    : std::real(std::conj(ms.b) * ms.c * std::conj(ms.p));
    return detail::conserved_core(ms.family, s, std::norm(ms.b), std::norm(ms.c), R, F, 1.0 - (s - 1.0) * F);
}

/// Closed-form (d/dt) of (b, c, p). Written without 1/x so p = 0 is regular.
inline std::array<cplx, 3> reduced_rhs(const ManifoldState& ms) {
    require_admissible(ms);
    const double s = ms.s;
    const double F = manifold_F(ms);
    const ConservedSet cs = conserved_from_manifold(ms);
    const double N = cs.N, E = cs.E;
    const cplx b = ms.b, c = ms.c, p = ms.p;
    const double u = (s - 1.0) * F;
    const double F1 = F + 1.0;
    cplx ib, ic, ip;
    if (ms.family == ManifoldFamily::Z) {
        ip = (s - 1.0) * N * p + std::conj(b) * c + (s - 1.0) * std::pow(F1, s) * b * std::conj(c) * p * p -
             (s - 2.0) * (1.0 - u) / F1 * E * p;
        ib = b * (N + s * E / F1) + s * E * std::pow(F1, s - 1.0) * c * std::conj(p);
        ic = c * (s * E + (s + 1.0) * N) + (u - 2.0) / F1 * s * E * (c - b * p);
    } else {
        ip = p * (2.0 * F1 * N + (u - 2.0) * E) * (s - 1.0) / (2.0 * F1) +
             (s - 1.0) * std::pow(F1, s) * b * std::conj(c) * p * p + std::conj(b) * c;
        ib = b * (N + E * (2.0 * s + u) / (2.0 * F1)) + c * std::conj(p) * (s + 1.0) * std::pow(F1, s - 1.0) * E / 2.0;
        ic = c * ((s + 1.0) * N + (s + 1.0) * (u - 2.0) * E / (2.0 * F1)) + b * p * (s + 1.0) * (s + 1.0) * E / (2.0 * F1);
    }
    return {-kI * ib, -kI * ic, -kI * ip};
}

/// Effective potential with dF/dt^2 + V(F) = 0.
inline double potential(ManifoldFamily fam, double F, double N, double E, double S, double s) {
    if (fam == ManifoldFamily::Z) {
        const double C0 = std::pow(2 * s * E - 2 * s * N + S, 2);
        const double C2 = std::pow(2 * (s - 1) * s * E + S, 2);
        const double C1 = -8 * (s - 1) * s * s * E * E + 4 * s * s * E * (2 * (s - 1) * N - S) + 2 * S * (S - 2 * s * N);
        const double pre = (F + 1) / (2 * s);
        return pre * pre * (C0 + C1 * F + C2 * F * F);
    }
    const double s1 = s + 1;
    const double A = E * (2 * s + 1) - 2 * N * s + S;
    const double B = E * (s - 1) * s + N * (3 * s - 1) - 2 * S;
    const double D = E * (s - 1) * (s - 1) + 4 * N * (s - 1) - 4 * S;
    const double C0 = A * A / (s1 * s1);
    const double C1 = 2 * A * (-E * (s - 1) * s + N * (1 - 3 * s) + 2 * S) / (s1 * s1) + 2 * E * s1 * (E - N);
    const double C2 = B * B / (s1 * s1) - (D * A + 2 * E * s1 * s1 * s1 * (E * (s - 1) + 2 * N)) / (2 * s1 * s1);
    const double C3 = D * B / (2 * s1 * s1);
    const double C4 = D * D / (16 * s1 * s1);
    return C0 + F * (C1 + F * (C2 + F * (C3 + F * C4)));
}

inline double potential_derivative(ManifoldFamily fam, double F, double N, double E, double S, double s) {
    // Polynomial of degree <= 4: a centered difference with h ~ 1e-4 is accurate to ~1e-9 relative.
    const double h = 1e-4 * std::max(1.0, std::abs(F));
    auto V = [&](double f) { return potential(fam, f, N, E, S, s); };
    return (-V(F + 2 * h) + 8 * V(F + h) - 8 * V(F - h) + V(F - 2 * h)) / (12 * h);
}

struct FdotCheck {
    double Fdot = 0.0;
    double V = 0.0;
    double residual = 0.0;  // |Fdot^2 + V|
};

inline FdotCheck fdot_residual(const ManifoldState& ms) {
    const auto d = reduced_rhs(ms);
    const double F = manifold_F(ms);
    const double xdot = 2.0 * std::real(std::conj(ms.p) * d[2]);
    FdotCheck out;
    out.Fdot = F_prime(ms.s, F) * xdot;
    const ConservedSet cs = conserved_from_manifold(ms);
    out.V = potential(ms.family, F, cs.N, cs.E, cs.S, ms.s);
    out.residual = std::abs(out.Fdot * out.Fdot + out.V);
    return out;
}

/// Boundary values S_- and S_+ of the Y cascade interval.
inline std::pair<double, double> cascade_S_bounds_y(double N, double E, double s) {
    if (!(s > 1.0)) throw DomainError("cascade_S_bounds_y requires s > 1");
    const double Ec = 2.0 * s * N / (s - 1.0);
    if (E < 0.0 || E > Ec) throw DomainError("E outside [0, Ec]");
    const double Fc = critical_F(s);
    const double base = s * (2 * s + 1) * N + (-4 * s * s + s + 3) / 4.0 * E;
    const double root = std::sqrt(std::pow(s + 1, 3) / Fc * E * (Ec - E));
    const double pre = (s - 1) / (s * s);
    return {pre * (base - root), pre * (base + root)};
}

/// S value at which a cascade occurs for Z.
inline double z_cascade_S(double N, double s) { return 2.0 * (s - 1.0) * N; }

inline MotionClass classify_motion(ManifoldFamily fam, double N, double E, double S, double s,
                                   double tol_S = 1e-9) {
    require_admissible_s(s);
    if (!(N > 0.0) || !(E >= 0.0)) throw DomainError("classify_motion requires N > 0, E >= 0");
    const double Fc = critical_F(s);
    const double scale = std::max({std::abs(N), std::abs(E), std::abs(S)});
    MotionClass mc;
    if (fam == ManifoldFamily::Z) {
        const double C0 = std::pow(2 * s * E - 2 * s * N + S, 2);
        const double C2 = std::pow(2 * (s - 1) * s * E + S, 2);
        const double C1 = -8 * (s - 1) * s * s * E * E + 4 * s * s * E * (2 * (s - 1) * N - S) + 2 * S * (S - 2 * s * N);
        const double S_fam[3] = {0.0, 2.0 * s * N, -2.0 * (s - 1.0) * (E - N)};
        if (s > 1.0 && std::abs(S - z_cascade_S(N, s)) <= tol_S * scale) {
            mc.kind = MotionKind::Cascade;
            mc.F_max = Fc;
            // Other root of the quadratic factor.
            mc.F_min = C2 > 0 ? std::max(0.0, std::min(C0 / (C2 * Fc), Fc)) : 0.0;
            return mc;
        }
        for (int i = 0; i < 3; ++i) {
            if (std::abs(S - S_fam[i]) <= tol_S * scale) {
                double F0 = (C2 > 0) ? -C1 / (2 * C2) : 0.0;
                if (i == 0 && E > 0) F0 = (E - N) / ((s - 1) * E);
                // The family value of S only marks a stationary point when its double root is reachable.
                if (!(F0 >= -1e-9 && F0 <= Fc * (1 + 1e-9))) break;
                F0 = std::clamp(F0, 0.0, Fc);
                mc.kind = MotionKind::Stationary;
                mc.stationary_family = i + 1;
                mc.F_min = mc.F_max = F0;
                return mc;
            }
        }
        const double disc = C1 * C1 - 4 * C0 * C2;
        if (C2 <= 0.0 || disc < 0.0) throw DomainError("invariants admit no trajectory");
        const double sq = std::sqrt(disc);
        double r1 = (-C1 - sq) / (2 * C2), r2 = (-C1 + sq) / (2 * C2);
        if (r2 < 0.0 || r1 > Fc) throw DomainError("invariants admit no trajectory in [0, Fc]");
        mc.kind = MotionKind::Periodic;
        mc.F_min = std::max(0.0, r1);
        mc.F_max = std::min(Fc, r2);
        if (mc.F_max - mc.F_min <= std::sqrt(tol_S) * std::max(1.0, mc.F_max)) mc.kind = MotionKind::Stationary;
        return mc;
    }
    if (!(s > 1.0)) throw DomainError("Y classification requires s > 1");
    auto V = [&](double F) { return potential(fam, F, N, E, S, s); };
    const auto [Sm, Sp] = cascade_S_bounds_y(N, E, s);
    const bool on_boundary = std::abs(S - Sm) <= tol_S * scale || std::abs(S - Sp) <= tol_S * scale;
    const double VFc = V(Fc);
    auto lowest_root_below = [&](double hi) {
        // Largest root of V in [0, hi) with V < 0 between it and hi.
        const int K = 4000;
        double prev = hi;
        for (int i = K - 1; i >= 0; --i) {
            double F = hi * i / K;
            if (V(F) >= 0.0) {
                double lo = F, up = prev;
                for (int it = 0; it < 200; ++it) {
                    double mid = 0.5 * (lo + up);
                    (V(mid) >= 0.0 ? lo : up) = mid;
                }
                return lo;
            }
            prev = F;
        }
        return 0.0;
    };
    if ((!on_boundary && S > Sm && S < Sp) || (on_boundary && potential_derivative(fam, Fc, N, E, S, s) > 0.0)) {
        mc.kind = MotionKind::Cascade;
        mc.F_max = Fc;
        mc.F_min = lowest_root_below(Fc * (1 - 1e-12));
        return mc;
    }
    (void)VFc;
    // Locate the first region where V <= 0 inside [0, Fc].
    const int K = 20000;
    double vmin = std::numeric_limits<double>::infinity(), Fmin_at = 0.0;
    int first = -1, last = -1;
    double Vscale = 0.0;
    for (int i = 0; i <= K; ++i) {
        double F = Fc * i / K;
        double v = V(F);
        Vscale = std::max(Vscale, std::abs(v));
        if (v < vmin) { vmin = v; Fmin_at = F; }
    }
    const double vtol = 1e-10 * std::max(Vscale, scale * scale);
    for (int i = 0; i <= K; ++i) {
        double v = V(Fc * i / K);
        if (v <= vtol) {
            if (first < 0) first = i;
            last = i;
        } else if (first >= 0) {
            break;
        }
    }
    if (first < 0) throw DomainError("invariants admit no trajectory in [0, Fc]");
    if (vmin >= -vtol) {
        mc.kind = MotionKind::Stationary;
        mc.F_min = mc.F_max = Fmin_at;
        return mc;
    }
    auto refine = [&](double a, double b) {
        // V(a) > 0 >= V(b) or the reverse; bisection on the sign.
        bool sa = V(a) > 0.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (a + b);
            ((V(mid) > 0.0) == sa ? a : b) = mid;
        }
        return 0.5 * (a + b);
    };
    mc.kind = MotionKind::Periodic;
    mc.F_min = first == 0 ? 0.0 : refine(Fc * (first - 1) / K, Fc * first / K);
    mc.F_max = last == K ? Fc : refine(Fc * (last + 1) / K, Fc * last / K);
    return mc;
}

struct StationaryState {
    ManifoldState state;
    double lambda = 0.0;
    double omega = 0.0;
};

/// Z stationary families 1 to 3 at given F0 and N. Modes evolve as e^{-i(lambda + n omega) t}.
inline StationaryState stationary_state(int index, double s, double F0, double N) {
    require_admissible_s(s);
    const double Fc = critical_F(s);
    if (!(F0 > 0.0) || !(F0 < Fc)) throw DomainError("stationary_state requires 0 < F0 < Fc");
    if (!(N > 0.0)) throw DomainError("stationary_state requires N > 0");
    const double x0 = x_of_F(s, F0);
    const double p = std::sqrt(x0);
    double ratio;  // c = ratio * b p
    switch (index) {
        case 1: ratio = -1.0 / F0; break;
        case 2: ratio = 1.0; break;
        case 3: ratio = -(1.0 - (s - 1.0) * F0) / (s * F0); break;
        default: throw DomainError("stationary family index must be 1, 2 or 3");
    }
    // N = |b|^2 (1 + ratio^2 x F/x) = |b|^2 (1 + ratio^2 F0)
    const double b = std::sqrt(N / (1.0 + ratio * ratio * F0));
    StationaryState out;
    out.state = ManifoldState{ManifoldFamily::Z, s, b, ratio * b * p, p};
    const double E = std::norm(out.state.c) * F_prime(s, F0);
    switch (index) {
        case 1: out.lambda = N; out.omega = 0.0; break;
        case 2: out.lambda = N + s * E; out.omega = s * N; break;
        case 3: out.lambda = N + (s - 1.0) * E; out.omega = (s - 1.0) * (N - 2.0 * E); break;
    }
    return out;
}

/**
 * Builds a manifold state with prescribed N, E, S at F = F0.
 * direction picks the sign of dF/dt (+1 toward Fc). b and p are made real positive.
 */
inline ManifoldState manifold_from_invariants(ManifoldFamily fam, double s, double N, double E, double S,
                                              double F0, int direction = +1, double tol = 1e-12) {
    require_admissible_s(s);
    const double Fc = critical_F(s);
    if (!(F0 >= 0.0) || !(F0 < Fc)) throw DomainError("F0 outside [0, Fc)");
    const double F1 = F0 + 1.0;
    const double u = (s - 1.0) * F0;
    double b2, c2, R;
    if (fam == ManifoldFamily::Z) {
        b2 = N - E * (1.0 - u) / F1;
        c2 = E * (1.0 - u) / std::pow(F1, s + 1.0);
        R = (S * F1 / (2.0 * s) - N - (F0 - 1.0) / F1 * (1.0 - u) * E) / (2.0 * std::pow(F1, s));
    } else {
        b2 = N - E * (2.0 - u) / (2.0 * F1);
        c2 = (s + 1.0) * E / (2.0 * std::pow(F1, s + 1.0));
        R = (S - E * (u - 2.0) * (u + 4.0 * s + 2.0) / (4.0 * F1 * F1) - N * (u + 2.0 * s) / F1) /
            (2.0 * (s + 1.0) * std::pow(F1, s - 1.0));
    }
    const double scale = std::max({std::abs(N), std::abs(E), 1e-300});
    if (b2 < -tol * scale || c2 < -tol * scale) throw DomainError("no state with these N, E at F0");
    b2 = std::max(b2, 0.0);
    c2 = std::max(c2, 0.0);
    const double x0 = F0 == 0.0 ? 0.0 : x_of_F(s, F0);
    const double amp = std::sqrt(b2 * c2 * x0);
    double cphi;
    if (amp == 0.0) {
        if (std::abs(R) > tol * scale) throw DomainError("S inconsistent with a degenerate state");
        cphi = 1.0;
    } else {
        cphi = R / amp;
        if (std::abs(cphi) > 1.0 + 1e-9) throw DomainError("S unreachable: |cos phi| > 1 at F0");
        cphi = std::clamp(cphi, -1.0, 1.0);
    }
    const double sphi = std::sqrt(std::max(0.0, 1.0 - cphi * cphi));
    ManifoldState ms{fam, s, std::sqrt(b2), std::sqrt(c2) * cplx(cphi, sphi), std::sqrt(x0)};
    if (amp != 0.0 && sphi > 0.0) {
        const auto d = reduced_rhs(ms);
        const double xdot = 2.0 * std::real(std::conj(ms.p) * d[2]);
        if ((xdot > 0.0) != (direction > 0)) ms.c = std::sqrt(c2) * cplx(cphi, -sphi);
    }
    return ms;
}

/// Stop when x/xc exceeds the threshold; records N, E, S, F, x_over_xc and log_q.
struct ReducedRun {
    RunRecord record;
    std::vector<ManifoldState> states;  // one per sample
};

inline ReducedRun integrate_reduced(const ManifoldState& init, const IntegratorConfig& cfg,
                                    double x_over_xc_max = 0.0) {
    require_admissible(init);
    const ManifoldFamily fam = init.family;
    const double s = init.s;
    const double xc = s > 1.0 ? critical_x(s) : 1.0;
    auto unpack = [fam, s](std::span<const cplx> y) { return ManifoldState{fam, s, y[0], y[1], y[2]}; };
    RhsFn rhs = [unpack, xc](double, std::span<const cplx> y, std::span<cplx> dy) {
        if (!(std::norm(y[2]) < xc)) throw AdmissibilityError("trial step left |p|^2 < xc");
        auto d = reduced_rhs(unpack(y));
        dy[0] = d[0];
        dy[1] = d[1];
        dy[2] = d[2];
    };
    auto states = std::make_shared<std::vector<ManifoldState>>();
    Diagnostics diag = [unpack, xc, states](double, std::span<const cplx> y, std::map<std::string, double>& row) {
        const ManifoldState ms = unpack(y);
        const ConservedSet cs = conserved_from_manifold(ms);
        row["N"] = cs.N;
        row["E"] = cs.E;
        row["S"] = cs.S;
        row["H"] = cs.H;
        row["F"] = manifold_F(ms);
        row["x_over_xc"] = ms.x() / xc;
        states->push_back(ms);
    };
    StopCheck stop;
    if (x_over_xc_max > 0.0) {
        stop = [xc, x_over_xc_max](double, std::span<const cplx> y) -> std::optional<StopReason> {
            if (std::norm(y[2]) / xc >= x_over_xc_max) return StopReason::Criticality;
            return std::nullopt;
        };
    }
    ReducedRun out;
    out.record = integrate(rhs, State{init.b, init.c, init.p}, 0.0, cfg, diag, stop);
    out.states = std::move(*states);
    return out;
}

}  // namespace cascade
