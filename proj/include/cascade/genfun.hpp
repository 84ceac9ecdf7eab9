#pragma once

#include <cmath>
#include <limits>

#include "cascade/errors.hpp"
#include "cascade/sequences.hpp"

namespace cascade {

/// Everything needed to evaluate F, F' and G for one s.
struct GenFunContext {
    double s = 2.0;
    double xc = 0.25;
    double log_xc = std::log(0.25);
    double Fc = 1.0;
    double series_tol = 1e-15;
    double newton_tol = 1e-15;

    GenFunContext() = default;
    explicit GenFunContext(double s_, double series_tol_ = 1e-15, double newton_tol_ = 1e-15)
        : s(s_), xc(critical_x(s_)), log_xc(log_critical_x(s_)), Fc(critical_F(s_)),
          series_tol(series_tol_), newton_tol(newton_tol_) {
        require_admissible_s(s_);
        if (!(series_tol_ > 0.0 && series_tol_ <= 1e-6) || !(newton_tol_ > 0.0 && newton_tol_ <= 1e-6))
            throw DomainError("GenFunContext tolerances must lie in (0, 1e-6]");
    }
    explicit GenFunContext(const SequenceTable& t, double series_tol_ = 1e-15, double newton_tol_ = 1e-15)
        : GenFunContext(t.s(), series_tol_, newton_tol_) {}
};

inline void require_x_in_domain(const GenFunContext& ctx, double x, bool allow_xc = true) {
    if (!(x >= 0.0)) throw DomainError("x must be non-negative");
    if (allow_xc ? x > ctx.xc : x >= ctx.xc) throw DomainError("supercritical x: outside the disc of convergence");
}

/// F(x) = sum_{n>=1} A_n x^n by direct summation with a geometric tail bound.
inline double F_series(const GenFunContext& ctx, double x) {
    require_x_in_domain(ctx, x, false);
    if (x == 0.0) return 0.0;
    if (ctx.s == 1.0) return x / (1.0 - x);
    const double lq = std::log(x) - ctx.log_xc;  // <= 0
    const double q = std::exp(lq);
    double sum = 0.0;
    for (long n = 1;; ++n) {
        double term = std::exp(log_fuss_catalan_compensated(ctx.s, double(n)) + n * lq);
        sum += term;
        // A_{n+1}/A_n increases to 1/xc, so later terms are bounded by term q^k.
        if (q < 1.0 && term * q / (1.0 - q) <= ctx.series_tol * sum) break;
    }
    return sum;
}

inline double x_of_F(double s, double F) {
    require_admissible_s(s);
    if (!(F >= 0.0)) throw DomainError("F must be non-negative");
    if (s > 1.0 && F > critical_F(s) * (1.0 + 1e-15)) throw DomainError("F beyond Fc");
    return F / std::pow(1.0 + F, s);
}

/// Inverse of x(F) on [0, Fc] by bracketed Newton on log F - s log1p F - log x.
inline double F_of_x(const GenFunContext& ctx, double x) {
    require_x_in_domain(ctx, x);
    if (x == 0.0) return 0.0;
    if (ctx.s == 1.0) return x / (1.0 - x);
    const double s = ctx.s;
    const double Fc = ctx.Fc;
    const double lx = std::log(x);
    if (lx >= ctx.log_xc) return Fc;
    auto g = [&](double F) { return std::log(F) - s * std::log1p(F) - lx; };
    auto dg = [&](double F) { return (1.0 - (s - 1.0) * F) / (F * (1.0 + F)); };

    double lo = 0.0, hi = Fc;
    // Starting guess: small-x series or the square-root branch near xc.
    double F;
    double lam = ctx.log_xc - lx;
    if (x < 0.5 * ctx.xc) {
        F = x * (1.0 + s * x);
        if (!(F < Fc)) F = 0.5 * Fc;
    } else {
        // g(Fc - d) ~ -(s-1)^3 d^2 / (2 s)
        double d = std::sqrt(2.0 * s * lam / std::pow(s - 1.0, 3));
        F = std::max(Fc - d, 0.5 * Fc);
    }
    for (int it = 0; it < 200; ++it) {
        double val = g(F);
        if (val > 0.0) hi = F; else lo = F;
        double step = val / dg(F);
        double Fn = F - step;
        if (!(Fn > lo && Fn < hi)) Fn = 0.5 * (lo + hi);
        if (std::abs(Fn - F) <= ctx.newton_tol * Fn) { F = Fn; break; }
        F = Fn;
        if (hi - lo <= ctx.newton_tol * hi * 0.5) break;
    }
    return F;
}

/// F'(x) at F = F(x): (1+F)^{s+1} / (1 - (s-1)F). +inf at F = Fc.
inline double F_prime(double s, double F) {
    double den = 1.0 - (s - 1.0) * F;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(1.0 + F, s + 1.0) / den;
}

/// G = sum g_n^2 x^n = (2 Fc - F) F / ((s+1) Fc).
inline double G_of_F(double s, double F) { return (2.0 - (s - 1.0) * F) * F / (s + 1.0); }

inline double G_prime(double s, double F) { return 2.0 * std::pow(1.0 + F, s + 1.0) / (s + 1.0); }

/// F/x = (1+F)^s, finite at x = 0.
inline double F_over_x(double s, double F) { return std::pow(1.0 + F, s); }

/// G/x = (2 - (s-1)F)(1+F)^s / (s+1).
inline double G_over_x(double s, double F) {
    return (2.0 - (s - 1.0) * F) * std::pow(1.0 + F, s) / (s + 1.0);
}

/**
 * log(x/xc) from the defect d = Fc - F, without the cancellation of log x - log xc.
 * log(x/xc) = -sum_{k>=2} u^k (1 - s^{1-k}) / k with u = (s-1) d.
 */
inline double log_x_over_xc_from_defect(double s, double d) {
    if (s == 1.0) throw DomainError("log_x_over_xc_from_defect requires s > 1");
    if (d < 0.0) throw DomainError("negative defect");
    const double u = (s - 1.0) * d;
    if (u > 0.5) {
        double F = critical_F(s) - d;
        return std::log(F) - s * std::log1p(F) - log_critical_x(s);
    }
    double acc = 0.0;
    double uk = u;
    double sk = 1.0;  // s^{1-k}
    for (int k = 2; k < 200; ++k) {
        uk *= u;
        sk /= s;
        double term = uk * (1.0 - sk) / k;
        acc += term;
        if (term < 1e-18 * acc) break;
    }
    return -acc;
}

}  // namespace cascade
