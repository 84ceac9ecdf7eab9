#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "cascade/errors.hpp"

namespace cascade {

inline constexpr double kPi = 3.14159265358979323846;

/// Radius of convergence of the Fuss-Catalan generating function.
inline double critical_x(double s) {
    if (s == 1.0) return 1.0;
    return std::exp((s - 1.0) * std::log(s - 1.0) - s * std::log(s));
}

inline double log_critical_x(double s) {
    if (s == 1.0) return 0.0;
    return (s - 1.0) * std::log(s - 1.0) - s * std::log(s);
}

/// F at x = xc. Infinite for s = 1.
inline double critical_F(double s) {
    if (s == 1.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (s - 1.0);
}

namespace detail {

// Bernoulli coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
inline constexpr double kStirling[] = {
    1.0 / 12.0,         -1.0 / 360.0,        1.0 / 1260.0,
    -1.0 / 1680.0,      1.0 / 1188.0,        -691.0 / 360360.0,
    1.0 / 156.0,        -3617.0 / 122400.0,
};

// lgamma(z+1) - (z ln z - z + ln(2 pi z)/2) for large |z|.
template <class T>
T stirling_tail(T z) {
    T inv = T(1.0) / z;
    T inv2 = inv * inv;
    T acc = T(0.0);
    T p = inv;
    for (double c : kStirling) {
        acc += c * p;
        p *= inv2;
    }
    return acc;
}

// Same correction for any real z > 0, shifting upward until the series is sharp.
inline double stirling_correction(double z) {
    constexpr double zmin = 12.0;
    if (z >= zmin) return stirling_tail(z);
    int k = static_cast<int>(std::ceil(zmin - z));
    double w = z + k;
    // lgamma(z+1) = lgamma(w+1) - sum_{j=1..k} ln(z+j)
    double logs = 0.0;
    for (int j = 1; j <= k; ++j) logs += std::log(z + j);
    double base_w = w * std::log(w) - w + 0.5 * std::log(2.0 * kPi * w);
    double base_z = z * std::log(z) - z + 0.5 * std::log(2.0 * kPi * z);
    return stirling_tail(w) + base_w - logs - base_z;
}

template <class T>
T log1p_any(T e) {
    if constexpr (std::is_floating_point_v<T>) {
        return std::log1p(e);
    } else {
        if (std::abs(e) > 0.25) return std::log(T(1.0) + e);
        T acc = T(0.0);
        T p = e;
        for (int k = 1; k <= 40; ++k) {
            acc += (k % 2 ? 1.0 : -1.0) * p / double(k);
            p *= e;
        }
        return acc;
    }
}

}  // namespace detail

inline bool is_admissible_s(double s) { return std::isfinite(s) && s >= 1.0; }

inline void require_admissible_s(double s) {
    if (!is_admissible_s(s)) throw DomainError("s must be a finite real >= 1");
}

/// log A_n with A_n = Gamma(sn+1) / (Gamma((s-1)n+2) Gamma(n+1)), direct lgamma form.
inline double log_fuss_catalan_lgamma(double s, double n) {
    return std::lgamma(s * n + 1.0) - std::lgamma((s - 1.0) * n + 2.0) - std::lgamma(n + 1.0);
}

/**
 * Compensated logarithm l(t) = log A(t) + t log xc.
 *
 * The O(t log t) pieces cancel analytically, so the result is O(log t) with
 * absolute error near machine epsilon. Accepts complex t when |t| is large
 * (used along rotated contours); real t may be any non-negative value.
 */
template <class T>
    requires(!std::is_integral_v<T>)
T log_fuss_catalan_compensated(double s, T t) {
    if (s == 1.0) return T(0.0);
    if constexpr (std::is_floating_point_v<T>) {
        if (t == 0.0) return 0.0;
        if (t < 0.0) throw DomainError("log_fuss_catalan_compensated: t < 0");
    }
    const double a = s - 1.0;
    T z2 = a * t + 1.0;
    T eps = T(1.0) / (a * t);
    T st = s * t;
    T corr;
    if constexpr (std::is_floating_point_v<T>) {
        corr = detail::stirling_correction(st) - detail::stirling_correction(z2) -
               detail::stirling_correction(t);
    } else {
        corr = detail::stirling_tail(st) - detail::stirling_tail(z2) - detail::stirling_tail(t);
    }
    return T(1.0) - std::log(a * t) - z2 * detail::log1p_any(eps) +
           0.5 * std::log(T(s) / (2.0 * kPi * z2)) + corr;
}

inline double log_fuss_catalan_compensated(double s, long n) { return log_fuss_catalan_compensated(s, double(n)); }

/// Precomputed log tables for indices 0..2L.
class SequenceTable {
public:
    SequenceTable(double s, int L) : s_(s), L_(L) {
        require_admissible_s(s);
        if (L < 1) throw DomainError("L must be >= 1");
        log_xc_ = log_critical_x(s);
        xc_ = critical_x(s);
        Fc_ = critical_F(s);
        const int n_max = 2 * L;
        ell_.resize(n_max + 1);
        for (int n = 0; n <= n_max; ++n) ell_[n] = log_fuss_catalan_compensated(s, double(n));
    }

    double s() const { return s_; }
    int L() const { return L_; }
    int size() const { return static_cast<int>(ell_.size()); }
    double xc() const { return xc_; }
    double log_xc() const { return log_xc_; }
    double Fc() const { return Fc_; }

    double log_A(int n) const { return ell_.at(n) - n * log_xc_; }
    double log_f(int n) const { return 0.5 * log_A(n); }
    double log_g(int n) const { return log_f(n) - 0.5 * std::log((s_ - 1.0) * n / 2.0 + 1.0); }

    // Scaled by xc^{n/2}: log f_n + (n/2) log xc. Grows only like -3/4 log n.
    double log_f_scaled(int n) const { return 0.5 * ell_.at(n); }
    double log_A_scaled(int n) const { return ell_.at(n); }

    double A(int n) const { return std::exp(log_A(n)); }
    double f(int n) const { return std::exp(log_f(n)); }
    double g(int n) const { return std::exp(log_g(n)); }

private:
    double s_;
    int L_;
    double log_xc_, xc_, Fc_;
    std::vector<double> ell_;
};

inline SequenceTable build_sequence_table(double s, int L) { return SequenceTable(s, L); }

/// log of the large-n asymptote (s / (2 pi (s-1)^3))^{1/4} n^{-3/4} xc^{-n/2}.
inline double log_f_asymptotic(double s, double n) {
    if (s <= 1.0) throw DomainError("f_asymptotic requires s > 1");
    if (n <= 0.0) throw DomainError("f_asymptotic requires n > 0");
    return 0.25 * std::log(s / (2.0 * kPi * std::pow(s - 1.0, 3))) - 0.75 * std::log(n) -
           0.5 * n * log_critical_x(s);
}

inline double f_asymptotic(double s, double n) { return std::exp(log_f_asymptotic(s, n)); }

/**
 * Relative residual of sum_{k=1}^{M-1} A_{M-k} A_k = (M-1) / ((s-1)M/2 + 1) A_M.
 * Terms are formed as exp of compensated log differences so nothing overflows.
 */
inline double verify_convolution_identity(double s, int M) {
    require_admissible_s(s);
    if (M < 2) throw DomainError("verify_convolution_identity requires M >= 2");
    const double lM = log_fuss_catalan_compensated(s, double(M));
    double sum = 0.0, comp = 0.0;
    for (int k = 1; k < M; ++k) {
        double term = std::exp(log_fuss_catalan_compensated(s, double(M - k)) +
                               log_fuss_catalan_compensated(s, double(k)) - lM);
        // Kahan summation keeps the residual at the rounding floor.
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double expected = (M - 1.0) / ((s - 1.0) * M / 2.0 + 1.0);
    return std::abs(sum - expected) / expected;
}

}  // namespace cascade
