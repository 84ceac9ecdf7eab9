#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "cascade/errors.hpp"
#include "cascade/sequences.hpp"

namespace cascade {

/**
 * Log-amplitude a(t) = ell_scale * l(t) - y_scale * log((s-1)t/2 + 1) + 2 xi log(t + 1),
 * where l is the compensated Fuss-Catalan log. Covers every manifold series we sum:
 * A_n xc^n (ell 1), f_n xc^{n/2} (ell 1/2), the Y weights, and Sobolev weights.
 */
struct SeriesWeight {
    double s = 2.0;
    double ell_scale = 1.0;
    double y_scale = 0.0;
    double two_xi = 0.0;

    template <class T>
    T operator()(T t) const {
        T a = ell_scale * log_fuss_catalan_compensated(s, t);
        if (y_scale != 0.0) a -= y_scale * std::log((s - 1.0) * t / 2.0 + 1.0);
        if (two_xi != 0.0) a += two_xi * std::log(t + 1.0);
        return a;
    }
};

namespace detail {

struct GaussLegendre {
    std::vector<double> x, w;
    explicit GaussLegendre(int n) : x(n), w(n) {
        for (int i = 0; i < n; ++i) {
            double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (z * p1 - p0) / (z * z - 1.0);
                double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) {
                    x[i] = z;
                    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
            }
        }
    }
};

inline const GaussLegendre& gl10() {
    static const GaussLegendre g(10);
    return g;
}

// 1/y - 1/(e^y - 1): the exact Euler-Maclaurin remainder for a pure exponential.
inline std::complex<double> em_kernel(std::complex<double> y) {
    if (std::abs(y) < 0.05) {
        std::complex<double> y2 = y * y;
        return 0.5 - y / 12.0 + y * y2 / 720.0 - y * y2 * y2 / 30240.0 + y * y2 * y2 * y2 / 1209600.0;
    }
    return 1.0 / y - 1.0 / (std::exp(y) - 1.0);
}

}  // namespace detail

/**
 * S(w) = sum_{n>=1} exp(a(n)) w^{n-1} for |w| <= 1, including |w| -> 1 where
 * plain truncation fails. Terms below n0 are summed directly. The remainder is an
 * integral along the steepest-descent ray plus the exact exponential correction
 * at n0, both using the complex continuation of a(t).
 */
class TailSeries {
public:
    explicit TailSeries(SeriesWeight w, int n0 = 4096) : w_(w), n0_(n0) {
        if (n0 < 64) throw DomainError("TailSeries needs n0 >= 64");
        a_.resize(n0 + 1);
        for (int n = 1; n <= n0; ++n) a_[n] = w_(double(n));
        // Large-t power: a(t) ~ beta log t.
        beta_ = (w_(double(2 * n0)) - w_(double(n0))) / std::log(2.0);
    }

    int n0() const { return n0_; }
    double log_amp(int n) const { return a_.at(n); }

    /// log_w = log|w| + i arg w with log|w| <= 0; -inf means w = 0.
    std::complex<double> sum(std::complex<double> log_w) const {
        using C = std::complex<double>;
        const double lr = log_w.real();
        if (lr > 1e-15) throw DomainError("TailSeries requires |w| <= 1");
        if (lr == -std::numeric_limits<double>::infinity()) return std::exp(a_[1]);
        // Reduce the phase to (-pi, pi]; w^{n-1} only sees it modulo 2 pi.
        double ph = std::remainder(log_w.imag(), 2.0 * kPi);
        const C lw(std::min(lr, 0.0), ph);
        C acc = 0.0;
        double log_scale = a_[1];
        for (int n = 1; n < n0_; ++n) {
            const double mag = a_[n] + (n - 1) * lw.real();
            acc += std::exp(C(mag, (n - 1) * ph));
            if (n > 16 && mag < log_scale - 46.0 && a_[n] - a_[n - 1] + lw.real() < 0.0) return acc;
            log_scale = std::max(log_scale, mag);
        }
        return acc + tail(lw);
    }

    /// Plain partial sum up to n_max, for convergence studies.
    std::complex<double> partial(std::complex<double> log_w, int n_max) const {
        std::complex<double> acc = 0.0;
        for (int n = 1; n <= n_max; ++n) {
            double an = n <= n0_ ? a_[n] : w_(double(n));
            acc += std::exp(an + (n - 1.0) * log_w);
        }
        return acc;
    }

private:
    std::complex<double> tail(std::complex<double> lw) const {
        using C = std::complex<double>;
        const C mu = -lw;
        const double amu = std::abs(mu);
        const double t0 = n0_;
        auto phi = [&](C t) { return std::exp(w_(t) + (t - 1.0) * lw); };
        if (amu < 1e-300 && beta_ >= -1.0) return C(std::numeric_limits<double>::infinity(), 0.0);
        // Ray t = n0 + r e^{i eta} along which -mu t is real and decreasing.
        const double eta = amu > 0.0 ? -std::arg(mu) : 0.0;
        const C dir = std::polar(1.0, eta);
        // r = n0 (e^v - 1) resolves both the geometric and the power-law decay.
        double vmax;
        if (amu > 0.0) vmax = std::log1p(60.0 / (amu * t0));
        else vmax = 230.0;
        vmax = std::min(vmax, 230.0);
        const int panels = std::max(40, static_cast<int>(std::ceil(vmax / 0.05)));
        const double hv = vmax / panels;
        const auto& gl = detail::gl10();
        C integral = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double v0 = k * hv;
            for (std::size_t i = 0; i < gl.x.size(); ++i) {
                const double v = v0 + 0.5 * hv * (gl.x[i] + 1.0);
                const double ev = std::exp(v);
                const C t = t0 + t0 * (ev - 1.0) * dir;
                integral += 0.5 * hv * gl.w[i] * phi(t) * (t0 * ev) * dir;
            }
        }
        // Exponential Euler-Maclaurin correction at n0 with local rate y = a'(n0) - mu.
        const double hd = 0.5;
        const double da = (w_(t0 + hd) - w_(t0 - hd)) / (2.0 * hd);
        const C y = da + lw;
        return integral + phi(C(t0, 0.0)) * detail::em_kernel(y);
    }

    SeriesWeight w_;
    int n0_;
    std::vector<double> a_;
    double beta_ = 0.0;
};

}  // namespace cascade
