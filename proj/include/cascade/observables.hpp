#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "cascade/analytic.hpp"
#include "cascade/couplings.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/errors.hpp"
#include "cascade/manifold.hpp"
#include "cascade/series.hpp"

namespace cascade {

struct Conserved {
    double N = 0.0, E = 0.0, H = 0.0;
};

inline Conserved conserved(const CouplingFamily& fam, const ModeState& st) {
    return Conserved{total_N(st.alpha), total_E(st.alpha), hamiltonian(fam, st)};
}

inline std::vector<double> modsq(std::span<const cplx> a) {
    std::vector<double> out(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = std::norm(a[n]);
    return out;
}

/// (sum (n+1)^{2 xi} |alpha_n|^2)^{1/2}
inline double sobolev(std::span<const double> msq, double xi) {
    double acc = 0.0;
    for (std::size_t n = 0; n < msq.size(); ++n) acc += std::pow(n + 1.0, 2.0 * xi) * msq[n];
    return std::sqrt(acc);
}

inline double sobolev(const ModeState& st, double xi) { return sobolev(modsq(st.alpha), xi); }

/**
 * Sobolev norm squared of the untruncated manifold state, summed with TailSeries.
 * Inputs are |b|^2, |c|^2 and log(x/xc); no cancellation as x -> xc.
 */
inline double sobolev_sq_manifold(ManifoldFamily fam, double s, double b2, double c2, double log_q, double xi,
                                  int n0 = 4096) {
    SeriesWeight w{s, 1.0, fam == ManifoldFamily::Y ? 1.0 : 0.0, 2.0 * xi};
    TailSeries ts(w, n0);
    const double S = ts.sum(std::complex<double>(log_q, 0.0)).real();
    return b2 + c2 / critical_x(s) * S;
}

inline double sobolev_manifold(const ManifoldPoint& mp, ManifoldFamily fam, double s, double xi) {
    return std::sqrt(sobolev_sq_manifold(fam, s, mp.b_abs * mp.b_abs, mp.c_abs * mp.c_abs, mp.log_q, xi));
}

/// Cached variant for long time series at fixed (family, s, xi).
class ManifoldSobolev {
public:
    ManifoldSobolev(ManifoldFamily fam, double s, double xi, int n0 = 4096)
        : s_(s), ts_(SeriesWeight{s, 1.0, fam == ManifoldFamily::Y ? 1.0 : 0.0, 2.0 * xi}, n0) {}
    double squared(double b2, double c2, double log_q) const {
        return b2 + c2 / critical_x(s_) * ts_.sum(std::complex<double>(log_q, 0.0)).real();
    }

private:
    double s_;
    TailSeries ts_;
};

struct BandSums {
    double N = 0.0, E = 0.0;
};

inline std::vector<BandSums> band_fractions(std::span<const double> msq, const std::vector<std::pair<int, int>>& bands) {
    const int L = static_cast<int>(msq.size()) - 1;
    if (bands.empty()) throw DomainError("band list is empty");
    std::vector<int> owner(L + 1, -1);
    std::vector<BandSums> out(bands.size());
    for (std::size_t b = 0; b < bands.size(); ++b) {
        auto [lo, hi] = bands[b];
        if (lo > hi) throw DomainError("empty band [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        if (lo < 0 || hi > L) throw DomainError("band outside [0, L]");
        for (int n = lo; n <= hi; ++n) {
            if (owner[n] >= 0) throw DomainError("overlapping bands at mode " + std::to_string(n));
            owner[n] = static_cast<int>(b);
            out[b].N += msq[n];
            out[b].E += n * msq[n];
        }
    }
    return out;
}

struct FitResult {
    double exponent = 0.0;
    double amplitude = 0.0;
    double lo = 0.0, hi = 0.0;  // window
    double rms = 0.0;
    int points = 0;
    std::vector<double> coefficients;  // all model coefficients, intercept first
};

namespace detail {

// Least squares via normal equations in long double; columns are few and well scaled.
inline std::vector<double> lstsq(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
    const std::size_t k = cols.size(), m = y.size();
    std::vector<long double> scale(k, 0.0L);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < m; ++i) scale[a] = std::max(scale[a], (long double)std::abs(cols[a][i]));
        if (scale[a] == 0.0L) scale[a] = 1.0L;
    }
    std::vector<std::vector<long double>> A(k, std::vector<long double>(k + 1, 0.0L));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            long double acc = 0.0L;
            for (std::size_t i = 0; i < m; ++i) acc += (cols[a][i] / scale[a]) * (cols[b][i] / scale[b]);
            A[a][b] = acc;
        }
        long double acc = 0.0L;
        for (std::size_t i = 0; i < m; ++i) acc += (cols[a][i] / scale[a]) * y[i];
        A[a][k] = acc;
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        if (A[c][c] == 0.0L) throw DomainError("singular least-squares system");
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            long double f = A[r][c] / A[c][c];
            for (std::size_t j = c; j <= k; ++j) A[r][j] -= f * A[c][j];
        }
    }
    std::vector<double> out(k);
    for (std::size_t a = 0; a < k; ++a) out[a] = static_cast<double>(A[a][k] / A[a][a] / scale[a]);
    return out;
}

}  // namespace detail

struct PowerlawOptions {
    int n_max = -1;            // -1: largest index above the roundoff floor
    double log_q = 0.0;        // subtract n log(x/xc) before fitting
    int subleading = 1;        // number of 1/n^k correction terms
    bool fit_geometric = false;  // also fit the geometric rate (unknown x)
};

/**
 * Fits log|alpha_n|^2 = log a + gamma log n [+ sum c_k n^{-k}] [+ n g] on [n_min, n_max].
 * The 1/n terms absorb the finite-n curvature of the Fuss-Catalan asymptote.
 */
inline FitResult powerlaw_fit(std::span<const double> msq, int n_min, const PowerlawOptions& opt = {}) {
    if (n_min < 8) throw DomainError("powerlaw_fit requires n_min >= 8");
    const int L = static_cast<int>(msq.size()) - 1;
    double total = 0.0;
    for (double v : msq) total += v;
    const double eps = std::numeric_limits<double>::epsilon();
    const double floor = 1e3 * eps * eps * total;
    int n_max = opt.n_max < 0 ? L : std::min(opt.n_max, L);
    if (opt.n_max < 0) {
        // Usable range ends where the spectrum falls into the roundoff floor.
        for (int n = n_min; n <= n_max; ++n) {
            if (!(msq[n] > floor)) {
                n_max = n - 1;
                break;
            }
        }
    } else {
        for (int n = n_min; n <= n_max; ++n)
            if (!(msq[n] > floor)) throw DomainError("spectrum below the roundoff floor inside the fit window");
    }
    const int npar = 2 + opt.subleading + (opt.fit_geometric ? 1 : 0);
    const int m = n_max - n_min + 1;
    if (m < npar + 2) throw DomainError("too few usable points for a power-law fit");
    std::vector<std::vector<double>> cols(npar, std::vector<double>(m));
    std::vector<double> y(m);
    for (int i = 0; i < m; ++i) {
        const double n = n_min + i;
        y[i] = std::log(msq[n_min + i]) - n * opt.log_q;
        int c = 0;
        cols[c++][i] = 1.0;
        cols[c++][i] = std::log(n);
        for (int k = 1; k <= opt.subleading; ++k) cols[c++][i] = std::pow(n, -k);
        if (opt.fit_geometric) cols[c++][i] = n;
    }
    auto coef = detail::lstsq(cols, y);
    FitResult fr;
    fr.coefficients = coef;
    fr.exponent = coef[1];
    fr.amplitude = std::exp(coef[0]);
    fr.lo = n_min;
    fr.hi = n_max;
    fr.points = m;
    double rss = 0.0;
    for (int i = 0; i < m; ++i) {
        double pred = 0.0;
        for (int c = 0; c < npar; ++c) pred += coef[c] * cols[c][i];
        rss += (y[i] - pred) * (y[i] - pred);
    }
    fr.rms = std::sqrt(rss / m);
    return fr;
}

enum class RateKind { Power, Log };

/**
 * power: slope of log v against log(T - t).
 * log:   coefficient b of v = a + b log(1/(T - t)).
 * rms is reported as relative deviation of v in both cases, so the two are comparable.
 */
inline FitResult blowup_rate_fit(std::span<const double> t, std::span<const double> v, double T, RateKind kind) {
    if (t.size() != v.size()) throw DomainError("series length mismatch");
    std::vector<double> lt, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double tau = T - t[i];
        if (!(tau > 0.0) || !(v[i] > 0.0)) continue;
        lt.push_back(std::log(tau));
        y.push_back(kind == RateKind::Power ? std::log(v[i]) : v[i]);
    }
    if (lt.size() < 3) throw DomainError("degenerate window for a rate fit");
    const double span = *std::max_element(lt.begin(), lt.end()) - *std::min_element(lt.begin(), lt.end());
    if (!(span > 0.0)) throw DomainError("degenerate window for a rate fit");
    std::vector<std::vector<double>> cols(2, std::vector<double>(lt.size(), 1.0));
    for (std::size_t i = 0; i < lt.size(); ++i) cols[1][i] = kind == RateKind::Power ? lt[i] : -lt[i];
    auto coef = detail::lstsq(cols, y);
    FitResult fr;
    fr.coefficients = coef;
    fr.exponent = coef[1];
    fr.amplitude = kind == RateKind::Power ? std::exp(coef[0]) : coef[0];
    fr.lo = std::exp(*std::min_element(lt.begin(), lt.end()));
    fr.hi = std::exp(*std::max_element(lt.begin(), lt.end()));
    fr.points = static_cast<int>(lt.size());
    double rss = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        const double pred = coef[0] + coef[1] * cols[1][i];
        const double r = kind == RateKind::Power ? y[i] - pred : std::log(std::max(pred, 1e-300) / y[i]);
        rss += r * r;
    }
    fr.rms = std::sqrt(rss / lt.size());
    return fr;
}

/// Samples of the trailing temporal decade: tau in [tau_stop, 10 tau_stop].
inline std::pair<std::vector<double>, std::vector<double>> last_decade(std::span<const double> t,
                                                                       std::span<const double> v, double T) {
    double tau_stop = std::numeric_limits<double>::infinity();
    for (double ti : t) tau_stop = std::min(tau_stop, T - ti);
    std::vector<double> ot, ov;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double tau = T - t[i];
        if (tau > 0.0 && tau <= 10.0 * tau_stop * (1 + 1e-12)) {
            ot.push_back(t[i]);
            ov.push_back(v[i]);
        }
    }
    return {ot, ov};
}

/**
 * Extrapolated blow-up time from samples of a defect d(t) ~ C (T - t)^k:
 * quadratic least squares of d^{1/k} in t, root past the last sample.
 */
inline double estimate_blowup_time(std::span<const double> t, std::span<const double> d, double k) {
    if (t.size() != d.size() || t.size() < 4) throw DomainError("estimate_blowup_time needs >= 4 samples");
    const double t_ref = t.back();
    std::vector<std::vector<double>> cols(3, std::vector<double>(t.size(), 1.0));
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dt = t[i] - t_ref;
        cols[1][i] = dt;
        cols[2][i] = dt * dt;
        y[i] = std::pow(std::max(d[i], 0.0), 1.0 / k);
    }
    auto c = detail::lstsq(cols, y);
    // c0 + c1 u + c2 u^2 = 0 with u = T - t_ref > 0 small: Newton from the linear root.
    double u = -c[0] / c[1];
    for (int it = 0; it < 50; ++it) {
        const double f = c[0] + c[1] * u + c[2] * u * u;
        const double df = c[1] + 2 * c[2] * u;
        const double du = f / df;
        u -= du;
        if (std::abs(du) < 1e-16 * std::max(1.0, std::abs(u))) break;
    }
    return t_ref + u;
}

// ---------------------------------------------------------------- position space

/// u(theta_j) = sum alpha_n e^{i n theta_j} on the uniform grid theta_j = 2 pi j / G.
inline std::vector<cplx> position_space(std::span<const cplx> a, int G) {
    const int L = static_cast<int>(a.size()) - 1;
    if (G < 2 * L) throw DomainError("theta grid smaller than 2L aliases the modes");
    std::vector<cplx> roots(G);
    for (int k = 0; k < G; ++k) roots[k] = std::polar(1.0, 2.0 * kPi * k / G);
    std::vector<cplx> u(G);
    for (int j = 0; j < G; ++j) {
        cplx acc = 0.0;
        long idx = 0;
        for (int n = 0; n <= L; ++n) {
            acc += a[n] * roots[idx];
            idx += j;
            if (idx >= G) idx -= G;
        }
        u[j] = acc;
    }
    return u;
}

/// Direct evaluation at arbitrary theta.
inline cplx position_at(std::span<const cplx> a, double theta) {
    cplx acc = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) acc += a[n] * std::polar(1.0, std::fmod(n * theta, 2.0 * kPi));
    return acc;
}

/// (1/G) sum |u_j|^2, equal to N when G > L.
inline double parseval_mass(std::span<const cplx> u) {
    double acc = 0.0;
    for (auto& v : u) acc += std::norm(v);
    return acc / u.size();
}

/**
 * u of the untruncated manifold state at psi = theta + phi_p, tail-compensated.
 * u = b + |c| xc^{-1/2} e^{i(phi_c - phi_p)} e^{i psi} sum_n w_n xc^{n/2} (sqrt(q) e^{i psi})^{n-1}.
 */
class ManifoldProfile {
public:
    ManifoldProfile(ManifoldFamily fam, double s, int n0 = 4096)
        : fam_(fam), s_(s), ts_(SeriesWeight{s, 0.5, fam == ManifoldFamily::Y ? 0.5 : 0.0, 0.0}, n0) {}

    cplx u(const ManifoldPoint& mp, double psi) const {
        const cplx lw(0.5 * mp.log_q, psi);
        const cplx S = ts_.sum(lw);
        return std::polar(mp.b_abs, mp.phi_b) +
               mp.c_abs / std::sqrt(critical_x(s_)) * std::polar(1.0, mp.phi_c - mp.phi_p + psi) * S;
    }

    double modsq(const ManifoldPoint& mp, double psi) const { return std::norm(u(mp, psi)); }

    cplx partial(const ManifoldPoint& mp, double psi, int n_max) const {
        const cplx lw(0.5 * mp.log_q, psi);
        return std::polar(mp.b_abs, mp.phi_b) + mp.c_abs / std::sqrt(critical_x(s_)) *
                                                    std::polar(1.0, mp.phi_c - mp.phi_p + psi) * ts_.partial(lw, n_max);
    }

    const TailSeries& series() const { return ts_; }

private:
    ManifoldFamily fam_;
    double s_;
    TailSeries ts_;
};

/// Self-similar spike |sqrt N + i (2/pi)^{1/4} Gamma(1/4) sqrt E (1 - i C theta_rel/(T-t)^4)^{-1/4}|^2.
inline double spike_profile_z(double s, double N, double E, double T, double t, double theta_rel) {
    const double tau = T - t;
    if (!(tau > 0.0)) throw DomainError("spike_profile_z requires t < T");
    const double C = 4.0 / (s * (s - 1.0) * E * E * N * N);
    const double g14 = std::tgamma(0.25);
    const cplx z = 1.0 - kI * C * theta_rel / std::pow(tau, 4);
    const cplx v = std::sqrt(N) + kI * std::pow(2.0 / kPi, 0.25) * g14 * std::sqrt(E) * std::pow(z, -0.25);
    return std::norm(v);
}

/// Limit of the spike maximum as t -> T.
inline double spike_peak_limit(double N, double E) {
    const double g = std::tgamma(0.25);
    return N + std::sqrt(2.0 / kPi) * g * g * E;
}

/// |u(T, theta)|^2 for a Y cascade, at x = xc exactly.
inline std::vector<double> cusp_profile_y(const CascadeSolution& sol, std::span<const double> theta) {
    if (sol.family != ManifoldFamily::Y) throw DomainError("cusp_profile_y needs a Y cascade solution");
    ManifoldPoint mp = y_point(sol, sol.T);
    mp.log_q = 0.0;
    mp.defect = 0.0;
    ManifoldProfile prof(ManifoldFamily::Y, sol.s);
    std::vector<double> out;
    out.reserve(theta.size());
    for (double th : theta) {
        double psi = std::remainder(th + mp.phi_p, 2.0 * kPi);
        if (psi == 0.0) psi = 0.0;
        out.push_back(prof.modsq(mp, psi));
    }
    return out;
}

/// Y power-law amplitude (s+1)/(2s) E sqrt(Ec/(pi N)) with Ec = 2sN/(s-1).
inline double y_powerlaw_amplitude(double s, double N, double E) {
    const double Ec = 2.0 * s * N / (s - 1.0);
    return (s + 1.0) / (2.0 * s) * E * std::sqrt(Ec / (kPi * N));
}

}  // namespace cascade
