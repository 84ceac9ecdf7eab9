#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cascade/errors.hpp"
#include "cascade/sequences.hpp"

namespace cascade {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

enum class Family { Z, Y, SzegoCubic, BetaZ };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::Z: return "Z";
        case Family::Y: return "Y";
        case Family::SzegoCubic: return "SzegoCubic";
        case Family::BetaZ: return "BetaZ";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "Z") return Family::Z;
    if (s == "Y") return Family::Y;
    if (s == "SzegoCubic" || s == "szego") return Family::SzegoCubic;
    if (s == "BetaZ") return Family::BetaZ;
    throw DomainError("unknown family '" + s + "'");
}

/// A coupling family bound to a truncation L. The log tables cover 0..2L.
struct CouplingFamily {
    Family kind = Family::Z;
    double s = 2.0;
    double beta = 0.0;
    std::shared_ptr<const SequenceTable> table;

    int L() const { return table->L(); }
};

inline CouplingFamily make_family(Family kind, double s, int L, double beta = 0.0) {
    if (kind == Family::SzegoCubic) s = 1.0;
    require_admissible_s(s);
    if (kind == Family::BetaZ && !std::isfinite(beta)) throw DomainError("beta must be finite");
    if (kind != Family::BetaZ) beta = 0.0;
    return CouplingFamily{kind, s, beta, std::make_shared<const SequenceTable>(s, L)};
}

struct ModeState {
    double t = 0.0;
    std::vector<cplx> alpha;  // modes 0..L
    int L() const { return static_cast<int>(alpha.size()) - 1; }
};

namespace detail {

inline void check_quadruple(const CouplingFamily& fam, int n, int m, int k, int j) {
    if (n < 0 || m < 0 || k < 0 || j < 0) throw ContractViolation("negative mode index");
    if (n + m != k + j) throw ContractViolation("non-resonant quadruple: n+m != k+j");
    const int L = fam.L();
    if (n > L || m > L || k > L || j > L) throw ContractViolation("mode index above L");
}

// Summation order independent of the index permutation, so the symmetries hold bit for bit.
inline std::array<int, 4> sorted_quadruple(int n, int m, int k, int j) {
    std::array<int, 4> q{n, m, k, j};
    std::sort(q.begin(), q.end());
    return q;
}

inline double z_coupling(const SequenceTable& t, int n, int m, int k, int j) {
    const int M = n + m;
    const auto q = sorted_quadruple(n, m, k, j);
    const double lf = t.log_f_scaled(q[0]) + t.log_f_scaled(q[1]) + t.log_f_scaled(q[2]) +
                      t.log_f_scaled(q[3]) - 2.0 * t.log_f_scaled(M);
    return ((t.s() - 1.0) * M / 2.0 + 1.0) * std::exp(lf);
}

inline double y_coupling(const SequenceTable& t, int n, int m, int k, int j) {
    if (static_cast<long long>(n) * m * k * j != 0) return 0.0;
    const double s = t.s();
    const auto q = sorted_quadruple(n, m, k, j);
    const double w = std::sqrt(((s - 1.0) * q[0] + 2.0) * ((s - 1.0) * q[1] + 2.0) *
                               ((s - 1.0) * q[2] + 2.0) * ((s - 1.0) * q[3] + 2.0));
    const int M = n + m;
    const double lf = t.log_f_scaled(q[0]) + t.log_f_scaled(q[1]) + t.log_f_scaled(q[2]) +
                      t.log_f_scaled(q[3]) - 2.0 * t.log_f_scaled(M);
    return 0.25 * w * std::exp(lf);
}

}  // namespace detail

/// Interaction coefficient C_{nmkj} for a resonant quadruple.
inline double coupling(const CouplingFamily& fam, int n, int m, int k, int j) {
    detail::check_quadruple(fam, n, m, k, j);
    const SequenceTable& t = *fam.table;
    switch (fam.kind) {
        case Family::SzegoCubic: return 1.0;
        case Family::Z: return detail::z_coupling(t, n, m, k, j);
        case Family::Y: return detail::y_coupling(t, n, m, k, j);
        case Family::BetaZ: {
            double c = detail::z_coupling(t, n, m, k, j);
            bool sparse = static_cast<long long>(n) * m * k * j == 0;
            return sparse ? c : (1.0 - fam.beta) * c;
        }
    }
    return 0.0;
}

/**
 * Right-hand side evaluator with per-instance scratch buffers.
 * Not safe to share across threads; give each worker its own copy.
 */
class RhsEvaluator {
public:
    explicit RhsEvaluator(CouplingFamily fam) : fam_(std::move(fam)) {
        const int L = fam_.L();
        const SequenceTable& t = *fam_.table;
        fs_.resize(2 * L + 1);
        inv_fs2_.resize(2 * L + 1);
        gamma_.resize(2 * L + 1);
        for (int n = 0; n <= 2 * L; ++n) {
            fs_[n] = std::exp(t.log_f_scaled(n));
            inv_fs2_[n] = std::exp(-2.0 * t.log_f_scaled(n));
            gamma_[n] = (fam_.s - 1.0) * n / 2.0 + 1.0;
        }
        yw_.resize(L + 1);
        for (int n = 0; n <= L; ++n) yw_[n] = std::sqrt((fam_.s - 1.0) * n + 2.0) * fs_[n];
        beta_.resize(L + 1);
        W_.resize(2 * L + 1);
        tmp_.resize(L + 1);
    }

    const CouplingFamily& family() const { return fam_; }
    int L() const { return fam_.L(); }

    /// O(L^3) reference: direct sum over every resonant quadruple.
    void dense(std::span<const cplx> a, std::span<cplx> out) const {
        check_sizes(a, out);
        const int L = fam_.L();
        for (int n = 0; n <= L; ++n) {
            cplx acc = 0.0;
            for (int m = 0; m <= L; ++m) {
                const int M = n + m;
                const cplx am = std::conj(a[m]);
                cplx inner = 0.0;
                for (int k = std::max(0, M - L); k <= std::min(M, L); ++k) {
                    double c = coupling(fam_, n, m, k, M - k);
                    if (c != 0.0) inner += c * a[k] * a[M - k];
                }
                acc += am * inner;
            }
            out[n] = -kI * acc;
        }
    }

    /// O(L^2) evaluation. Z uses the W_M factorization, Y the sparse index set.
    void fast(std::span<const cplx> a, std::span<cplx> out) {
        check_sizes(a, out);
        switch (fam_.kind) {
            case Family::Z: z_fast(a, out); break;
            case Family::SzegoCubic: z_fast(a, out); break;
            case Family::Y: sparse(a, out, yw_, 0.25); break;
            case Family::BetaZ: {
                z_fast(a, out);
                sparse(a, tmp_, fs_, 1.0, gamma_.data());
                const double b = fam_.beta;
                for (int n = 0; n <= fam_.L(); ++n) out[n] = (1.0 - b) * out[n] + b * tmp_[n];
                break;
            }
        }
    }

    /// H = 1/2 sum C conj(a_n a_m) a_k a_j. Real for any state.
    double hamiltonian(std::span<const cplx> a) {
        const int L = fam_.L();
        if (static_cast<int>(a.size()) != L + 1) throw ContractViolation("state size != L+1");
        if (fam_.kind == Family::Z || fam_.kind == Family::SzegoCubic) {
            compute_W(a);
            double h = 0.0;
            for (int M = 0; M <= 2 * L; ++M) h += gamma_[M] * std::norm(W_[M]) * inv_fs2_[M];
            return 0.5 * h;
        }
        std::vector<cplx> r(L + 1);
        fast(a, r);
        double h = 0.0;
        for (int n = 0; n <= L; ++n) h += std::real(std::conj(a[n]) * (kI * r[n]));
        return 0.5 * h;
    }

private:
    void check_sizes(std::span<const cplx> a, std::span<cplx> out) const {
        const std::size_t want = static_cast<std::size_t>(fam_.L()) + 1;
        if (a.size() != want || out.size() != want) throw ContractViolation("state size != L+1");
    }

    void compute_W(std::span<const cplx> a) {
        const int L = fam_.L();
        for (int k = 0; k <= L; ++k) beta_[k] = fs_[k] * a[k];
        for (int M = 0; M <= 2 * L; ++M) {
            cplx acc = 0.0;
            for (int k = std::max(0, M - L); k <= std::min(M, L); ++k) acc += beta_[k] * beta_[M - k];
            W_[M] = acc;
        }
    }

    void z_fast(std::span<const cplx> a, std::span<cplx> out) {
        const int L = fam_.L();
        compute_W(a);
        for (int M = 0; M <= 2 * L; ++M) W_[M] *= gamma_[M] * inv_fs2_[M];
        for (int n = 0; n <= L; ++n) {
            cplx acc = 0.0;
            for (int m = 0; m <= L; ++m) acc += std::conj(beta_[m]) * W_[n + m];
            out[n] = -kI * fs_[n] * acc;
        }
    }

    // Couplings of the form pref * w_n w_m w_k w_j * gam_M / fs_M^2 restricted to nmkj = 0.
    void sparse(std::span<const cplx> a, std::span<cplx> out, const std::vector<double>& w,
                double pref, const double* gam = nullptr) {
        const int L = fam_.L();
        auto C = [&](int n, int m, int k, int j) {
            const int M = n + m;
            double g = gam ? gam[M] : 1.0;
            return pref * g * w[n] * w[m] * w[k] * w[j] * inv_fs2_[M];
        };
        // n = 0: every (m, k) with j = m - k.
        {
            cplx acc = 0.0;
            for (int m = 0; m <= L; ++m) {
                cplx inner = 0.0;
                for (int k = 0; k <= m; ++k) inner += C(0, m, k, m - k) * a[k] * a[m - k];
                acc += std::conj(a[m]) * inner;
            }
            out[0] = -kI * acc;
        }
        for (int n = 1; n <= L; ++n) {
            cplx acc = 0.0;
            // m = 0: all k + j = n.
            cplx inner = 0.0;
            for (int k = 0; k <= n; ++k) inner += C(n, 0, k, n - k) * a[k] * a[n - k];
            acc += std::conj(a[0]) * inner;
            // m > 0 forces k = 0 or j = 0; both orderings appear.
            for (int m = 1; n + m <= L; ++m) {
                const int M = n + m;
                acc += 2.0 * C(n, m, 0, M) * std::conj(a[m]) * a[0] * a[M];
            }
            out[n] = -kI * acc;
        }
    }

    CouplingFamily fam_;
    std::vector<double> fs_, inv_fs2_, gamma_, yw_;
    std::vector<cplx> beta_, W_, tmp_;
};

inline ModeState dense_rhs(const CouplingFamily& fam, const ModeState& st) {
    RhsEvaluator ev(fam);
    ModeState out{st.t, std::vector<cplx>(st.alpha.size())};
    ev.dense(st.alpha, out.alpha);
    return out;
}

inline ModeState fast_rhs(const CouplingFamily& fam, const ModeState& st) {
    RhsEvaluator ev(fam);
    ModeState out{st.t, std::vector<cplx>(st.alpha.size())};
    ev.fast(st.alpha, out.alpha);
    return out;
}

inline double hamiltonian(const CouplingFamily& fam, const ModeState& st) {
    RhsEvaluator ev(fam);
    return ev.hamiltonian(st.alpha);
}

}  // namespace cascade
