#include <gtest/gtest.h>

#include <random>

#include "cascade/couplings.hpp"
#include "support.hpp"

using namespace cascade;
using cascade::testing::max_abs_diff;
using cascade::testing::random_modes;

namespace {
constexpr Family kAll[] = {Family::Z, Family::Y, Family::SzegoCubic, Family::BetaZ};

double dense_H_imag(const CouplingFamily& fam, const ModeState& st, double* re) {
    const int L = fam.L();
    cplx h = 0.0;
    for (int n = 0; n <= L; ++n)
        for (int m = 0; m <= L; ++m)
            for (int k = std::max(0, n + m - L); k <= std::min(L, n + m); ++k) {
                const int j = n + m - k;
                h += coupling(fam, n, m, k, j) * std::conj(st.alpha[n]) * std::conj(st.alpha[m]) * st.alpha[k] * st.alpha[j];
            }
    *re = 0.5 * h.real();
    return 0.5 * h.imag();
}
}  // namespace

TEST(Couplings, HandValues) {
    auto z2 = make_family(Family::Z, 2.0, 8);
    EXPECT_NEAR(coupling(z2, 0, 0, 0, 0), 1.0, 1e-15);
    auto sz = make_family(Family::SzegoCubic, 1.0, 8);
    EXPECT_EQ(coupling(sz, 3, 2, 4, 1), 1.0);
    auto z1 = make_family(Family::Z, 1.0, 8);
    EXPECT_NEAR(coupling(z1, 3, 2, 4, 1), 1.0, 1e-15);
    auto y2 = make_family(Family::Y, 2.0, 8);
    EXPECT_EQ(coupling(y2, 1, 1, 1, 1), 0.0);
    EXPECT_NEAR(coupling(y2, 1, 0, 1, 0), 1.5, 1e-15);
}

TEST(Couplings, ContractViolations) {
    auto z = make_family(Family::Z, 2.0, 8);
    EXPECT_THROW(coupling(z, 1, 2, 1, 1), ContractViolation);
    EXPECT_THROW(coupling(z, 9, 0, 9, 0), ContractViolation);
    EXPECT_THROW(coupling(z, -1, 2, 0, 1), ContractViolation);
}

TEST(Couplings, FamilyIdentities) {
    // SzegoCubic is Z at s = 1; BetaZ at beta = 0 is Z.
    auto sz = make_family(Family::SzegoCubic, 1.0, 12), z1 = make_family(Family::Z, 1.0, 12);
    auto z = make_family(Family::Z, 2.0, 12), b0 = make_family(Family::BetaZ, 2.0, 12, 0.0);
    auto b = make_family(Family::BetaZ, 2.0, 12, 0.3);
    for (int n = 0; n <= 12; ++n)
        for (int m = 0; m <= 12; ++m)
            for (int k = std::max(0, n + m - 12); k <= std::min(12, n + m); ++k) {
                const int j = n + m - k;
                EXPECT_NEAR(coupling(sz, n, m, k, j), coupling(z1, n, m, k, j), 1e-14);
                EXPECT_EQ(coupling(b0, n, m, k, j), coupling(z, n, m, k, j));
                const double expect = n * m * k * j == 0 ? coupling(z, n, m, k, j) : 0.7 * coupling(z, n, m, k, j);
                EXPECT_NEAR(coupling(b, n, m, k, j), expect, 1e-15);
            }
}

TEST(Couplings, Symmetry) {
    std::mt19937_64 rng(11);
    for (Family f : kAll) {
        auto fam = make_family(f, f == Family::SzegoCubic ? 1.0 : 2.0, 40, 0.4);
        std::uniform_int_distribution<int> idx(0, 40);
        for (int trial = 0; trial < 10000; ++trial) {
            int n = idx(rng), m = idx(rng);
            int M = n + m;
            int klo = std::max(0, M - 40), khi = std::min(40, M);
            int k = std::uniform_int_distribution<int>(klo, khi)(rng), j = M - k;
            const double c = coupling(fam, n, m, k, j);
            EXPECT_EQ(c, coupling(fam, m, n, k, j));
            EXPECT_EQ(c, coupling(fam, n, m, j, k));
            EXPECT_EQ(c, coupling(fam, k, j, n, m));
        }
    }
}

TEST(Couplings, DenseGroundState) {
    auto z = make_family(Family::Z, 2.0, 8);
    ModeState st{0.0, std::vector<cplx>(9)};
    st.alpha[0] = 1.0;
    auto d = dense_rhs(z, st);
    EXPECT_NEAR(std::abs(d.alpha[0] - cplx(0.0, -1.0)), 0.0, 1e-15);
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(d.alpha[n], cplx(0.0));
    EXPECT_NEAR(hamiltonian(z, st), 0.5, 1e-15);
}

TEST(Couplings, ZeroState) {
    for (Family f : kAll) {
        auto fam = make_family(f, 2.0, 8, 0.2);
        ModeState st{0.0, std::vector<cplx>(9)};
        for (auto& v : dense_rhs(fam, st).alpha) EXPECT_EQ(v, cplx(0.0));
        for (auto& v : fast_rhs(fam, st).alpha) EXPECT_EQ(v, cplx(0.0));
    }
}

TEST(Couplings, FastMatchesDense) {
    for (Family f : kAll)
        for (double s : {1.0, 1.5, 2.0, 3.0}) {
            if (f == Family::SzegoCubic && s != 1.0) continue;
            if (f == Family::Y && s == 1.0) continue;
            for (int L : {8, 16, 32}) {
                auto fam = make_family(f, s, L, 0.35);
                for (int r = 0; r < 20; ++r) {
                    auto st = random_modes(L, 1000 * L + r, 0.1);
                    EXPECT_LE(max_abs_diff(fast_rhs(fam, st).alpha, dense_rhs(fam, st).alpha), 1e-12)
                        << to_string(f) << " s=" << s << " L=" << L;
                }
            }
        }
}

TEST(Couplings, HamiltonianMatchesDenseAndIsReal) {
    for (Family f : kAll) {
        auto fam = make_family(f, f == Family::SzegoCubic ? 1.0 : 2.0, 16, 0.35);
        for (int r = 0; r < 5; ++r) {
            auto st = random_modes(16, 77 + r, 0.1);
            double re = 0.0;
            const double im = dense_H_imag(fam, st, &re);
            EXPECT_LE(std::abs(im), 1e-12 * std::abs(re));
            EXPECT_NEAR(hamiltonian(fam, st), re, 1e-12 * std::abs(re));
        }
    }
}

TEST(Couplings, GaugeCovariance) {
    for (Family f : kAll) {
        auto fam = make_family(f, f == Family::SzegoCubic ? 1.0 : 2.0, 24, 0.2);
        auto st = random_modes(24, 5, 0.1);
        const double phi = 0.7, theta = -1.3;
        ModeState g = st;
        for (int n = 0; n <= 24; ++n) g.alpha[n] *= std::polar(1.0, phi + n * theta);
        auto d0 = fast_rhs(fam, st), d1 = fast_rhs(fam, g);
        for (int n = 0; n <= 24; ++n) d0.alpha[n] *= std::polar(1.0, phi + n * theta);
        EXPECT_LE(max_abs_diff(d0.alpha, d1.alpha), 1e-12) << to_string(f);
    }
}

TEST(Couplings, ManifoldStateMatchesLiftedReducedDerivative) {
    // Z, s = 2, L = 64: the lifted reduced derivative is the full derivative.
    const int L = 64;
    auto fam = make_family(Family::Z, 2.0, L);
    ManifoldState ms{ManifoldFamily::Z, 2.0, cplx(0.6, 0.1), cplx(-0.2, 0.4), std::polar(std::sqrt(0.1), 0.3)};
    auto st = lift(ms, *fam.table, L);
    auto d = reduced_rhs(ms);
    auto r = fast_rhs(fam, st);
    double err = std::abs(r.alpha[0] - d[0]);
    for (int n = 1; n <= L; ++n) {
        cplx pred = fam.table->f(n) * (d[1] * std::pow(ms.p, n - 1) +
                                       (n >= 2 ? double(n - 1) * ms.c * std::pow(ms.p, n - 2) * d[2] : 0.0));
        err = std::max(err, std::abs(pred - r.alpha[n]));
    }
    EXPECT_LE(err, 1e-8);
}

TEST(Couplings, FamilyNames) {
    for (Family f : kAll) EXPECT_EQ(family_from_string(to_string(f)), f);
    EXPECT_THROW(family_from_string("W"), DomainError);
}
