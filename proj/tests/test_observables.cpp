#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cascade/analytic.hpp"
#include "cascade/observables.hpp"

using namespace cascade;

namespace {

ModeState two_mode() {
    const double r = std::sqrt(0.5);
    return ModeState{0.0, {r, r, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
}

FitResult fit_at(const CascadeSolution& sol, double delta, int L, int n_min) {
    const double t = time_at_criticality(sol, delta);
    const auto mp = analytic_point(sol, t);
    const auto st = state_from_point(mp, sol.family, sol.s, L);
    PowerlawOptions o;
    o.log_q = mp.log_q;
    o.subleading = 2;
    return powerlaw_fit(modsq(st.alpha), n_min, o);
}

}  // namespace

TEST(Observables, Conserved) {
    auto fam = make_family(Family::Z, 2.0, 7);
    auto c = conserved(fam, two_mode());
    EXPECT_NEAR(c.N, 1.0, 1e-15);
    EXPECT_NEAR(c.E, 0.5, 1e-15);
    EXPECT_NEAR(c.H, 1.0, 1e-14);
    ModeState g{0.0, {1.0, 0.0, 0.0}};
    auto cg = conserved(make_family(Family::Z, 2.0, 2), g);
    EXPECT_NEAR(cg.H, 0.5, 1e-15);
}

TEST(Observables, LiftedMatchesManifold) {
    auto ms = z_condensation_initial_data(2.0, 1.0, 0.3);
    ms.p = std::polar(std::sqrt(0.6 * critical_x(2.0)), 0.4);
    SequenceTable tab(2.0, 300);
    auto st = lift(ms, tab, 300);
    auto c = conserved(make_family(Family::Z, 2.0, 300), st);
    auto cm = conserved_from_manifold(ms);
    EXPECT_NEAR(c.N, cm.N, 1e-10);
    EXPECT_NEAR(c.E, cm.E, 1e-10);
    EXPECT_NEAR(c.H, cm.H, 1e-10);
}

TEST(Observables, Sobolev) {
    auto st = two_mode();
    EXPECT_NEAR(sobolev(st, 0.0), 1.0, 1e-15);
    EXPECT_NEAR(sobolev(st, 0.5), std::sqrt(1.5), 1e-15);
    EXPECT_NEAR(sobolev(st, 1.0), std::sqrt(0.5 + 2.0), 1e-15);
}

TEST(Observables, SobolevManifoldMatchesModes) {
    for (auto fam : {ManifoldFamily::Z, ManifoldFamily::Y}) {
        ManifoldState ms{fam, 2.0, cplx(0.3, 0.1), cplx(0.5, -0.2), std::polar(std::sqrt(0.5 * critical_x(2.0)), 1.0)};
        SequenceTable tab(2.0, 400);
        auto st = lift(ms, tab, 400);
        const double lq = std::log(0.5);
        for (double xi : {0.0, 0.5, 1.0, 1.5}) {
            const double m = sobolev_sq_manifold(fam, 2.0, std::norm(ms.b), std::norm(ms.c), lq, xi);
            EXPECT_NEAR(m / std::pow(sobolev(st, xi), 2), 1.0, 1e-10) << to_string(fam) << " " << xi;
        }
    }
}

TEST(Observables, Bands) {
    auto m = modsq(two_mode().alpha);
    auto b = band_fractions(m, {{0, 0}, {1, 7}});
    EXPECT_NEAR(b[0].N, 0.5, 1e-15);
    EXPECT_NEAR(b[1].N, 0.5, 1e-15);
    EXPECT_EQ(b[0].E, 0.0);
    EXPECT_NEAR(b[1].E, 0.5, 1e-15);
    auto w = band_fractions(m, {{0, 7}});
    EXPECT_NEAR(w[0].N, 1.0, 1e-15);
    EXPECT_NEAR(w[0].E, 0.5, 1e-15);
    EXPECT_THROW(band_fractions(m, {{0, 3}, {3, 7}}), DomainError);
    EXPECT_THROW(band_fractions(m, {}), DomainError);
    EXPECT_THROW(band_fractions(m, {{4, 2}}), DomainError);
    EXPECT_THROW(band_fractions(m, {{0, 8}}), DomainError);
}

TEST(Observables, BandZeroCondenses) {
    auto sol = z_solution(2.0, 1.0, 0.5);
    auto st = z_state(sol, time_at_criticality(sol, 1e-8), 256);
    auto b = band_fractions(modsq(st.alpha), {{0, 0}, {1, 256}});
    EXPECT_GT(b[0].N, 0.99);
}

TEST(Observables, PowerlawSynthetic) {
    std::vector<double> m(201);
    for (int n = 1; n <= 200; ++n) m[n] = 3.0 * std::pow(n, -1.5);
    m[0] = 1.0;
    PowerlawOptions o;
    o.subleading = 0;
    auto fr = powerlaw_fit(m, 8, o);
    EXPECT_NEAR(fr.exponent, -1.5, 1e-12);
    EXPECT_NEAR(fr.amplitude, 3.0, 1e-10);
    EXPECT_LE(fr.rms, 1e-12);
    EXPECT_EQ(fr.lo, 8);
    EXPECT_EQ(fr.hi, 200);
    EXPECT_THROW(powerlaw_fit(m, 4, o), DomainError);
    std::vector<double> tiny(10, 1.0);
    EXPECT_THROW(powerlaw_fit(tiny, 8, o), DomainError);
}

TEST(Observables, PowerlawZ) {
    auto sol = z_solution(2.0, 1.0, 0.5);
    auto a = fit_at(sol, 1e-6, 2048, 64);
    EXPECT_NEAR(a.exponent, -1.5, 0.02);
    auto b = fit_at(sol, 1e-6, 2048, 128);
    EXPECT_LE(std::abs(a.exponent - b.exponent), 0.01);
}

TEST(Observables, PowerlawY) {
    auto sol = y_explicit_solution(2.0, 1.0);
    auto a = fit_at(sol, 1e-12, 2048, 64);
    EXPECT_NEAR(a.exponent, -2.5, 0.02);
    EXPECT_NEAR(a.amplitude / y_powerlaw_amplitude(2.0, 1.0, sol.E), 1.0, 1e-3);
    EXPECT_NEAR(y_powerlaw_amplitude(2.0, 1.0, sol.E), 0.4835910716123625, 1e-15);
    auto b = fit_at(sol, 1e-12, 2048, 128);
    EXPECT_LE(std::abs(a.exponent - b.exponent), 0.01);
}

TEST(Observables, RateFits) {
    const double T = 2.0;
    std::vector<double> t, vp, vl;
    for (int i = 0; i <= 40; ++i) {
        const double tau = std::pow(10.0, -3.0 - i / 40.0);
        t.push_back(T - tau);
        vp.push_back(5.0 * std::pow(tau, -2.0));
        vl.push_back(0.7 + 1.3 * std::log(1.0 / tau));
    }
    auto p = blowup_rate_fit(t, vp, T, RateKind::Power);
    EXPECT_NEAR(p.exponent, -2.0, 1e-12);
    EXPECT_NEAR(p.amplitude, 5.0, 1e-9);
    auto l = blowup_rate_fit(t, vl, T, RateKind::Log);
    EXPECT_NEAR(l.exponent, 1.3, 1e-12);
    EXPECT_LE(l.rms, 1e-12);
    auto d = last_decade(t, vp, T);
    EXPECT_EQ(d.first.size(), 41u);
    std::vector<double> one{1.0, 1.0}, two{1.0, 1.0};
    EXPECT_THROW(blowup_rate_fit(one, two, T, RateKind::Power), DomainError);
}

TEST(Observables, BlowupTimeEstimate) {
    const double T = 1.7;
    std::vector<double> t, d;
    for (int i = 0; i < 30; ++i) {
        const double tau = 0.05 * std::pow(0.8, i);
        t.push_back(T - tau);
        d.push_back(2.0 * std::pow(tau, 4) * (1 + 0.1 * tau));
    }
    EXPECT_NEAR(estimate_blowup_time(t, d, 4.0), T, 1e-8);
}

TEST(Observables, PositionSpace) {
    auto st = two_mode();
    auto u = position_space(st.alpha, 16);
    EXPECT_NEAR(std::norm(u[0]), 2.0, 1e-14);
    EXPECT_NEAR(std::norm(u[8]), 0.0, 1e-14);
    EXPECT_NEAR(parseval_mass(u), 1.0, 1e-14);
    EXPECT_NEAR(std::norm(position_at(st.alpha, kPi)), 0.0, 1e-14);
    ModeState g{0.0, {1.0, 0.0, 0.0, 0.0}};
    for (auto v : position_space(g.alpha, 8)) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-15);
    EXPECT_THROW(position_space(st.alpha, 13), DomainError);
}

TEST(Observables, Parseval) {
    auto sol = z_solution(2.0, 1.0, 0.5);
    auto st = z_state(sol, 0.8 * sol.T, 512);
    auto u = position_space(st.alpha, 4096);
    double N = 0.0;
    for (auto a : st.alpha) N += std::norm(a);
    EXPECT_NEAR(parseval_mass(u) / N, 1.0, 1e-10);
}

TEST(Observables, ManifoldProfileMatchesModes) {
    auto sol = z_solution(2.0, 1.0, 0.5);
    auto mp = z_point(sol, 0.6 * sol.T);
    auto st = state_from_point(mp, ManifoldFamily::Z, 2.0, 400);
    ManifoldProfile prof(ManifoldFamily::Z, 2.0);
    for (double th : {0.0, 0.5, 2.0, -1.0}) {
        const cplx a = position_at(st.alpha, th), b = prof.u(mp, th + mp.phi_p);
        EXPECT_NEAR(std::abs(a - b), 0.0, 1e-10) << th;
    }
}

TEST(Observables, SpikeLimits) {
    EXPECT_NEAR(spike_peak_limit(1.0, 0.5), 6.2441, 1e-4);
    EXPECT_NEAR((spike_peak_limit(1.0, 1.0) - 1.0), 10.4882, 1e-4);
    EXPECT_NEAR(spike_profile_z(2.0, 1.0, 0.5, 1.0, 0.9, 0.0), spike_peak_limit(1.0, 0.5), 1e-12);
    EXPECT_NEAR(spike_profile_z(2.0, 1.0, 0.5, 1.0, 0.999, 1e3), 1.0, 1e-2);
    EXPECT_THROW(spike_profile_z(2.0, 1.0, 0.5, 1.0, 1.0, 0.0), DomainError);
}

TEST(Observables, SpikeMatchesProfile) {
    const double s = 2.0, N = 1.0, E = 0.5;
    auto sol = z_solution(s, N, E);
    const double tau = 1e-2, t = sol.T - tau;
    auto mp = z_point(sol, t);
    ManifoldProfile prof(ManifoldFamily::Z, s);
    const double C = 4.0 / (s * (s - 1) * E * E * N * N);
    const double w = std::pow(tau, 4) / C;
    for (double r : {-1.0, -0.3, 0.0, 0.3, 1.0}) {
        const double th = r * w;
        const double pred = spike_profile_z(s, N, E, sol.T, t, th);
        const double got = prof.modsq(mp, th);
        EXPECT_NEAR(got / pred, 1.0, 0.05) << r;
    }
}

TEST(Observables, CuspSeries) {
    auto sol = y_explicit_solution(2.0, 1.0);
    auto mp = y_point(sol, sol.T);
    mp.log_q = 0.0;
    ManifoldProfile prof(ManifoldFamily::Y, 2.0);
    const double psi = 0.7;
    const cplx full = prof.u(mp, psi);
    for (int n : {1000, 4000, 16000}) {
        const double d = std::abs(prof.partial(mp, psi, 2 * n) - prof.partial(mp, psi, n));
        EXPECT_LE(d, 2.0 * std::pow(n, -0.25)) << n;
    }
    EXPECT_LE(std::abs(prof.partial(mp, psi, 1 << 20) - full), 4.0 * std::pow(1 << 20, -0.25));
}

TEST(Observables, CuspSharpens) {
    auto sol = y_explicit_solution(2.0, 1.0);
    const double th_star = -y_point(sol, sol.T).phi_p;
    double prev = 0.0;
    for (double h : {1e-2, 1e-3, 1e-4, 1e-5}) {
        std::vector<double> th{th_star, th_star + h};
        auto v = cusp_profile_y(sol, th);
        const double q = std::abs(v[1] - v[0]) / h;
        EXPECT_GT(q, prev) << h;
        prev = q;
    }
    CascadeSolution z = z_solution(2.0, 1.0, 0.5);
    std::vector<double> th{0.0};
    EXPECT_THROW(cusp_profile_y(z, th), DomainError);
}

TEST(Observables, CuspContinuityInTime) {
    auto sol = y_explicit_solution(2.0, 1.0);
    const double th_star = -y_point(sol, sol.T).phi_p;
    auto st = y_state(sol, 0.999 * sol.T, 4096);
    for (double off : {1.0, 2.0, 3.0}) {
        std::vector<double> th{th_star + off};
        const double lim = cusp_profile_y(sol, th)[0];
        EXPECT_NEAR(std::norm(position_at(st.alpha, th[0])) / lim, 1.0, 0.01) << off;
    }
}

TEST(Observables, MonotoneCriticality) {
    for (auto sol : {z_solution(2.0, 1.0, 0.5), z_solution(3.0, 1.0, 0.2), z_solution(1.5, 2.0, 0.3)}) {
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 1000; ++i) {
            const double lq = z_point(sol, sol.T * i / 1000.0).log_q;
            EXPECT_GE(lq, prev);
            prev = lq;
        }
    }
}
