#pragma once

#include <cmath>
#include <random>

#include "cascade/couplings.hpp"
#include "cascade/manifold.hpp"

namespace cascade::testing {

// Gaussian modes with |alpha_n| ~ exp(-decay n); normalization N = sum |alpha_n|^2.
inline ModeState random_modes(int L, std::uint64_t seed, double decay = 0.2, double N = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    ModeState st{0.0, std::vector<cplx>(L + 1)};
    double tot = 0.0;
    for (int n = 0; n <= L; ++n) {
        st.alpha[n] = std::exp(-decay * n) * cplx(g(rng), g(rng));
        tot += std::norm(st.alpha[n]);
    }
    for (auto& a : st.alpha) a *= std::sqrt(N / tot);
    return st;
}

// Random admissible manifold point with x / xc uniform in [0.05, qmax].
inline ManifoldState random_manifold(ManifoldFamily fam, double s, std::mt19937_64& rng, double qmax = 0.9) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), q(0.05, qmax), ph(0.0, 2.0 * kPi);
    const double x = q(rng) * critical_x(s);
    return ManifoldState{fam, s, cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), std::polar(std::sqrt(x), ph(rng))};
}

inline double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace cascade::testing
