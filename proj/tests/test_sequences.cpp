#include <gtest/gtest.h>

#include <cmath>

#include "cascade/sequences.hpp"

using namespace cascade;

TEST(Sequences, CatalanAtS2) {
    SequenceTable t(2.0, 4);
    const double A[] = {1, 1, 2, 5, 14, 42, 132, 429, 1430};
    for (int n = 0; n <= 8; ++n) EXPECT_NEAR(t.A(n), A[n], 1e-12 * A[n]) << n;
    EXPECT_EQ(t.log_A(0), 0.0);
    EXPECT_NEAR(t.log_A(1), 0.0, 1e-14);
}

TEST(Sequences, S3Values) {
    SequenceTable t(3.0, 3);
    const double A[] = {1, 1, 3, 12, 55, 273, 1428};
    for (int n = 0; n <= 6; ++n) EXPECT_NEAR(t.A(n), A[n], 1e-12 * A[n]) << n;
}

TEST(Sequences, S1IsAllOnes) {
    SequenceTable t(1.0, 8);
    for (int n = 0; n <= 16; ++n) {
        EXPECT_NEAR(t.log_A(n), 0.0, 1e-14);
        EXPECT_NEAR(t.f(n), 1.0, 1e-14);
    }
    EXPECT_EQ(t.xc(), 1.0);
    EXPECT_TRUE(std::isinf(t.Fc()));
}

TEST(Sequences, CriticalConstants) {
    EXPECT_DOUBLE_EQ(critical_x(2.0), 0.25);
    EXPECT_DOUBLE_EQ(critical_F(2.0), 1.0);
    EXPECT_NEAR(critical_x(3.0), 4.0 / 27.0, 1e-16);
    EXPECT_DOUBLE_EQ(critical_F(3.0), 0.5);
    for (double s : {1.1, 1.5, 2.0, 3.0, 7.5}) {
        EXPECT_GT(critical_x(s), 0.0);
        EXPECT_LT(critical_x(s), 1.0);
    }
}

TEST(Sequences, RangeIsDoubled) {
    SequenceTable t(2.0, 10);
    EXPECT_EQ(t.size(), 21);
    EXPECT_NO_THROW(t.log_A(20));
    EXPECT_THROW(t.log_A(21), std::out_of_range);
}

TEST(Sequences, RejectsSBelowOne) {
    EXPECT_THROW(SequenceTable(0.5, 4), DomainError);
    EXPECT_THROW(SequenceTable(2.0, 0), DomainError);
}

TEST(Sequences, LargeIndexStaysFinite) {
    // f_n overflows a double near n = 2000 at s = 2; the scaled log does not.
    SequenceTable t(2.0, 4096);
    EXPECT_TRUE(std::isfinite(t.log_f(8192)));
    EXPECT_TRUE(std::isfinite(t.log_f_scaled(8192)));
    EXPECT_NEAR(t.log_f_scaled(8192) + 0.75 * std::log(8192.0), 0.25 * std::log(2.0 / (2.0 * kPi)), 1e-4);
}

TEST(Sequences, RatioMonotone) {
    for (double s : {1.5, 2.0, 3.0}) {
        SequenceTable t(s, 200);
        for (int n = 2; n < 399; ++n)
            EXPECT_GE(t.log_A(n + 1) - t.log_A(n), t.log_A(n) - t.log_A(n - 1) - 1e-12) << s << " " << n;
    }
}

TEST(Sequences, GBelowF) {
    for (double s : {1.0, 1.5, 2.0, 3.0}) {
        SequenceTable t(s, 100);
        for (int n = 1; n <= 200; ++n) EXPECT_LE(t.log_g(n), t.log_f(n) + 1e-15);
    }
}

TEST(Sequences, FfOverFBounded) {
    // f_n f_m / f_{n+m} stays bounded; the constants below are the observed maxima at L = 256.
    const std::pair<double, double> bound[] = {{1.5, 1.0}, {2.0, 1.0}, {3.0, 1.0}};
    for (auto [s, cap] : bound) {
        SequenceTable t(s, 256);
        double worst = 0.0;
        for (int n = 0; n <= 256; ++n)
            for (int m = 0; m <= 256; ++m) worst = std::max(worst, std::exp(t.log_f(n) + t.log_f(m) - t.log_f(n + m)));
        EXPECT_LE(worst, cap + 1e-12) << s;
    }
}

TEST(Sequences, AsymptoteAgreesWithTable) {
    SequenceTable t2(2.0, 100);
    const double r2 = f_asymptotic(2.0, 200) / t2.f(200);
    EXPECT_GE(r2, 0.99);
    EXPECT_LE(r2, 1.01);
    SequenceTable t3(3.0, 250);
    EXPECT_LE(std::abs(f_asymptotic(3.0, 500) / t3.f(500) - 1.0), 0.02);
    // The rearranged form tends to the constant.
    const double n = 1e6;
    const double lhs = log_f_asymptotic(2.0, n) - 0.5 * n * std::log(4.0) + 0.75 * std::log(n);
    EXPECT_NEAR(lhs, 0.25 * std::log(2.0 / (2.0 * kPi)), 1e-6);
    EXPECT_THROW(f_asymptotic(1.0, 10), DomainError);
}

TEST(Sequences, ConvolutionIdentityHandValues) {
    EXPECT_LE(verify_convolution_identity(2.0, 2), 1e-14);
    EXPECT_LE(verify_convolution_identity(2.0, 5), 1e-14);
    EXPECT_LE(verify_convolution_identity(1.0, 3), 1e-14);
    // Both sides at s = 2, M = 5: 2 (14 + 10) = 48 = (4 / 3.5) 42.
    SequenceTable t(2.0, 3);
    double sum = 0.0;
    for (int k = 1; k < 5; ++k) sum += t.A(5 - k) * t.A(k);
    EXPECT_NEAR(sum, 48.0, 1e-12);
    EXPECT_NEAR(4.0 / 3.5 * t.A(5), 48.0, 1e-12);
    EXPECT_THROW(verify_convolution_identity(2.0, 1), DomainError);
}

TEST(Sequences, ConvolutionIdentityRange) {
    for (double s : {1.0, 1.5, 2.0, 3.0})
        for (int M = 2; M <= 200; ++M) EXPECT_LE(verify_convolution_identity(s, M), 1e-12) << s << " " << M;
}
