#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fsabr/quadrature.hpp"

using namespace fsabr;

TEST(GaussLegendre, ExactForPolynomials) {
    for (int n : {1, 2, 5, 16, 64}) {
        const auto& r = quad::gauss_legendre(n);
        for (int deg = 0; deg <= 2 * n - 1; deg += 1) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], deg);
            const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            EXPECT_NEAR(s, exact, 1e-13) << n << ' ' << deg;
        }
    }
}

TEST(GaussHermite, NormalMoments) {
    const auto& r = quad::gauss_hermite(32);
    double m2 = 0, m4 = 0, m6 = 0, m1 = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double x = r.x[i];
        m1 += r.w[i] * x;
        m2 += r.w[i] * x * x;
        m4 += r.w[i] * std::pow(x, 4);
        m6 += r.w[i] * std::pow(x, 6);
    }
    EXPECT_NEAR(m1, 0.0, 1e-14);
    EXPECT_NEAR(m2, 1.0, 1e-13);
    EXPECT_NEAR(m4, 3.0, 1e-12);
    EXPECT_NEAR(m6, 15.0, 1e-11);
    // E[cos Z] = e^{-1/2}
    const auto& r128 = quad::gauss_hermite(128);
    double c = 0.0;
    for (std::size_t i = 0; i < r128.x.size(); ++i) c += r128.w[i] * std::cos(r128.x[i]);
    EXPECT_NEAR(c, std::exp(-0.5), 1e-13);
}

TEST(GaussKronrod, SmoothAndPeaked) {
    auto r = quad::gauss_kronrod([](double x) { return std::exp(x); }, 0.0, 1.0);
    EXPECT_NEAR(r.value, std::exp(1.0) - 1.0, 1e-13);
    r = quad::gauss_kronrod([](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0, 1e-12, 1e-12);
    EXPECT_NEAR(r.value, 2.0 * std::atan(1.0 / 1e-2) / 1e-2, 1e-8);
    EXPECT_TRUE(r.converged);
}

TEST(GradedRule, EndpointSingularities) {
    for (double a : {-0.9, -0.8, -0.4, 0.2, 0.7}) {
        // int_0^1 x^a (1-x)^b dx = B(a+1, b+1)
        for (double b : {-0.6, 0.0, 0.3}) {
            auto r = quad::graded_integrate(
                [&](double, double l, double rr) { return std::pow(l, a) * std::pow(rr, b); }, 0.0, 1.0, a, b, 1e-13);
            const double exact = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 2);
            EXPECT_NEAR(r.value / exact, 1.0, 1e-10) << a << ' ' << b;
        }
    }
}

TEST(GradedRule, DistancesAreConsistent) {
    for (const auto& nd : quad::graded_rule(2.0, 5.0, -0.3, 0.4, 10)) {
        EXPECT_NEAR(nd.left + nd.right, 3.0, 1e-14);
        EXPECT_NEAR(nd.x, 2.0 + nd.left, 1e-14);
    }
}
