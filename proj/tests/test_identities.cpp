#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fsabr/fbm.hpp"
#include "fsabr/identities.hpp"
#include "fsabr/quadrature.hpp"

using namespace fsabr;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// E[g(xi)] for xi ~ N(mu, v) by adaptive quadrature against the density.
template <class G>
double expect(const NormalLaw& law, G g) {
    const double sd = std::sqrt(law.sigma2);
    auto f = [&](double x) {
        const double z = (x - law.mu) / sd;
        return g(x) * std_normal_pdf(z) / sd;
    };
    return quad::gauss_kronrod(f, law.mu - 14.0 * sd, law.mu + 14.0 * sd, 1e-300, 1e-13).value;
}

// E[g(B_T)] for B_T ~ N(0, T) by Gauss-Hermite.
template <class G>
double expect_bT(double T, G g, int n = 64) {
    const auto& gh = quad::gauss_hermite(n);
    double s = 0.0;
    for (std::size_t i = 0; i < gh.x.size(); ++i) s += gh.w[i] * g(std::sqrt(T) * gh.x[i]);
    return s;
}

} // namespace

TEST(NormalIdentities, TrivialReductions) {
    EXPECT_EQ(e_ncdf({0.0, 0.7}), 0.5);
    EXPECT_EQ(e_ncdf({0.4, 0.0}), std_normal_cdf(0.4));
    EXPECT_NEAR(e_x_ncdf({0.4, 0.0}), 0.4 * std_normal_cdf(0.4), 1e-16);
    for (double mu : {-0.5, 0.3})
        for (double v : {0.0, 0.5, 2.0}) EXPECT_NEAR(e_eax_ncdf({mu, v}, 0.0), e_ncdf({mu, v}), 1e-16);
    EXPECT_NEAR(e_x_eax_ncdf({0.2, 0.8}, 0.0), e_x_ncdf({0.2, 0.8}), 1e-16);
}

TEST(NormalIdentities, QuadratureOracleAtReferencePoint) {
    const NormalLaw law{0.3, 0.5};
    EXPECT_NEAR(e_ncdf(law), expect(law, [](double x) { return std_normal_cdf(x); }), 1e-8);
    const NormalLaw l2{0.2, 0.8};
    const double a = 1.5;
    auto ex = [&](double x) { return std::exp(a * x) * std_normal_cdf(x); };
    EXPECT_LT(rel(e_eax_ncdf(l2, a), expect(l2, ex)), 1e-8);
    EXPECT_LT(rel(e_x_eax_ncdf(l2, a), expect(l2, [&](double x) { return x * ex(x); })), 1e-8);
    EXPECT_LT(rel(e_x2_eax_ncdf(l2, a), expect(l2, [&](double x) { return x * x * ex(x); })), 1e-8);
    EXPECT_LT(rel(e_x_ncdf(l2), expect(l2, [&](double x) { return x * std_normal_cdf(x); })), 1e-8);
}

TEST(NormalIdentities, QuadratureGrid27) {
    for (double mu : {-0.5, 0.0, 0.7})
        for (double v : {0.1, 1.0, 2.0})
            for (double a : {-1.0, 0.0, 2.0}) {
                const NormalLaw law{mu, v};
                auto ex = [&](double x) { return std::exp(a * x) * std_normal_cdf(x); };
                EXPECT_LT(rel(e_eax_ncdf(law, a), expect(law, ex)), 1e-8) << mu << ' ' << v << ' ' << a;
                EXPECT_LT(rel(e_x_eax_ncdf(law, a), expect(law, [&](double x) { return x * ex(x); })), 1e-8)
                    << mu << ' ' << v << ' ' << a;
                EXPECT_LT(rel(e_x2_eax_ncdf(law, a), expect(law, [&](double x) { return x * x * ex(x); })), 1e-8)
                    << mu << ' ' << v << ' ' << a;
                // e_x_ncdf does not depend on a; it vanishes nowhere on this grid except by accident
                const double q = expect(law, [&](double x) { return x * std_normal_cdf(x); });
                EXPECT_LT(std::abs(e_x_ncdf(law) - q), 1e-8 * std::max(std::abs(q), 1e-3));
            }
}

TEST(NormalIdentities, DensityExpectations) {
    for (double mu : {-0.5, 0.0, 0.7})
        for (double v : {0.1, 1.0, 2.0}) {
            const NormalLaw law{mu, v};
            EXPECT_NEAR(e_npdf(law), expect(law, [](double x) { return std_normal_pdf(x); }), 1e-12);
            EXPECT_NEAR(e_x_npdf(law), expect(law, [](double x) { return x * std_normal_pdf(x); }), 1e-12);
        }
}

TEST(NormalIdentities, DerivativeInTiltParameter) {
    const double h = 1e-4;
    for (double mu : {-0.5, 0.7})
        for (double v : {0.1, 2.0})
            for (double a : {-1.0, 0.5, 2.0}) {
                const NormalLaw law{mu, v};
                const double d1 = (e_eax_ncdf(law, a + h) - e_eax_ncdf(law, a - h)) / (2 * h);
                const double d2 = (e_x_eax_ncdf(law, a + h) - e_x_eax_ncdf(law, a - h)) / (2 * h);
                EXPECT_LT(rel(d1, e_x_eax_ncdf(law, a)), 1e-5) << mu << ' ' << v << ' ' << a;
                EXPECT_LT(rel(d2, e_x2_eax_ncdf(law, a)), 1e-5) << mu << ' ' << v << ' ' << a;
            }
}

TEST(NormalIdentities, OverflowIsReported) {
    try {
        e_eax_ncdf({1.0, 4.0}, 20.0);
        FAIL() << "expected RangeError";
    } catch (const RangeError& e) {
        EXPECT_NEAR(e.exponent(), 20.0 + 0.5 * 400.0 * 4.0, 1e-9);
    }
    EXPECT_THROW(e_x2_eax_ncdf({800.0, 0.0}, 1.0), RangeError);
    EXPECT_THROW(e_ncdf({0.0, -0.1}), DomainError);
}

TEST(NormalMoments, RawMomentsMatchQuadrature) {
    const NormalLaw law{0.3, 0.7};
    for (int k = 0; k <= 8; ++k) {
        const double q = expect(law, [&](double x) { return std::pow(x, k); });
        EXPECT_LT(rel(normal_raw_moment(k, law.mu, law.sigma2), q), 1e-10) << k;
    }
    EXPECT_EQ(normal_raw_moment(4, 0.0, 1.0), 3.0);
    EXPECT_EQ(normal_raw_moment(3, 2.0, 0.0), 8.0);
}

TEST(CondMoment, FirstMomentIsConditionalMean) {
    for (double H : {0.1, 0.3, 0.7}) {
        const HurstParams hp(H);
        const double T = 0.8, b = 0.37, t = 0.5;
        EXPECT_NEAR(cond_moment_bh(1, t, T, b, hp), hp.kappa_H() * b * std::pow(t, H + 0.5) / T, 1e-15);
        // covariance of B^H_t and B_T from the kernel
        const double cov = kernel_integral(t, 0.0, t, hp).value;
        EXPECT_LT(rel(cond_moment_bh(1, t, T, b, hp), cov * b / T), 1e-9);
        // conditional variance plus explained variance is t^{2H}
        const double m2 = cond_moment_bh(2, t, T, 0.0, hp);
        EXPECT_LT(rel(m2 + cov * cov / T, std::pow(t, 2 * H)), 1e-9);
    }
    EXPECT_THROW(cond_moment_bh(9, 0.5, 1.0, 0.0, HurstParams(0.3)), DomainError);
    EXPECT_THROW(cond_moment_bh(2, 1.5, 1.0, 0.0, HurstParams(0.3)), DomainError);
}

TEST(CondMoment, IntegratedFirstMoment) {
    for (double H : {0.1, 0.3}) {
        const HurstParams hp(H);
        const double T = 0.7, b = -0.4;
        const double expect_val = 2.0 * hp.kappa_H() / (2.0 * H + 3.0) * std::pow(T, H + 0.5) * b;
        EXPECT_LT(rel(cond_integral_bh(1, T, b, hp), expect_val), 1e-13);
        // against numerical time integration of the pointwise moments
        for (int k = 1; k <= 8; ++k) {
            const auto r = quad::gauss_kronrod([&](double t) { return t <= 0 ? 0.0 : cond_moment_bh(k, t, T, b, hp); },
                                               0.0, T, 1e-15, 1e-12);
            EXPECT_LT(rel(cond_integral_bh(k, T, b, hp), r.value), 1e-9) << H << ' ' << k;
        }
        // k = 2 splits into the b-free part and a Hermite part
        const double k2 = hp.kappa_H() * hp.kappa_H();
        const double want = std::pow(T, 2 * H + 1) / (2 * H + 1) + k2 * std::pow(T, 2 * H) * (b * b - T) / (2 * H + 2);
        EXPECT_LT(rel(cond_integral_bh(2, T, b, hp), want), 1e-12);
    }
}

TEST(CondIto, ClosedFormsForFirstOrders) {
    for (double H : {0.1, 0.3, 0.5}) {
        const HurstParams hp(H);
        const double kap = hp.kappa_H(), T = 0.6;
        for (double b : {-1.1, 0.0, 0.45}) {
            const double k1 = 2.0 * kap / (2.0 * H + 3.0) * std::pow(T, H - 0.5) * (b * b - T);
            EXPECT_NEAR(cond_ito_integral(1, T, b, hp), k1, 1e-13);
            const double k2 = kap * kap / (2.0 * (H + 1.0)) * std::pow(T, 2 * H - 1.0) * (b * b * b - 3 * b * T) +
                              b * std::pow(T, 2 * H) / (2 * H + 1);
            EXPECT_NEAR(cond_ito_integral(2, T, b, hp), k2, 1e-13);
        }
    }
    // H = 1/2: int B dB = (B_T^2 - T)/2 exactly
    EXPECT_NEAR(cond_ito_integral(1, 0.9, 0.7, HurstParams(0.5)), 0.5 * (0.49 - 0.9), 1e-14);
    EXPECT_THROW(cond_ito_integral(5, 1.0, 0.0, HurstParams(0.3)), DomainError);
}

TEST(CondIto, TowerPropertyGivesZeroMean) {
    for (double H : {0.1, 0.3, 0.7})
        for (int k = 1; k <= 4; ++k) {
            const HurstParams hp(H);
            const double T = 1.3;
            EXPECT_NEAR(expect_bT(T, [&](double b) { return cond_ito_integral(k, T, b, hp); }), 0.0, 1e-10) << H << ' ' << k;
        }
}

TEST(CondIto, BinnedMonteCarlo) {
    // N = 100,000 exact-covariance paths, n = 512, T = 0.5; residuals of the
    // discretized functionals against the formulas, averaged inside B_T bins.
    const double T = 0.5, H = 0.3;
    const int n = 512, N = 100000, nbins = 8;
    const HurstParams hp(H);
    const TimeGrid grid(T, n);
    const FbmGenerator gen(hp, grid, FbmScheme::cholesky, default_workers());
    const double dt = grid.dt(), sdt = std::sqrt(dt);
    struct Acc {
        double n = 0, s[3] = {0, 0, 0}, q[3] = {0, 0, 0};
    };
    std::vector<Acc> bins(nbins);
    Eigen::MatrixXd Z1, BH;
    for (int first = 0; first < N; first += FbmGenerator::kBlock) {
        const int count = std::min(FbmGenerator::kBlock, N - first);
        gen.generate(20240611ULL, first, count, false, Z1, BH);
        for (int c = 0; c < count; ++c) {
            double bT = 0, ito1 = 0, ito2 = 0, tint2 = 0, prev = 0;
            for (int k = 0; k < n; ++k) {
                const double d = sdt * Z1(k, c);
                ito1 += prev * d;
                ito2 += prev * prev * d;
                const double next = BH(k, c);
                tint2 += 0.5 * (prev * prev + next * next) * dt;
                prev = next;
                bT += d;
            }
            const double r[3] = {ito1 - cond_ito_integral(1, T, bT, hp), ito2 - cond_ito_integral(2, T, bT, hp),
                                 tint2 - cond_integral_bh(2, T, bT, hp)};
            // bins of equal probability in B_T/sqrt(T)
            const double u = std_normal_cdf(bT / std::sqrt(T));
            Acc& a = bins[std::min(nbins - 1, static_cast<int>(u * nbins))];
            a.n += 1;
            for (int i = 0; i < 3; ++i) {
                a.s[i] += r[i];
                a.q[i] += r[i] * r[i];
            }
        }
    }
    for (int b = 0; b < nbins; ++b)
        for (int i = 0; i < 3; ++i) {
            const Acc& a = bins[b];
            const double mean = a.s[i] / a.n;
            const double se = std::sqrt((a.q[i] / a.n - mean * mean) / (a.n - 1));
            EXPECT_LT(std::abs(mean), 4.0 * se) << "bin " << b << " functional " << i << " mean " << mean << " se " << se;
        }
}
