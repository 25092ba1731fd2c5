#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fsabr/fbm.hpp"

using namespace fsabr;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// K through the generic hypergeometric routine, as written in the definition.
double kernel_by_definition(double t, double s, const HurstParams& hp) {
    const double H = hp.H();
    return hp.c_H() * std::pow(t - s, H - 0.5) * gauss_2f1(H - 0.5, 0.5 - H, H + 0.5, 1.0 - t / s);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

} // namespace

TEST(HurstParams, Constants) {
    // 30-digit references
    HurstParams h1(0.1), h3(0.3), h7(0.7);
    EXPECT_LT(rel(h1.c_H(), 0.357685773422335138570873891089), 1e-12);
    EXPECT_LT(rel(h1.kappa_H(), 0.78768750249430207144833489079), 1e-12);
    EXPECT_LT(rel(h3.c_H(), 0.730282934079922970527223893947), 1e-12);
    EXPECT_LT(rel(h3.kappa_H(), 0.975803446836864456268947909794), 1e-12);
    EXPECT_LT(rel(h7.c_H(), 1.0918091308839125975778269971), 1e-12);
    EXPECT_LT(rel(h7.kappa_H(), 0.972582966122812990277091011535), 1e-12);
    HurstParams hb(0.5);
    EXPECT_TRUE(hb.is_bm());
    EXPECT_EQ(hb.c_H(), 1.0);
    EXPECT_THROW(HurstParams(0.0), DomainError);
    EXPECT_THROW(HurstParams(1.0), DomainError);
}

TEST(MgKernel, ReferenceValues) {
    struct Case {
        double H, t, s, k;
    };
    const Case cases[] = {
        {0.1, 1, 0.001, 4.44225638819390241840239691283}, {0.1, 1, 0.3, 0.590043258534041267831414949294},
        {0.1, 1, 0.6, 0.59549782938603478817413342757},   {0.1, 1, 0.999, 5.67045030583728650932640240116},
        {0.1, 0.5, 0.2, 0.75554164470259175099406206148}, {0.3, 1, 0.001, 1.72717386302151830221820837093},
        {0.3, 1, 0.3, 0.846552936756109060182019494752},  {0.3, 1, 0.6, 0.902386724947805260754075109576},
        {0.3, 1, 0.999, 2.90745419802444234028217850794}, {0.3, 0.5, 0.2, 0.981711489324827346925876246072},
        {0.7, 1, 0.001, 2.33317225261986767431580633404}, {0.7, 1, 0.3, 1.07363571553022562870921029951},
        {0.7, 1, 0.6, 0.926853260516759184467209541083},  {0.7, 1, 0.999, 0.274259202988132225010134846146},
        {0.7, 0.5, 0.2, 0.892015111477893348934115896759}};
    for (const auto& c : cases) {
        HurstParams hp(c.H);
        EXPECT_LT(rel(mg_kernel(c.t, c.s, hp), c.k), 1e-11) << c.H << ' ' << c.s;
    }
}

TEST(MgKernel, AgreesWithHypergeometricDefinition) {
    for (double H : {0.05, 0.1, 0.25, 0.45, 0.55, 0.8}) {
        HurstParams hp(H);
        for (double t : {0.3, 1.0, 2.0})
            for (int i = 1; i < 60; ++i) {
                const double s = t * i / 60.0;
                EXPECT_LT(rel(mg_kernel(t, s, hp), kernel_by_definition(t, s, hp)), 1e-9) << H << ' ' << t << ' ' << s;
            }
    }
}

TEST(MgKernel, BrownianCaseAndDomain) {
    HurstParams hp(0.5);
    EXPECT_EQ(mg_kernel(1.0, 0.3, hp), 1.0);
    HurstParams h(0.2);
    EXPECT_EQ(mg_kernel(1.0, 1.0, h), 0.0);
    EXPECT_EQ(mg_kernel(1.0, 1.5, h), 0.0);
    EXPECT_THROW(mg_kernel(1.0, 0.0, h), DomainError);
}

TEST(MgKernel, NonNegativeOnGrid) {
    for (double H : {0.05, 0.2, 0.45, 0.6, 0.9}) {
        HurstParams hp(H);
        for (int i = 1; i <= 100; ++i)
            for (int j = 1; j <= 100; ++j) {
                const double t = i / 100.0, s = j / 100.0 * t * 0.999999;
                EXPECT_GE(mg_kernel(t, s, hp), 0.0);
            }
    }
}

TEST(MgKernel, SquareIntegralIsVariance) {
    for (double H : {0.05, 0.1, 0.3, 0.45, 0.7}) {
        HurstParams hp(H);
        for (double t : {0.5, 1.0}) {
            const auto r = kernel_cross_integral(t, t, 0.0, t, hp);
            EXPECT_LT(rel(r.value, std::pow(t, 2 * H)), 1e-8) << H << ' ' << t;
        }
    }
}

TEST(MgKernel, IntegralIsKappa) {
    for (double H : {0.05, 0.1, 0.3, 0.45, 0.7}) {
        HurstParams hp(H);
        for (double t : {0.5, 1.0}) {
            const auto r = kernel_integral(t, 0.0, t, hp);
            EXPECT_LT(rel(r.value, hp.kappa_H() * std::pow(t, H + 0.5)), 1e-10) << H << ' ' << t;
        }
    }
}

TEST(FbmCov, Basics) {
    EXPECT_NEAR(fbm_cov(0.7, 0.7, 0.2), std::pow(0.7, 0.4), 1e-15);
    EXPECT_NEAR(fbm_cov(0.3, 0.8, 0.5), 0.3, 1e-15);
    HurstParams hp(0.2);
    EXPECT_LT(rel(kernel_cross_integral(0.7, 0.9, 0.0, 0.7, hp).value, fbm_cov(0.7, 0.9, 0.2)), 1e-8);
    for (double H : {0.1, 0.35, 0.75}) {
        HurstParams h(H);
        EXPECT_LT(rel(kernel_cross_integral(0.25, 1.0, 0.0, 0.25, h).value, fbm_cov(0.25, 1.0, H)), 1e-8) << H;
        EXPECT_LT(rel(kernel_cross_integral(0.99, 1.0, 0.0, 0.99, h).value, fbm_cov(0.99, 1.0, H)), 1e-8) << H;
    }
}

TEST(CondMeanVar, StartAndAdditivity) {
    HurstParams hp(0.2);
    TimeGrid g(1.0, 10);
    std::vector<double> inc(10, 0.05);
    const auto l0 = cond_mean_var(0.7, 0.0, hp, g, inc);
    EXPECT_EQ(l0.mean, 0.0);
    EXPECT_LT(rel(l0.var, std::pow(0.7, 0.4)), 1e-9);
    const auto l = cond_mean_var(0.75, 0.4, hp, g, inc);
    const double head = kernel_cross_integral(0.75, 0.75, 0.0, 0.4, hp).value;
    EXPECT_NEAR(l.var + head, std::pow(0.75, 0.4), 1e-9);
    EXPECT_GE(l.var, 0.0);
    EXPECT_THROW(cond_mean_var(0.4, 0.4, hp, g, inc), DomainError);
    EXPECT_THROW(cond_mean_var(0.7, 0.45, hp, g, inc), DomainError);
}

TEST(CondMeanVar, BrownianCase) {
    HurstParams hp(0.5);
    TimeGrid g(1.0, 4);
    std::vector<double> inc = {0.1, -0.3, 0.2, 0.05};
    const auto l = cond_mean_var(0.9, 0.75, hp, g, inc);
    EXPECT_NEAR(l.mean, 0.0, 1e-15);
    EXPECT_NEAR(l.var, 0.15, 1e-15);
    const auto l2 = cond_mean_var(0.9, 0.5, hp, g, inc);
    EXPECT_NEAR(l2.mean, -0.2, 1e-15);
}

TEST(CellMoments, RowSumsGiveKappa) {
    for (double H : {0.05, 0.1, 0.3, 0.45, 0.7}) {
        HurstParams hp(H);
        TimeGrid g(0.8, 64);
        const auto cm = cell_moments(hp, g, true);
        for (int k = 1; k <= 64; k += 7) {
            const double s = cm.m0.row(k - 1).sum();
            EXPECT_LT(rel(s, hp.kappa_H() * std::pow(g.t(k), H + 0.5)), 1e-10) << H << ' ' << k;
        }
        // basis moment on an interior cell against adaptive quadrature
        const int k = 40, j = 20;
        const double t = g.t(k), a = g.t(j), b = g.t(j + 1);
        const auto r = quad::graded_integrate(
            [&](double s, double, double right) { return mg_kernel(t, s, hp) * std::pow(right, H - 0.5); }, a, b, 1.0,
            H - 0.5, 1e-12);
        EXPECT_LT(rel(cm.m1(k - 1, j), r.value), 1e-9) << H;
    }
}

TEST(SamplePaths, BrownianCaseIsExact) {
    HurstParams hp(0.5);
    TimeGrid g(1.0, 50);
    const auto pb = sample_paths(hp, g, 20, 7, FbmScheme::cholesky);
    for (std::size_t i = 0; i < pb.BH.size(); ++i) EXPECT_NEAR(pb.BH[i], pb.B[i], 1e-12);
}

TEST(SamplePaths, DeterministicAcrossWorkers) {
    HurstParams hp(0.15);
    TimeGrid g(1.0, 40);
    for (auto scheme : {FbmScheme::cholesky, FbmScheme::kernel_discretized}) {
        const auto a = sample_paths(hp, g, 700, 99, scheme, 1);
        const auto b = sample_paths(hp, g, 700, 99, scheme, 3);
        EXPECT_EQ(a.BH, b.BH);
        EXPECT_EQ(a.B, b.B);
        const auto c = sample_paths(hp, g, 700, 100, scheme, 1);
        EXPECT_NE(a.BH, c.BH);
        for (std::size_t p = 0; p < a.n_paths; ++p) EXPECT_EQ(a.BH[p * a.width()], 0.0);
    }
}

TEST(SamplePaths, TerminalVariance) {
    HurstParams hp(0.1);
    TimeGrid g(1.0, 64);
    const std::size_t N = 50000;
    const auto pb = sample_paths(hp, g, N, 2024, FbmScheme::cholesky);
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        const double x = pb.BH[p * pb.width() + 64];
        m2 += x * x;
        m4 += x * x * x * x;
    }
    m2 /= N;
    m4 /= N;
    const double se = std::sqrt((m4 - m2 * m2) / N);
    EXPECT_LT(std::abs(m2 - 1.0), 4 * se);
}

TEST(SamplePaths, CholeskyCovarianceWithinFourSE) {
    HurstParams hp(0.1);
    const int n = 16;
    TimeGrid g(1.0, n);
    const std::size_t N = 50000;
    const auto pb = sample_paths(hp, g, N, 31337, FbmScheme::cholesky);
    int worst_i = 0, worst_j = 0;
    double worst = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t p = 0; p < N; ++p) {
                const double v = pb.BH[p * pb.width() + i] * pb.BH[p * pb.width() + j];
                s += v;
                s2 += v * v;
            }
            const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
            const double z = std::abs(m - fbm_cov(g.t(i), g.t(j), hp.H())) / se;
            if (z > worst) worst = z, worst_i = i, worst_j = j;
        }
    EXPECT_LT(worst, 4.0) << worst_i << ' ' << worst_j;
}

TEST(SamplePaths, CrossCovarianceWithDrivingBm) {
    HurstParams hp(0.3);
    TimeGrid g(1.0, 8);
    const std::size_t N = 50000;
    const auto pb = sample_paths(hp, g, N, 5, FbmScheme::cholesky);
    for (int i = 1; i <= 8; i += 3)
        for (int j = 1; j <= 8; j += 2) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t p = 0; p < N; ++p) {
                const double v = pb.BH[p * pb.width() + i] * pb.B[p * pb.width() + j];
                s += v;
                s2 += v * v;
            }
            const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
            const double tm = std::min(g.t(i), g.t(j));
            const double exact = kernel_integral(g.t(i), 0.0, tm, hp).value;
            EXPECT_LT(std::abs(m - exact), 4 * se) << i << ' ' << j;
        }
}

// Whitened fractional Gaussian noise: sum over paths of x' Gamma^{-1} x is
// chi-square with n*N degrees of freedom.
TEST(SamplePaths, FractionalGaussianNoiseChiSquare) {
    const double H = 0.1;
    HurstParams hp(H);
    const int n = 128;
    TimeGrid g(1.0, n);
    const std::size_t N = 20000;
    const auto pb = sample_paths(hp, g, N, 8, FbmScheme::cholesky);
    const double dt = g.dt();
    auto gamma = [&](int k) {
        k = std::abs(k);
        return 0.5 * std::pow(dt, 2 * H) *
               (std::pow(k + 1.0, 2 * H) - 2 * std::pow(double(k), 2 * H) + std::pow(std::abs(k - 1.0), 2 * H));
    };
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gamma(i - j);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    ASSERT_EQ(llt.info(), Eigen::Success);
    double q = 0.0;
    Eigen::VectorXd x(n);
    for (std::size_t p = 0; p < N; ++p) {
        for (int k = 0; k < n; ++k) x(k) = pb.BH[p * pb.width() + k + 1] - pb.BH[p * pb.width() + k];
        q += llt.matrixL().solve(x).squaredNorm();
    }
    const double dof = double(n) * N;
    const double z = (std::cbrt(q / dof) - (1.0 - 2.0 / (9.0 * dof))) / std::sqrt(2.0 / (9.0 * dof));
    const double pval = 2.0 * std::min(std_normal_cdf(z), 1.0 - std_normal_cdf(z));
    EXPECT_GT(pval, 0.01) << "z=" << z;
}

TEST(SamplePaths, DiscretizedSchemeMatchesCholeskyInLaw) {
    HurstParams hp(0.1);
    const int n = 512;
    TimeGrid g(1.0, n);
    const std::size_t N = 50000;
    const auto a = sample_paths(hp, g, N, 77, FbmScheme::cholesky);
    const auto b = sample_paths(hp, g, N, 78, FbmScheme::kernel_discretized); // independent of a
    std::vector<double> xa(N), xb(N);
    double va = 0, vb = 0;
    for (std::size_t p = 0; p < N; ++p) {
        xa[p] = a.BH[p * a.width() + n];
        xb[p] = b.BH[p * b.width() + n];
        va += xa[p] * xa[p];
        vb += xb[p] * xb[p];
    }
    const double d = ks_two_sample(xa, xb);
    RecordProperty("ks", std::to_string(d));
    EXPECT_LT(d, 0.01) << "var " << va / N << ' ' << vb / N;
}

TEST(SamplePaths, GeneratorVariances) {
    for (double H : {0.05, 0.1, 0.3, 0.7}) {
        HurstParams hp(H);
        TimeGrid g(1.0, 256);
        FbmGenerator chol(hp, g, FbmScheme::cholesky);
        FbmGenerator disc(hp, g, FbmScheme::kernel_discretized);
        for (int k : {1, 2, 17, 256}) {
            const double exact = std::pow(g.t(k), 2 * H);
            EXPECT_LT(rel(chol.node_variance(k), exact), 1e-9) << H << ' ' << k;
            EXPECT_LT(rel(disc.node_variance(k), exact), 5e-3) << H << ' ' << k;
        }
    }
}

TEST(PathCsv, HeaderAndRows) {
    HurstParams hp(0.3);
    TimeGrid g(1.0, 4);
    const auto pb = sample_paths(hp, g, 2, 1, FbmScheme::cholesky);
    std::ostringstream os;
    write_paths_csv(pb, os);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "path_id,t,B,BH,Y,S,w");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 5);
}
