#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsabr/errors.hpp"
#include "fsabr/parallel.hpp"
#include "fsabr/quadrature.hpp"
#include "fsabr/rng.hpp"
#include "fsabr/specfun.hpp"

namespace fsabr {

// Hurst exponent with the Molchan-Golosov constants.
class HurstParams {
public:
    explicit HurstParams(double H) : H_(H) {
        if (!(H > 0.0 && H < 1.0)) throw DomainError("HurstParams: H must lie in (0,1)");
        bm_ = std::abs(H - 0.5) < 1e-12;
        alpha_ = H - 0.5;
        if (bm_) {
            c_ = 1.0;
            kappa_ = 1.0;
            g1_ = 0.5;
            return;
        }
        c_ = std::sqrt(2.0 * H * gamma_fn(1.5 - H) / (gamma_fn(2.0 - 2.0 * H) * gamma_fn(H + 0.5)));
        kappa_ = c_ * beta_fn(1.5 - H, H + 0.5) / (H + 0.5);
        // constant of the s^alpha branch after the 1-z connection formula
        g1_ = gamma_fn(1.0 + alpha_) * gamma_fn(1.0 - 2.0 * alpha_) / (2.0 * gamma_fn(1.0 - alpha_));
    }

    double H() const { return H_; }
    double c_H() const { return c_; }
    double kappa_H() const { return kappa_; }
    double alpha() const { return alpha_; } // H - 1/2
    bool is_bm() const { return bm_; }

    double g1() const { return g1_; }

    // K(t,s) with the gap t - s supplied separately for accuracy near s = t.
    double kernel(double t, double s, double gap) const {
        if (bm_) return 1.0;
        if (s <= 0.5 * t) return c_ * g1_ * std::pow(s, alpha_) + std::pow(s, -alpha_) * regular_near_zero(t, s, gap);
        return std::pow(gap, alpha_) * regular_near_t(t, s, gap);
    }

    // R0 with K = c_H g1 s^a + s^{-a} R0(s); analytic in s on [0, t/2].
    // From the 1-z connection formula: R0 = c_H/2 (t-s)^a t^a 2F1(1,-a;1-2a;s/t).
    double regular_near_zero(double t, double s, double gap) const {
        if (bm_) return 0.0;
        const double a = alpha_, w = s / t, c = 1.0 - 2.0 * a;
        double sum = 1.0, term = 1.0;
        for (int n = 0; n < 400; ++n) {
            term *= (1.0 + n) * (-a + n) / ((c + n) * (n + 1.0)) * w;
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return 0.5 * c_ * std::pow(gap * t, a) * sum;
    }

    // R1 with K = (t-s)^a R1(s); analytic in s on [t/2, t].
    // Pfaff form: R1 = c_H (s/t)^a 2F1(a, 2a+1; a+1; (t-s)/t).
    double regular_near_t(double t, double s, double gap) const {
        if (bm_) return 1.0;
        const double a = alpha_, z = gap / t;
        if (z > 0.5) return kernel(t, s, gap) / std::pow(gap, a);
        double sum = 1.0, term = 1.0;
        for (int n = 0; n < 400; ++n) {
            term *= (a + n) * (2.0 * a + 1.0 + n) / ((a + 1.0 + n) * (n + 1.0)) * z;
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return c_ * std::pow(s / t, a) * sum;
    }

private:
    double H_, alpha_, c_, kappa_, g1_;
    bool bm_;
};

// Molchan-Golosov kernel; zero for s >= t.
inline double mg_kernel(double t, double s, const HurstParams& hp) {
    if (!(s > 0.0)) throw DomainError("mg_kernel: s must be positive");
    if (s >= t) return 0.0;
    return hp.kernel(t, s, t - s);
}

inline double fbm_cov(double t, double s, double H) {
    if (t < 0.0 || s < 0.0) throw DomainError("fbm_cov: negative time");
    const double h2 = 2.0 * H;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

// Endpoint exponents of K(t, .) on [a, b] with b <= t.
namespace detail {
inline double kernel_left_exponent(const HurstParams& hp, double a) {
    return a == 0.0 ? -std::abs(hp.alpha()) : 1.0;
}
inline double kernel_right_exponent(const HurstParams& hp, double b, double t, double width) {
    return (t - b) < width ? std::min(hp.alpha(), 1.0) : 1.0;
}
} // namespace detail

// int_a^b K(t,s) ds, 0 <= a < b <= t.
inline quad::QuadResult kernel_integral(double t, double a, double b, const HurstParams& hp, double rel_tol = 1e-12) {
    if (!(0.0 <= a && a < b && b <= t)) throw DomainError("kernel_integral: need 0 <= a < b <= t");
    if (hp.is_bm()) return {b - a, 0.0, 0, true};
    const double tb = t - b;
    return quad::graded_integrate([&](double s, double, double r) { return hp.kernel(t, s, tb + r); }, a, b,
                                  detail::kernel_left_exponent(hp, a),
                                  detail::kernel_right_exponent(hp, b, t, b - a), rel_tol);
}

// int_a^b K(t1,s) K(t2,s) ds, 0 <= a < b <= min(t1,t2).
inline quad::QuadResult kernel_cross_integral(double t1, double t2, double a, double b, const HurstParams& hp,
                                              double rel_tol = 1e-12) {
    if (!(0.0 <= a && a < b && b <= std::min(t1, t2))) throw DomainError("kernel_cross_integral: bad interval");
    if (hp.is_bm()) return {b - a, 0.0, 0, true};
    const double d1 = t1 - b, d2 = t2 - b;
    const double al = a == 0.0 ? -2.0 * std::abs(hp.alpha()) : 1.0;
    double ar = 1.0;
    const double width = b - a;
    if (d1 < width) ar = std::min(ar, hp.alpha());
    if (d2 < width) ar = std::min(ar, hp.alpha());
    if (d1 < width && d2 < width) ar = std::min(1.0, 2.0 * hp.alpha());
    return quad::graded_integrate(
        [&](double s, double, double r) { return hp.kernel(t1, s, d1 + r) * hp.kernel(t2, s, d2 + r); }, a, b, al,
        ar, rel_tol);
}

class TimeGrid {
public:
    TimeGrid(double T, int n) : T_(T), n_(n) {
        if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("TimeGrid: T must be positive");
        if (n < 2) throw DomainError("TimeGrid: need at least 2 steps");
    }
    double T() const { return T_; }
    int n() const { return n_; }
    double dt() const { return T_ / n_; }
    double t(int k) const { return k == n_ ? T_ : k * T_ / n_; }

private:
    double T_;
    int n_;
};

struct CondLaw {
    double mean;
    double var;
};

// Law of B^H_r given the driving BM up to t. `increments` are the grid
// increments of B; t must be a grid node.
inline CondLaw cond_mean_var(double r, double t, const HurstParams& hp, const TimeGrid& grid,
                             std::span<const double> increments) {
    if (!(r > t)) throw DomainError("cond_mean_var: need r > t");
    if (t < 0.0) throw DomainError("cond_mean_var: negative t");
    const double kf = t / grid.dt();
    const int kt = static_cast<int>(std::lround(kf));
    if (std::abs(kf - kt) > 1e-9 || kt > grid.n()) throw DomainError("cond_mean_var: t must be a grid node");
    if (static_cast<int>(increments.size()) < kt) throw DomainError("cond_mean_var: increment history too short");

    double m = 0.0;
    for (int j = 0; j < kt; ++j) {
        const double a = grid.t(j), b = grid.t(j + 1);
        m += kernel_integral(r, a, b, hp).value / (b - a) * increments[j];
    }
    double v;
    if (hp.is_bm()) {
        v = r - t;
    } else {
        const double al = t == 0.0 ? -2.0 * std::abs(hp.alpha()) : 1.0;
        v = quad::graded_integrate(
                [&](double s, double, double gap) {
                    const double k = hp.kernel(r, s, gap);
                    return k * k;
                },
                t, r, al, std::min(1.0, 2.0 * hp.alpha()), 1e-12)
                .value;
    }
    return {m, v};
}

enum class FbmScheme { cholesky, kernel_discretized };

inline std::string to_string(FbmScheme s) { return s == FbmScheme::cholesky ? "cholesky" : "kernel-discretized"; }

// Cell moments of the kernel on a uniform grid. Row k-1 belongs to target
// time t_k, column j to the cell [t_j, t_{j+1}], j < k.
struct CellMoments {
    Eigen::MatrixXd m0;  // int K(t_k,s) ds
    Eigen::MatrixXd m1;  // int K(t_k,s) (t_{j+1}-s)^alpha ds
    Eigen::VectorXd m2;  // int_{cell 0} K(t_k,s) s^{-|alpha|} ds
};

// The kernel is split as K = c_H g1 s^a + s^{-a} R0 on cell 0 and as
// K = (t-s)^a R1 on the cell ending at t; R0 and R1 are analytic there, so
// Gauss-Jacobi rules with the matching weights are exact up to rounding.
inline CellMoments cell_moments(const HurstParams& hp, const TimeGrid& grid, bool with_basis, int workers = 1) {
    const int n = grid.n();
    const double dt = grid.dt(), a = hp.alpha(), aa = std::abs(a);
    CellMoments cm;
    cm.m0 = Eigen::MatrixXd::Zero(n, n);
    if (with_basis) {
        cm.m1 = Eigen::MatrixXd::Zero(n, n);
        cm.m2 = Eigen::VectorXd::Zero(n);
    }
    if (hp.is_bm()) {
        for (int k = 0; k < n; ++k)
            for (int j = 0; j <= k; ++j) cm.m0(k, j) = dt;
        return cm;
    }
    constexpr int q = 10;
    const double cg = hp.c_H() * hp.g1();
    using quad::jacobi_integrate;

    // Cell [0, h] as the left part of [0, t], h <= t/2; returns (m0, m1, m2)
    // with phi(s) = (phi_end - s)^a.
    auto head = [&](double t, double h, double phi_end, double m[3]) {
        auto r0 = [&](double s, double, double) { return hp.regular_near_zero(t, s, t - s); };
        m[0] = cg * std::pow(h, a + 1.0) / (a + 1.0) + jacobi_integrate(r0, 0.0, h, -a, 0.0, q);
        if (!with_basis) return;
        if (phi_end == h) {
            m[1] = cg * std::pow(h, 2.0 * a + 1.0) * beta_fn(a + 1.0, a + 1.0) + jacobi_integrate(r0, 0.0, h, -a, a, q);
        } else {
            auto phi = [&](double s, double, double) { return std::pow(phi_end - s, a); };
            auto r0phi = [&](double s, double, double) { return hp.regular_near_zero(t, s, t - s) * std::pow(phi_end - s, a); };
            m[1] = cg * jacobi_integrate(phi, 0.0, h, a, 0.0, q) + jacobi_integrate(r0phi, 0.0, h, -a, 0.0, q);
        }
        m[2] = cg * std::pow(h, a - aa + 1.0) / (a - aa + 1.0) + jacobi_integrate(r0, 0.0, h, -a - aa, 0.0, q);
    };

    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t kk) {
        const int k = static_cast<int>(kk) + 1;
        const double t = grid.t(k);
        if (k == 1) {
            // single cell: split at dt/2
            double m[3] = {0, 0, 0};
            head(t, 0.5 * t, t, m);
            auto r1 = [&](double s, double, double right) { return hp.regular_near_t(t, s, right); };
            const double lo = 0.5 * t;
            m[0] += jacobi_integrate(r1, lo, t, 0.0, a, q);
            cm.m0(0, 0) = m[0];
            if (with_basis) {
                auto r1psi = [&](double s, double, double right) { return hp.regular_near_t(t, s, right) * std::pow(s, -aa); };
                cm.m1(0, 0) = m[1] + jacobi_integrate(r1, lo, t, 0.0, 2.0 * a, q);
                cm.m2(0) = m[2] + jacobi_integrate(r1psi, lo, t, 0.0, a, q);
            }
            return;
        }
        for (int j = 0; j < k; ++j) {
            const double lo = grid.t(j), hi = grid.t(j + 1);
            const double tail = t - hi;
            if (j == 0) {
                double m[3] = {0, 0, 0};
                head(t, hi, hi, m);
                cm.m0(k - 1, 0) = m[0];
                if (with_basis) {
                    cm.m1(k - 1, 0) = m[1];
                    cm.m2(k - 1) = m[2];
                }
            } else if (j == k - 1) {
                auto r1 = [&](double s, double, double right) { return hp.regular_near_t(t, s, right); };
                cm.m0(k - 1, j) = jacobi_integrate(r1, lo, hi, 0.0, a, q);
                if (with_basis) cm.m1(k - 1, j) = jacobi_integrate(r1, lo, hi, 0.0, 2.0 * a, q);
            } else {
                auto kf = [&](double s, double, double right) { return hp.kernel(t, s, tail + right); };
                cm.m0(k - 1, j) = jacobi_integrate(kf, lo, hi, 0.0, 0.0, q);
                if (with_basis) cm.m1(k - 1, j) = jacobi_integrate(kf, lo, hi, 0.0, a, q);
            }
        }
    });
    return cm;
}

// Simulated paths, row-major by path. Per-path arrays have n+1 entries
// (t_0..t_n) except dB which has n. Y, S, w are empty when only the driving
// noise was simulated.
struct PathBatch {
    TimeGrid grid{1.0, 2};
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    FbmScheme scheme = FbmScheme::cholesky;
    double jitter = 0.0;
    std::vector<double> dB, B, BH, Y, S, w;
    std::vector<std::uint8_t> flagged;

    std::size_t width() const { return static_cast<std::size_t>(grid.n()) + 1; }
    std::span<const double> row(const std::vector<double>& v, std::size_t p) const {
        return {v.data() + p * width(), width()};
    }
    std::span<const double> increments(std::size_t p) const {
        return {dB.data() + p * grid.n(), static_cast<std::size_t>(grid.n())};
    }
};

// Joint Gaussian generator for (B, B^H) on a uniform grid. B^H at the nodes
// t_1..t_n is A z1 + L z2 (+ e u for the discretized scheme), with z1 the
// normalized increments of B.
class FbmGenerator {
public:
    static constexpr int kBlock = 256;

    FbmGenerator(const HurstParams& hp, const TimeGrid& grid, FbmScheme scheme, int workers = 1)
        : hp_(hp), grid_(grid), scheme_(scheme) {
        const int n = grid.n();
        const double dt = grid.dt(), sdt = std::sqrt(dt);
        if (hp.is_bm()) {
            A_ = Eigen::MatrixXd::Zero(n, n);
            for (int k = 0; k < n; ++k)
                for (int j = 0; j <= k; ++j) A_(k, j) = sdt;
            return;
        }
        if (scheme == FbmScheme::cholesky) build_cholesky(workers);
        else build_discretized(workers);
    }

    const TimeGrid& grid() const { return grid_; }
    FbmScheme scheme() const { return scheme_; }
    double jitter() const { return jitter_; }
    bool uses_extra_normals() const { return L_.size() > 0; }
    int extra_normals() const { return static_cast<int>(L_.cols()) + (e_.size() > 0 ? 1 : 0); }

    // Variance of the generated B^H(t_k), k >= 1, read off the coefficients.
    double node_variance(int k) const {
        double v = A_.row(k - 1).head(k).squaredNorm();
        if (L_.size() > 0) v += L_.row(k - 1).head(k).squaredNorm();
        if (e_.size() > 0) v += e_(k - 1) * e_(k - 1);
        return v;
    }

    // Generates paths [first, first+count). Z1 and BH come back as n x count
    // matrices (one column per path; row k is increment k, resp. B^H(t_{k+1})).
    void generate(std::uint64_t seed, std::uint64_t first, int count, bool antithetic, Eigen::MatrixXd& Z1,
                  Eigen::MatrixXd& BH) const {
        const int n = grid_.n();
        Z1.resize(n, count);
        for (int c = 0; c < count; ++c)
            fill_normals(seed, first + c, Stream::driving_bm, antithetic, {Z1.col(c).data(), std::size_t(n)});
        BH.noalias() = A_.triangularView<Eigen::Lower>() * Z1;
        if (L_.size() == 0) return;
        const int m = extra_normals();
        Eigen::MatrixXd Z2(m, count);
        for (int c = 0; c < count; ++c)
            fill_normals(seed, first + c, Stream::fbm_extra, antithetic, {Z2.col(c).data(), std::size_t(m)});
        BH.noalias() += L_.triangularView<Eigen::Lower>() * Z2.topRows(n);
        if (e_.size() > 0) BH.noalias() += e_ * Z2.row(n);
    }

private:
    void build_cholesky(int workers) {
        const int n = grid_.n();
        const double dt = grid_.dt(), sdt = std::sqrt(dt);
        CellMoments cm = cell_moments(hp_, grid_, false, workers);
        A_ = cm.m0 / sdt;
        Eigen::MatrixXd S(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k <= i; ++k) S(i, k) = S(k, i) = fbm_cov(grid_.t(i + 1), grid_.t(k + 1), hp_.H());
        S.triangularView<Eigen::Lower>() -= (A_ * A_.transpose()).eval();
        S = S.selfadjointView<Eigen::Lower>();
        const double scale = S.diagonal().cwiseAbs().mean();
        double jitter = 0.0;
        for (int attempt = 0; attempt < 10; ++attempt) {
            Eigen::MatrixXd Sj = S;
            if (jitter > 0.0) Sj.diagonal().array() += jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(Sj);
            if (llt.info() == Eigen::Success) {
                L_ = llt.matrixL();
                jitter_ = jitter;
                return;
            }
            jitter = jitter == 0.0 ? 1e-14 * std::max(scale, 1e-300) : jitter * 10.0;
        }
        throw RegularizationError("FbmGenerator: conditional covariance is not positive definite", jitter);
    }

    void build_discretized(int workers) {
        const int n = grid_.n();
        const double dt = grid_.dt(), a = hp_.alpha(), aa = std::abs(a);
        // Near H = 1/2 the singular basis degenerates into the constant; cell averages suffice.
        const bool basis = aa >= 0.02;
        CellMoments cm = cell_moments(hp_, grid_, basis, workers);
        if (!basis) {
            A_ = cm.m0 / std::sqrt(dt);
            return;
        }
        // Gram matrix of (1, (dt-u)^a, u^{-|a|}) on [0, dt]; it is also the covariance of
        // the cell features (dB, int phi dB, int psi dB).
        const double I1 = std::pow(dt, a + 1.0) / (a + 1.0);
        const double I2 = std::pow(dt, 2.0 * a + 1.0) / (2.0 * a + 1.0);
        const double J1 = std::pow(dt, 1.0 - aa) / (1.0 - aa);
        const double J2 = std::pow(dt, 1.0 - 2.0 * aa) / (1.0 - 2.0 * aa);
        const double J12 = std::pow(dt, 1.0 + a - aa) * beta_fn(1.0 + a, 1.0 - aa);
        Eigen::Matrix2d G2;
        G2 << dt, I1, I1, I2;
        Eigen::Matrix3d G3;
        G3 << dt, I1, J1, I1, I2, J12, J1, J12, J2;
        const Eigen::Matrix2d L2 = G2.llt().matrixL();
        Eigen::LLT<Eigen::Matrix3d> llt3(G3);
        if (llt3.info() != Eigen::Success) throw NumericalError("FbmGenerator: singular cell basis");
        const Eigen::Matrix3d L3 = llt3.matrixL();

        A_ = Eigen::MatrixXd::Zero(n, n);
        L_ = Eigen::MatrixXd::Zero(n, n);
        e_ = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j <= k; ++j) {
                if (j == 0) {
                    Eigen::Vector3d m(cm.m0(k, 0), cm.m1(k, 0), cm.m2(k));
                    const Eigen::Vector3d c = L3.triangularView<Eigen::Lower>().solve(m);
                    // B^H contribution c^T L3^{-1} (features) with features = L3 z
                    A_(k, 0) = c(0);
                    L_(k, 0) = c(1);
                    e_(k) = c(2);
                } else {
                    Eigen::Vector2d m(cm.m0(k, j), cm.m1(k, j));
                    const Eigen::Vector2d c = L2.triangularView<Eigen::Lower>().solve(m);
                    A_(k, j) = c(0);
                    L_(k, j) = c(1);
                }
            }
        }
    }

    HurstParams hp_;
    TimeGrid grid_;
    FbmScheme scheme_;
    double jitter_ = 0.0;
    Eigen::MatrixXd A_, L_;
    Eigen::VectorXd e_;
};

// Samples of (B, B^H) on the grid. Deterministic in (seed, scheme, grid,
// n_paths) for any worker count.
inline PathBatch sample_paths(const HurstParams& hp, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                              FbmScheme scheme, int workers = 1) {
    if (n_paths < 1) throw DomainError("sample_paths: need at least one path");
    FbmGenerator gen(hp, grid, scheme, workers);
    PathBatch pb;
    pb.grid = grid;
    pb.n_paths = n_paths;
    pb.seed = seed;
    pb.scheme = scheme;
    pb.jitter = gen.jitter();
    const int n = grid.n();
    const std::size_t W = n + 1;
    pb.dB.assign(n_paths * n, 0.0);
    pb.B.assign(n_paths * W, 0.0);
    pb.BH.assign(n_paths * W, 0.0);
    const double sdt = std::sqrt(grid.dt());
    const std::size_t nblocks = (n_paths + FbmGenerator::kBlock - 1) / FbmGenerator::kBlock;
    parallel_for(nblocks, workers, [&](std::size_t b) {
        const std::size_t first = b * FbmGenerator::kBlock;
        const int count = static_cast<int>(std::min<std::size_t>(FbmGenerator::kBlock, n_paths - first));
        Eigen::MatrixXd Z1, BH;
        gen.generate(seed, first, count, false, Z1, BH);
        for (int c = 0; c < count; ++c) {
            const std::size_t p = first + c;
            double b_acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = sdt * Z1(k, c);
                pb.dB[p * n + k] = d;
                b_acc += d;
                pb.B[p * W + k + 1] = b_acc;
                pb.BH[p * W + k + 1] = BH(k, c);
            }
        }
    });
    return pb;
}

// One CSV with a row per (path, node): path_id,t,B,BH,Y,S,w. Fields that were
// not simulated are left empty.
inline void write_paths_csv(const PathBatch& pb, std::ostream& os) {
    os << "path_id,t,B,BH,Y,S,w\n";
    os.precision(17);
    const std::size_t W = pb.width();
    auto put = [&](const std::vector<double>& v, std::size_t i) {
        os << ',';
        if (!v.empty()) os << v[i];
    };
    for (std::size_t p = 0; p < pb.n_paths; ++p) {
        for (std::size_t k = 0; k < W; ++k) {
            const std::size_t i = p * W + k;
            os << p << ',' << pb.grid.t(static_cast<int>(k));
            put(pb.B, i);
            put(pb.BH, i);
            put(pb.Y, i);
            put(pb.S, i);
            put(pb.w, i);
            os << '\n';
        }
    }
}

} // namespace fsabr
