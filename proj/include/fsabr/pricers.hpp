#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fsabr/bsm.hpp"
#include "fsabr/errors.hpp"
#include "fsabr/fbm.hpp"
#include "fsabr/identities.hpp"
#include "fsabr/parallel.hpp"
#include "fsabr/quadrature.hpp"
#include "fsabr/specfun.hpp"

namespace fsabr {

// Lognormal fSABR state: S0 spot, Y0 initial volatility, nu vol-of-vol,
// rho correlation of the asset with the fBM driver, H Hurst exponent.
struct ModelParams {
    double S0 = 1.0;
    double Y0 = 0.2;
    double nu = 0.0;
    double rho = 0.0;
    double H = 0.3;

    double rho_bar() const { return std::sqrt(1.0 - rho * rho); }
    void validate() const {
        if (!(S0 > 0.0) || !std::isfinite(S0)) throw DomainError("ModelParams: S0 must be positive");
        if (!(Y0 > 0.0) || !std::isfinite(Y0)) throw DomainError("ModelParams: Y0 must be positive");
        if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError("ModelParams: nu must be non-negative");
        if (!(std::abs(rho) < 1.0)) throw DomainError("ModelParams: |rho| must be below 1");
        if (!(H > 0.0 && H < 1.0)) throw DomainError("ModelParams: H must lie in (0,1)");
    }
};

// Strike K, expiry T in years, target volatility sigma_bar.
struct Contract {
    double K = 1.0;
    double T = 1.0;
    double sigma_bar = 0.2;

    void validate() const {
        if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("Contract: K must be positive");
        if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("Contract: T must be positive");
        if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar)) throw DomainError("Contract: sigma_bar must be positive");
    }
    double x0(const ModelParams& p) const { return std::log(p.S0 / K); }
};

enum class Method { mc, dfa, dfa_full, svve, svve_quad, mc_vanilla, svve_vanilla };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::mc: return "MC";
    case Method::dfa: return "DFA";
    case Method::dfa_full: return "DFA-full";
    case Method::svve: return "SVVE";
    case Method::svve_quad: return "SVVE-quad";
    case Method::mc_vanilla: return "MC-vanilla";
    case Method::svve_vanilla: return "SVVE-vanilla";
    }
    return "?";
}

inline std::optional<Method> method_from_string(const std::string& s) {
    for (Method m : {Method::mc, Method::dfa, Method::dfa_full, Method::svve, Method::svve_quad, Method::mc_vanilla,
                     Method::svve_vanilla})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

struct PricingResult {
    double price = 0.0;
    Method method = Method::dfa;
    std::optional<double> std_err; // Monte Carlo only
    std::map<std::string, double> diagnostics;
    bool flagged = false; // quadrature missed its tolerance
};

// ---------------------------------------------------------------------------
// Lemma 4.1 at t = 0: m(.|0) = 0, v(r|0) = r^{2H}.

// E_0[Y_r^2]
inline double lemma41_e_y2(const ModelParams& p, double r) {
    if (!(r >= 0.0)) throw DomainError("lemma41_e_y2: need r >= 0");
    return p.Y0 * p.Y0 * std::exp(2.0 * p.nu * p.nu * std::pow(r, 2.0 * p.H));
}

// E_0[Y_tau Y_r^2], tau < r; the cross integral int_0^tau K(tau,s)K(r,s)ds is fbm_cov(tau, r).
inline double lemma41_e_y_y2(const ModelParams& p, double tau, double r) {
    if (!(0.0 <= tau && tau < r)) throw DomainError("lemma41_e_y_y2: need 0 <= tau < r");
    const double h2 = 2.0 * p.H, n2 = p.nu * p.nu;
    return p.Y0 * p.Y0 * p.Y0 *
           std::exp(0.5 * n2 * (std::pow(tau, h2) + 4.0 * std::pow(r, h2) + 4.0 * fbm_cov(tau, r, p.H)));
}

// E_0[Y_r^2 E_tau[Y_u^2]], tau < r < u.
inline double lemma41_e_y2_ey2(const ModelParams& p, double tau, double r, double u) {
    if (!(0.0 <= tau && tau < r && r < u)) throw DomainError("lemma41_e_y2_ey2: need 0 <= tau < r < u");
    const double h2 = 2.0 * p.H, n2 = p.nu * p.nu, y2 = p.Y0 * p.Y0;
    const double cross = tau == 0.0 ? 0.0 : kernel_cross_integral(r, u, 0.0, tau, HurstParams(p.H), 1e-10).value;
    return y2 * y2 * std::exp(2.0 * n2 * (std::pow(u, h2) + std::pow(r, h2) + 2.0 * cross));
}

// M_0 = Y0^2 int_0^T e^{2 nu^2 t^{2H}} dt
inline double m0(const ModelParams& p, double T) {
    p.validate();
    if (!(T > 0.0)) throw DomainError("m0: T must be positive");
    const double y2 = p.Y0 * p.Y0;
    if (p.nu == 0.0) return y2 * T;
    const double n2 = 2.0 * p.nu * p.nu, h2 = 2.0 * p.H;
    const auto r = quad::gauss_kronrod([&](double t) { return std::exp(n2 * std::pow(t, h2)); }, 0.0, T, 1e-13 * T,
                                       1e-14);
    return y2 * r.value;
}

// ---------------------------------------------------------------------------
// Decomposition-formula approximations.

namespace detail {

inline double kappa_over(const HurstParams& hp) { return hp.kappa_H() / (1.5 + hp.H()); }

struct DfaCoeffs {
    double x0, M0, lead, fxw, fww;
};

inline DfaCoeffs dfa_coeffs(const Contract& c, const ModelParams& p) {
    c.validate();
    p.validate();
    DfaCoeffs d;
    d.x0 = c.x0(p);
    d.M0 = m0(p, c.T);
    d.lead = bs_c({d.x0, d.M0}) / std::sqrt(d.M0);
    d.fxw = f_xw({d.x0, 0.0, d.M0});
    d.fww = f_ww({d.x0, 0.0, d.M0});
    return d;
}

} // namespace detail

// Simplified DFA: K sigma_bar sqrt(T) [C(X0,M0)/sqrt(M0)
//   + 2 nu rho F_xw Y0^3 kappa_H/(3/2+H) T^{3/2+H} + nu^2 F_ww Y0^4 T^{2(1+H)}/(1+H)].
inline PricingResult dfa_price(const Contract& c, const ModelParams& p) {
    const auto d = detail::dfa_coeffs(c, p);
    const HurstParams hp(p.H);
    const double T = c.T, Y3 = p.Y0 * p.Y0 * p.Y0, Y4 = Y3 * p.Y0;
    const double t1 = 2.0 * p.nu * p.rho * d.fxw * Y3 * detail::kappa_over(hp) * std::pow(T, 1.5 + p.H);
    const double t2 = p.nu * p.nu * d.fww * Y4 * std::pow(T, 2.0 * (1.0 + p.H)) / (1.0 + p.H);
    const double scale = c.K * c.sigma_bar * std::sqrt(T);
    PricingResult r;
    r.method = Method::dfa;
    r.price = scale * (d.lead + t1 + t2);
    r.diagnostics = {{"M0", d.M0}, {"term0", scale * d.lead}, {"term_xm", scale * t1}, {"term_mm", scale * t2}};
    return r;
}

struct DfaQuadConfig {
    double rel_tol = 1e-7;
    int n_start = 16; // half-rule nodes per dimension
    int n_max = 128;
    int workers = 1;
};

// I1 = int_0^T int_tau^T E_0[Y_tau Y_r^2]/Y0^3 K(r,tau) dr dtau and
// I2 = int_0^T int int_{tau<r2<r1<T} E_0[E_tau[Y_r1^2] E_tau[Y_r2^2]]/Y0^4 K(r1,tau)K(r2,tau),
// the second taken as half the symmetric square.
struct DfaIntegrals {
    double I1 = 0.0, I2 = 0.0, err1 = 0.0, err2 = 0.0;
    int n_half = 0;
    bool converged = true;
};

namespace detail {

// Per-tau inner integrals (g1, g2) at a given rule size.
inline std::pair<double, double> dfa_inner(double tau, double T, const HurstParams& hp, double nu, int n) {
    const double a = hp.alpha(), h2 = 2.0 * hp.H(), n2 = nu * nu;
    const auto rr = quad::graded_rule(tau, T, std::max(a, -0.99), 0.0, n);
    const std::size_t m = rr.size();
    std::vector<double> kr(m), er(m);
    double g1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = rr[i].x;
        kr[i] = hp.kernel(r, tau, rr[i].left);
        // E_0[Y_tau Y_r^2]/Y0^3 with the cross-covariance written through |r - tau| = left
        const double cov = 0.5 * (std::pow(tau, h2) + std::pow(r, h2) - std::pow(rr[i].left, h2));
        g1 += rr[i].w * kr[i] * std::exp(0.5 * n2 * (std::pow(tau, h2) + 4.0 * std::pow(r, h2) + 4.0 * cov));
        er[i] = std::pow(r, h2);
    }
    double g2 = 0.0;
    if (n2 == 0.0 || hp.is_bm() || tau == 0.0) {
        // cross integral is exact (BM: tau) or irrelevant
        const double G = hp.is_bm() ? tau : 0.0;
        double s = 0.0;
        std::vector<double> u(m);
        for (std::size_t i = 0; i < m; ++i) u[i] = rr[i].w * kr[i] * std::exp(2.0 * n2 * er[i]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) s += u[i] * u[j] * std::exp(4.0 * n2 * G);
        g2 = 0.5 * s;
        return {g1, g2};
    }
    // G_ij = int_0^tau K(r_i,s)K(r_j,s) ds on a rule graded at both ends
    const double al = -2.0 * std::abs(a), ar = a < 0.0 ? std::max(2.0 * a, -0.99) : a;
    const auto ss = quad::graded_rule(0.0, tau, al, ar, n);
    const std::size_t q = ss.size();
    Eigen::MatrixXd Kt(q, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < q; ++l)
            Kt(l, i) = std::sqrt(ss[l].w) * hp.kernel(rr[i].x, ss[l].x, rr[i].left + ss[l].right);
    const Eigen::MatrixXd G = Kt.transpose() * Kt;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double ui = rr[i].w * kr[i] * std::exp(2.0 * n2 * er[i]);
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            row += rr[j].w * kr[j] * std::exp(2.0 * n2 * er[j] + 4.0 * n2 * G(i, j));
        s += ui * row;
    }
    g2 = 0.5 * s;
    return {g1, g2};
}

inline std::pair<double, double> dfa_integrals_at(double T, const HurstParams& hp, double nu, int n, int workers) {
    const double a = hp.alpha();
    // g(tau) ~ tau^{-|a|} (doubled for g2) near 0 and vanishes like (T - tau)^{1+a} at T
    const auto tt = quad::graded_rule(0.0, T, std::max(-2.0 * std::abs(a), -0.99), 1.0 + a, n);
    std::vector<double> v1(tt.size()), v2(tt.size());
    parallel_for(tt.size(), workers, [&](std::size_t k) {
        const auto g = dfa_inner(tt[k].x, T, hp, nu, n);
        v1[k] = tt[k].w * g.first;
        v2[k] = tt[k].w * g.second;
    });
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < tt.size(); ++k) s1 += v1[k], s2 += v2[k];
    return {s1, s2};
}

} // namespace detail

inline DfaIntegrals dfa_integrals(double T, double H, double nu, const DfaQuadConfig& cfg = {}) {
    const HurstParams hp(H);
    DfaIntegrals out;
    auto prev = detail::dfa_integrals_at(T, hp, nu, cfg.n_start, cfg.workers);
    for (int n = 2 * cfg.n_start; n <= cfg.n_max; n *= 2) {
        const auto cur = detail::dfa_integrals_at(T, hp, nu, n, cfg.workers);
        out.I1 = cur.first;
        out.I2 = cur.second;
        out.err1 = std::abs(cur.first - prev.first);
        out.err2 = std::abs(cur.second - prev.second);
        out.n_half = n;
        if (out.err1 <= cfg.rel_tol * std::abs(out.I1) && out.err2 <= cfg.rel_tol * std::abs(out.I2)) return out;
        prev = cur;
    }
    out.converged = false;
    return out;
}

// Full DFA at t = 0: K sigma_bar sqrt(T) [C/sqrt(M0) + 2 nu rho F_xw Y0^3 I1 + 4 nu^2 F_ww Y0^4 I2].
inline PricingResult dfa_full_price_t0(const Contract& c, const ModelParams& p, const DfaQuadConfig& cfg = {}) {
    const auto d = detail::dfa_coeffs(c, p);
    const double Y3 = p.Y0 * p.Y0 * p.Y0, Y4 = Y3 * p.Y0;
    const double scale = c.K * c.sigma_bar * std::sqrt(c.T);
    PricingResult r;
    r.method = Method::dfa_full;
    double t1 = 0.0, t2 = 0.0;
    if (p.nu != 0.0) {
        const auto I = dfa_integrals(c.T, p.H, p.nu, cfg);
        t1 = 2.0 * p.nu * p.rho * d.fxw * Y3 * I.I1;
        t2 = 4.0 * p.nu * p.nu * d.fww * Y4 * I.I2;
        r.flagged = !I.converged;
        r.diagnostics = {{"I1", I.I1}, {"I2", I.I2}, {"I1_err", I.err1}, {"I2_err", I.err2}, {"nodes", I.n_half}};
    }
    r.price = scale * (d.lead + t1 + t2);
    r.diagnostics["M0"] = d.M0;
    r.diagnostics["term0"] = scale * d.lead;
    r.diagnostics["term_xm"] = scale * t1;
    r.diagnostics["term_mm"] = scale * t2;
    return r;
}

// Expected densities of the quadratic (co)variations at t = 0:
// E[d<X,M>_tau/dtau] = 2 nu rho int_tau^T E_0[Y_tau Y_r^2] K(r,tau) dr and
// E[d<M>_tau/dtau] = 4 nu^2 int int_{(tau,T)^2} E_0[E_tau[Y_r1^2]E_tau[Y_r2^2]] K(r1,tau)K(r2,tau).
inline double lemma41_dxm_density(const ModelParams& p, double T, double tau, int n = 64) {
    if (!(0.0 < tau && tau < T)) throw DomainError("lemma41_dxm_density: need 0 < tau < T");
    const auto g = detail::dfa_inner(tau, T, HurstParams(p.H), p.nu, n);
    return 2.0 * p.nu * p.rho * p.Y0 * p.Y0 * p.Y0 * g.first;
}
inline double lemma41_dm_density(const ModelParams& p, double T, double tau, int n = 64) {
    if (!(0.0 < tau && tau < T)) throw DomainError("lemma41_dm_density: need 0 < tau < T");
    const auto g = detail::dfa_inner(tau, T, HurstParams(p.H), p.nu, n);
    const double y2 = p.Y0 * p.Y0;
    return 4.0 * p.nu * p.nu * y2 * y2 * 2.0 * g.second;
}

// ---------------------------------------------------------------------------
// Small vol-of-vol expansion.
//
// With B_T = sqrt(T) Z, v = rho_bar^2 Y0^2 T, sv = sqrt(v) and beta = rho/rho_bar,
// d1 = xi0/sv + sv/2 ~ N(m1, beta^2) where m1 = (X0 - rho^2 Y0^2 T/2)/sv + sv/2,
// and e^{xi0} = e^{sv d1 - v/2}.

struct SvveExpectations {
    double E1, E2, E3, E4, E5;
};

namespace detail {

struct SvveSetup {
    double x0, T, Y0, rho, rb, v, sv, beta, m1, m2, e5;
};

inline SvveSetup svve_setup(const Contract& c, const ModelParams& p) {
    c.validate();
    p.validate();
    SvveSetup s;
    s.x0 = c.x0(p);
    s.T = c.T;
    s.Y0 = p.Y0;
    s.rho = p.rho;
    s.rb = p.rho_bar();
    if (!(s.rb > 0.0)) throw DomainError("svve: |rho| = 1 degenerates the conditional law");
    s.v = s.rb * s.rb * p.Y0 * p.Y0 * c.T;
    s.sv = std::sqrt(s.v);
    s.beta = p.rho / s.rb;
    s.m1 = (s.x0 - 0.5 * p.rho * p.rho * p.Y0 * p.Y0 * c.T) / s.sv + 0.5 * s.sv;
    s.m2 = s.m1 - s.sv;
    // E[e^{xi0} N(d1)] = C_x(X0, Y0^2 T)
    s.e5 = std::exp(s.x0) * std_normal_cdf(BsPoint{s.x0, p.Y0 * p.Y0 * c.T}.d1());
    return s;
}

// Through the normal-expectation lemma, writing B_T = sqrt(T)(d - m)/beta.
inline SvveExpectations svve_expectations_lemma(const SvveSetup& s) {
    const NormalLaw l1{s.m1, s.beta * s.beta}, l2{s.m2, s.beta * s.beta};
    const double rt = std::sqrt(s.T), ev = std::exp(-0.5 * s.v);
    const double e0 = e_eax_ncdf(l1, s.sv), e1 = e_x_eax_ncdf(l1, s.sv), e2 = e_x2_eax_ncdf(l1, s.sv);
    SvveExpectations E;
    E.E5 = s.e5;
    E.E3 = rt / s.beta * ev * (e1 - s.m1 * e0);
    E.E4 = s.T / (s.beta * s.beta) * ev * (e2 - 2.0 * s.m1 * e1 + s.m1 * s.m1 * e0);
    E.E2 = rt / s.beta * (e_x_ncdf(l2) - s.m2 * e_ncdf(l2));
    E.E1 = kSqrt2Pi * rt / s.beta * (e_x_npdf(l2) - s.m2 * e_npdf(l2));
    return E;
}

// Through Gaussian integration by parts E[B g(B)] = T E[g'(B)]; free of the
// 1/beta cancellation, so it also covers rho -> 0.
inline SvveExpectations svve_expectations_stein(const SvveSetup& s) {
    const NormalLaw l2{s.m2, s.beta * s.beta};
    const double rt = std::sqrt(s.T);
    SvveExpectations E;
    E.E5 = s.e5;
    E.E2 = rt * s.beta * e_npdf(l2);
    E.E1 = -kSqrt2Pi * rt * s.beta * e_x_npdf(l2);
    E.E3 = s.T * s.rho * s.Y0 * s.e5 + rt * s.beta * e_npdf(l2);
    E.E4 = s.T * s.e5 + s.T * s.rho * s.Y0 * E.E3 + rt * s.beta * E.E1 / kSqrt2Pi;
    return E;
}

} // namespace detail

inline SvveExpectations svve_expectations(const Contract& c, const ModelParams& p) {
    const auto s = detail::svve_setup(c, p);
    return std::abs(s.beta) < 1e-3 ? detail::svve_expectations_stein(s) : detail::svve_expectations_lemma(s);
}

// kappa_1..kappa_5 of the zeroth-plus-first-order decomposition, with
// a1 = 2 kappa_H T^{H+1/2}/(2H+3):
//   k1 = sqrt(2/pi) kappa_H K nu rho_bar sigma_bar T^H/(2H+3)
//   k2 = K nu sigma_bar a1/(Y0 T), k3 = -K nu sigma_bar a1 (rho^2 Y0^2 T + 1)/(Y0 T)
//   k4 = K nu rho sigma_bar a1/T, k5 = -K nu rho sigma_bar a1
struct SvveKappas {
    double k1, k2, k3, k4, k5;
};

inline SvveKappas svve_kappas(const Contract& c, const ModelParams& p) {
    const HurstParams hp(p.H);
    const double T = c.T, H = p.H, f = c.K * p.nu * c.sigma_bar;
    const double a1 = 2.0 * hp.kappa_H() * std::pow(T, H + 0.5) / (2.0 * H + 3.0);
    SvveKappas k;
    k.k1 = std::sqrt(2.0 / std::numbers::pi) * hp.kappa_H() * f * p.rho_bar() * std::pow(T, H) / (2.0 * H + 3.0);
    k.k2 = f * a1 / (p.Y0 * T);
    k.k3 = -f * a1 * (p.rho * p.rho * p.Y0 * p.Y0 * T + 1.0) / (p.Y0 * T);
    k.k4 = f * p.rho * a1 / T;
    k.k5 = -f * p.rho * a1;
    return k;
}

// SVVE closed form: (K sigma_bar/Y0) C(X0, Y0^2 T) + sum_j kappa_j E_j.
inline PricingResult svve_price(const Contract& c, const ModelParams& p) {
    const auto s = detail::svve_setup(c, p);
    const double zeroth = c.K * c.sigma_bar / p.Y0 * bs_c({s.x0, p.Y0 * p.Y0 * c.T});
    PricingResult r;
    r.method = Method::svve;
    if (p.nu == 0.0) {
        r.price = zeroth;
        r.diagnostics = {{"term0", zeroth}, {"term1", 0.0}};
        return r;
    }
    const auto E = std::abs(s.beta) < 1e-3 ? detail::svve_expectations_stein(s) : detail::svve_expectations_lemma(s);
    const auto k = svve_kappas(c, p);
    const double first = k.k1 * E.E1 + k.k2 * E.E2 + k.k3 * E.E3 + k.k4 * E.E4 + k.k5 * E.E5;
    r.price = zeroth + first;
    r.diagnostics = {{"term0", zeroth}, {"term1", first}, {"E1", E.E1}, {"E2", E.E2}, {"E3", E.E3},
                     {"E4", E.E4},      {"E5", E.E5}};
    return r;
}

// SVVE by Gauss-Hermite over B_T of the first-order integrand, everything
// conditioned on B_T:
//   E[w1|B] = 2 Y0^2 a1 B, E[xi1|B] = rho Y0 a1 (B^2 - T)/T - rho^2 Y0^2 a1 B.
inline PricingResult svve_quadrature(const Contract& c, const ModelParams& p, int n_nodes = 64) {
    if (n_nodes < 32) throw DomainError("svve_quadrature: need at least 32 nodes");
    const auto s = detail::svve_setup(c, p);
    const HurstParams hp(p.H);
    const double T = c.T, Y0 = p.Y0, rt = std::sqrt(T), nu = p.nu, rho = p.rho;
    const double a1 = 2.0 * hp.kappa_H() * std::pow(T, p.H + 0.5) / (2.0 * p.H + 3.0), b1 = a1 / T;
    const auto& gh = quad::gauss_hermite(n_nodes);
    double sum = 0.0;
    for (std::size_t i = 0; i < gh.x.size(); ++i) {
        const double B = rt * gh.x[i];
        const BsPoint pt{s.x0 + rho * Y0 * B - 0.5 * rho * rho * Y0 * Y0 * T, s.v};
        const double C = bs_c(pt);
        double f = C / (Y0 * rt);
        if (nu != 0.0) {
            const BsDerivs d = bs_derivs(pt);
            const double ew1 = 2.0 * Y0 * Y0 * a1 * B;
            const double exi1 = rho * Y0 * b1 * (B * B - T) - rho * rho * Y0 * Y0 * a1 * B;
            f += nu / (Y0 * rt) * (d.C_x * exi1 + s.rb * s.rb * d.C_w * ew1) - nu / (2.0 * Y0 * Y0 * Y0 * T * rt) * ew1 * C;
        }
        sum += gh.w[i] * f;
    }
    PricingResult r;
    r.method = Method::svve_quad;
    r.price = c.K * c.sigma_bar * rt * sum;
    r.diagnostics = {{"nodes", n_nodes}};
    return r;
}

// Vanilla call to first order in nu:
//   K C(X0, Y0^2 T) + nu K E[rho_bar^2 C_w 2 Y0^2 a1 B + C_x (rho Y0 a1 (B^2 - T)/T - rho^2 Y0^2 a1 B)]
// with C at (xi0, rho_bar^2 Y0^2 T).
inline PricingResult vanilla_svve_price(const Contract& c, const ModelParams& p, int n_nodes = 64) {
    const auto s = detail::svve_setup(c, p);
    const HurstParams hp(p.H);
    const double T = c.T, Y0 = p.Y0, rt = std::sqrt(T), rho = p.rho;
    const double zeroth = c.K * bs_c({s.x0, Y0 * Y0 * T});
    PricingResult r;
    r.method = Method::svve_vanilla;
    if (p.nu == 0.0) {
        r.price = zeroth;
        r.diagnostics = {{"term0", zeroth}, {"term1", 0.0}};
        return r;
    }
    const double a1 = 2.0 * hp.kappa_H() * std::pow(T, p.H + 0.5) / (2.0 * p.H + 3.0);
    const auto& gh = quad::gauss_hermite(n_nodes);
    double sum = 0.0;
    for (std::size_t i = 0; i < gh.x.size(); ++i) {
        const double B = rt * gh.x[i];
        const BsDerivs d = bs_derivs({s.x0 + rho * Y0 * B - 0.5 * rho * rho * Y0 * Y0 * T, s.v});
        sum += gh.w[i] * (s.rb * s.rb * d.C_w * 2.0 * Y0 * Y0 * a1 * B +
                          d.C_x * (rho * Y0 * a1 * (B * B - T) / T - rho * rho * Y0 * Y0 * a1 * B));
    }
    const double first = p.nu * c.K * sum;
    r.price = zeroth + first;
    r.diagnostics = {{"term0", zeroth}, {"term1", first}, {"nodes", n_nodes}};
    return r;
}

} // namespace fsabr
