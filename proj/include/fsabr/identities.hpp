#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fsabr/errors.hpp"
#include "fsabr/fbm.hpp"
#include "fsabr/specfun.hpp"

namespace fsabr {

// Law of a normal random variable xi ~ N(mu, sigma2).
struct NormalLaw {
    double mu;
    double sigma2;
};

namespace detail {

inline void check_law(const NormalLaw& law) {
    if (!(law.sigma2 >= 0.0) || !std::isfinite(law.mu) || !std::isfinite(law.sigma2))
        throw DomainError("NormalLaw: variance must be finite and non-negative");
}

inline constexpr double kMaxExponent = 700.0;

// e^{a mu + a^2 sigma^2/2}, guarded.
inline double tilt_factor(const NormalLaw& law, double a, const char* who) {
    const double e = a * law.mu + 0.5 * a * a * law.sigma2;
    if (!std::isfinite(e) || e > kMaxExponent) throw RangeError(std::string(who) + ": exponential overflow", e);
    return std::exp(e);
}

// Shared pieces of the tilted identities: m = mu + a sigma^2, s = sqrt(1+sigma^2), z = m/s.
struct Tilted {
    double m, s, z, Nz, nz;
    Tilted(const NormalLaw& law, double a) {
        m = law.mu + a * law.sigma2;
        s = std::sqrt(1.0 + law.sigma2);
        z = m / s;
        Nz = std_normal_cdf(z);
        nz = std_normal_pdf(z);
    }
};

} // namespace detail

// E[N(xi)] = N(mu/sqrt(1+sigma^2))
inline double e_ncdf(NormalLaw law) {
    detail::check_law(law);
    return std_normal_cdf(law.mu / std::sqrt(1.0 + law.sigma2));
}

// E[xi N(xi)] = mu N(z) + sigma^2/sqrt(1+sigma^2) N'(z)
inline double e_x_ncdf(NormalLaw law) {
    detail::check_law(law);
    const detail::Tilted t(law, 0.0);
    return law.mu * t.Nz + law.sigma2 / t.s * t.nz;
}

// E[e^{a xi} N(xi)] = e^{a mu + a^2 sigma^2/2} N((mu + a sigma^2)/sqrt(1+sigma^2))
inline double e_eax_ncdf(NormalLaw law, double a) {
    detail::check_law(law);
    const double f = detail::tilt_factor(law, a, "e_eax_ncdf");
    return f * detail::Tilted(law, a).Nz;
}

// E[xi e^{a xi} N(xi)] = e^{..} [(mu + a sigma^2) N(z) + sigma^2/s N'(z)]
inline double e_x_eax_ncdf(NormalLaw law, double a) {
    detail::check_law(law);
    const double f = detail::tilt_factor(law, a, "e_x_eax_ncdf");
    const detail::Tilted t(law, a);
    return f * (t.m * t.Nz + law.sigma2 / t.s * t.nz);
}

// E[xi^2 e^{a xi} N(xi)] = e^{..} [((mu + a sigma^2)^2 + sigma^2) N(z)
//   + 2 (mu + a sigma^2) sigma^2/s N'(z) + sigma^4/(1+sigma^2) N''(z)], N''(z) = -z N'(z)
inline double e_x2_eax_ncdf(NormalLaw law, double a) {
    detail::check_law(law);
    const double f = detail::tilt_factor(law, a, "e_x2_eax_ncdf");
    const detail::Tilted t(law, a);
    const double v = law.sigma2;
    return f * ((t.m * t.m + v) * t.Nz + 2.0 * t.m * v / t.s * t.nz - v * v / (t.s * t.s) * t.z * t.nz);
}

// E[N'(xi)] = N'(z)/s
inline double e_npdf(NormalLaw law) {
    detail::check_law(law);
    const detail::Tilted t(law, 0.0);
    return t.nz / t.s;
}

// E[xi N'(xi)] = mu N'(z)/s^3
inline double e_x_npdf(NormalLaw law) {
    detail::check_law(law);
    const detail::Tilted t(law, 0.0);
    return law.mu * t.nz / (t.s * t.s * t.s);
}

// k-th raw moment of N(mu, v): sum over even k-j of C(k,j) mu^j v^{(k-j)/2} (k-j-1)!!.
inline double normal_raw_moment(int k, double mu, double v) {
    if (k < 0) throw DomainError("normal_raw_moment: negative order");
    double sum = 0.0, binom = 1.0;
    for (int j = k; j >= 0; --j) {
        // binom = C(k, j)
        const int c = k - j;
        if (c % 2 == 0) {
            double dfact = 1.0;
            for (int i = c - 1; i > 1; i -= 2) dfact *= i;
            sum += binom * std::pow(mu, j) * std::pow(v, c / 2) * dfact;
        }
        binom = binom * j / (c + 1);
    }
    return sum;
}

namespace detail {

// Conditional law of B^H_t given B_T = b: mean kappa_H b t^{H+1/2}/T, variance
// t^{2H} - kappa_H^2 t^{2H+1}/T (the covariance of B^H_t and B_T is kappa_H t^{H+1/2}).
inline NormalLaw bh_given_bT(double t, double T, double b, const HurstParams& hp) {
    const double k = hp.kappa_H(), H = hp.H();
    const double mu = k * b * std::pow(t, H + 0.5) / T;
    double v = std::pow(t, 2.0 * H) * (1.0 - k * k * t / T);
    if (v < -1e-12) throw NumericalError("cond_moment_bh: negative conditional variance");
    return {mu, std::max(v, 0.0)};
}

inline void check_cond_args(int k, int kmax, double T, const char* who) {
    if (k < 1 || k > kmax) throw DomainError(std::string(who) + ": order out of range");
    if (!(T > 0.0)) throw DomainError(std::string(who) + ": expiry must be positive");
}

// Coefficients g_j of G(b) = E[int_0^T (B^H_t)^k dt | B_T = b] = sum_j g_j b^j.
// Every term is an exact polynomial integral since (k-j)/2 is an integer.
inline std::array<double, 9> integrated_moment_coeffs(int k, double T, const HurstParams& hp) {
    std::array<double, 9> g{};
    const double H = hp.H(), kap = hp.kappa_H(), k2 = kap * kap;
    double binom = 1.0;
    for (int j = k; j >= 0; --j) {
        const int c = k - j;
        if (c % 2 == 0) {
            double dfact = 1.0;
            for (int i = c - 1; i > 1; i -= 2) dfact *= i;
            // int_0^1 u^p (1 - kap^2 u)^m du with p = kH + j/2, m = c/2
            const int m = c / 2;
            const double p = k * H + 0.5 * j;
            double integral = 0.0, bm = 1.0;
            for (int i = 0; i <= m; ++i) {
                integral += bm * std::pow(-k2, i) / (p + i + 1.0);
                bm = bm * (m - i) / (i + 1.0);
            }
            // mu_t^j = (kap/T)^j t^{j(H+1/2)} b^j, v_t^m = t^{2Hm}(1 - kap^2 t/T)^m, t = T u
            g[j] = binom * dfact * std::pow(kap / T, j) * std::pow(T, p + 1.0) * integral;
        }
        binom = binom * j / (c + 1);
    }
    return g;
}

} // namespace detail

// E[(B^H_t)^k | B_T = b] for k <= 8, 0 < t <= T.
inline double cond_moment_bh(int k, double t, double T, double b_T, const HurstParams& hp) {
    if (k < 1 || k > 8) throw DomainError("cond_moment_bh: order out of range");
    if (!(t > 0.0) || !(t <= T)) throw DomainError("cond_moment_bh: need 0 < t <= T");
    const NormalLaw law = detail::bh_given_bT(t, T, b_T, hp);
    return normal_raw_moment(k, law.mu, law.sigma2);
}

// E[int_0^T (B^H_t)^k dt | B_T = b] for k <= 8, in closed form.
inline double cond_integral_bh(int k, double T, double b_T, const HurstParams& hp) {
    detail::check_cond_args(k, 8, T, "cond_integral_bh");
    const auto g = detail::integrated_moment_coeffs(k, T, hp);
    double s = 0.0;
    for (int j = k; j >= 0; --j) s = s * b_T + g[j];
    return s;
}

// E[int_0^T (B^H_t)^k dB_t | B_T = b] for k <= 4. Gaussian integration by parts
// gives b G(b)/T - G'(b) with G the conditional time integral above. For k = 1
// this is 2 kappa_H T^{H-1/2} (b^2 - T)/(2H+3).
inline double cond_ito_integral(int k, double T, double b_T, const HurstParams& hp) {
    detail::check_cond_args(k, 4, T, "cond_ito_integral");
    const auto g = detail::integrated_moment_coeffs(k, T, hp);
    double G = 0.0, dG = 0.0;
    for (int j = k; j >= 0; --j) {
        G = G * b_T + g[j];
        if (j >= 1) dG = dG * b_T + j * g[j];
    }
    return b_T * G / T - dG;
}

} // namespace fsabr
