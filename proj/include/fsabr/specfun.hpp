#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fsabr/errors.hpp"

namespace fsabr {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kSqrt2Pi = 2.50662827463100050241576528481;

inline double std_normal_pdf(double x) {
    if (!std::isfinite(x)) throw DomainError("std_normal_pdf: non-finite argument");
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// erfc keeps full relative accuracy in the lower tail, so no cancellation for x << 0.
inline double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("std_normal_cdf: non-finite argument");
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

namespace detail {

// Lanczos approximation, g = 7, 9 terms. Valid for x >= 0.5.
inline double lanczos_gamma(double x) {
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    x -= 1.0;
    double a = p[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += p[i] / (x + i);
    // split the power to postpone overflow for large x
    const double half = std::pow(t, 0.5 * (x + 0.5));
    return kSqrt2Pi * half * (half * std::exp(-t)) * a;
}

inline double lanczos_ln_gamma(double x) {
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    x -= 1.0;
    double a = p[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += p[i] / (x + i);
    return std::log(kSqrt2Pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// Gamma on the whole real line minus the poles, by upward shifting.
inline double gamma_any(double x) {
    if (is_nonpositive_integer(x)) throw DomainError("gamma: pole at non-positive integer");
    double scale = 1.0;
    while (x < 0.5) {
        scale /= x;
        x += 1.0;
    }
    return scale * lanczos_gamma(x);
}

// 1/Gamma, zero at the poles.
inline double rgamma_any(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    return 1.0 / gamma_any(x);
}

} // namespace detail

inline double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("gamma_fn: argument must be positive and finite");
    if (x < 0.5) return detail::lanczos_gamma(x + 1.0) / x;
    return detail::lanczos_gamma(x);
}

inline double ln_gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("ln_gamma_fn: argument must be positive and finite");
    if (x < 0.5) return detail::lanczos_ln_gamma(x + 1.0) - std::log(x);
    return detail::lanczos_ln_gamma(x);
}

inline double beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_fn: arguments must be positive");
    if (a + b < 150.0) return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b);
    return std::exp(ln_gamma_fn(a) + ln_gamma_fn(b) - ln_gamma_fn(a + b));
}

namespace detail {

// Plain hypergeometric series for |z| < 1. Stops once a term is below 1e-16
// of the running sum on two consecutive terms.
inline double series_2f1(double a, double b, double c, double z, long max_terms = 2000000) {
    double sum = 1.0, term = 1.0;
    int small = 0;
    for (long n = 0; n < max_terms; ++n) {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if (term == 0.0) return sum;
        if (std::abs(term) <= 1e-16 * std::abs(sum)) {
            if (++small >= 2) return sum;
        } else {
            small = 0;
        }
    }
    throw NumericalError("gauss_2f1: series did not converge");
}

} // namespace detail

// 2F1(a,b;c;x) for x <= 0. Pfaff maps x to z = x/(x-1) in [0,1); for z above
// 1/2 the 1-z connection formula keeps both series short.
inline double gauss_2f1(double a, double b, double c, double x) {
    if (!std::isfinite(x) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
        throw DomainError("gauss_2f1: non-finite argument");
    if (x > 0.0) throw DomainError("gauss_2f1: only x <= 0 is supported");
    if (!(c > 0.0)) throw DomainError("gauss_2f1: c must be positive");
    if (x == 0.0 || a == 0.0 || b == 0.0) return 1.0;

    const double one_minus_z = 1.0 / (1.0 - x);
    const double z = -x * one_minus_z;
    const double pre = std::pow(one_minus_z, a); // (1-x)^{-a}
    const double A = a, B = c - b, C = c;        // Pfaffed parameters
    if (B == 0.0) return pre;

    const double s = C - A - B;
    const double frac = std::abs(s - std::round(s));
    if (z <= 0.5 || frac < 1e-3) return pre * detail::series_2f1(A, B, C, z);

    const double gc = detail::gamma_any(C);
    const double g1 = gc * detail::gamma_any(s) * detail::rgamma_any(C - A) * detail::rgamma_any(C - B);
    const double g2 = gc * detail::gamma_any(-s) * detail::rgamma_any(A) * detail::rgamma_any(B);
    double f = 0.0;
    if (g1 != 0.0) f += g1 * detail::series_2f1(A, B, 1.0 - s, one_minus_z);
    if (g2 != 0.0) f += g2 * std::pow(one_minus_z, s) * detail::series_2f1(C - A, C - B, 1.0 + s, one_minus_z);
    return pre * f;
}

class HermiteIndex {
public:
    static constexpr int kMax = 16;
    explicit HermiteIndex(int n) : n_(n) {
        if (n < 0 || n > kMax) throw DomainError("HermiteIndex: order must be in [0, 16], got " + std::to_string(n));
    }
    int value() const { return n_; }

private:
    int n_;
};

// Orthonormal probabilists' Hermite polynomial He_n(x)/sqrt(n!).
inline double hermite_norm(HermiteIndex idx, double x) {
    const int n = idx.value();
    if (n == 0) return 1.0;
    double hm1 = 1.0, h = x;
    for (int k = 1; k < n; ++k) {
        const double next = (x * h - std::sqrt(double(k)) * hm1) / std::sqrt(double(k + 1));
        hm1 = h;
        h = next;
    }
    return h;
}

} // namespace fsabr
