#pragma once

#include <algorithm>
#include <cmath>

#include "fsabr/errors.hpp"
#include "fsabr/specfun.hpp"

namespace fsabr {

// Log-moneyness x = log(S/K) and total variance w.
struct BsPoint {
    double x;
    double w;
    double d1() const { return x / std::sqrt(w) + 0.5 * std::sqrt(w); }
    double d2() const { return x / std::sqrt(w) - 0.5 * std::sqrt(w); }
};

// Normalized call C(x,w) = e^x N(d1) - N(d2); the payoff (e^x - 1)^+ at w = 0.
inline double bs_c(BsPoint p) {
    if (!(p.w >= 0.0)) throw DomainError("bs_c: negative variance");
    const double ex = std::exp(p.x);
    const double intrinsic = std::max(ex - 1.0, 0.0);
    if (p.w == 0.0) return intrinsic;
    const double c = ex * std_normal_cdf(p.d1()) - std_normal_cdf(p.d2());
    return std::clamp(c, intrinsic, ex);
}

struct BsDerivs {
    double C_x, C_w, C_xx, C_xw, C_ww;
};

// Closed forms, with phi2 = N'(d2) = e^x N'(d1):
//   C_x = e^x N(d1), C_w = phi2/(2 sqrt w), C_xx = C_x + phi2/sqrt w,
//   C_xw = -d2 phi2/(2w), C_ww = phi2 (d1 d2 - 1)/(4 w^{3/2}).
inline BsDerivs bs_derivs(BsPoint p) {
    if (!(p.w > 0.0)) throw DomainError("bs_derivs: derivatives are singular at w = 0");
    const double sw = std::sqrt(p.w);
    const double d1 = p.d1(), d2 = p.d2();
    const double phi2 = std_normal_pdf(d2);
    BsDerivs d;
    d.C_x = std::exp(p.x) * std_normal_cdf(d1);
    d.C_w = phi2 / (2.0 * sw);
    d.C_xx = d.C_x + phi2 / sw;
    d.C_xw = -d2 * phi2 / (2.0 * p.w);
    d.C_ww = phi2 * (d1 * d2 - 1.0) / (4.0 * p.w * sw);
    return d;
}

// Log-moneyness, realized variance w and expected remaining variance wh.
struct FPoint {
    double x;
    double w;
    double wh;
};

namespace detail {
inline void check_fpoint(const FPoint& q) {
    if (!(q.wh > 0.0)) throw DomainError("F: expected remaining variance must be positive");
    if (!(q.w + q.wh > 0.0)) throw DomainError("F: total variance must be positive");
}
} // namespace detail

// F(x,w,wh) = C(x,wh)/sqrt(w+wh).
inline double f_func(FPoint q) {
    detail::check_fpoint(q);
    return bs_c({q.x, q.wh}) / std::sqrt(q.w + q.wh);
}

// d^2 F / dx dwh
inline double f_xw(FPoint q) {
    detail::check_fpoint(q);
    const double M = q.w + q.wh, sM = std::sqrt(M);
    const BsDerivs d = bs_derivs({q.x, q.wh});
    return -d.C_x / (2.0 * M * sM) + d.C_xw / sM;
}

// d^2 F / dwh^2
inline double f_ww(FPoint q) {
    detail::check_fpoint(q);
    const double M = q.w + q.wh, sM = std::sqrt(M);
    const BsDerivs d = bs_derivs({q.x, q.wh});
    const double c = bs_c({q.x, q.wh});
    return -d.C_w / (M * sM) + 3.0 * c / (4.0 * M * M * sM) + d.C_ww / sM;
}

} // namespace fsabr
