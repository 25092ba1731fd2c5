#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "fsabr/errors.hpp"

namespace fsabr::quad {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

inline Rule compute_gauss_legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute the derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.w[i] = w;
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = w;
    }
    return r;
}

// Golub-Welsch for weight exp(-x^2/2)/sqrt(2 pi): Jacobi matrix has zero
// diagonal and off-diagonal sqrt(k).
inline Rule compute_gauss_hermite(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen-solve failed");
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = v * v;
    }
    // symmetrize to kill eigen-solver noise
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (r.x[n - 1 - i] - r.x[i]);
        const double w = 0.5 * (r.w[n - 1 - i] + r.w[i]);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    double s = 0.0;
    for (double w : r.w) s += w;
    for (double& w : r.w) w /= s;
    return r;
}

template <class Make>
const Rule& cached_rule(std::map<int, Rule>& cache, std::mutex& m, int n, Make make) {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make(n)).first;
    return it->second;
}

} // namespace detail

// n-point Gauss-Legendre on [-1,1].
inline const Rule& gauss_legendre(int n) {
    if (n < 1 || n > 4096) throw DomainError("gauss_legendre: n out of range");
    static std::map<int, Rule> cache;
    static std::mutex m;
    return detail::cached_rule(cache, m, n, detail::compute_gauss_legendre);
}

// n-point Gauss-Hermite for E[f(Z)], Z ~ N(0,1): sum w_i f(x_i), weights sum to 1.
inline const Rule& gauss_hermite(int n) {
    if (n < 2 || n > 512) throw DomainError("gauss_hermite: n out of range");
    static std::map<int, Rule> cache;
    static std::mutex m;
    return detail::cached_rule(cache, m, n, detail::compute_gauss_hermite);
}

namespace detail {

// Golub-Welsch for the Jacobi weight (1-x)^a (1+x)^b on [-1,1].
inline Rule compute_gauss_jacobi(int n, double a, double b) {
    Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 0);
    const double ab = a + b;
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        diag(k) = k == 0 ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        double beta;
        if (k == 1) beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
        sub(k - 1) = std::sqrt(beta);
    }
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    if (n == 1) {
        r.x[0] = diag(0);
        r.w[0] = mu0;
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("gauss_jacobi: eigen-solve failed");
    for (int i = 0; i < n; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
    }
    return r;
}

} // namespace detail

// n-point Gauss-Jacobi rule for weight (1-x)^a (1+x)^b on [-1,1], a, b > -1.
inline const Rule& gauss_jacobi(int n, double a, double b) {
    if (n < 1 || n > 256) throw DomainError("gauss_jacobi: n out of range");
    if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
    struct Key {
        int n;
        double a, b;
        bool operator<(const Key& o) const { return std::tie(n, a, b) < std::tie(o.n, o.a, o.b); }
    };
    static std::map<Key, Rule> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find({n, a, b});
    if (it == cache.end()) it = cache.emplace(Key{n, a, b}, detail::compute_gauss_jacobi(n, a, b)).first;
    return it->second;
}

// int_lo^hi (s-lo)^wl (hi-s)^wr f(s, s-lo, hi-s) ds with an n-point Gauss-Jacobi rule.
template <class F>
double jacobi_integrate(F&& f, double lo, double hi, double wl, double wr, int n) {
    const Rule& r = gauss_jacobi(n, wr, wl);
    const double h = 0.5 * (hi - lo);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double left = h * (1.0 + r.x[i]), right = h * (1.0 - r.x[i]);
        s += r.w[i] * f(lo + left, left, right);
    }
    return s * std::pow(h, wl + wr + 1.0);
}

// Adaptive Gauss-Kronrod 7/15 with global bisection of the worst interval.
template <class F>
QuadResult gauss_kronrod(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-12,
                         int max_intervals = 4000) {
    static constexpr std::array<double, 8> xk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr std::array<double, 8> wk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    struct Seg {
        double a, b, val, err;
        bool operator<(const Seg& o) const { return err < o.err; }
    };
    QuadResult res;
    auto eval = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        const double fc = f(c);
        double k = wk[7] * fc, g = wg[3] * fc;
        for (int i = 0; i < 7; ++i) {
            const double f1 = f(c - h * xk[i]), f2 = f(c + h * xk[i]);
            k += wk[i] * (f1 + f2);
            if (i % 2 == 1) g += wg[i / 2] * (f1 + f2);
        }
        res.evaluations += 15;
        return Seg{lo, hi, k * h, std::abs((k - g) * h)};
    };

    std::priority_queue<Seg> heap;
    Seg first = eval(a, b);
    heap.push(first);
    double total = first.val, err = first.err;
    int count = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (count >= max_intervals) {
            res.converged = false;
            break;
        }
        Seg s = heap.top();
        heap.pop();
        const double mid = 0.5 * (s.a + s.b);
        Seg l = eval(s.a, mid), r = eval(mid, s.b);
        total += l.val + r.val - s.val;
        err += l.err + r.err - s.err;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    // re-sum in a fixed order for a cleaner value
    std::vector<Seg> segs;
    segs.reserve(heap.size());
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const Seg& x, const Seg& y) { return x.a < y.a; });
    double v = 0.0, e = 0.0;
    for (const Seg& s : segs) v += s.val, e += s.err;
    res.value = v;
    res.error = e;
    return res;
}

// Node of a graded rule. `left` and `right` are the distances to the ends,
// computed without cancellation so integrands singular there stay accurate.
struct GradedNode {
    double x, left, right, w;
};

inline double grading_power(double alpha) {
    if (alpha <= -1.0) throw DomainError("graded rule: endpoint exponent must exceed -1");
    return std::clamp(2.0 / (1.0 + alpha), 1.0, 60.0);
}

// Graded Gauss-Legendre on [a,b]: each half is mapped by x - a = h u^p
// (resp. b - x = h u^p) with p = 2/(1+alpha), which turns an endpoint
// behaviour |x - end|^alpha into a smooth integrand in u.
inline std::vector<GradedNode> graded_rule(double a, double b, double alpha_left, double alpha_right, int n_half) {
    const Rule& gl = gauss_legendre(n_half);
    const double h = 0.5 * (b - a);
    const double pl = grading_power(alpha_left), pr = grading_power(alpha_right);
    std::vector<GradedNode> nodes;
    nodes.reserve(2 * n_half);
    for (int i = 0; i < n_half; ++i) {
        const double u = 0.5 * (gl.x[i] + 1.0);
        const double d = h * std::pow(u, pl);
        nodes.push_back({a + d, d, (b - a) - d, 0.5 * gl.w[i] * h * pl * std::pow(u, pl - 1.0)});
    }
    for (int i = n_half - 1; i >= 0; --i) {
        const double u = 0.5 * (gl.x[i] + 1.0);
        const double d = h * std::pow(u, pr);
        nodes.push_back({b - d, (b - a) - d, d, 0.5 * gl.w[i] * h * pr * std::pow(u, pr - 1.0)});
    }
    return nodes;
}

// f(x, left, right). Doubles the node count until successive estimates agree.
template <class F>
QuadResult graded_integrate(F&& f, double a, double b, double alpha_left, double alpha_right,
                            double rel_tol = 1e-10, double abs_tol = 1e-300, int n_start = 8, int n_max = 512) {
    QuadResult res;
    double prev = 0.0;
    bool have_prev = false;
    for (int n = n_start; n <= n_max; n *= 2) {
        double s = 0.0;
        for (const GradedNode& nd : graded_rule(a, b, alpha_left, alpha_right, n)) s += nd.w * f(nd.x, nd.left, nd.right);
        res.evaluations += 2 * n;
        if (have_prev) {
            res.value = s;
            res.error = std::abs(s - prev);
            if (res.error <= std::max(abs_tol, rel_tol * std::abs(s))) return res;
        }
        prev = s;
        have_prev = true;
    }
    res.value = prev;
    res.converged = false;
    return res;
}

} // namespace fsabr::quad
