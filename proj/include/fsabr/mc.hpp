#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsabr/bsm.hpp"
#include "fsabr/errors.hpp"
#include "fsabr/fbm.hpp"
#include "fsabr/parallel.hpp"
#include "fsabr/pricers.hpp"
#include "fsabr/rng.hpp"

namespace fsabr {

// n_steps: Euler steps over the contract life; n_paths: number of paths.
struct McConfig {
    int n_steps = 252;
    std::size_t n_paths = 50000;
    std::uint64_t seed = 1;
    bool antithetic = true;
    FbmScheme scheme = FbmScheme::kernel_discretized;
    int workers = 1;

    void validate() const {
        if (n_steps < 2) throw DomainError("McConfig: n_steps must be at least 2");
        if (n_paths < 2) throw DomainError("McConfig: n_paths must be at least 2");
        if (antithetic && n_paths % 2 != 0) throw DomainError("McConfig: antithetic sampling needs an even path count");
        if (workers < 1) throw DomainError("McConfig: workers must be positive");
    }
};

// Share of flagged (S <= 0) paths above which a run is rejected.
inline constexpr double kMaxFlaggedShare = 1e-3;

inline double tvo_payoff(double S_T, double w_T, double K, double T, double sigma_bar) {
    return sigma_bar / std::sqrt(w_T / T) * std::max(S_T - K, 0.0);
}
inline double vanilla_payoff(double S_T, double K) { return std::max(S_T - K, 0.0); }

namespace detail {

// Terminal state of one path.
struct PathEnd {
    double S_T, w_T;
    bool flagged;
};

// Euler scheme S_{k+1} = S_k (1 + sigma_k eps_k sqrt(dt)), eps = rho z1 + rho_bar z2,
// sigma_k = Y0 e^{nu B^H(t_k)}, w_{k+1} = w_k + sigma_k^2 dt. A path whose price
// reaches zero or below is flagged and absorbed at 0.
// `visit(c, k, dB, BH, Y, S, w)` optionally receives every node.
template <class Visit>
void simulate_block(const ModelParams& p, const FbmGenerator& gen, const McConfig& cfg, std::uint64_t first, int count,
                    std::vector<PathEnd>& out, Visit&& visit) {
    const TimeGrid& grid = gen.grid();
    const int n = grid.n();
    const double dt = grid.dt(), sdt = std::sqrt(dt), rb = p.rho_bar();
    Eigen::MatrixXd Z1, BH;
    gen.generate(cfg.seed, first, count, cfg.antithetic, Z1, BH);
    std::vector<double> z2(n);
    out.resize(count);
    for (int c = 0; c < count; ++c) {
        fill_normals(cfg.seed, first + c, Stream::second_bm, cfg.antithetic, z2);
        double S = p.S0, w = 0.0, bh = 0.0;
        bool flagged = false;
        for (int k = 0; k < n; ++k) {
            const double sig = p.Y0 * std::exp(p.nu * bh);
            visit(c, k, sdt * Z1(k, c), bh, sig, S, w);
            if (!flagged) {
                S *= 1.0 + sig * (p.rho * Z1(k, c) + rb * z2[k]) * sdt;
                if (!(S > 0.0)) {
                    flagged = true;
                    S = 0.0;
                }
            }
            w += sig * sig * dt;
            bh = BH(k, c);
        }
        visit(c, n, 0.0, bh, p.Y0 * std::exp(p.nu * bh), S, w);
        out[c] = {S, w, flagged};
    }
}

struct NoVisit {
    void operator()(int, int, double, double, double, double, double) const {}
};

} // namespace detail

// Full path batch (B, B^H, Y, S, w) for inspection; memory grows as N n.
inline PathBatch simulate_fsabr(const ModelParams& p, const Contract& c, const McConfig& cfg) {
    p.validate();
    c.validate();
    cfg.validate();
    const HurstParams hp(p.H);
    const TimeGrid grid(c.T, cfg.n_steps);
    const FbmGenerator gen(hp, grid, cfg.scheme, cfg.workers);
    PathBatch pb;
    pb.grid = grid;
    pb.n_paths = cfg.n_paths;
    pb.seed = cfg.seed;
    pb.scheme = cfg.scheme;
    pb.jitter = gen.jitter();
    const int n = grid.n();
    const std::size_t W = n + 1, N = cfg.n_paths;
    pb.dB.assign(N * n, 0.0);
    for (auto* v : {&pb.B, &pb.BH, &pb.Y, &pb.S, &pb.w}) v->assign(N * W, 0.0);
    pb.flagged.assign(N, 0);
    const std::size_t nblocks = (N + FbmGenerator::kBlock - 1) / FbmGenerator::kBlock;
    parallel_for(nblocks, cfg.workers, [&](std::size_t b) {
        const std::size_t first = b * FbmGenerator::kBlock;
        const int count = static_cast<int>(std::min<std::size_t>(FbmGenerator::kBlock, N - first));
        std::vector<detail::PathEnd> ends;
        std::vector<double> bacc(count, 0.0);
        detail::simulate_block(p, gen, cfg, first, count, ends,
                               [&](int cc, int k, double dB, double bh, double y, double S, double w) {
                                   const std::size_t path = first + cc, i = path * W + k;
                                   pb.B[i] = bacc[cc];
                                   pb.BH[i] = bh;
                                   pb.Y[i] = y;
                                   pb.S[i] = S;
                                   pb.w[i] = w;
                                   if (k < n) {
                                       pb.dB[path * n + k] = dB;
                                       bacc[cc] += dB;
                                   }
                               });
        for (int cc = 0; cc < count; ++cc) pb.flagged[first + cc] = ends[cc].flagged;
    });
    return pb;
}

enum class Payoff { tvo, vanilla };

// Prices of the same payoff at several strikes from one set of paths.
// std_err is the sample standard deviation over independent units (paths, or
// antithetic pairs) divided by sqrt(units).
inline std::vector<PricingResult> mc_price_strikes(const ModelParams& p, double T, double sigma_bar,
                                                   const std::vector<double>& strikes, Payoff payoff,
                                                   const McConfig& cfg) {
    p.validate();
    cfg.validate();
    if (strikes.empty()) throw DomainError("mc_price_strikes: no strikes");
    for (double K : strikes) Contract{K, T, sigma_bar}.validate();
    const HurstParams hp(p.H);
    const TimeGrid grid(T, cfg.n_steps);
    const FbmGenerator gen(hp, grid, cfg.scheme, cfg.workers);
    const std::size_t N = cfg.n_paths, ns = strikes.size();
    const std::size_t nblocks = (N + FbmGenerator::kBlock - 1) / FbmGenerator::kBlock;
    // per block: sums and squared sums per strike, flagged count
    std::vector<double> sum(nblocks * ns, 0.0), sq(nblocks * ns, 0.0);
    std::vector<std::size_t> flagged(nblocks, 0);
    parallel_for(nblocks, cfg.workers, [&](std::size_t b) {
        const std::size_t first = b * FbmGenerator::kBlock;
        const int count = static_cast<int>(std::min<std::size_t>(FbmGenerator::kBlock, N - first));
        std::vector<detail::PathEnd> ends;
        detail::simulate_block(p, gen, cfg, first, count, ends, detail::NoVisit{});
        for (const auto& e : ends) flagged[b] += e.flagged;
        const int step = cfg.antithetic ? 2 : 1;
        for (std::size_t j = 0; j < ns; ++j) {
            double s = 0.0, q = 0.0;
            for (int c = 0; c < count; c += step) {
                double u = 0.0;
                for (int d = 0; d < step; ++d) {
                    const auto& e = ends[c + d];
                    u += payoff == Payoff::tvo ? tvo_payoff(e.S_T, e.w_T, strikes[j], T, sigma_bar)
                                               : vanilla_payoff(e.S_T, strikes[j]);
                }
                u /= step;
                s += u;
                q += u * u;
            }
            sum[b * ns + j] = s;
            sq[b * ns + j] = q;
        }
    });
    std::size_t nflag = 0;
    for (std::size_t f : flagged) nflag += f;
    if (nflag == N) throw NumericalError("mc: every path was flagged (S <= 0)");
    if (static_cast<double>(nflag) > kMaxFlaggedShare * static_cast<double>(N))
        throw NumericalError("mc: " + std::to_string(nflag) + " of " + std::to_string(N) +
                             " paths reached S <= 0; increase n_steps");
    const double units = cfg.antithetic ? static_cast<double>(N / 2) : static_cast<double>(N);
    std::vector<PricingResult> out(ns);
    for (std::size_t j = 0; j < ns; ++j) {
        double s = 0.0, q = 0.0;
        for (std::size_t b = 0; b < nblocks; ++b) s += sum[b * ns + j], q += sq[b * ns + j];
        const double mean = s / units;
        const double var = std::max(0.0, (q - units * mean * mean) / (units - 1.0));
        PricingResult& r = out[j];
        r.method = payoff == Payoff::tvo ? Method::mc : Method::mc_vanilla;
        r.price = mean;
        r.std_err = std::sqrt(var / units);
        r.diagnostics = {{"paths", static_cast<double>(N)},
                         {"steps", cfg.n_steps},
                         {"flagged", static_cast<double>(nflag)},
                         {"jitter", gen.jitter()}};
    }
    return out;
}

inline PricingResult mc_tvo_price(const Contract& c, const ModelParams& p, const McConfig& cfg) {
    c.validate();
    return mc_price_strikes(p, c.T, c.sigma_bar, {c.K}, Payoff::tvo, cfg).front();
}

inline PricingResult mc_vanilla_price(const Contract& c, const ModelParams& p, const McConfig& cfg) {
    c.validate();
    return mc_price_strikes(p, c.T, c.sigma_bar, {c.K}, Payoff::vanilla, cfg).front();
}

// Uncorrelated case by conditioning on the volatility path:
// K sigma_bar sqrt(T) E[C(X0, w_T)/sqrt(w_T)], simulating only Y.
inline PricingResult mc_tvo_uncorrelated(const Contract& c, const ModelParams& p, const McConfig& cfg) {
    c.validate();
    p.validate();
    cfg.validate();
    if (p.rho != 0.0) throw DomainError("mc_tvo_uncorrelated: requires rho = 0");
    const HurstParams hp(p.H);
    const TimeGrid grid(c.T, cfg.n_steps);
    const FbmGenerator gen(hp, grid, cfg.scheme, cfg.workers);
    const std::size_t N = cfg.n_paths;
    const std::size_t nblocks = (N + FbmGenerator::kBlock - 1) / FbmGenerator::kBlock;
    const double x0 = c.x0(p), dt = grid.dt(), scale = c.K * c.sigma_bar * std::sqrt(c.T);
    std::vector<double> sum(nblocks, 0.0), sq(nblocks, 0.0);
    parallel_for(nblocks, cfg.workers, [&](std::size_t b) {
        const std::size_t first = b * FbmGenerator::kBlock;
        const int count = static_cast<int>(std::min<std::size_t>(FbmGenerator::kBlock, N - first));
        Eigen::MatrixXd Z1, BH;
        gen.generate(cfg.seed, first, count, cfg.antithetic, Z1, BH);
        const int step = cfg.antithetic ? 2 : 1;
        for (int c0 = 0; c0 < count; c0 += step) {
            double u = 0.0;
            for (int d = 0; d < step; ++d) {
                double w = 0.0, bh = 0.0;
                for (int k = 0; k < grid.n(); ++k) {
                    const double sig = p.Y0 * std::exp(p.nu * bh);
                    w += sig * sig * dt;
                    bh = BH(k, c0 + d);
                }
                u += scale * bs_c({x0, w}) / std::sqrt(w);
            }
            u /= step;
            sum[b] += u;
            sq[b] += u * u;
        }
    });
    double s = 0.0, q = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) s += sum[b], q += sq[b];
    const double units = cfg.antithetic ? static_cast<double>(N / 2) : static_cast<double>(N);
    const double mean = s / units;
    PricingResult r;
    r.method = Method::mc;
    r.price = mean;
    r.std_err = std::sqrt(std::max(0.0, (q - units * mean * mean) / (units - 1.0)) / units);
    r.diagnostics = {{"paths", static_cast<double>(N)}, {"steps", cfg.n_steps}};
    return r;
}

} // namespace fsabr
