// fsabr: command line driver for single valuations, comparison tables and
// sensitivity surfaces. Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsabr/harness.hpp"

using namespace fsabr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string config, out = ".", methods;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> steps;
    double k_over_s0 = 1.0;
    bool print_config = false;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string x;
    while (std::getline(ss, x, ','))
        if (!x.empty()) out.push_back(x);
    return out;
}

ExperimentConfig effective_config(const Options& o, const std::string& kind) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    c.kind = kind;
    if (o.seed) c.mc.seed = *o.seed;
    if (o.paths) c.mc.n_paths = *o.paths;
    if (o.steps) c.mc.n_steps = *o.steps;
    if (!o.methods.empty()) c.methods = parse_methods(split_list(o.methods));
    if (kind == "surface" && o.config.empty()) c.axes = {{"nu", 0.01, 0.59, 20}, {"rho", -0.95, 0.95, 20}};
    if (kind == "surface" && c.output == ExperimentConfig{}.output) c.output = "surface.csv";
    return c;
}

std::filesystem::path output_path(const Options& o, const ExperimentConfig& c) {
    std::filesystem::path dir(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + o.out + "'");
    return dir / c.output;
}

template <class W, class A>
void write_artifact(const std::filesystem::path& path, const A& artifact, W write) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    write(artifact, os);
}

void report_errors(const std::vector<std::string>& errors) {
    for (const auto& e : errors) std::cerr << "warning: " << e << '\n';
}

std::string result_text(const PricingResult& r) {
    ordered_json j;
    j["method"] = to_string(r.method);
    j["price"] = r.price;
    if (r.std_err) j["std_err"] = *r.std_err;
    ordered_json d = ordered_json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = v;
    j["diagnostics"] = d;
    j["flagged"] = r.flagged;
    return j.dump();
}

int cmd_price(const Options& o) {
    const auto c = effective_config(o, "table");
    c.validate();
    const Contract k{o.k_over_s0 * c.model.S0, c.T, c.sigma_bar};
    try {
        k.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    int rc = 0;
    for (Method m : c.methods) {
        try {
            PricingResult r;
            switch (m) {
            case Method::mc: r = mc_tvo_price(k, c.model, c.mc); break;
            case Method::dfa: r = dfa_price(k, c.model); break;
            case Method::dfa_full: r = dfa_full_price_t0(k, c.model); break;
            case Method::svve: r = svve_price(k, c.model); break;
            case Method::svve_quad: r = svve_quadrature(k, c.model); break;
            default: break;
            }
            std::cout << result_text(r) << '\n';
        } catch (const Error& e) {
            std::cerr << to_string(m) << ": " << e.what() << '\n';
            rc = kExitNumerical;
        }
    }
    return rc;
}

int cmd_table(const Options& o) {
    const auto c = effective_config(o, "table");
    if (o.print_config) std::cout << serialize(c);
    const auto t = run_table(c);
    const auto path = output_path(o, c);
    write_artifact(path, t, write_table_csv);
    report_errors(t.errors);
    std::cout << "wrote " << path.string() << " (" << t.k_over_s0.size() << " rows)\n";
    return 0;
}

int cmd_surface(const Options& o) {
    const auto c = effective_config(o, "surface");
    if (o.print_config) std::cout << serialize(c);
    const auto s = run_surface(c);
    const auto path = output_path(o, c);
    write_artifact(path, s, write_surface_csv);
    report_errors(s.errors);
    std::cout << "wrote " << path.string() << " (" << s.points.size() << " rows)\n";
    return 0;
}

// Fast invariant checks; the full suite lives in the test binaries.
int cmd_selftest(const Options& o) {
    int failed = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
        failed += !ok;
    };
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };

    check("normal cdf reflection", std::abs(std_normal_cdf(1.3) + std_normal_cdf(-1.3) - 1.0) < 1e-14);
    check("gamma recurrence", rel(gamma_fn(4.7), 3.7 * gamma_fn(3.7)) < 1e-12);
    {
        const HurstParams hp(0.1);
        check("kernel integral", rel(kernel_integral(1.0, 0.0, 1.0, hp).value, hp.kappa_H()) < 1e-6);
        check("kernel square integral", rel(kernel_cross_integral(1.0, 1.0, 0.0, 1.0, hp).value, 1.0) < 1e-6);
    }
    {
        const auto d = bs_derivs({0.1, 0.2});
        check("Black-Scholes PDE", std::abs(d.C_w - 0.5 * d.C_xx + 0.5 * d.C_x) < 1e-10);
    }
    {
        const ModelParams p{1.0, 0.3, 0.0, -0.7, 0.1};
        const Contract c{1.1, 1.0, 0.3};
        const double bs = c.K * c.sigma_bar / p.Y0 * bs_c({c.x0(p), 0.09});
        bool ok = true;
        for (double v : {dfa_price(c, p).price, dfa_full_price_t0(c, p).price, svve_price(c, p).price,
                         svve_quadrature(c, p).price})
            ok = ok && std::abs(v - bs) < 1e-12 * bs;
        check("nu = 0 collapse", ok);
    }
    {
        bool ok = true;
        for (double rho : {-0.7, 0.0, 0.5})
            for (double k : {0.8, 1.0, 1.2}) {
                const ModelParams p{1.0, 0.3, 0.1, rho, 0.1};
                ok = ok && rel(svve_price({k, 1.0, 0.3}, p).price, svve_quadrature({k, 1.0, 0.3}, p).price) < 1e-6;
            }
        check("SVVE closed form = quadrature", ok);
    }
    {
        const auto I = dfa_integrals(1.0, 0.3, 1e-6);
        const HurstParams hp(0.3);
        check("DFA-full small nu limit", rel(I.I1, hp.kappa_H() / 1.8) < 1e-4 && rel(I.I2, 1.0 / 5.2) < 1e-4);
    }
    {
        ExperimentConfig c;
        c.mc.n_paths = 2000;
        c.mc.n_steps = 50;
        if (o.seed) c.mc.seed = *o.seed;
        std::ostringstream a, b;
        write_table_csv(run_table(c), a);
        write_table_csv(run_table(c), b);
        check("table determinism", a.str() == b.str());
        check("config round trip", serialize(parse_config(serialize(c))) == serialize(c));
    }
    {
        const ModelParams p{1.0, 0.2, 0.0, -0.5, 0.2};
        McConfig cfg;
        cfg.n_steps = 50;
        cfg.n_paths = 20000;
        const auto r = mc_tvo_price({1.0, 1.0, 0.3}, p, cfg);
        const double exact = 0.3 / 0.2 * bs_c({0.0, 0.04});
        check("MC nu = 0 within 4 SE", std::abs(r.price - exact) < 4.0 * *r.std_err);
    }
    std::cout << (failed ? std::to_string(failed) + " check(s) failed" : "all checks passed") << '\n';
    return failed ? kExitNumerical : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target volatility option pricing under the fractional SABR model"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config (JSON)");
        sub->add_option("--seed", o.seed, "Monte Carlo seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--methods", o.methods, "comma list of MC,DFA,DFA-full,SVVE,SVVE-quad");
        sub->add_option("--paths", o.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
        sub->add_option("--steps", o.steps, "Monte Carlo time steps")->check(CLI::PositiveNumber);
    };
    auto* price = app.add_subcommand("price", "price one contract with every selected method");
    add_common(price);
    price->add_option("--k", o.k_over_s0, "strike as a multiple of S0");
    auto* table = app.add_subcommand("table", "K/S0 comparison table as CSV");
    add_common(table);
    table->add_flag("--print-config", o.print_config, "echo the effective config");
    auto* surface = app.add_subcommand("surface", "ATM sensitivity surface as long-format CSV");
    add_common(surface);
    surface->add_flag("--print-config", o.print_config, "echo the effective config");
    auto* selftest = app.add_subcommand("selftest", "run the fast invariant checks");
    add_common(selftest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    try {
        if (*price) return cmd_price(o);
        if (*table) return cmd_table(o);
        if (*surface) return cmd_surface(o);
        return cmd_selftest(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
