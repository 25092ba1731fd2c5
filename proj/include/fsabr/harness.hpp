#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsabr/errors.hpp"
#include "fsabr/mc.hpp"
#include "fsabr/parallel.hpp"
#include "fsabr/pricers.hpp"

namespace fsabr {

using ordered_json = nlohmann::ordered_json;

// One sweep axis of a surface; param is "H", "nu" or "rho".
struct SurfaceAxis {
    std::string param;
    double from = 0.0, to = 0.0;
    int count = 1;

    std::vector<double> values() const {
        std::vector<double> v(count);
        for (int i = 0; i < count; ++i) v[i] = count == 1 ? from : from + (to - from) * i / (count - 1);
        return v;
    }
};

struct ExperimentConfig {
    std::string kind = "table"; // "table" or "surface"
    ModelParams model{1.0, 0.3, 0.05, -0.7, 0.1};
    double T = 1.0, sigma_bar = 0.3;
    std::vector<double> k_over_s0{0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2};
    McConfig mc;
    std::vector<Method> methods{Method::mc, Method::dfa, Method::svve};
    std::string output = "table.csv";
    std::vector<SurfaceAxis> axes;

    void validate() const;
};

namespace detail {

inline bool table_method(Method m) {
    return m == Method::mc || m == Method::dfa || m == Method::dfa_full || m == Method::svve ||
           m == Method::svve_quad;
}

inline bool has_method(const std::vector<Method>& ms, Method m) {
    return std::find(ms.begin(), ms.end(), m) != ms.end();
}

inline double& axis_param(ModelParams& p, const std::string& name) {
    if (name == "H") return p.H;
    if (name == "nu") return p.nu;
    if (name == "rho") return p.rho;
    throw ConfigError("surface axis must be one of H, nu, rho (got '" + name + "')");
}

} // namespace detail

inline void ExperimentConfig::validate() const {
    if (kind != "table" && kind != "surface") throw ConfigError("kind must be 'table' or 'surface'");
    if (methods.empty()) throw ConfigError("method set is empty");
    for (Method m : methods)
        if (!detail::table_method(m)) throw ConfigError("method " + to_string(m) + " is not available in experiments");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (methods[i] == methods[j]) throw ConfigError("method " + to_string(methods[i]) + " listed twice");
    try {
        model.validate();
        Contract{model.S0, T, sigma_bar}.validate();
        if (detail::has_method(methods, Method::mc)) mc.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (kind == "table") {
        if (k_over_s0.empty()) throw ConfigError("K/S0 grid is empty");
        for (double k : k_over_s0)
            if (!(k >= 0.5 && k <= 2.0)) throw ConfigError("K/S0 grid must lie within [0.5, 2]");
        return;
    }
    if (axes.size() != 2) throw ConfigError("a surface needs exactly two axes");
    if (axes[0].param == axes[1].param) throw ConfigError("surface axes must differ");
    for (const auto& a : axes) {
        if (a.count < 1) throw ConfigError("surface axis count must be positive");
        double lo = 0.0, hi = 0.0;
        if (a.param == "H") lo = 0.0, hi = 0.5;
        else if (a.param == "nu") lo = 0.0, hi = 0.6;
        else if (a.param == "rho") lo = -1.0, hi = 1.0;
        else throw ConfigError("surface axis must be one of H, nu, rho (got '" + a.param + "')");
        for (double v : {a.from, a.to})
            if (!(v > lo && v < hi))
                throw ConfigError("surface axis " + a.param + " must lie in (" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + ")");
    }
}

// ---------------------------------------------------------------------------
// JSON form. Keys are written in a fixed order so serialize -> parse ->
// serialize is byte-identical.

inline ordered_json to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["kind"] = c.kind;
    j["model"] = {{"S0", c.model.S0}, {"Y0", c.model.Y0}, {"nu", c.model.nu}, {"rho", c.model.rho}, {"H", c.model.H}};
    j["contract"] = {{"T", c.T}, {"sigma_bar", c.sigma_bar}, {"k_over_s0", c.k_over_s0}};
    j["mc"] = {{"n_steps", c.mc.n_steps},     {"n_paths", c.mc.n_paths},
               {"seed", c.mc.seed},           {"antithetic", c.mc.antithetic},
               {"scheme", to_string(c.mc.scheme)}, {"workers", c.mc.workers}};
    ordered_json ms = ordered_json::array();
    for (Method m : c.methods) ms.push_back(to_string(m));
    j["methods"] = ms;
    j["output"] = c.output;
    ordered_json ax = ordered_json::array();
    for (const auto& a : c.axes) ax.push_back({{"param", a.param}, {"from", a.from}, {"to", a.to}, {"count", a.count}});
    j["surface_axes"] = ax;
    return j;
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& s : names) {
        const auto m = method_from_string(s);
        if (!m) throw ConfigError("unknown method '" + s + "'");
        out.push_back(*m);
    }
    return out;
}

// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig from_json(const ordered_json& j) {
    static const std::map<std::string, std::vector<std::string>> known{
        {"", {"kind", "model", "contract", "mc", "methods", "output", "surface_axes"}},
        {"model", {"S0", "Y0", "nu", "rho", "H"}},
        {"contract", {"T", "sigma_bar", "k_over_s0"}},
        {"mc", {"n_steps", "n_paths", "seed", "antithetic", "scheme", "workers"}}};
    auto check_keys = [&](const ordered_json& o, const std::string& sect) {
        if (!o.is_object()) throw ConfigError("section '" + sect + "' must be an object");
        const auto& ks = known.at(sect);
        for (const auto& [k, v] : o.items())
            if (std::find(ks.begin(), ks.end(), k) == ks.end())
                throw ConfigError("unknown key '" + k + "'" + (sect.empty() ? "" : " in '" + sect + "'"));
    };
    ExperimentConfig c;
    try {
        check_keys(j, "");
        if (j.contains("kind")) c.kind = j.at("kind").get<std::string>();
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m, "model");
            c.model.S0 = m.value("S0", c.model.S0);
            c.model.Y0 = m.value("Y0", c.model.Y0);
            c.model.nu = m.value("nu", c.model.nu);
            c.model.rho = m.value("rho", c.model.rho);
            c.model.H = m.value("H", c.model.H);
        }
        if (j.contains("contract")) {
            const auto& m = j.at("contract");
            check_keys(m, "contract");
            c.T = m.value("T", c.T);
            c.sigma_bar = m.value("sigma_bar", c.sigma_bar);
            if (m.contains("k_over_s0")) c.k_over_s0 = m.at("k_over_s0").get<std::vector<double>>();
        }
        if (j.contains("mc")) {
            const auto& m = j.at("mc");
            check_keys(m, "mc");
            c.mc.n_steps = m.value("n_steps", c.mc.n_steps);
            c.mc.n_paths = m.value("n_paths", c.mc.n_paths);
            c.mc.seed = m.value("seed", c.mc.seed);
            c.mc.antithetic = m.value("antithetic", c.mc.antithetic);
            c.mc.workers = m.value("workers", c.mc.workers);
            if (m.contains("scheme")) {
                const auto s = m.at("scheme").get<std::string>();
                if (s == "cholesky") c.mc.scheme = FbmScheme::cholesky;
                else if (s == "kernel-discretized") c.mc.scheme = FbmScheme::kernel_discretized;
                else throw ConfigError("unknown scheme '" + s + "'");
            }
        }
        if (j.contains("methods")) c.methods = parse_methods(j.at("methods").get<std::vector<std::string>>());
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        if (j.contains("surface_axes")) {
            c.axes.clear();
            for (const auto& a : j.at("surface_axes")) {
                SurfaceAxis ax;
                ax.param = a.at("param").get<std::string>();
                ax.from = a.at("from").get<double>();
                ax.to = a.value("to", ax.from);
                ax.count = a.value("count", 1);
                c.axes.push_back(ax);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Cells and artifacts.

// A priced cell, or the message of the error that prevented it.
struct Cell {
    std::optional<double> value;
    std::string error;
};

inline constexpr const char* kErrMarker = "ERR";
inline constexpr const char* kNaMarker = "NA";

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
inline std::string format_cell(const Cell& c) { return c.value ? format_number(*c.value) : kErrMarker; }

// rel err in % = |formula - MC|/MC x 100
inline Cell rel_err_pct(const Cell& formula, const Cell& mc) {
    if (!formula.value || !mc.value || *mc.value == 0.0) return {std::nullopt, "no reference"};
    return {std::abs(*formula.value - *mc.value) / *mc.value * 100.0, ""};
}

namespace detail {

template <class F>
Cell guarded(F&& f) {
    try {
        const double v = f();
        if (!std::isfinite(v)) return {std::nullopt, "non-finite result"};
        return {v, ""};
    } catch (const Error& e) {
        return {std::nullopt, e.what()};
    }
}

inline Cell formula_cell(Method m, const Contract& c, const ModelParams& p) {
    return guarded([&] {
        switch (m) {
        case Method::dfa: return dfa_price(c, p).price;
        case Method::dfa_full: return dfa_full_price_t0(c, p).price;
        case Method::svve: return svve_price(c, p).price;
        case Method::svve_quad: return svve_quadrature(c, p).price;
        default: throw DomainError("not a formula method");
        }
    });
}

// Prices of every method at the given K/S0 nodes; MC shares one path set.
struct PriceBlock {
    std::map<Method, std::vector<Cell>> price;
    std::vector<Cell> mc_se;
};

inline PriceBlock price_block(const ModelParams& p, double T, double sigma_bar, const std::vector<double>& ks,
                              const std::vector<Method>& methods, const McConfig& mc) {
    PriceBlock b;
    const std::size_t n = ks.size();
    for (Method m : methods) {
        auto& col = b.price[m];
        col.resize(n);
        if (m == Method::mc) {
            b.mc_se.resize(n);
            std::vector<double> strikes(n);
            for (std::size_t i = 0; i < n; ++i) strikes[i] = ks[i] * p.S0;
            try {
                const auto r = mc_price_strikes(p, T, sigma_bar, strikes, Payoff::tvo, mc);
                for (std::size_t i = 0; i < n; ++i) col[i] = {r[i].price, ""}, b.mc_se[i] = {*r[i].std_err, ""};
            } catch (const Error& e) {
                for (std::size_t i = 0; i < n; ++i) col[i] = b.mc_se[i] = {std::nullopt, e.what()};
            }
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) col[i] = formula_cell(m, {ks[i] * p.S0, T, sigma_bar}, p);
    }
    return b;
}

} // namespace detail

struct TableArtifact {
    std::vector<Method> methods;
    std::vector<double> k_over_s0;
    std::map<Method, std::vector<Cell>> price;
    std::vector<Cell> mc_se;
    std::vector<std::string> errors; // one line per failed cell
};

inline TableArtifact run_table(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.kind != "table") throw ConfigError("run_table needs kind 'table'");
    TableArtifact t;
    t.methods = cfg.methods;
    t.k_over_s0 = cfg.k_over_s0;
    auto b = detail::price_block(cfg.model, cfg.T, cfg.sigma_bar, cfg.k_over_s0, cfg.methods, cfg.mc);
    t.price = std::move(b.price);
    t.mc_se = std::move(b.mc_se);
    for (Method m : t.methods)
        for (std::size_t i = 0; i < t.k_over_s0.size(); ++i)
            if (!t.price[m][i].value)
                t.errors.push_back(to_string(m) + " at K/S0=" + format_number(t.k_over_s0[i]) + ": " +
                                   t.price[m][i].error);
    return t;
}

// Columns: k_over_s0, one price column per method (MC followed by MC_std_err),
// then <method>_rel_err_pct for every formula when MC is present.
inline void write_table_csv(const TableArtifact& t, std::ostream& os) {
    const bool has_mc = detail::has_method(t.methods, Method::mc);
    os << "#schema=1\n";
    os << "k_over_s0";
    for (Method m : t.methods) {
        os << ',' << to_string(m);
        if (m == Method::mc) os << ",MC_std_err";
    }
    if (has_mc)
        for (Method m : t.methods)
            if (m != Method::mc) os << ',' << to_string(m) << "_rel_err_pct";
    os << '\n';
    for (std::size_t i = 0; i < t.k_over_s0.size(); ++i) {
        os << format_number(t.k_over_s0[i]);
        for (Method m : t.methods) {
            os << ',' << format_cell(t.price.at(m)[i]);
            if (m == Method::mc) os << ',' << format_cell(t.mc_se[i]);
        }
        if (has_mc)
            for (Method m : t.methods)
                if (m != Method::mc) os << ',' << format_cell(rel_err_pct(t.price.at(m)[i], t.price.at(Method::mc)[i]));
        os << '\n';
    }
}

struct SurfacePoint {
    double a1, a2;
    Method method;
    Cell price, rel_err; // rel_err only for formulas when MC is in the set
};

struct SurfaceArtifact {
    std::string axis1, axis2;
    std::vector<Method> methods;
    std::vector<SurfacePoint> points; // axis1-major, then axis2, then method order
    std::vector<std::string> errors;
};

// ATM prices over the two swept parameters; the third stays at the model value.
inline SurfaceArtifact run_surface(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.kind != "surface") throw ConfigError("run_surface needs kind 'surface'");
    SurfaceArtifact s;
    s.axis1 = cfg.axes[0].param;
    s.axis2 = cfg.axes[1].param;
    s.methods = cfg.methods;
    const auto v1 = cfg.axes[0].values(), v2 = cfg.axes[1].values();
    const std::size_t n1 = v1.size(), n2 = v2.size(), nm = cfg.methods.size();
    const bool has_mc = detail::has_method(cfg.methods, Method::mc);
    s.points.resize(n1 * n2 * nm);
    // cells run concurrently; each MC run is single-threaded so results do not depend on scheduling
    McConfig mc = cfg.mc;
    mc.workers = 1;
    parallel_for(n1 * n2, cfg.mc.workers, [&](std::size_t cell) {
        const std::size_t i = cell / n2, j = cell % n2;
        ModelParams p = cfg.model;
        detail::axis_param(p, s.axis1) = v1[i];
        detail::axis_param(p, s.axis2) = v2[j];
        const auto b = detail::price_block(p, cfg.T, cfg.sigma_bar, {1.0}, cfg.methods, mc);
        for (std::size_t k = 0; k < nm; ++k) {
            const Method m = cfg.methods[k];
            SurfacePoint& pt = s.points[cell * nm + k];
            pt = {v1[i], v2[j], m, b.price.at(m)[0], {}};
            if (has_mc && m != Method::mc) pt.rel_err = rel_err_pct(pt.price, b.price.at(Method::mc)[0]);
        }
    });
    for (const auto& pt : s.points)
        if (!pt.price.value)
            s.errors.push_back(to_string(pt.method) + " at " + s.axis1 + "=" + format_number(pt.a1) + ", " + s.axis2 +
                               "=" + format_number(pt.a2) + ": " + pt.price.error);
    return s;
}

// Long format: <axis1>,<axis2>,method,price,rel_err_pct. rel_err_pct is NA on
// MC rows and when MC is not in the method set.
inline void write_surface_csv(const SurfaceArtifact& s, std::ostream& os) {
    const bool has_mc = detail::has_method(s.methods, Method::mc);
    os << "#schema=1\n";
    os << s.axis1 << ',' << s.axis2 << ",method,price,rel_err_pct\n";
    for (const auto& pt : s.points) {
        os << format_number(pt.a1) << ',' << format_number(pt.a2) << ',' << to_string(pt.method) << ','
           << format_cell(pt.price) << ',';
        if (!has_mc || pt.method == Method::mc) os << kNaMarker;
        else os << format_cell(pt.rel_err);
        os << '\n';
    }
}

} // namespace fsabr
