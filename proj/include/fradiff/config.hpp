#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fradiff/analysis.hpp"
#include "fradiff/caputo.hpp"
#include "fradiff/errors.hpp"
#include "fradiff/grid.hpp"
#include "fradiff/operator_spec.hpp"
#include "fradiff/stepper.hpp"

namespace fradiff {

enum class InitialPreset { bump, eigen, plateau, random, zero };

struct ScenarioConfig {
    std::string name = "scenario";
    OperatorSpec op{ops::Laplacian{}};
    std::size_t dim = 1;
    std::size_t points = 101;
    double lower = 0.0;
    double upper = 1.0;
    double alpha = 0.5;
    double t_end = 1.0;
    std::size_t steps = 100;
    bool graded = false;
    std::optional<double> grading;  ///< defaults to 2/alpha on graded meshes
    InitialPreset preset = InitialPreset::bump;
    double amplitude = 1.0;
    double width = 0.35;  ///< bump radius as a fraction of the side length
    std::uint64_t seed = 1;
    std::vector<double> s_values{2.0};
    std::string csv_path;
    std::string summary_path;
    AuditToggles audits;
    double gradient_bound = 40.0;
    SolverOptions solver;
    double tail_fraction = 0.9;

    GridPtr make_grid_ptr() const {
        std::vector<Axis> axes(dim, Axis{lower, upper, points});
        return make_grid(Grid(std::move(axes)));
    }
    TimeMesh make_mesh() const {
        if (!graded) return TimeMesh::uniform(alpha, t_end, steps);
        return grading ? TimeMesh::graded(alpha, t_end, steps, *grading) : TimeMesh::graded(alpha, t_end, steps);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected a number, got '" + t + "'");
    }
    if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
    return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + t + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "on" || t == "1") return true;
    if (t == "false" || t == "off" || t == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + t + "'");
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Lists "a:b:c; d:e:f" into rows of numbers with the given arity.
inline std::vector<std::vector<double>> parse_tuples(const std::string& key, const std::string& text,
                                                     std::size_t arity) {
    std::vector<std::vector<double>> rows;
    for (const auto& group : split(text, ';')) {
        const auto parts = split(group, ':');
        if (parts.size() != arity) {
            throw ConfigError(key, "each entry needs " + std::to_string(arity) + " ':'-separated numbers");
        }
        std::vector<double> row;
        for (const auto& p : parts) row.push_back(parse_double(key, p));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(key, "list is empty");
    return rows;
}

}  // namespace detail

/// Parses the flat `key = value` format; '#' starts a comment.
inline ScenarioConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
        if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }

    static const std::set<std::string> known = {
        "name", "operator.kind", "operator.p", "operator.m", "operator.sigma", "operator.terms", "operator.axes",
        "grid.dim", "grid.points", "grid.lower", "grid.upper", "mesh.alpha", "mesh.t_end", "mesh.steps",
        "mesh.kind", "mesh.grading", "initial.preset", "initial.amplitude", "initial.width", "initial.seed",
        "norms.s", "output.csv", "output.summary", "audit.sa", "audit.az", "audit.v3", "audit.monotone",
        "audit.gradient_bound", "tolerance.newton", "solver.newton_max_iter", "solver.picard_max_iter",
        "fit.tail_fraction"};
    for (const auto& [key, value] : kv) {
        if (!known.count(key)) throw ConfigError(key, "unknown key");
    }

    ScenarioConfig cfg;
    std::set<std::string> used;
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        used.insert(key);
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto number = [&](const std::string& key) -> std::optional<double> {
        if (auto v = get(key)) return detail::parse_double(key, *v);
        return std::nullopt;
    };
    auto require = [&](const std::string& key) {
        auto v = number(key);
        if (!v) throw ConfigError(key, "required by operator." + std::string("kind"));
        return *v;
    };

    if (auto v = get("name")) cfg.name = *v;

    const std::string kind = get("operator.kind").value_or("laplacian");
    // Operator parameters are validated by the OperatorSpec constructor; map its errors to the key.
    auto build = [&](auto make) {
        try {
            cfg.op = make();
        } catch (const ParameterError& e) {
            throw ConfigError("operator", e.what());
        }
    };
    if (kind == "laplacian") build([] { return OperatorSpec(ops::Laplacian{}); });
    else if (kind == "p_laplacian") {
        const double p = require("operator.p");
        build([&] { return OperatorSpec(ops::PLaplacian{p}); });
    } else if (kind == "porous_medium") {
        const double m = require("operator.m");
        build([&] { return OperatorSpec(ops::PorousMedium{m}); });
    } else if (kind == "doubly_nonlinear") {
        const double p = require("operator.p"), m = require("operator.m");
        build([&] { return OperatorSpec(ops::DoublyNonlinear{p, m}); });
    } else if (kind == "mean_curvature") build([] { return OperatorSpec(ops::MeanCurvature{}); });
    else if (kind == "frac_laplacian") {
        const double sigma = require("operator.sigma");
        build([&] { return OperatorSpec(ops::FracLaplacian{sigma}); });
    } else if (kind == "frac_p_laplacian") {
        const double sigma = require("operator.sigma"), p = require("operator.p");
        build([&] { return OperatorSpec(ops::FracPLaplacian{sigma, p}); });
    } else if (kind == "frac_sum") {
        auto text = get("operator.terms");
        if (!text) throw ConfigError("operator.terms", "required by operator.kind = frac_sum");
        ops::FracSum sum;
        for (const auto& row : detail::parse_tuples("operator.terms", *text, 3)) {
            sum.terms.push_back(ops::FracTerm{row[0], row[1], row[2]});
        }
        build([&] { return OperatorSpec(sum); });
    } else if (kind == "directional_frac") {
        auto text = get("operator.axes");
        if (!text) throw ConfigError("operator.axes", "required by operator.kind = directional_frac");
        ops::DirectionalFrac dir;
        for (const auto& row : detail::parse_tuples("operator.axes", *text, 2)) {
            dir.axes.push_back(ops::AxisTerm{row[0], row[1]});
        }
        build([&] { return OperatorSpec(dir); });
    } else if (kind == "frac_porous_medium") {
        const double sigma = require("operator.sigma"), m = require("operator.m");
        build([&] { return OperatorSpec(ops::FracPorousMedium{sigma, m}); });
    } else if (kind == "frac_mean_curvature") {
        const double sigma = require("operator.sigma");
        build([&] { return OperatorSpec(ops::FracMeanCurvature{sigma}); });
    } else {
        throw ConfigError("operator.kind", "unknown operator '" + kind + "'");
    }
    for (const char* key : {"operator.p", "operator.m", "operator.sigma", "operator.terms", "operator.axes"}) {
        if (kv.count(key) && !used.count(key)) throw ConfigError(key, "not used by operator.kind = " + kind);
    }

    if (auto v = get("grid.dim")) cfg.dim = detail::parse_unsigned("grid.dim", *v);
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("grid.dim", "must be 1 or 2");
    if (auto v = get("grid.points")) cfg.points = detail::parse_unsigned("grid.points", *v);
    if (cfg.points < 3) throw ConfigError("grid.points", "need at least 3 points per axis");
    if (auto v = number("grid.lower")) cfg.lower = *v;
    if (auto v = number("grid.upper")) cfg.upper = *v;
    if (!(cfg.lower < cfg.upper)) throw ConfigError("grid.upper", "must exceed grid.lower");
    try {
        cfg.op.check_dimension(cfg.dim);
    } catch (const ParameterError& e) {
        throw ConfigError("operator.axes", e.what());
    }

    if (auto v = number("mesh.alpha")) cfg.alpha = *v;
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("mesh.alpha", "must lie in (0, 1)");
    if (auto v = number("mesh.t_end")) cfg.t_end = *v;
    if (!(cfg.t_end > 0.0)) throw ConfigError("mesh.t_end", "must be positive");
    if (auto v = get("mesh.steps")) cfg.steps = detail::parse_unsigned("mesh.steps", *v);
    if (cfg.steps < 1) throw ConfigError("mesh.steps", "must be at least 1");
    if (auto v = get("mesh.kind")) {
        if (*v == "uniform") cfg.graded = false;
        else if (*v == "graded") cfg.graded = true;
        else throw ConfigError("mesh.kind", "expected uniform or graded");
    }
    if (auto v = number("mesh.grading")) {
        if (!cfg.graded) throw ConfigError("mesh.grading", "only meaningful with mesh.kind = graded");
        if (!(*v >= 1.0)) throw ConfigError("mesh.grading", "must be >= 1");
        cfg.grading = *v;
    }

    if (auto v = get("initial.preset")) {
        if (*v == "bump") cfg.preset = InitialPreset::bump;
        else if (*v == "eigen") cfg.preset = InitialPreset::eigen;
        else if (*v == "plateau") cfg.preset = InitialPreset::plateau;
        else if (*v == "random") cfg.preset = InitialPreset::random;
        else if (*v == "zero") cfg.preset = InitialPreset::zero;
        else throw ConfigError("initial.preset", "expected bump, eigen, plateau or random");
    }
    if (auto v = number("initial.amplitude")) cfg.amplitude = *v;
    if (cfg.amplitude < 0.0) throw ConfigError("initial.amplitude", "must be nonnegative");
    if (cfg.preset == InitialPreset::zero || cfg.amplitude == 0.0) {
        throw ConfigError("initial", "the initial datum must be nonnegative and must not vanish identically");
    }
    if (auto v = number("initial.width")) cfg.width = *v;
    if (!(cfg.width > 0.0 && cfg.width <= 0.5)) throw ConfigError("initial.width", "must lie in (0, 0.5]");
    if (auto v = get("initial.seed")) cfg.seed = detail::parse_unsigned("initial.seed", *v);

    if (auto v = get("norms.s")) {
        cfg.s_values.clear();
        for (const auto& item : detail::split(*v, ',')) cfg.s_values.push_back(detail::parse_double("norms.s", item));
        if (cfg.s_values.empty()) throw ConfigError("norms.s", "list is empty");
        for (double s : cfg.s_values) {
            if (!(s > 1.0)) throw ConfigError("norms.s", "exponents must exceed 1");
        }
    }
    if (auto v = get("output.csv")) cfg.csv_path = *v;
    if (auto v = get("output.summary")) cfg.summary_path = *v;

    if (auto v = get("audit.sa")) cfg.audits.sa = detail::parse_bool("audit.sa", *v);
    if (auto v = get("audit.az")) cfg.audits.az = detail::parse_bool("audit.az", *v);
    if (auto v = get("audit.v3")) cfg.audits.v3 = detail::parse_bool("audit.v3", *v);
    if (auto v = get("audit.monotone")) cfg.audits.monotone = detail::parse_bool("audit.monotone", *v);
    if (auto v = number("audit.gradient_bound")) cfg.gradient_bound = *v;
    if (!(cfg.gradient_bound > 0.0)) throw ConfigError("audit.gradient_bound", "must be positive");

    if (auto v = number("tolerance.newton")) cfg.solver.newton_tol = *v;
    if (!(cfg.solver.newton_tol > 0.0)) throw ConfigError("tolerance.newton", "must be positive");
    if (auto v = get("solver.newton_max_iter")) {
        cfg.solver.newton_max_iter = detail::parse_unsigned("solver.newton_max_iter", *v);
    }
    if (auto v = get("solver.picard_max_iter")) {
        cfg.solver.picard_max_iter = detail::parse_unsigned("solver.picard_max_iter", *v);
    }
    if (auto v = number("fit.tail_fraction")) cfg.tail_fraction = *v;
    if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction < 1.0)) {
        throw ConfigError("fit.tail_fraction", "must lie in (0, 1)");
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("file", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits, identical across platforms.
inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double smooth_bump(double r) {
    return r < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
}

}  // namespace detail

/// Initial datum for the configured preset; zero on the boundary.
inline Field make_initial(const ScenarioConfig& cfg, const GridPtr& grid) {
    const double L = cfg.upper - cfg.lower;
    const double mid = 0.5 * (cfg.lower + cfg.upper);
    const std::size_t dim = grid->dim();
    Field u = Field::zeros(grid);
    switch (cfg.preset) {
    case InitialPreset::bump:
        u = Field::sample(grid, [&](double x, double y) {
            double r2 = (x - mid) * (x - mid);
            if (dim == 2) r2 += (y - mid) * (y - mid);
            return cfg.amplitude * detail::smooth_bump(std::sqrt(r2) / (cfg.width * L));
        });
        break;
    case InitialPreset::eigen:
        u = Field::sample(grid, [&](double x, double y) {
            double v = std::sin(std::numbers::pi * (x - cfg.lower) / L);
            if (dim == 2) v *= std::sin(std::numbers::pi * (y - cfg.lower) / L);
            return cfg.amplitude * std::max(v, 0.0);
        });
        break;
    case InitialPreset::plateau:
        u = Field::sample(grid, [&](double x, double y) {
            auto ramp = [&](double z) { return std::min(1.0, std::min(z - cfg.lower, cfg.upper - z) / (0.2 * L)); };
            double v = ramp(x);
            if (dim == 2) v *= ramp(y);
            return cfg.amplitude * std::max(v, 0.0);
        });
        break;
    case InitialPreset::random: {
        std::mt19937_64 gen(cfg.seed);
        std::vector<double> v(grid->size(), 0.0);
        for (std::size_t n = 0; n < v.size(); ++n) {
            const double r = detail::unit_uniform(gen);
            if (!grid->is_boundary(n)) v[n] = cfg.amplitude * r;
        }
        u = Field(grid, std::move(v));
        break;
    }
    case InitialPreset::zero:
        break;
    }
    if (u.max_value() == 0.0) {
        throw ConfigError("initial", "the initial datum must be nonnegative and must not vanish identically");
    }
    return u;
}

}  // namespace fradiff
