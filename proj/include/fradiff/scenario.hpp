#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fradiff/analysis.hpp"
#include "fradiff/config.hpp"
#include "fradiff/stepper.hpp"

namespace fradiff {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string norm_column(double s) { return "norm_s" + format_double(s); }

/// Steps the configured problem to the end of the mesh, auditing every step.
inline DecayReport run_scenario(const ScenarioConfig& cfg) {
    const GridPtr grid = cfg.make_grid_ptr();
    const TimeMesh mesh = cfg.make_mesh();
    const Field u0 = make_initial(cfg, grid);

    DecayReport report;
    report.name = cfg.name;
    report.s_values = cfg.s_values;
    report.alpha = cfg.alpha;
    report.gamma = predicted_gamma(cfg.op);

    const Stepper stepper(cfg.op, grid, mesh, cfg.solver, OperatorOptions{cfg.gradient_bound});
    const bool curvature = cfg.op.is_frac_mean_curvature();
    auto check_gradient = [&](const Field& u, std::size_t k) {
        if (!curvature) return;
        const double g = gradient_audit(u).max_gradient;
        if (g > cfg.gradient_bound) {
            report.warnings.push_back("gradient bound violated at step " + std::to_string(k) + ": max |grad u| = " +
                                      format_double(g));
        }
    };

    HistoryBuffer history(u0);
    DecayAuditor auditor(report, mesh, cfg.audits);
    auditor.record(0, history, u0, stepper.op().apply(u0));
    check_gradient(u0, 0);
    for (std::size_t k = 1; k <= mesh.steps(); ++k) {
        Field u = Field::zeros(grid);
        try {
            u = stepper.step(history, k);
        } catch (const Error& e) {
            report.failure = "step " + std::to_string(k) + " (t = " + format_double(mesh[k]) + "): " + e.what();
            break;
        }
        history.push(u);
        auditor.record(k, history, u, stepper.op().apply(u));
        check_gradient(u, k);
    }
    finalize_report(report, cfg.tail_fraction);
    return report;
}

/// Field u^k of the configured run, stepping from t = 0.
inline Field simulate_to(const ScenarioConfig& cfg, std::size_t k) {
    const GridPtr grid = cfg.make_grid_ptr();
    const TimeMesh mesh = cfg.make_mesh();
    if (k > mesh.steps()) throw ParameterError("snapshot index exceeds mesh.steps");
    HistoryBuffer history(make_initial(cfg, grid));
    const Stepper stepper(cfg.op, grid, mesh, cfg.solver, OperatorOptions{cfg.gradient_bound});
    for (std::size_t j = 1; j <= k; ++j) history.push(stepper.step(history, j));
    return history.field(k);
}

inline std::string report_csv(const DecayReport& report) {
    std::ostringstream out;
    out << "t";
    for (double s : report.s_values) out << ',' << norm_column(s);
    out << ",sa_ratio,az_slack,caputo_v,bound_value\n";
    for (const auto& r : report.records) {
        out << format_double(r.t);
        for (double v : r.norms) out << ',' << format_double(v);
        out << ',' << format_double(r.sa_ratio) << ',' << format_double(r.az_slack) << ','
            << format_double(r.caputo_v) << ',' << format_double(report.bound_value(r.t)) << '\n';
    }
    return out.str();
}

inline std::string report_summary(const DecayReport& report) {
    std::ostringstream out;
    out << "scenario: " << report.name << '\n';
    out << "alpha: " << format_double(report.alpha) << '\n';
    out << "gamma: " << format_double(report.gamma) << '\n';
    out << "predicted exponent alpha/gamma: " << format_double(report.predicted_exponent()) << '\n';
    out << "completed steps: " << report.completed_steps << '\n';
    for (std::size_t i = 0; i < report.s_values.size(); ++i) {
        out << "s = " << format_double(report.s_values[i]) << ": ";
        if (i < report.fits.size() && report.fits[i]) {
            const auto& f = *report.fits[i];
            out << "exponent " << format_double(f.exponent) << " over [" << format_double(f.t_begin) << ", "
                << format_double(f.t_end) << "] (" << f.points << " points, rms " << format_double(f.residual)
                << ")";
        } else if (i < report.fit_errors.size()) {
            out << "no fit (" << report.fit_errors[i] << ")";
        }
        if (i < report.cstar.size()) out << ", C* " << format_double(report.cstar[i]);
        out << '\n';
    }
    out << "min structural ratio: " << format_double(report.min_sa_ratio) << '\n';
    out << "structural constant 1/min ratio: " << format_double(1.0 / report.min_sa_ratio) << '\n';
    out << "audit sa: " << (report.flags.sa ? "pass" : "FAIL") << '\n';
    out << "audit az: " << (report.flags.az ? "pass" : "FAIL") << '\n';
    out << "audit v3: " << (report.flags.v3 ? "pass" : "FAIL") << '\n';
    out << "audit monotone: " << (report.flags.monotone ? "pass" : "FAIL") << '\n';
    for (const auto& f : report.audit_failures) out << "audit failure: " << f << '\n';
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    if (report.failure) out << "run aborted: " << *report.failure << '\n';
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Writes the CSV and summary named in the config, if any.
inline void write_artifacts(const ScenarioConfig& cfg, const DecayReport& report) {
    if (!cfg.csv_path.empty()) write_text(cfg.csv_path, report_csv(report));
    if (!cfg.summary_path.empty()) write_text(cfg.summary_path, report_summary(report));
}

/// Columns of a report CSV keyed by header name.
struct CsvTable {
    std::vector<std::string> header;
    std::map<std::string, std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const {
        auto it = columns.find(name);
        if (it == columns.end()) throw DataError("CSV has no column '" + name + "'");
        return it->second;
    }
};

inline CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV is empty");
    table.header = detail::split(line, ',');
    for (const auto& h : table.header) table.columns[h];
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(detail::trim(cell));
        if (cells.size() != table.header.size()) {
            throw DataError("CSV line " + std::to_string(lineno) + " has the wrong number of fields");
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v = 0.0;
            const std::string& c = cells[i];
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || ptr != c.data() + c.size()) {
                throw DataError("CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
            table.columns[table.header[i]].push_back(v);
        }
    }
    return table;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

}  // namespace fradiff
