// Command line front end: scenario runs, special functions, fits and the acceptance suite.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fradiff/acceptance.hpp"
#include "fradiff/fradiff.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kAuditFailure = 1;
constexpr int kUsageError = 2;

using namespace fradiff;

int cmd_run(const std::string& path, const std::string& csv, const std::string& summary) {
    ScenarioConfig cfg = load_config(path);
    if (!csv.empty()) cfg.csv_path = csv;
    if (!summary.empty()) cfg.summary_path = summary;
    const DecayReport report = run_scenario(cfg);
    write_artifacts(cfg, report);
    std::cout << report_summary(report);
    return report.passed() ? kPass : kAuditFailure;
}

int cmd_ml(double alpha, double z) {
    std::cout.precision(17);
    std::cout << mittag_leffler(alpha, z) << '\n';
    return kPass;
}

int cmd_fode(double alpha, double gamma, double c, double v0, double t_end, std::size_t steps, bool uniform,
             const std::string& csv) {
    const TimeMesh mesh = uniform ? TimeMesh::uniform(alpha, t_end, steps) : TimeMesh::graded(alpha, t_end, steps);
    FodeSolution sol = solve_scalar_fode(alpha, gamma, c, v0, mesh);
    bool ok = true;
    for (std::size_t k = 0; k < sol.values.size(); ++k) {
        if (sol.values[k] < 0.0 || (k > 0 && sol.values[k] > sol.values[k - 1])) ok = false;
    }
    std::vector<double> bar(sol.values.size(), 0.0);
    if (v0 > 0.0) {
        fit_barrier_constant(sol);
        bar = barrier(alpha, gamma, sol.c_bar, v0, sol.times);
    }
    std::cout << "w(T): " << format_double(sol.values.back()) << '\n';
    std::cout << "C*: " << format_double(sol.cstar) << '\n';
    std::cout << "barrier C_bar: " << format_double(sol.c_bar) << ", t0: " << format_double(sol.t0) << '\n';
    std::cout << "nonincreasing and nonnegative: " << (ok ? "yes" : "no") << '\n';
    if (!csv.empty()) {
        std::string text = "t,w,barrier\n";
        for (std::size_t k = 0; k < sol.values.size(); ++k) {
            text += format_double(sol.times[k]) + ',' + format_double(sol.values[k]) + ',' + format_double(bar[k]) + '\n';
        }
        write_text(csv, text);
    }
    return ok ? kPass : kAuditFailure;
}

int cmd_fit(const std::string& path, double s, double tail_fraction) {
    const CsvTable table = read_csv(path);
    const DecayFit fit = fit_decay_exponent(table.column("t"), table.column(norm_column(s)), tail_fraction);
    std::cout << "exponent: " << format_double(fit.exponent) << '\n';
    std::cout << "residual: " << format_double(fit.residual) << '\n';
    std::cout << "window: [" << format_double(fit.t_begin) << ", " << format_double(fit.t_end) << "] (" << fit.points
              << " points)\n";
    return kPass;
}

int cmd_check_sa(const std::string& path, std::size_t snapshot) {
    const ScenarioConfig cfg = load_config(path);
    const Field u = simulate_to(cfg, snapshot);
    std::cout << "t: " << format_double(u.time()) << '\n';
    bool ok = true;
    for (double s : cfg.s_values) {
        const double ratio = check_sa(u, cfg.op, s);
        ok = ok && ratio > 0.0;
        std::cout << "s = " << format_double(s) << ": ratio " << format_double(ratio) << ", constant "
                  << format_double(1.0 / ratio) << '\n';
    }
    return ok ? kPass : kAuditFailure;
}

int cmd_suite(const std::string& out_dir) {
    using namespace fradiff::acceptance;
    std::vector<CriterionResult> results;
    results.push_back(heat_oracle());
    results.push_back(ml_asymptotic());
    const auto runs = run_decay_matrix();
    results.push_back(decay_exponents(runs));
    results.push_back(inequality_audits(runs));
    results.push_back(l1_order());
    results.push_back(fode_barrier());
    results.push_back(nonlocal_identities());
    bool all = true;
    for (const auto& r : results) {
        std::cout << format_result(r) << '\n';
        all = all && r.passed;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::string report;
        for (const auto& run : runs) {
            for (const DecayReport* rep : {&run.coarse, &run.fine}) {
                const std::string stem = rep->name + "_K" + std::to_string(rep->records.size() - 1);
                write_text(out_dir + "/" + stem + ".csv", report_csv(*rep));
                report += report_summary(*rep) + '\n';
            }
        }
        for (const auto& r : results) report += format_result(r) + '\n';
        write_text(out_dir + "/summary.txt", report);
    }
    std::cout << (all ? "all criteria passed" : "some criteria FAILED") << '\n';
    return all ? kPass : kAuditFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-fractional decay lab"};
    app.require_subcommand(1);

    std::string config, csv, summary;
    auto* run = app.add_subcommand("run", "run a scenario config, audit every step, write CSV and summary");
    run->add_option("config", config, "scenario config file")->required();
    run->add_option("--csv", csv, "CSV output path (overrides output.csv)");
    run->add_option("--summary", summary, "summary output path (overrides output.summary)");

    double alpha = 0.5, z = 0.0;
    auto* ml = app.add_subcommand("ml", "evaluate the Mittag-Leffler function E_alpha(z), z <= 0");
    ml->add_option("--alpha", alpha, "order in (0, 1]")->required();
    ml->add_option("--z", z, "argument <= 0")->required();

    double gamma = 1.0, c = 1.0, v0 = 1.0, t_end = 50.0;
    std::size_t steps = 2000;
    bool uniform = false;
    auto* fode = app.add_subcommand("fode", "solve D^alpha w = -w^gamma / C and fit the power-law barrier");
    fode->add_option("--alpha", alpha, "order in (0, 1)")->required();
    fode->add_option("--gamma", gamma, "nonlinearity exponent")->required();
    fode->add_option("--c", c, "constant C > 0")->required();
    fode->add_option("--v0", v0, "initial value")->required();
    fode->add_option("--t-end", t_end, "final time")->required();
    fode->add_option("--steps", steps, "number of time steps");
    fode->add_flag("--uniform", uniform, "uniform mesh instead of graded");
    fode->add_option("--csv", csv, "CSV output path");

    std::string csv_in;
    double s = 2.0, tail = 0.9;
    auto* fit = app.add_subcommand("fit", "fit the tail decay exponent of a report CSV");
    fit->add_option("csv", csv_in, "report CSV")->required();
    fit->add_option("--column", s, "norm exponent s of the column norm_s{S}");
    fit->add_option("--tail-fraction", tail, "fraction of the time span excluded from the window start");

    std::size_t snapshot = 0;
    auto* sa = app.add_subcommand("check-sa", "structural ratio at one time step of a scenario");
    sa->add_option("config", config, "scenario config file")->required();
    sa->add_option("--snapshot", snapshot, "time step index")->required();

    std::string out_dir;
    auto* suite = app.add_subcommand("suite", "run the full acceptance matrix");
    suite->add_option("--output-dir", out_dir, "directory for per-scenario CSVs and the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsageError;
    }

    try {
        if (*run) return cmd_run(config, csv, summary);
        if (*ml) return cmd_ml(alpha, z);
        if (*fode) return cmd_fode(alpha, gamma, c, v0, t_end, steps, uniform, csv);
        if (*fit) return cmd_fit(csv_in, s, tail);
        if (*sa) return cmd_check_sa(config, snapshot);
        if (*suite) return cmd_suite(out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
        return kUsageError;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kUsageError;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kAuditFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kAuditFailure;
    }
    return kUsageError;
}
