#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fradiff/caputo.hpp"
#include "fradiff/operators.hpp"
#include "fradiff/special_fn.hpp"

namespace fradiff {

/// Relative tolerance used by the inequality audits.
inline constexpr double kAuditTolerance = 1e-8;

/**
 * Structural ratio R = int u^(s-1) N[u] / ||u||_s^(s-1+gamma).
 * Returns +infinity for u == 0, where the inequality is vacuous.
 */
inline double sa_ratio(const Field& u, const Field& image, double s, double gamma) {
    if (!(s > 1.0)) throw ParameterError("structural ratio requires s > 1");
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    const double energy = inner_energy(u, s, image);
    const double norm = lp_norm(u, s);
    if (norm == 0.0) {
        if (std::abs(energy) > 0.0) throw InconsistencyError("zero norm with nonzero energy");
        return std::numeric_limits<double>::infinity();
    }
    return energy / std::pow(norm, s - 1.0 + gamma);
}

inline double check_sa(const Field& u, const OperatorSpec& spec, double s, std::optional<double> gamma = {}) {
    if (u.max_value() == 0.0) return std::numeric_limits<double>::infinity();
    return sa_ratio(u, apply_operator(spec, u), s, gamma.value_or(predicted_gamma(spec)));
}

/// Terms of the discrete inequality int u^(s-1) D^alpha u >= v^(s-1) D^alpha v at step k, v = ||u||_s.
struct AzTerms {
    double field_side = 0.0;  ///< int u_k^(s-1) D^alpha u(t_k)
    double norm_side = 0.0;   ///< v_k^(s-1) D^alpha v(t_k)
    double slack() const { return field_side - norm_side; }
};

inline AzTerms lemma_az_terms(std::span<const double> norms, const Field& u_k, const Field& caputo_u, double s,
                              const TimeMesh& mesh, std::size_t k) {
    if (k + 1 > norms.size()) throw ParameterError("norm series is shorter than the history");
    AzTerms out;
    out.field_side = inner_energy(u_k, s, caputo_u);
    out.norm_side = std::pow(norms[k], s - 1.0) * discrete_caputo(norms, mesh, k);
    return out;
}

/// Slack of int u^(s-1) D^alpha u - v^(s-1) D^alpha v at step k, v = ||u||_s.
inline double check_lemma_az(std::span<const double> norms, const HistoryBuffer& history, double s,
                             const TimeMesh& mesh, std::size_t k) {
    if (k > history.last()) throw ParameterError("history does not reach step k");
    if (k == 0) return 0.0;
    return lemma_az_terms(norms, history.field(k), discrete_caputo(history, mesh, k), s, mesh, k).slack();
}

/// Round-off scale of the AZ terms: the largest magnitude in the L1 sums.
inline double az_scale(std::span<const double> norms, double s, const TimeMesh& mesh, std::size_t k,
                       const AzTerms& terms) {
    if (k == 0) return 0.0;
    const double c = l1_coefficients(mesh, k).back();
    const double v0 = std::max(norms[0], 1.0);
    return v0 * (std::abs(terms.field_side) + std::abs(terms.norm_side) + c * std::pow(norms[k], s) +
                 c * std::pow(norms[k], s - 1.0) * norms[k - 1]);
}

struct DecayFit {
    double exponent = 0.0;
    double residual = 0.0;  ///< RMS misfit in log v
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t points = 0;
};

/**
 * Least squares on (log t, log v) over the tail window. The window starts at
 * the last sample with t <= (1 - tail_fraction) t_max, so the default 0.9
 * covers the last decade of simulated time.
 */
inline DecayFit fit_decay_exponent(std::span<const double> t, std::span<const double> v, double tail_fraction = 0.9) {
    if (t.size() != v.size()) throw FitError("time and value series differ in length");
    if (t.empty()) throw FitError("empty series");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw FitError("tail fraction must lie in (0, 1)");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (!(t[k] > t[k - 1])) throw FitError("times must increase strictly");
    }
    const double cut = (1.0 - tail_fraction) * t.back();
    std::size_t first = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] <= cut) first = k;
    }
    while (first < t.size() && !(t[first] > 0.0)) ++first;
    const std::size_t n = t.size() - first;
    if (n < 10) throw FitError("tail window holds fewer than 10 points");
    if (t.back() < 10.0 * t[first] * (1.0 - 1e-12)) throw FitError("tail window spans less than one decade");

    double sx = 0.0, sy = 0.0;
    for (std::size_t k = first; k < t.size(); ++k) {
        if (!(v[k] > 0.0) || !std::isfinite(v[k])) throw FitError("tail values must be positive and finite");
        sx += std::log(t[k]);
        sy += std::log(v[k]);
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = first; k < t.size(); ++k) {
        const double dx = std::log(t[k]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(v[k]) - my);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t k = first; k < t.size(); ++k) {
        const double r = std::log(v[k]) - (my + slope * (std::log(t[k]) - mx));
        rss += r * r;
    }
    DecayFit out;
    out.exponent = slope == 0.0 ? 0.0 : -slope;
    out.residual = std::sqrt(rss / static_cast<double>(n));
    out.t_begin = t[first];
    out.t_end = t.back();
    out.points = n;
    return out;
}

/// max_k v(t_k) (1 + t_k^(alpha/gamma)).
inline double estimate_cstar(std::span<const double> t, std::span<const double> v, double alpha, double gamma) {
    if (t.size() != v.size()) throw ParameterError("time and value series differ in length");
    if (!(alpha > 0.0) || !(gamma > 0.0)) throw ParameterError("alpha and gamma must be positive");
    return power_law_cstar(alpha, gamma, t, v);
}

/// One row of the per-step audit record; audits use the first s.
struct StepRecord {
    double t = 0.0;
    std::vector<double> norms;
    double sa_ratio = 0.0;
    double az_slack = 0.0;  ///< NaN at t = 0
    double caputo_v = 0.0;  ///< NaN at t = 0
};

struct AuditFlags {
    bool sa = true;
    bool az = true;
    bool v3 = true;
    bool monotone = true;
    bool all() const { return sa && az && v3 && monotone; }
};

struct DecayReport {
    std::string name;
    std::vector<double> s_values;
    double alpha = 0.0;
    double gamma = 1.0;
    std::vector<StepRecord> records;
    std::vector<std::optional<DecayFit>> fits;   ///< per s; empty when not identifiable
    std::vector<std::string> fit_errors;         ///< per s
    std::vector<double> cstar;                   ///< per s
    double min_sa_ratio = std::numeric_limits<double>::infinity();
    AuditFlags flags;
    std::vector<std::string> audit_failures;
    std::optional<std::string> failure;          ///< aborted run
    std::size_t completed_steps = 0;
    std::vector<std::string> warnings;

    double predicted_exponent() const { return alpha / gamma; }
    std::vector<double> times() const {
        std::vector<double> t;
        for (const auto& r : records) t.push_back(r.t);
        return t;
    }
    std::vector<double> norm_series(std::size_t i) const {
        std::vector<double> v;
        for (const auto& r : records) v.push_back(r.norms.at(i));
        return v;
    }
    /// Envelope C* / (1 + t^(alpha/gamma)) for the first s.
    double bound_value(double t) const {
        return cstar.empty() ? 0.0 : cstar[0] / (1.0 + std::pow(t, alpha / gamma));
    }
    bool passed() const { return !failure && flags.all(); }
};

/**
 * Accumulates audits step by step: norms, SA ratio, the Caputo-norm inequality slack,
 * the decay inequality D^alpha v <= -v^gamma min R and norm non-increase.
 */
struct AuditToggles {
    bool sa = true;
    bool az = true;
    bool v3 = true;
    bool monotone = true;
};

class DecayAuditor {
public:
    DecayAuditor(DecayReport& report, const TimeMesh& mesh, AuditToggles toggles = {})
        : report_(report), mesh_(mesh), toggles_(toggles) {
        if (report_.s_values.empty()) throw ParameterError("at least one norm exponent is required");
        for (double s : report_.s_values) {
            if (!(s > 1.0)) throw ParameterError("norm exponents must exceed 1");
        }
    }

    /// Records step k; `image` is N[u_k] and `history` holds u_0..u_k.
    void record(std::size_t k, const HistoryBuffer& history, const Field& u, const Field& image) {
        const double s = report_.s_values[0];
        StepRecord row;
        row.t = mesh_[k];
        for (double si : report_.s_values) row.norms.push_back(lp_norm(u, si));
        primary_.push_back(row.norms[0]);
        row.sa_ratio = u.max_value() == 0.0 ? std::numeric_limits<double>::infinity()
                                            : sa_ratio(u, image, s, report_.gamma);
        report_.min_sa_ratio = std::min(report_.min_sa_ratio, row.sa_ratio);
        if (toggles_.sa && !(row.sa_ratio > 0.0)) fail(report_.flags.sa, k, "structural ratio not positive");

        const double v0 = std::max(primary_[0], 1.0);
        if (toggles_.monotone && row.norms[0] > primary_[0] * (1.0 + kAuditTolerance)) {
            fail(report_.flags.monotone, k, "norm increased above its initial value");
        }
        if (k == 0) {
            row.az_slack = std::nan("");
            row.caputo_v = std::nan("");
        } else {
            const Field caputo_u = discrete_caputo(history, mesh_, k);
            const AzTerms az = lemma_az_terms(primary_, u, caputo_u, s, mesh_, k);
            row.az_slack = az.slack();
            if (toggles_.az && row.az_slack < -kAuditTolerance * az_scale(primary_, s, mesh_, k, az)) {
                fail(report_.flags.az, k, "Caputo-norm inequality slack below tolerance");
            }
            row.caputo_v = discrete_caputo(primary_, mesh_, k);
            if (toggles_.v3 && std::isfinite(report_.min_sa_ratio)) {
                const double c = l1_coefficients(mesh_, k).back();
                const double rhs = -std::pow(row.norms[0], report_.gamma) * report_.min_sa_ratio;
                const double scale = v0 * (std::abs(row.caputo_v) + std::abs(rhs) + c * row.norms[0]);
                if (row.caputo_v > rhs + kAuditTolerance * scale) {
                    fail(report_.flags.v3, k, "discrete decay inequality violated");
                }
            }
        }
        report_.records.push_back(std::move(row));
        report_.completed_steps = k;
    }

private:
    void fail(bool& flag, std::size_t k, const std::string& what) {
        if (flag) report_.audit_failures.push_back(what + " at step " + std::to_string(k));
        flag = false;
    }

    DecayReport& report_;
    const TimeMesh& mesh_;
    AuditToggles toggles_;
    std::vector<double> primary_;
};

/// Fits and C* estimates for every s once the records are complete.
inline void finalize_report(DecayReport& report, double tail_fraction = 0.9) {
    const auto t = report.times();
    report.fits.assign(report.s_values.size(), std::nullopt);
    report.fit_errors.assign(report.s_values.size(), "");
    report.cstar.assign(report.s_values.size(), 0.0);
    for (std::size_t i = 0; i < report.s_values.size(); ++i) {
        const auto v = report.norm_series(i);
        report.cstar[i] = estimate_cstar(t, v, report.alpha, report.gamma);
        try {
            report.fits[i] = fit_decay_exponent(t, v, tail_fraction);
        } catch (const FitError& e) {
            report.fit_errors[i] = e.what();
        }
    }
}

}  // namespace fradiff
