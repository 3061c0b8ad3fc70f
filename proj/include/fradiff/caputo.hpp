#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fradiff/errors.hpp"
#include "fradiff/grid.hpp"

namespace fradiff {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
}

/**
 * Time nodes 0 = t_0 < t_1 < ... < t_K = T for a Caputo derivative of order alpha.
 * Uniform: t_k = k T / K. Graded: t_k = T (k/K)^r with r >= 1.
 */
class TimeMesh {
public:
    static TimeMesh uniform(double alpha, double t_end, std::size_t steps) {
        return TimeMesh(alpha, t_end, steps, 1.0);
    }
    static TimeMesh graded(double alpha, double t_end, std::size_t steps, double grading) {
        return TimeMesh(alpha, t_end, steps, grading);
    }
    /// Graded with the exponent 2/alpha used against the t^alpha initial layer.
    static TimeMesh graded(double alpha, double t_end, std::size_t steps) {
        check_alpha(alpha);
        return TimeMesh(alpha, t_end, steps, 2.0 / alpha);
    }

    double alpha() const { return alpha_; }
    double t_end() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; }
    double grading() const { return grading_; }
    bool is_uniform() const { return grading_ == 1.0; }
    double operator[](std::size_t k) const { return nodes_[k]; }
    std::span<const double> nodes() const { return nodes_; }
    double step_size(std::size_t k) const { return nodes_[k] - nodes_[k - 1]; }

private:
    TimeMesh(double alpha, double t_end, std::size_t steps, double grading)
        : alpha_(alpha), grading_(grading) {
        check_alpha(alpha);
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("time horizon must be positive");
        if (steps < 1) throw ParameterError("time mesh needs at least one step");
        if (!(grading >= 1.0)) throw ParameterError("grading exponent must be >= 1");
        nodes_.resize(steps + 1);
        const double K = static_cast<double>(steps);
        for (std::size_t k = 0; k <= steps; ++k) {
            const double x = static_cast<double>(k) / K;
            nodes_[k] = grading == 1.0 ? t_end * x : t_end * std::pow(x, grading);
        }
        nodes_.back() = t_end;
        for (std::size_t k = 1; k <= steps; ++k) {
            if (!(nodes_[k] > nodes_[k - 1])) throw ParameterError("time mesh is not strictly increasing");
        }
    }

    double alpha_;
    double grading_;
    std::vector<double> nodes_;
};

/// L1 weights b_j = (j+1)^(1-alpha) - j^(1-alpha), j = 0..k-1.
inline std::vector<double> caputo_weights(double alpha, std::size_t k) {
    check_alpha(alpha);
    if (k < 1) throw ParameterError("caputo_weights requires k >= 1");
    std::vector<double> b(k);
    const double e = 1.0 - alpha;
    for (std::size_t j = 0; j < k; ++j) {
        b[j] = std::pow(static_cast<double>(j + 1), e) - std::pow(static_cast<double>(j), e);
    }
    return b;
}

/**
 * Coefficients a_{k,j}, j = 1..k (stored at index j-1), of the L1 formula
 *   D^alpha u(t_k) ~ sum_j a_{k,j} (u^j - u^{j-1}),
 *   a_{k,j} = [(t_k - t_{j-1})^(1-alpha) - (t_k - t_j)^(1-alpha)] / (tau_j Gamma(2-alpha)).
 * On a uniform mesh a_{k,j} = dt^-alpha b_{k-j} / Gamma(2-alpha).
 */
inline std::vector<double> l1_coefficients(const TimeMesh& mesh, std::size_t k) {
    if (k < 1 || k > mesh.steps()) throw ParameterError("L1 coefficients need 1 <= k <= K");
    const double alpha = mesh.alpha();
    const double g = std::tgamma(2.0 - alpha);
    std::vector<double> a(k);
    if (mesh.is_uniform()) {
        const double c = std::pow(mesh.step_size(1), -alpha) / g;
        const auto b = caputo_weights(alpha, k);
        for (std::size_t j = 1; j <= k; ++j) a[j - 1] = c * b[k - j];
        return a;
    }
    const double e = 1.0 - alpha;
    const double tk = mesh[k];
    for (std::size_t j = 1; j <= k; ++j) {
        const double tau = mesh.step_size(j);
        a[j - 1] = (std::pow(tk - mesh[j - 1], e) - std::pow(tk - mesh[j], e)) / (tau * g);
    }
    return a;
}

/// L1 approximation of the Caputo derivative at t_k of a scalar series sampled on the mesh.
inline double discrete_caputo(std::span<const double> series, const TimeMesh& mesh, std::size_t k) {
    if (series.size() < k + 1) throw ParameterError("insufficient history for the Caputo derivative");
    if (k == 0) return 0.0;
    const auto a = l1_coefficients(mesh, k);
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += a[j - 1] * (series[j] - series[j - 1]);
    return acc;
}

/**
 * Append-only record of past fields u^0, u^1, ... stored as increments
 * u^j - u^(j-1), which is what the L1 memory sum consumes.
 */
class HistoryBuffer {
public:
    explicit HistoryBuffer(Field initial) {
        initial.validate();
        grid_ = initial.grid_ptr();
        times_.push_back(initial.time());
        latest_ = std::vector<double>(initial.values().begin(), initial.values().end());
        initial_ = latest_;
    }

    std::size_t size() const { return times_.size(); }
    /// Index of the latest stored field.
    std::size_t last() const { return times_.size() - 1; }
    double time(std::size_t k) const { return times_[k]; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> latest() const { return latest_; }
    std::span<const double> initial() const { return initial_; }
    std::span<const double> increment(std::size_t j) const { return increments_[j - 1]; }

    Field field(std::size_t k) const {
        if (k > last()) throw ParameterError("history index out of range");
        if (k == last()) return Field(grid_, latest_, times_[k]);
        std::vector<double> v = initial_;
        for (std::size_t j = 1; j <= k; ++j) {
            const auto& d = increments_[j - 1];
            for (std::size_t n = 0; n < v.size(); ++n) v[n] += d[n];
        }
        return Field(grid_, std::move(v), times_[k]);
    }

    void push(const Field& next) {
        if (!same_grid(next.grid_ptr(), grid_)) throw StructuralError("history fields must share one grid");
        if (!(next.time() > times_.back())) throw ParameterError("history times must increase");
        std::vector<double> d(latest_.size());
        const auto v = next.values();
        for (std::size_t n = 0; n < d.size(); ++n) d[n] = v[n] - latest_[n];
        increments_.push_back(std::move(d));
        latest_.assign(v.begin(), v.end());
        times_.push_back(next.time());
    }

    /// Checks that stored time labels coincide with the mesh prefix.
    void check_against(const TimeMesh& mesh) const {
        if (size() > mesh.steps() + 1) throw StructuralError("history is longer than the mesh");
        for (std::size_t k = 0; k < size(); ++k) {
            if (std::abs(times_[k] - mesh[k]) > 1e-12 * std::max(1.0, mesh.t_end())) {
                throw StructuralError("history time labels do not match the mesh");
            }
        }
    }

private:
    GridPtr grid_;
    std::vector<double> times_;
    std::vector<double> initial_;
    std::vector<double> latest_;
    std::vector<std::vector<double>> increments_;
};

/// L1 Caputo derivative at t_k of a field history (k <= history.last()).
inline Field discrete_caputo(const HistoryBuffer& history, const TimeMesh& mesh, std::size_t k) {
    if (k > history.last()) throw ParameterError("insufficient history for the Caputo derivative");
    std::vector<double> out(history.latest().size(), 0.0);
    if (k > 0) {
        const auto a = l1_coefficients(mesh, k);
        for (std::size_t j = 1; j <= k; ++j) {
            const auto d = history.increment(j);
            const double c = a[j - 1];
            for (std::size_t n = 0; n < out.size(); ++n) out[n] += c * d[n];
        }
    }
    return Field(history.grid_ptr(), std::move(out), mesh[k]);
}

}  // namespace fradiff
