#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fradiff/caputo.hpp"
#include "fradiff/errors.hpp"

namespace fradiff {

namespace detail {

/// 1/Gamma(x), zero at the poles.
inline double reciprocal_gamma(double x) {
    if (x <= 0.0 && std::abs(x - std::round(x)) < 1e-12) return 0.0;
    return 1.0 / std::tgamma(x);
}

inline double ml_series(double alpha, double z) {
    double sum = 0.0;
    for (int k = 0; k < 400; ++k) {
        const double term = std::pow(z, k) / std::tgamma(alpha * k + 1.0);
        sum += term;
        if (k > 2 && std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) break;
    }
    return sum;
}

/// Asymptotic expansion on the negative axis; false when it cannot reach full precision.
inline bool ml_asymptotic(double alpha, double z, double& out) {
    double sum = 0.0;
    double smallest = INFINITY;
    double previous = INFINITY;
    for (int m = 1; m <= 60; ++m) {
        const double term = -std::pow(z, -m) * reciprocal_gamma(1.0 - alpha * m);
        const double mag = std::abs(term);
        if (mag == 0.0) continue;
        if (mag > previous) break;
        previous = mag;
        sum += term;
        smallest = mag;
    }
    out = sum;
    return smallest <= 1e-14 * std::abs(sum);
}

/**
 * E_alpha(-t^alpha) = int_0^1 K(r) (e^{-rt} + e^{-t/r}) dr,
 * K(r) = sin(alpha pi) r^(alpha-1) / (pi (r^(2 alpha) + 2 r^alpha cos(alpha pi) + 1)).
 */
inline double ml_integral(double alpha, double t) {
    const double sn = std::sin(alpha * std::numbers::pi);
    const double cs = std::cos(alpha * std::numbers::pi);
    auto kernel = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double ra = std::pow(r, alpha);
        const double k = sn * ra / r / (std::numbers::pi * (ra * ra + 2.0 * ra * cs + 1.0));
        return k * (std::exp(-r * t) + std::exp(-t / r));
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(kernel, 0.0, 1.0, 1e-15);
}

}  // namespace detail

/// Mittag-Leffler function E_alpha(z) on the decay branch z <= 0, alpha in (0, 1].
inline double mittag_leffler(double alpha, double z) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("Mittag-Leffler order must lie in (0, 1]");
    if (std::isnan(z)) throw ParameterError("Mittag-Leffler argument is NaN");
    if (z > 0.0) throw ParameterError("Mittag-Leffler is implemented for z <= 0 only");
    if (alpha == 1.0) return std::exp(z);
    if (z == 0.0) return 1.0;
    if (std::isinf(z)) return 0.0;
    if (-z <= 1.0) return detail::ml_series(alpha, z);
    double asym = 0.0;
    if (detail::ml_asymptotic(alpha, z, asym)) return asym;
    return detail::ml_integral(alpha, std::pow(-z, 1.0 / alpha));
}

/// Samples of the scalar problem D^alpha w = -w^gamma / C, w(0) = v0, with barrier data.
struct FodeSolution {
    double alpha = 0.5;
    double gamma = 1.0;
    double C = 1.0;
    double v0 = 0.0;
    std::vector<double> times;
    std::vector<double> values;
    /// sup_k w(t_k) (1 + t_k^(alpha/gamma)).
    double cstar = 0.0;
    /// Barrier constant and switch time; zero until fitted.
    double c_bar = 0.0;
    double t0 = 0.0;
};

inline double power_law_cstar(double alpha, double gamma, std::span<const double> times,
                              std::span<const double> values) {
    double best = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        best = std::max(best, values[k] * (1.0 + std::pow(times[k], alpha / gamma)));
    }
    return best;
}

/**
 * L1 implicit scheme for D^alpha w = -w^gamma / C. Each step solves
 * c (w - rhs) + w^gamma / C = 0 on [0, rhs] by Newton safeguarded with bisection.
 */
inline FodeSolution solve_scalar_fode(double alpha, double gamma, double C, double v0, const TimeMesh& mesh) {
    check_alpha(alpha);
    if (std::abs(mesh.alpha() - alpha) > 0.0) throw ParameterError("mesh order differs from alpha");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
    if (!(C > 0.0) || !std::isfinite(C)) throw ParameterError("C must be positive");
    if (!(v0 >= 0.0) || !std::isfinite(v0)) throw ParameterError("initial value must be nonnegative");

    FodeSolution out{alpha, gamma, C, v0, {mesh.nodes().begin(), mesh.nodes().end()}, {}, 0.0, 0.0, 0.0};
    out.values.assign(mesh.steps() + 1, 0.0);
    out.values[0] = v0;
    for (std::size_t k = 1; k <= mesh.steps(); ++k) {
        const auto a = l1_coefficients(mesh, k);
        const double c = a[k - 1];
        double rhs = out.values[k - 1];
        for (std::size_t j = 1; j < k; ++j) rhs -= a[j - 1] / c * (out.values[j] - out.values[j - 1]);
        if (rhs <= 0.0) {
            out.values[k] = 0.0;
            continue;
        }
        auto f = [&](double w) { return c * (w - rhs) + std::pow(w, gamma) / C; };
        double lo = 0.0, hi = rhs;
        double w = out.values[k - 1] < rhs ? out.values[k - 1] : rhs;
        bool done = false;
        for (int it = 0; it < 200; ++it) {
            const double fw = f(w);
            if (std::abs(fw) <= 1e-15 * c * rhs) {
                done = true;
                break;
            }
            if (fw > 0.0) hi = w; else lo = w;
            const double df = c + (w > 0.0 ? gamma * std::pow(w, gamma - 1.0) / C : 0.0);
            double next = std::isfinite(df) ? w - fw / df : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (hi - lo <= 1e-16 * rhs) {
                w = next;
                done = true;
                break;
            }
            w = next;
        }
        if (!done) throw StepError("scalar Newton did not converge", k, std::abs(f(w)) / (c * rhs));
        out.values[k] = w;
    }
    out.cstar = power_law_cstar(alpha, gamma, out.times, out.values);
    return out;
}

/// Barrier w0 for t <= t0 and w0 (t0/t)^(alpha/gamma) beyond, t0 = C_bar w0^((1-gamma)/alpha).
inline std::vector<double> barrier(double alpha, double gamma, double c_bar, double w0, std::span<const double> times) {
    check_alpha(alpha);
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    if (!(c_bar > 0.0)) throw ParameterError("barrier constant must be positive");
    if (!(w0 >= 0.0)) throw ParameterError("barrier level must be nonnegative");
    std::vector<double> out(times.size(), 0.0);
    if (w0 == 0.0) return out;
    const double t0 = c_bar * std::pow(w0, (1.0 - gamma) / alpha);
    for (std::size_t k = 0; k < times.size(); ++k) {
        out[k] = times[k] <= t0 ? w0 : w0 * std::pow(t0 / times[k], alpha / gamma);
    }
    return out;
}

/**
 * Smallest C_bar with w(t_k) <= barrier(t_k) at every node k <= last
 * (all nodes when last is out of range); stores C_bar and t0 in `sol`.
 */
inline double fit_barrier_constant(FodeSolution& sol, std::size_t last = static_cast<std::size_t>(-1)) {
    if (!(sol.v0 > 0.0)) throw ParameterError("barrier fit needs a positive initial value");
    const std::size_t end = std::min(last, sol.values.size() - 1);
    const double e = sol.gamma / sol.alpha;
    double t0 = 0.0;
    for (std::size_t k = 1; k <= end; ++k) {
        t0 = std::max(t0, sol.times[k] * std::pow(sol.values[k] / sol.v0, e));
    }
    if (!(t0 > 0.0)) throw FitError("barrier constant is not identifiable from the samples");
    sol.t0 = t0;
    sol.c_bar = t0 / std::pow(sol.v0, (1.0 - sol.gamma) / sol.alpha);
    return sol.c_bar;
}

}  // namespace fradiff
