#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fradiff/discrete_operator.hpp"
#include "fradiff/frac_mean_curvature.hpp"
#include "fradiff/local_operators.hpp"
#include "fradiff/nonlocal_operators.hpp"
#include "fradiff/operator_spec.hpp"

namespace fradiff {

struct OperatorOptions {
    /// Expected bound on |grad u|; sizes the fractional curvature table.
    double slope_bound = 40.0;
};

/// Builds the discrete operator for `spec` on `grid`.
inline std::unique_ptr<DiscreteOperator> make_operator(const OperatorSpec& spec, GridPtr grid,
                                                       const OperatorOptions& options = {}) {
    spec.check_dimension(grid->dim());
    if (spec.is_local()) return std::make_unique<LocalOperator>(std::move(grid), spec);
    if (spec.is_frac_mean_curvature()) {
        return std::make_unique<FracMeanCurvatureOperator>(std::move(grid), spec, options.slope_bound);
    }
    return std::make_unique<NonlocalOperator>(std::move(grid), spec);
}

/// Local operators: -Delta_p u^m or minus the mean curvature divergence.
inline Field apply_local(const OperatorSpec& spec, const Field& u) {
    if (!spec.is_local()) throw ParameterError("apply_local requires a local operator kind");
    return LocalOperator(u.grid_ptr(), spec).apply(u);
}

/// Fractional Laplacian family with zero exterior data.
inline Field apply_nonlocal(const OperatorSpec& spec, const Field& u) {
    if (!spec.is_nonlocal()) throw ParameterError("apply_nonlocal requires a fractional operator kind");
    return NonlocalOperator(u.grid_ptr(), spec).apply(u);
}

/// Gradient statistics of a field: the sup and the area functional.
struct GradientAudit {
    double max_gradient = 0.0;
    /// Integral of sqrt(1 + |grad u|^2) over the domain.
    double area = 0.0;
};

/// Forward-difference gradient audit.
inline GradientAudit gradient_audit(const Field& u) {
    const Grid& g = u.grid();
    GradientAudit out;
    const auto w = g.weights();
    const auto v = u.values();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const auto mi = g.multi_index(n);
        double g2 = 0.0;
        for (std::size_t d = 0; d < g.dim(); ++d) {
            if (mi[d] + 1 < g.axis(d).points) {
                const double gd = (v[n + g.stride(d)] - v[n]) / g.axis(d).spacing();
                g2 += gd * gd;
            }
        }
        out.max_gradient = std::max(out.max_gradient, std::sqrt(g2));
        out.area += w[n] * std::sqrt(1.0 + g2);
    }
    return out;
}

/// Result of the fractional mean curvature operator plus the hypothesis audit.
struct CurvatureApplication {
    Field image;
    double max_gradient = 0.0;
    std::vector<std::string> warnings;
};

/// Fractional mean curvature; a gradient above `gradient_bound` is reported, not fatal.
inline CurvatureApplication apply_frac_mean_curvature(const OperatorSpec& spec, const Field& u,
                                                      double gradient_bound = 40.0) {
    if (!spec.is_frac_mean_curvature()) throw ParameterError("apply_frac_mean_curvature requires frac_mean_curvature");
    const GradientAudit audit = gradient_audit(u);
    CurvatureApplication out{FracMeanCurvatureOperator(u.grid_ptr(), spec, gradient_bound).apply(u),
                             audit.max_gradient, {}};
    if (audit.max_gradient > gradient_bound) {
        out.warnings.push_back("gradient bound violated: max |grad u| = " + std::to_string(audit.max_gradient) +
                               " > " + std::to_string(gradient_bound));
    }
    return out;
}

/// Any catalog operator applied once.
inline Field apply_operator(const OperatorSpec& spec, const Field& u) {
    return make_operator(spec, u.grid_ptr())->apply(u);
}

/// Symmetrised energy of nonlocal operators; throws for local ones.
inline double symmetrized_energy(const DiscreteOperator& op, const Field& u, double s) {
    if (const auto* nl = dynamic_cast<const NonlocalOperator*>(&op)) return nl->symmetrized_energy(u.values(), s);
    if (const auto* fm = dynamic_cast<const FracMeanCurvatureOperator*>(&op)) return fm->symmetrized_energy(u.values(), s);
    throw ParameterError("symmetrized energy is defined for nonlocal operators only");
}

}  // namespace fradiff
