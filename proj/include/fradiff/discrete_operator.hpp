#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fradiff/grid.hpp"

namespace fradiff {

using DenseJacobian = Eigen::MatrixXd;
using SparseJacobian = Eigen::SparseMatrix<double>;

/// Derivative of the operator with respect to interior unknowns, in `Grid::interior()` order.
using Jacobian = std::variant<DenseJacobian, SparseJacobian>;

/// Spatial operator discretised on a fixed grid: u -> N[u] with zero boundary entries.
class DiscreteOperator {
public:
    explicit DiscreteOperator(GridPtr grid) : grid_(std::move(grid)) {}
    virtual ~DiscreteOperator() = default;

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }

    /// Writes N[u] into `out` (size = grid size); boundary entries are set to zero.
    virtual void apply(std::span<const double> u, std::span<double> out) const = 0;
    virtual Jacobian jacobian(std::span<const double> u) const = 0;

    Field apply(const Field& u) const {
        if (!same_grid(u.grid_ptr(), grid_)) throw StructuralError("operator and field grids differ");
        std::vector<double> out(u.size(), 0.0);
        apply(u.values(), out);
        return Field(grid_, std::move(out), u.time());
    }

private:
    GridPtr grid_;
};

namespace detail {

/// sign(x) |x|^e, with exact shortcuts for e = 1 and e = 2.
inline double signed_pow(double x, double e) {
    if (e == 1.0) return x;
    if (e == 2.0) return x * std::abs(x);
    const double a = std::abs(x);
    if (a == 0.0) return 0.0;
    return std::copysign(std::pow(a, e), x);
}

/// |d|^(p-2) d.
inline double p_power(double d, double p) { return signed_pow(d, p - 1.0); }

/// Derivative of p_power; for p < 2 the singular factor is regularised by `reg`.
inline double p_power_derivative(double d, double p, double reg) {
    if (p == 2.0) return 1.0;
    if (p > 2.0) return (p - 1.0) * std::pow(std::abs(d), p - 2.0);
    return (p - 1.0) * std::pow(d * d + reg * reg, 0.5 * (p - 2.0));
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// d/du of signed_pow(u, m); capped near zero when m < 1.
inline double power_derivative(double u, double m, double floor) {
    if (m == 1.0) return 1.0;
    const double a = std::abs(u);
    if (m < 1.0) return m * std::pow(std::max(a, floor), m - 1.0);
    return m * std::pow(a, m - 1.0);
}

}  // namespace detail

}  // namespace fradiff
