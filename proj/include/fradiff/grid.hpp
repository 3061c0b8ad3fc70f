#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fradiff/errors.hpp"

namespace fradiff {

/// One coordinate direction of a tensor grid: `points` equispaced nodes on [lower, upper].
struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t points = 3;

    double spacing() const { return (upper - lower) / static_cast<double>(points - 1); }
    double coordinate(std::size_t i) const {
        return i + 1 == points ? upper : lower + static_cast<double>(i) * spacing();
    }

    friend bool operator==(const Axis&, const Axis&) = default;
};

/**
 * Uniform tensor grid on a box in one or two dimensions.
 *
 * Nodes on the box boundary carry the homogeneous Dirichlet value; everything
 * outside the box is identically zero. Node storage is row-major with the
 * first axis varying slowest: index = i * ny + j.
 */
class Grid {
public:
    explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        if (axes_.empty() || axes_.size() > 2) {
            throw ParameterError("grid dimension must be 1 or 2");
        }
        for (const Axis& a : axes_) {
            if (!(a.lower < a.upper)) throw ParameterError("grid axis requires lower < upper");
            if (a.points < 3) throw ParameterError("grid axis requires at least 3 points");
            if (!(a.spacing() > 0.0)) throw ParameterError("grid spacing must be positive");
        }
        build_tables();
    }

    static Grid line(double lower, double upper, std::size_t points) {
        return Grid({Axis{lower, upper, points}});
    }
    static Grid box(Axis x, Axis y) { return Grid({x, y}); }
    static Grid unit(std::size_t dim, std::size_t points) {
        return Grid(std::vector<Axis>(dim, Axis{0.0, 1.0, points}));
    }

    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t d) const { return axes_.at(d); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t size() const { return weights_.size(); }

    /// Multi-index of a node (second entry is 0 in 1D).
    std::array<std::size_t, 2> multi_index(std::size_t node) const {
        if (dim() == 1) return {node, 0};
        const std::size_t ny = axes_[1].points;
        return {node / ny, node % ny};
    }
    std::size_t node(std::size_t i, std::size_t j = 0) const {
        return dim() == 1 ? i : i * axes_[1].points + j;
    }
    /// Stride between neighbouring nodes along axis d.
    std::size_t stride(std::size_t d) const { return (dim() == 2 && d == 0) ? axes_[1].points : 1; }

    std::array<double, 2> coordinates(std::size_t node) const {
        const auto mi = multi_index(node);
        return {axes_[0].coordinate(mi[0]), dim() == 2 ? axes_[1].coordinate(mi[1]) : 0.0};
    }

    bool is_boundary(std::size_t node) const { return boundary_[node] != 0; }
    /// Trapezoid quadrature weight of each node.
    std::span<const double> weights() const { return weights_; }
    /// Indices of non-boundary nodes, in storage order.
    std::span<const std::size_t> interior() const { return interior_; }
    /// Volume of one interior cell (product of spacings).
    double cell_volume() const {
        double v = 1.0;
        for (const Axis& a : axes_) v *= a.spacing();
        return v;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.axes_ == b.axes_; }

private:
    void build_tables() {
        std::vector<std::vector<double>> w1(dim());
        for (std::size_t d = 0; d < dim(); ++d) {
            const Axis& a = axes_[d];
            w1[d].assign(a.points, a.spacing());
            w1[d].front() *= 0.5;
            w1[d].back() *= 0.5;
        }
        const std::size_t nx = axes_[0].points;
        const std::size_t ny = dim() == 2 ? axes_[1].points : 1;
        weights_.resize(nx * ny);
        boundary_.resize(nx * ny);
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                const std::size_t n = node(i, j);
                bool edge = (i == 0 || i + 1 == nx);
                double w = w1[0][i];
                if (dim() == 2) {
                    edge = edge || j == 0 || j + 1 == ny;
                    w *= w1[1][j];
                }
                weights_[n] = w;
                boundary_[n] = edge ? 1 : 0;
                if (!edge) interior_.push_back(n);
            }
        }
    }

    std::vector<Axis> axes_;
    std::vector<double> weights_;
    std::vector<unsigned char> boundary_;
    std::vector<std::size_t> interior_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(Grid g) { return std::make_shared<const Grid>(std::move(g)); }

/// Relative magnitude below which negative samples count as round-off.
inline constexpr double kNegativeTolerance = 1e-12;

inline bool same_grid(const GridPtr& a, const GridPtr& b) { return a == b || (a && b && *a == *b); }

/**
 * Nodal samples of a nonnegative function on a grid at time `time`.
 *
 * Values are stored as given; `validate()` enforces the nonnegativity and
 * boundary invariants and `clamped()` removes round-off negativity.
 */
class Field {
public:
    Field() = default;
    Field(GridPtr grid, std::vector<double> values, double time = 0.0)
        : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
        if (!grid_) throw StructuralError("field requires a grid");
        if (values_.size() != grid_->size()) throw StructuralError("field size does not match grid");
        if (!(time_ >= 0.0)) throw ParameterError("field time label must be nonnegative");
    }
    static Field zeros(GridPtr grid, double time = 0.0) {
        const std::size_t n = grid->size();
        return Field(std::move(grid), std::vector<double>(n, 0.0), time);
    }

    template <class Fn>
    static Field sample(GridPtr grid, Fn&& fn, double time = 0.0) {
        std::vector<double> v(grid->size(), 0.0);
        for (std::size_t n = 0; n < v.size(); ++n) {
            if (!grid->is_boundary(n)) {
                const auto x = grid->coordinates(n);
                v[n] = fn(x[0], x[1]);
            }
        }
        return Field(std::move(grid), std::move(v), time);
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t n) const { return values_[n]; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }
    std::size_t size() const { return values_.size(); }

    double max_value() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, v);
        return m;
    }
    /// Magnitude threshold under which negative samples are treated as zero.
    double negative_tolerance() const { return kNegativeTolerance * std::max(max_value(), 1.0); }

    /// Throws DataError on NaN, on negativity beyond round-off, or on nonzero boundary values.
    void validate() const {
        const double eps = negative_tolerance();
        for (std::size_t n = 0; n < values_.size(); ++n) {
            const double v = values_[n];
            if (std::isnan(v)) throw DataError("field contains NaN");
            if (v < -eps) throw DataError("field is negative beyond round-off at node " + std::to_string(n));
            if (grid_->is_boundary(n) && v != 0.0) throw DataError("field is nonzero on the boundary");
        }
    }

    /// Copy with values in (-eps, 0) replaced by 0; NaN or larger negativity throws.
    Field clamped() const {
        Field out = *this;
        const double eps = negative_tolerance();
        for (double& v : out.values_) {
            if (std::isnan(v)) throw DataError("field contains NaN");
            if (v < 0.0) {
                if (v < -eps) throw DataError("field is negative beyond round-off");
                v = 0.0;
            }
        }
        return out;
    }

    Field scaled(double c) const {
        Field out = *this;
        for (double& v : out.values_) v *= c;
        return out;
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
    double time_ = 0.0;
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (!same_grid(a.grid_ptr(), b.grid_ptr())) throw StructuralError("fields live on different grids");
}

namespace detail {

inline double clamp_sample(double v, double eps) {
    if (std::isnan(v)) throw DataError("field contains NaN");
    if (v < 0.0) {
        if (v < -eps) throw DataError("field is negative beyond round-off");
        return 0.0;
    }
    return v;
}

}  // namespace detail

/// Trapezoid-rule Lebesgue norm (sum_n w_n u_n^s)^(1/s).
inline double lp_norm(const Field& field, double s) {
    if (!(s >= 1.0)) throw ParameterError("lp_norm requires s >= 1");
    const double eps = field.negative_tolerance();
    const auto w = field.grid().weights();
    const auto u = field.values();
    double peak = 0.0;
    for (double v : u) peak = std::max(peak, detail::clamp_sample(v, eps));
    if (peak == 0.0) return 0.0;
    // Normalising by the peak keeps u^s away from under/overflow for large s.
    double acc = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double v = detail::clamp_sample(u[n], eps);
        if (v > 0.0) acc += w[n] * std::pow(v / peak, s);
    }
    return peak * std::pow(acc, 1.0 / s);
}

/// Trapezoid value of the integral of u^(s-1) times `operator_image`.
inline double inner_energy(const Field& field, double s, const Field& operator_image) {
    if (!(s > 1.0)) throw ParameterError("inner_energy requires s > 1");
    require_same_grid(field, operator_image);
    const double eps = field.negative_tolerance();
    const auto w = field.grid().weights();
    const auto u = field.values();
    const auto img = operator_image.values();
    double acc = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (std::isnan(img[n])) throw DataError("operator image contains NaN");
        const double v = detail::clamp_sample(u[n], eps);
        if (v > 0.0) acc += w[n] * std::pow(v, s - 1.0) * img[n];
    }
    return acc;
}

}  // namespace fradiff
