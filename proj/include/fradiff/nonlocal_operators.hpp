#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fradiff/discrete_operator.hpp"
#include "fradiff/operator_spec.hpp"

namespace fradiff {

namespace detail {

/// Bounds of the rectangle covered by the cells of interior nodes (half a spacing inside the box).
struct CellHull {
    double lo[2];
    double hi[2];

    static CellHull of(const Grid& g) {
        CellHull c{};
        for (std::size_t d = 0; d < g.dim(); ++d) {
            const double h = g.axis(d).spacing();
            c.lo[d] = g.axis(d).lower + 0.5 * h;
            c.hi[d] = g.axis(d).upper - 0.5 * h;
        }
        return c;
    }
};

/**
 * Integral of cos(psi)^beta over the angular sector subtended by a segment at
 * perpendicular distance `dist`, running from tangential offset `a` to `b`, times dist^-beta.
 * Equals the integral of rho(theta)^-beta over that sector.
 */
inline double edge_sector_integral(double dist, double a, double b, double beta) {
    const double lo = std::atan2(a, dist), hi = std::atan2(b, dist);
    auto f = [beta](double psi) { return std::pow(std::cos(psi), beta); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    // Splitting at psi = 0 keeps each piece monotone.
    if (lo < 0.0 && hi > 0.0) {
        total = GK::integrate(f, lo, 0.0, 12, 1e-13) + GK::integrate(f, 0.0, hi, 12, 1e-13);
    } else {
        total = GK::integrate(f, lo, hi, 12, 1e-13);
    }
    return total * std::pow(dist, -beta);
}

/// Integral of |x - y|^(-2-beta) over y outside the rectangle [lo, hi], for x inside it.
inline double rectangle_exterior_mass_2d(double x, double y, const CellHull& c, double beta) {
    double sum = 0.0;
    sum += edge_sector_integral(c.hi[0] - x, c.lo[1] - y, c.hi[1] - y, beta);
    sum += edge_sector_integral(x - c.lo[0], c.lo[1] - y, c.hi[1] - y, beta);
    sum += edge_sector_integral(c.hi[1] - y, c.lo[0] - x, c.hi[0] - x, beta);
    sum += edge_sector_integral(y - c.lo[1], c.lo[0] - x, c.hi[0] - x, beta);
    return sum / beta;
}

}  // namespace detail

/// One summand beta * (-Delta)^sigma_p applied to u^m, either isotropic or along one axis.
struct KernelTerm {
    double weight = 1.0;  ///< beta
    double p = 2.0;
    double order = 1.0;   ///< kernel decay exponent: |y|^-(n + order), order = sigma * p
    int axis = -1;        ///< -1: isotropic in the grid dimension; 0/1: one-dimensional along that axis
};

/**
 * Principal-value quadrature for operators of the form
 *
 *   N[u](x) = sum_t beta_t * integral phi_t(v(x) - v(y)) |x - y|^-(n + order_t) dy,   v = u^m,
 *
 * with u = 0 outside the domain. Each interior node owns a cell of side h;
 * pairs of distinct interior nodes are weighted by cell volume times the
 * kernel at the node distance, the node's own cell contributes nothing, and
 * the kernel mass outside the union of interior cells is integrated exactly
 * (that is where v(y) = 0, so it multiplies phi_t(v(x))).
 */
class NonlocalOperator final : public DiscreteOperator {
public:
    NonlocalOperator(GridPtr grid, const OperatorSpec& spec) : DiscreteOperator(std::move(grid)) {
        if (!spec.is_nonlocal()) throw ParameterError("NonlocalOperator requires a fractional operator kind");
        spec.check_dimension(this->grid().dim());
        std::visit(
            [this](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, ops::FracLaplacian>) {
                    terms_.push_back({1.0, 2.0, 2.0 * k.sigma, -1});
                } else if constexpr (std::is_same_v<T, ops::FracPLaplacian>) {
                    terms_.push_back({1.0, k.p, k.sigma * k.p, -1});
                } else if constexpr (std::is_same_v<T, ops::FracSum>) {
                    for (const auto& t : k.terms) terms_.push_back({t.beta, t.p, t.sigma * t.p, -1});
                } else if constexpr (std::is_same_v<T, ops::DirectionalFrac>) {
                    for (std::size_t d = 0; d < k.axes.size(); ++d) {
                        terms_.push_back({k.axes[d].beta, 2.0, 2.0 * k.axes[d].sigma, static_cast<int>(d)});
                    }
                } else if constexpr (std::is_same_v<T, ops::FracPorousMedium>) {
                    terms_.push_back({1.0, 2.0, 2.0 * k.sigma, -1});
                    m_ = k.m;
                }
            },
            spec.kind());
        for (const KernelTerm& t : terms_) tables_.push_back(build_table(t));
    }

    const std::vector<KernelTerm>& terms() const { return terms_; }

    using DiscreteOperator::apply;

    void apply(std::span<const double> u, std::span<double> out) const override {
        const Grid& g = grid();
        const auto interior = g.interior();
        std::fill(out.begin(), out.end(), 0.0);
        const std::vector<double> v = powered(u);
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const KernelTerm& term = terms_[t];
            const Table& tab = tables_[t];
            for (std::size_t k = 0; k < interior.size(); ++k) {
                const std::size_t i = interior[k];
                double acc = tab.exterior[k] * detail::p_power(v[i], term.p);
                for_each_partner(t, i, [&](std::size_t j, double w) {
                    acc += w * detail::p_power(v[i] - v[j], term.p);
                });
                out[i] += term.weight * acc;
            }
        }
    }

    Jacobian jacobian(std::span<const double> u) const override {
        const Grid& g = grid();
        const auto interior = g.interior();
        const auto m = static_cast<Eigen::Index>(interior.size());
        std::vector<std::ptrdiff_t> slot(g.size(), -1);
        for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<std::ptrdiff_t>(k);

        const std::vector<double> v = powered(u);
        const double vscale = detail::max_abs(v);
        const double uscale = detail::max_abs(u);
        const double reg = 1e-8 * vscale;
        std::vector<double> dv(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) dv[n] = detail::power_derivative(u[n], m_, 1e-8 * uscale);

        const bool dense = has_isotropic_term();
        DenseJacobian jd;
        std::vector<Eigen::Triplet<double>> triplets;
        if (dense) jd = DenseJacobian::Zero(m, m);
        auto add = [&](Eigen::Index r, Eigen::Index c, double val) {
            if (dense) jd(r, c) += val;
            else triplets.emplace_back(r, c, val);
        };

        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const KernelTerm& term = terms_[t];
            const Table& tab = tables_[t];
            for (std::size_t k = 0; k < interior.size(); ++k) {
                const std::size_t i = interior[k];
                double diag = tab.exterior[k] * detail::p_power_derivative(v[i], term.p, reg);
                for_each_partner(t, i, [&](std::size_t j, double w) {
                    const double d = w * detail::p_power_derivative(v[i] - v[j], term.p, reg);
                    diag += d;
                    add(static_cast<Eigen::Index>(k), slot[j], -term.weight * d * dv[j]);
                });
                add(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), term.weight * diag * dv[i]);
            }
        }
        if (dense) return jd;
        SparseJacobian js(m, m);
        js.setFromTriplets(triplets.begin(), triplets.end());
        return js;
    }

    /**
     * Symmetrised form of the quadrature of u^(s-1) N[u]:
     *   1/2 sum_{i,j} w_i W_ij phi(v_i - v_j)(u_i^(s-1) - u_j^(s-1)) + sum_i w_i kappa_i phi(v_i) u_i^(s-1).
     * Every summand is nonnegative for u >= 0.
     */
    double symmetrized_energy(std::span<const double> u, double s) const {
        const Grid& g = grid();
        const auto interior = g.interior();
        const auto weights = g.weights();
        const std::vector<double> v = powered(u);
        std::vector<double> us(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) us[n] = std::pow(std::max(u[n], 0.0), s - 1.0);
        double total = 0.0;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const KernelTerm& term = terms_[t];
            const Table& tab = tables_[t];
            double pairs = 0.0, tail = 0.0;
            for (std::size_t k = 0; k < interior.size(); ++k) {
                const std::size_t i = interior[k];
                tail += weights[i] * tab.exterior[k] * detail::p_power(v[i], term.p) * us[i];
                for_each_partner(t, i, [&](std::size_t j, double w) {
                    pairs += weights[i] * w * detail::p_power(v[i] - v[j], term.p) * (us[i] - us[j]);
                });
            }
            total += term.weight * (0.5 * pairs + tail);
        }
        return total;
    }

private:
    struct Table {
        /// Pair weight by |offset| along each axis (2D isotropic: offsets (|di|, |dj|), row-major).
        std::vector<double> pair;
        std::size_t stride = 0;
        /// Exterior kernel mass per interior node, in Grid::interior() order.
        std::vector<double> exterior;
    };

    bool has_isotropic_term() const {
        for (const auto& t : terms_) {
            if (t.axis < 0 || grid().dim() == 1) return true;
        }
        return false;
    }

    std::vector<double> powered(std::span<const double> u) const {
        std::vector<double> v(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) v[n] = detail::signed_pow(u[n], m_);
        return v;
    }

    Table build_table(const KernelTerm& term) const {
        const Grid& g = grid();
        Table tab;
        const auto hull = detail::CellHull::of(g);
        const double beta = term.order;
        const bool one_dim = g.dim() == 1 || term.axis >= 0;
        if (one_dim) {
            const std::size_t d = term.axis >= 0 ? static_cast<std::size_t>(term.axis) : 0;
            const double h = g.axis(d).spacing();
            tab.pair.resize(g.axis(d).points, 0.0);
            for (std::size_t k = 1; k < tab.pair.size(); ++k) {
                tab.pair[k] = h * std::pow(static_cast<double>(k) * h, -1.0 - beta);
            }
            for (std::size_t n : g.interior()) {
                const double x = g.coordinates(n)[d];
                tab.exterior.push_back((std::pow(x - hull.lo[d], -beta) + std::pow(hull.hi[d] - x, -beta)) / beta);
            }
        } else {
            const std::size_t nx = g.axis(0).points, ny = g.axis(1).points;
            const double hx = g.axis(0).spacing(), hy = g.axis(1).spacing();
            const double vol = hx * hy;
            tab.stride = ny;
            tab.pair.assign(nx * ny, 0.0);
            for (std::size_t a = 0; a < nx; ++a) {
                for (std::size_t b = 0; b < ny; ++b) {
                    if (a == 0 && b == 0) continue;
                    const double r = std::hypot(static_cast<double>(a) * hx, static_cast<double>(b) * hy);
                    tab.pair[a * ny + b] = vol * std::pow(r, -2.0 - beta);
                }
            }
            for (std::size_t n : g.interior()) {
                const auto x = g.coordinates(n);
                tab.exterior.push_back(detail::rectangle_exterior_mass_2d(x[0], x[1], hull, beta));
            }
        }
        return tab;
    }

    /// Calls fn(j, W_ij) for every interior partner j != i coupled to i by term t.
    template <class Fn>
    void for_each_partner(std::size_t t, std::size_t i, Fn&& fn) const {
        const Grid& g = grid();
        const KernelTerm& term = terms_[t];
        const Table& tab = tables_[t];
        if (g.dim() == 1 || term.axis >= 0) {
            const std::size_t d = term.axis >= 0 ? static_cast<std::size_t>(term.axis) : 0;
            const auto mi = g.multi_index(i);
            const std::size_t pos = mi[d];
            const std::size_t npts = g.axis(d).points;
            const std::size_t stride = g.stride(d);
            for (std::size_t q = 1; q + 1 < npts; ++q) {
                if (q == pos) continue;
                const std::size_t off = q > pos ? q - pos : pos - q;
                fn(i + q * stride - pos * stride, tab.pair[off]);
            }
            return;
        }
        const auto mi = g.multi_index(i);
        const std::size_t nx = g.axis(0).points, ny = g.axis(1).points;
        for (std::size_t a = 1; a + 1 < nx; ++a) {
            const std::size_t da = a > mi[0] ? a - mi[0] : mi[0] - a;
            for (std::size_t b = 1; b + 1 < ny; ++b) {
                if (a == mi[0] && b == mi[1]) continue;
                const std::size_t db = b > mi[1] ? b - mi[1] : mi[1] - b;
                fn(a * ny + b, tab.pair[da * tab.stride + db]);
            }
        }
    }

    std::vector<KernelTerm> terms_;
    std::vector<Table> tables_;
    double m_ = 1.0;
};

}  // namespace fradiff
