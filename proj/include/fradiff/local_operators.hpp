#pragma once

#include <cmath>
#include <vector>

#include "fradiff/discrete_operator.hpp"
#include "fradiff/operator_spec.hpp"

namespace fradiff {

/**
 * Conservative finite-difference form of -div(Phi(grad u^m)).
 *
 * Phi(g) = |g|^(p-2) g for the doubly nonlinear family (Laplacian, p-Laplacian,
 * porous medium) and Phi(g) = g / sqrt(1 + |g|^2) for the mean curvature operator.
 * Fluxes live on the midpoints between neighbouring nodes. In 2D the transverse
 * gradient component on a face is the average of the central differences at
 * its two end nodes.
 */
class LocalOperator final : public DiscreteOperator {
public:
    enum class Flux { Power, Curvature };

    LocalOperator(GridPtr grid, const OperatorSpec& spec) : DiscreteOperator(std::move(grid)) {
        if (!spec.is_local()) throw ParameterError("LocalOperator requires a local operator kind");
        if (spec.is<ops::PLaplacian>()) {
            p_ = spec.as<ops::PLaplacian>().p;
        } else if (spec.is<ops::PorousMedium>()) {
            m_ = spec.as<ops::PorousMedium>().m;
        } else if (spec.is<ops::DoublyNonlinear>()) {
            p_ = spec.as<ops::DoublyNonlinear>().p;
            m_ = spec.as<ops::DoublyNonlinear>().m;
        } else if (spec.is<ops::MeanCurvature>()) {
            flux_ = Flux::Curvature;
        }
    }

    double p() const { return p_; }
    double m() const { return m_; }

    using DiscreteOperator::apply;

    void apply(std::span<const double> u, std::span<double> out) const override {
        const Grid& g = grid();
        std::vector<double> v(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) v[n] = detail::signed_pow(u[n], m_);
        std::fill(out.begin(), out.end(), 0.0);

        const double reg = regularization(v);
        for_each_face(v, [&](std::size_t a, std::size_t b, double h, double gn, double gt) {
            const double phi = gn * coefficient(gn * gn + gt * gt, reg);
            out[a] -= phi / h;
            out[b] += phi / h;
        });
        for (std::size_t n = 0; n < out.size(); ++n) {
            if (g.is_boundary(n)) out[n] = 0.0;
        }
    }

    /// Finite-difference Jacobian using a 3-colouring per axis (the stencil has radius one).
    Jacobian jacobian(std::span<const double> u) const override {
        const Grid& g = grid();
        const auto interior = g.interior();
        std::vector<std::ptrdiff_t> slot(g.size(), -1);
        for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<std::ptrdiff_t>(k);

        std::vector<double> base(u.size()), pert(u.size()), shifted(u.begin(), u.end());
        apply(u, base);
        const double scale = std::max(detail::max_abs(u), 1e-300);
        const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());

        std::vector<Eigen::Triplet<double>> triplets;
        const std::size_t ny = g.dim() == 2 ? g.axis(1).points : 1;
        const std::size_t colours_y = g.dim() == 2 ? 3 : 1;
        for (std::size_t cx = 0; cx < 3; ++cx) {
            for (std::size_t cy = 0; cy < colours_y; ++cy) {
                std::vector<std::size_t> touched;
                std::vector<double> step;
                for (std::size_t n : interior) {
                    const auto mi = g.multi_index(n);
                    if (mi[0] % 3 != cx || mi[1] % 3 != cy) continue;
                    const double delta = root_eps * std::max(std::abs(u[n]), 1e-3 * scale);
                    shifted[n] = u[n] + delta;
                    touched.push_back(n);
                    step.push_back(shifted[n] - u[n]);
                }
                if (touched.empty()) continue;
                apply(shifted, pert);
                for (std::size_t t = 0; t < touched.size(); ++t) {
                    const std::size_t q = touched[t];
                    const auto mq = g.multi_index(q);
                    for (int di = -1; di <= 1; ++di) {
                        for (int dj = (g.dim() == 2 ? -1 : 0); dj <= (g.dim() == 2 ? 1 : 0); ++dj) {
                            const auto ri = static_cast<std::ptrdiff_t>(mq[0]) + di;
                            const auto rj = static_cast<std::ptrdiff_t>(mq[1]) + dj;
                            if (ri < 0 || rj < 0 || ri >= static_cast<std::ptrdiff_t>(g.axis(0).points) ||
                                rj >= static_cast<std::ptrdiff_t>(ny)) {
                                continue;
                            }
                            const std::size_t r = g.node(static_cast<std::size_t>(ri), static_cast<std::size_t>(rj));
                            if (slot[r] < 0) continue;
                            const double d = (pert[r] - base[r]) / step[t];
                            if (d != 0.0) triplets.emplace_back(slot[r], slot[q], d);
                        }
                    }
                    shifted[q] = u[q];
                }
            }
        }
        SparseJacobian jac(static_cast<Eigen::Index>(interior.size()), static_cast<Eigen::Index>(interior.size()));
        jac.setFromTriplets(triplets.begin(), triplets.end());
        return jac;
    }

    /// Sum of face fluxes leaving through the outermost faces (1D: Phi at the first and last face).
    double boundary_flux(std::span<const double> u) const {
        const Grid& g = grid();
        std::vector<double> v(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) v[n] = detail::signed_pow(u[n], m_);
        const double reg = regularization(v);
        double total = 0.0;
        for_each_face(v, [&](std::size_t a, std::size_t b, double h, double gn, double gt) {
            const double phi = gn * coefficient(gn * gn + gt * gt, reg);
            // Faces with exactly one boundary end carry flux across the domain boundary.
            const bool ab = g.is_boundary(a), bb = g.is_boundary(b);
            if (ab && !bb) total += phi / h * weight_across(a, b);
            if (bb && !ab) total -= phi / h * weight_across(a, b);
        });
        return total;
    }

private:
    double coefficient(double g2, double reg) const {
        if (flux_ == Flux::Curvature) return 1.0 / std::sqrt(1.0 + g2);
        if (p_ == 2.0) return 1.0;
        if (p_ < 2.0) {
            const double r2 = g2 + reg * reg;
            return r2 == 0.0 ? 0.0 : std::pow(r2, 0.5 * (p_ - 2.0));
        }
        return g2 == 0.0 ? 0.0 : std::pow(g2, 0.5 * (p_ - 2.0));
    }

    /// 1e-8 times the largest face gradient; used only when p < 2.
    double regularization(const std::vector<double>& v) const {
        if (flux_ == Flux::Curvature || p_ >= 2.0) return 0.0;
        double gmax = 0.0;
        for_each_face(v, [&](std::size_t, std::size_t, double, double gn, double gt) {
            gmax = std::max(gmax, std::sqrt(gn * gn + gt * gt));
        });
        return 1e-8 * gmax;
    }

    /// Quadrature weight of an interior node next to the face (a, b).
    double weight_across(std::size_t, std::size_t) const { return grid().cell_volume(); }

    /// Visits every face whose flux can reach an interior node: fn(a, b, h, normal grad, transverse grad).
    template <class Fn>
    void for_each_face(const std::vector<double>& v, Fn&& fn) const {
        const Grid& g = grid();
        if (g.dim() == 1) {
            const double h = g.axis(0).spacing();
            for (std::size_t i = 0; i + 1 < g.axis(0).points; ++i) fn(i, i + 1, h, (v[i + 1] - v[i]) / h, 0.0);
            return;
        }
        const std::size_t nx = g.axis(0).points, ny = g.axis(1).points;
        const double hx = g.axis(0).spacing(), hy = g.axis(1).spacing();
        const auto central = [&](std::size_t n, std::size_t stride, double h) {
            return (v[n + stride] - v[n - stride]) / (2.0 * h);
        };
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            for (std::size_t j = 1; j + 1 < ny; ++j) {
                const std::size_t a = g.node(i, j), b = g.node(i + 1, j);
                const double gt = 0.5 * (central(a, 1, hy) + central(b, 1, hy));
                fn(a, b, hx, (v[b] - v[a]) / hx, gt);
            }
        }
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            for (std::size_t j = 0; j + 1 < ny; ++j) {
                const std::size_t a = g.node(i, j), b = g.node(i, j + 1);
                const double gt = 0.5 * (central(a, ny, hx) + central(b, ny, hx));
                fn(a, b, hy, (v[b] - v[a]) / hy, gt);
            }
        }
    }

    double p_ = 2.0;
    double m_ = 1.0;
    Flux flux_ = Flux::Power;
};

}  // namespace fradiff
