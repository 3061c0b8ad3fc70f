#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fradiff/discrete_operator.hpp"
#include "fradiff/nonlocal_operators.hpp"
#include "fradiff/operator_spec.hpp"

namespace fradiff {

/**
 * F(r) = integral_0^r (1 + tau^2)^(-(n+1+sigma)/2) d tau, by adaptive Gauss-Kronrod
 * after the substitution tau = tan(theta), which turns it into the bounded
 * integral of cos(theta)^(n-1+sigma) over [0, atan r].
 */
inline double frac_mean_curv_F(double r, int n, double sigma) {
    detail::check_sigma(sigma);
    if (n < 1) throw ParameterError("frac_mean_curv_F requires n >= 1");
    if (r == 0.0) return 0.0;
    const double e = n - 1.0 + sigma;
    auto f = [e](double th) { return std::pow(std::cos(th), e); };
    const double top = std::atan(std::abs(r));
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, top, 20, 1e-13);
    return std::copysign(val, r);
}

/**
 * Tabulated F and its companion J(z) = integral_0^z tau^sigma (1+tau^2)^-a d tau on [0, r_max],
 * 4096 intervals, cubic Hermite interpolation with exact derivatives.
 * Read-only after construction. Arguments beyond r_max fall back to quadrature.
 */
class FracCurvatureProfile {
public:
    static constexpr std::size_t kIntervals = 4096;

    FracCurvatureProfile(int n, double sigma, double r_max)
        : n_(n), sigma_(sigma), a_(0.5 * (n + 1.0 + sigma)), r_max_(r_max) {
        detail::check_sigma(sigma);
        if (!(r_max > 0.0)) throw ParameterError("profile range must be positive");
        h_ = r_max_ / static_cast<double>(kIntervals);
        f_.resize(kIntervals + 1);
        g_.resize(kIntervals + 1);
        f_[0] = 0.0;
        g_[0] = 1.0 / (1.0 + sigma_);
        using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
        const auto fp = [this](double t) { return F_prime(t); };
        const auto jp = [this](double t) { return J_prime(t); };
        double j = 0.0;
        for (std::size_t k = 0; k < kIntervals; ++k) {
            const double lo = h_ * static_cast<double>(k), hi = h_ * static_cast<double>(k + 1);
            f_[k + 1] = f_[k] + GK::integrate(fp, lo, hi, 0, 0.0);
            if (k == 0) {
                // tau^sigma is not smooth at 0: integrate in x with tau = h x^(1/(1+sigma)).
                const double e = 1.0 / (1.0 + sigma_);
                const auto g = [&](double x) { return std::pow(1.0 + std::pow(hi * std::pow(x, e), 2), -a_); };
                j = std::pow(hi, 1.0 + sigma_) / (1.0 + sigma_) * GK::integrate(g, 0.0, 1.0, 0, 0.0);
            } else {
                j += GK::integrate(jp, lo, hi, 0, 0.0);
            }
            g_[k + 1] = j * std::pow(hi, -1.0 - sigma_);
        }
    }

    int dimension() const { return n_; }
    double sigma() const { return sigma_; }
    double range() const { return r_max_; }

    double F_prime(double r) const { return std::pow(1.0 + r * r, -a_); }
    double J_prime(double z) const { return std::pow(std::abs(z), sigma_) * F_prime(z); }

    double F(double r) const {
        const double a = std::abs(r);
        if (a > r_max_) return frac_mean_curv_F(r, n_, sigma_);
        return std::copysign(hermite(f_, a, [this](double t) { return F_prime(t); }), r);
    }

    double J(double z) const {
        const double a = std::abs(z);
        if (a < h_) return series_J(a);
        if (a > r_max_) return J_direct(a);
        return std::pow(a, 1.0 + sigma_) * G(a);
    }

    /// H(z) = integral_0^1 q^(sigma-1) F(q z) dq = (F(z) - z^-sigma J(z)) / sigma; odd in z.
    double H(double z) const {
        const double a = std::abs(z);
        if (a == 0.0) return 0.0;
        double val = 0.0;
        if (a < h_) {
            const double z2 = a * a;
            val = a * (1.0 / (1.0 + sigma_) - a_ * z2 / (3.0 * (3.0 + sigma_)) +
                       0.5 * a_ * (a_ + 1.0) * z2 * z2 / (5.0 * (5.0 + sigma_)));
        } else {
            val = (F(a) - (a > r_max_ ? std::pow(a, -sigma_) * J_direct(a) : a * G(a))) / sigma_;
        }
        return std::copysign(val, z);
    }

    /// H'(z) = |z|^(-1-sigma) J(|z|); even in z.
    double H_prime(double z) const {
        const double a = std::abs(z);
        if (a < h_) {
            const double z2 = a * a;
            return 1.0 / (1.0 + sigma_) - a_ * z2 / (3.0 + sigma_) + 0.5 * a_ * (a_ + 1.0) * z2 * z2 / (5.0 + sigma_);
        }
        return a > r_max_ ? std::pow(a, -1.0 - sigma_) * J_direct(a) : G(a);
    }

private:
    /// G(z) = z^-(1+sigma) J(z) is analytic in z, so it interpolates far better than J near 0.
    double G(double z) const {
        std::size_t k = static_cast<std::size_t>(z / h_);
        if (k >= kIntervals) k = kIntervals - 1;
        auto slope = [this](std::size_t node) {
            // G'(z) = (F'(z) - (1+sigma) G(z)) / z
            if (node == 0) return 0.0;
            const double r = h_ * static_cast<double>(node);
            return (F_prime(r) - (1.0 + sigma_) * g_[node]) / r;
        };
        const double t = (z - h_ * static_cast<double>(k)) / h_;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * g_[k] + h10 * h_ * slope(k) + h01 * g_[k + 1] + h11 * h_ * slope(k + 1);
    }

    template <class D>
    double hermite(const std::vector<double>& table, double r, D&& deriv) const {
        std::size_t k = static_cast<std::size_t>(r / h_);
        if (k >= kIntervals) k = kIntervals - 1;
        const double r0 = h_ * static_cast<double>(k);
        const double t = (r - r0) / h_;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * table[k] + h10 * h_ * deriv(r0) + h01 * table[k + 1] + h11 * h_ * deriv(r0 + h_);
    }

    double series_J(double z) const {
        const double z2 = z * z;
        const double c = std::pow(z, 1.0 + sigma_);
        return c * (1.0 / (1.0 + sigma_) - a_ * z2 / (3.0 + sigma_) + 0.5 * a_ * (a_ + 1.0) * z2 * z2 / (5.0 + sigma_) -
                    a_ * (a_ + 1.0) * (a_ + 2.0) / 6.0 * z2 * z2 * z2 / (7.0 + sigma_));
    }

    double J_direct(double z) const {
        // tau = tan(theta): integrand sin^sigma(theta) cos^(n-1)(theta) on [0, atan z].
        const double s = sigma_;
        const int n = n_;
        auto f = [s, n](double th) { return std::pow(std::sin(th), s) * std::pow(std::cos(th), n - 1); };
        boost::math::quadrature::tanh_sinh<double> ts;
        return ts.integrate(f, 0.0, std::atan(z));
    }

    int n_;
    double sigma_;
    double a_;
    double r_max_;
    double h_ = 0.0;
    std::vector<double> f_;
    std::vector<double> g_;
};

/**
 * Minus the nonlocal mean curvature of the graph of u:
 *   N[u](x) = integral |y|^(-n-sigma) F((u(x) - u(x+y)) / |y|) dy,   u = 0 outside the domain.
 *
 * Interior pairs use the same cell quadrature as NonlocalOperator; the
 * exterior contribution reduces to e^-sigma H(u(x)/e) per distance e to the
 * interior-cell hull (1D), or its angular integral (2D).
 */
class FracMeanCurvatureOperator final : public DiscreteOperator {
public:
    /// `slope_bound` sizes the F table; difference quotients beyond it are evaluated by quadrature.
    FracMeanCurvatureOperator(GridPtr grid, const OperatorSpec& spec, double slope_bound = 40.0)
        : DiscreteOperator(std::move(grid)),
          sigma_(spec.as<ops::FracMeanCurvature>().sigma),
          profile_(static_cast<int>(this->grid().dim()), sigma_, std::max(2.5 * slope_bound, 10.0)) {
        build();
    }

    const FracCurvatureProfile& profile() const { return profile_; }

    using DiscreteOperator::apply;

    void apply(std::span<const double> u, std::span<double> out) const override {
        const Grid& g = grid();
        const auto interior = g.interior();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < interior.size(); ++k) {
            const std::size_t i = interior[k];
            double acc = tail(k, u[i]);
            for_each_partner(i, [&](std::size_t j, double w, double r) {
                acc += w * profile_.F((u[i] - u[j]) / r);
            });
            out[i] = acc;
        }
    }

    Jacobian jacobian(std::span<const double> u) const override {
        const Grid& g = grid();
        const auto interior = g.interior();
        const auto m = static_cast<Eigen::Index>(interior.size());
        std::vector<std::ptrdiff_t> slot(g.size(), -1);
        for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<std::ptrdiff_t>(k);
        DenseJacobian jac = DenseJacobian::Zero(m, m);
        for (std::size_t k = 0; k < interior.size(); ++k) {
            const std::size_t i = interior[k];
            double diag = tail_derivative(k, u[i]);
            for_each_partner(i, [&](std::size_t j, double w, double r) {
                const double d = w * profile_.F_prime((u[i] - u[j]) / r) / r;
                diag += d;
                jac(static_cast<Eigen::Index>(k), slot[j]) -= d;
            });
            jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += diag;
        }
        return jac;
    }

    /// 1/2 sum w_i W_ij F((u_i-u_j)/r_ij)(u_i^(s-1) - u_j^(s-1)) + sum w_i tail_i(u_i) u_i^(s-1).
    double symmetrized_energy(std::span<const double> u, double s) const {
        const Grid& g = grid();
        const auto interior = g.interior();
        const auto weights = g.weights();
        std::vector<double> us(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) us[n] = std::pow(std::max(u[n], 0.0), s - 1.0);
        double pairs = 0.0, tails = 0.0;
        for (std::size_t k = 0; k < interior.size(); ++k) {
            const std::size_t i = interior[k];
            tails += weights[i] * tail(k, u[i]) * us[i];
            for_each_partner(i, [&](std::size_t j, double w, double r) {
                pairs += weights[i] * w * profile_.F((u[i] - u[j]) / r) * (us[i] - us[j]);
            });
        }
        return 0.5 * pairs + tails;
    }

private:
    struct Ray {
        double weight;  ///< angular quadrature weight
        double dist;    ///< distance to the hull along the ray
    };

    void build() {
        const Grid& g = grid();
        const auto hull = detail::CellHull::of(g);
        const double vol = g.cell_volume();
        const double n = static_cast<double>(g.dim());
        if (g.dim() == 1) {
            const double h = g.axis(0).spacing();
            pair_.resize(g.axis(0).points, 0.0);
            dist_.resize(g.axis(0).points, 0.0);
            for (std::size_t k = 1; k < pair_.size(); ++k) {
                dist_[k] = static_cast<double>(k) * h;
                pair_[k] = vol * std::pow(dist_[k], -n - sigma_);
            }
            for (std::size_t node : g.interior()) {
                const double x = g.coordinates(node)[0];
                rays_.push_back({{1.0, x - hull.lo[0]}, {1.0, hull.hi[0] - x}});
            }
            return;
        }
        const std::size_t nx = g.axis(0).points, ny = g.axis(1).points;
        const double hx = g.axis(0).spacing(), hy = g.axis(1).spacing();
        pair_.assign(nx * ny, 0.0);
        dist_.assign(nx * ny, 0.0);
        for (std::size_t a = 0; a < nx; ++a) {
            for (std::size_t b = 0; b < ny; ++b) {
                if (a == 0 && b == 0) continue;
                const double r = std::hypot(static_cast<double>(a) * hx, static_cast<double>(b) * hy);
                dist_[a * ny + b] = r;
                pair_[a * ny + b] = vol * std::pow(r, -n - sigma_);
            }
        }
        for (std::size_t node : g.interior()) {
            const auto x = g.coordinates(node);
            std::vector<Ray> rays;
            add_edge_rays(rays, hull.hi[0] - x[0], hull.lo[1] - x[1], hull.hi[1] - x[1]);
            add_edge_rays(rays, x[0] - hull.lo[0], hull.lo[1] - x[1], hull.hi[1] - x[1]);
            add_edge_rays(rays, hull.hi[1] - x[1], hull.lo[0] - x[0], hull.hi[0] - x[0]);
            add_edge_rays(rays, x[1] - hull.lo[1], hull.lo[0] - x[0], hull.hi[0] - x[0]);
            rays_.push_back(std::move(rays));
        }
    }

    /// Composite 8-point Gauss-Legendre over the angular sector of one hull edge.
    static void add_edge_rays(std::vector<Ray>& rays, double dist, double a, double b) {
        constexpr int kPanels = 6;
        const double lo = std::atan2(a, dist), hi = std::atan2(b, dist);
        const double width = (hi - lo) / kPanels;
        using GL = boost::math::quadrature::gauss<double, 8>;
        const auto& abscissa = GL::abscissa();
        const auto& weight = GL::weights();
        for (int p = 0; p < kPanels; ++p) {
            const double mid = lo + (p + 0.5) * width;
            for (std::size_t q = 0; q < abscissa.size(); ++q) {
                for (int sgn : {-1, 1}) {
                    if (abscissa[q] == 0.0 && sgn < 0) continue;
                    const double psi = mid + sgn * abscissa[q] * 0.5 * width;
                    rays.push_back({weight[q] * 0.5 * width, dist / std::cos(psi)});
                }
            }
        }
    }

    double tail(std::size_t k, double ui) const {
        double acc = 0.0;
        for (const Ray& r : rays_[k]) acc += r.weight * std::pow(r.dist, -sigma_) * profile_.H(ui / r.dist);
        return acc;
    }

    double tail_derivative(std::size_t k, double ui) const {
        double acc = 0.0;
        for (const Ray& r : rays_[k]) acc += r.weight * std::pow(r.dist, -sigma_ - 1.0) * profile_.H_prime(ui / r.dist);
        return acc;
    }

    template <class Fn>
    void for_each_partner(std::size_t i, Fn&& fn) const {
        const Grid& g = grid();
        const auto mi = g.multi_index(i);
        if (g.dim() == 1) {
            const std::size_t npts = g.axis(0).points;
            for (std::size_t q = 1; q + 1 < npts; ++q) {
                if (q == mi[0]) continue;
                const std::size_t off = q > mi[0] ? q - mi[0] : mi[0] - q;
                fn(q, pair_[off], dist_[off]);
            }
            return;
        }
        const std::size_t nx = g.axis(0).points, ny = g.axis(1).points;
        for (std::size_t a = 1; a + 1 < nx; ++a) {
            const std::size_t da = a > mi[0] ? a - mi[0] : mi[0] - a;
            for (std::size_t b = 1; b + 1 < ny; ++b) {
                if (a == mi[0] && b == mi[1]) continue;
                const std::size_t db = b > mi[1] ? b - mi[1] : mi[1] - b;
                fn(a * ny + b, pair_[da * ny + db], dist_[da * ny + db]);
            }
        }
    }

    double sigma_;
    FracCurvatureProfile profile_;
    std::vector<double> pair_;
    std::vector<double> dist_;
    std::vector<std::vector<Ray>> rays_;
};

}  // namespace fradiff
