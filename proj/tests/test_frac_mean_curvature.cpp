#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "fradiff/operators.hpp"

using namespace fradiff;

namespace {

/// F(r) = (1/2) B(r^2/(1+r^2); 1/2, (n+sigma)/2), the incomplete beta form of the profile.
double beta_form(double r, int n, double sigma) {
    const double x = r * r / (1.0 + r * r);
    return std::copysign(0.5 * boost::math::beta(0.5, 0.5 * (n + sigma), x), r);
}

/// H(Z) = Z^-sigma integral_0^Z F(z) z^(sigma-1) dz.
double h_by_quadrature(double big_z, int n, double sigma) {
    boost::math::quadrature::tanh_sinh<double> q;
    const double integral =
        q.integrate([&](double z) { return z <= 0.0 ? 0.0 : beta_form(z, n, sigma) * std::pow(z, sigma - 1.0); },
                    0.0, big_z);
    return std::pow(big_z, -sigma) * integral;
}

}  // namespace

TEST(FracCurvatureProfile, QuadratureMatchesIncompleteBeta) {
    for (int n : {1, 2}) {
        for (double sigma : {0.2, 0.5, 0.9}) {
            for (double r : {1e-3, 0.3, 1.0, 5.0, 100.0, -2.0}) {
                EXPECT_NEAR(frac_mean_curv_F(r, n, sigma), beta_form(r, n, sigma), 1e-12 * std::abs(beta_form(r, n, sigma)))
                    << n << " " << sigma << " " << r;
            }
        }
    }
}

TEST(FracCurvatureProfile, SaturatesAtCompleteBeta) {
    const double sigma = 0.5;
    const double limit = 0.5 * boost::math::beta(0.5, 0.5 * (1 + sigma));
    EXPECT_NEAR(frac_mean_curv_F(1e8, 1, sigma), limit, 1e-10);
    EXPECT_LT(frac_mean_curv_F(1e3, 1, sigma), limit);
}

TEST(FracCurvatureProfile, TableInterpolatesFAndDerivative) {
    const FracCurvatureProfile prof(1, 0.5, 20.0);
    for (double r : {0.0, 1e-6, 0.0123, 0.77, 3.3, 19.9, 25.0, -4.1}) {
        EXPECT_NEAR(prof.F(r), beta_form(r, 1, 0.5), 1e-11) << r;
        const double expect_prime = std::pow(1.0 + r * r, -0.5 * (2.0 + 0.5));
        EXPECT_NEAR(prof.F_prime(r), expect_prime, 1e-14) << r;
    }
}

TEST(FracCurvatureProfile, CompanionIntegralJ) {
    for (int n : {1, 2}) {
        const double sigma = 0.4, a = 0.5 * (n + 1 + sigma);
        const FracCurvatureProfile prof(n, sigma, 15.0);
        boost::math::quadrature::tanh_sinh<double> q;
        for (double z : {1e-5, 0.01, 0.5, 2.0, 14.0, 40.0}) {
            const double ref = q.integrate([&](double t) { return std::pow(t, sigma) * std::pow(1 + t * t, -a); }, 0.0, z);
            EXPECT_NEAR(prof.J(z), ref, 1e-10 * ref) << n << " " << z;
        }
    }
}

TEST(FracCurvatureProfile, ExteriorTailMatchesDefinition) {
    for (int n : {1, 2}) {
        for (double sigma : {0.3, 0.7}) {
            const FracCurvatureProfile prof(n, sigma, 30.0);
            for (double z : {1e-4, 0.05, 0.9, 4.0, 29.0, 60.0}) {
                const double ref = h_by_quadrature(z, n, sigma);
                EXPECT_NEAR(prof.H(z), ref, 1e-9 * std::abs(ref)) << n << " " << sigma << " " << z;
                const double d = 1e-5 * std::max(z, 1e-3);
                const double fd = (prof.H(z + d) - prof.H(z - d)) / (2 * d);
                EXPECT_NEAR(prof.H_prime(z), fd, 1e-5 * std::abs(fd)) << z;
            }
        }
    }
}

TEST(FracMeanCurvature, SmallSlopesLinearizeToFracLaplacian) {
    // F(r) ~ r near 0, so the operator tends to the raw (-Delta)^{(1+sigma)/2}.
    const double sigma = 0.5, eps = 1e-3;
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 81));
    const Field u = Field::sample(g, [](double x, double) { return std::sin(std::numbers::pi * x); });
    const Field curv = apply_frac_mean_curvature(ops::FracMeanCurvature{sigma}, u.scaled(eps)).image.scaled(1 / eps);
    const Field lin = apply_nonlocal(ops::FracLaplacian{0.5 * (1 + sigma)}, u);
    double num = 0.0, den = 0.0;
    for (std::size_t i : g->interior()) {
        num += std::pow(curv[i] - lin[i], 2);
        den += lin[i] * lin[i];
    }
    EXPECT_LT(std::sqrt(num / den), 0.15);
}

TEST(FracMeanCurvature, OddInTheDatumAndReflectionSymmetric) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 41));
    const Field u = Field::sample(g, [](double x, double) { return x * x * (1 - x); });
    const FracMeanCurvatureOperator op(g, ops::FracMeanCurvature{0.4});
    const Field img = op.apply(u);
    std::vector<double> neg(u.values().begin(), u.values().end());
    for (double& v : neg) v = -v;
    std::vector<double> img_neg(u.size());
    op.apply(neg, img_neg);
    std::vector<double> refl(u.size()), img_refl(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) refl[n] = u[u.size() - 1 - n];
    op.apply(refl, img_refl);
    for (std::size_t n = 0; n < u.size(); ++n) {
        EXPECT_NEAR(img_neg[n], -img[n], 1e-13 * std::max(1.0, std::abs(img[n])));
        EXPECT_NEAR(img_refl[n], img[u.size() - 1 - n], 1e-12 * std::max(1.0, std::abs(img[n])));
    }
}

TEST(FracMeanCurvature, JacobianMatchesFiniteDifferences) {
    for (std::size_t dim : {1u, 2u}) {
        const GridPtr g = make_grid(Grid::unit(dim, dim == 1 ? 17 : 7));
        const Field u = Field::sample(g, [](double x, double y) { return 1.5 * x * (1 - x) + 0.3 * y; });
        const FracMeanCurvatureOperator op(g, ops::FracMeanCurvature{0.5});
        const Eigen::MatrixXd j = std::get<DenseJacobian>(op.jacobian(u.values()));
        const auto interior = g->interior();
        std::vector<double> plus(u.values().begin(), u.values().end()), minus = plus, fp(u.size()), fm(u.size());
        double worst = 0.0;
        for (std::size_t c = 0; c < interior.size(); ++c) {
            const double eps = 1e-6;
            plus[interior[c]] += eps;
            minus[interior[c]] -= eps;
            op.apply(plus, fp);
            op.apply(minus, fm);
            for (std::size_t r = 0; r < interior.size(); ++r) {
                const double fd = (fp[interior[r]] - fm[interior[r]]) / (2 * eps);
                worst = std::max(worst, std::abs(fd - j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
            }
            plus[interior[c]] = minus[interior[c]] = u[interior[c]];
        }
        EXPECT_LT(worst, 1e-5 * j.cwiseAbs().maxCoeff()) << dim;
    }
}

TEST(FracMeanCurvature, GradientAuditWarnsButEvaluates) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 41));
    const Field steep = Field::sample(g, [](double x, double) { return 20.0 * x * (1 - x); });
    const auto res = apply_frac_mean_curvature(ops::FracMeanCurvature{0.5}, steep, 2.0);
    EXPECT_GT(res.max_gradient, 2.0);
    ASSERT_EQ(res.warnings.size(), 1u);
    for (double v : res.image.values()) EXPECT_TRUE(std::isfinite(v));
    const auto calm = apply_frac_mean_curvature(ops::FracMeanCurvature{0.5}, steep.scaled(0.01), 2.0);
    EXPECT_TRUE(calm.warnings.empty());
}

TEST(GradientAudit, AreaOfAFlatAndATiltedGraph) {
    const GridPtr g = make_grid(Grid::unit(2, 9));
    EXPECT_NEAR(gradient_audit(Field::zeros(g)).area, 1.0, 1e-14);
    EXPECT_EQ(gradient_audit(Field::zeros(g)).max_gradient, 0.0);
}
