#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fradiff/operators.hpp"

using namespace fradiff;

namespace {

Field random_field(const GridPtr& g, unsigned seed, double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, scale);
    return Field::sample(g, [&](double, double) { return dist(gen); });
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

double max_abs(const Field& a) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n]));
    return m;
}

Eigen::MatrixXd dense(const Jacobian& j) {
    if (const auto* d = std::get_if<DenseJacobian>(&j)) return *d;
    return Eigen::MatrixXd(std::get<SparseJacobian>(j));
}

/// Central differences of the operator in the interior unknowns.
Eigen::MatrixXd fd_jacobian(const DiscreteOperator& op, const Field& u, double eps) {
    const auto interior = op.grid().interior();
    const auto m = static_cast<Eigen::Index>(interior.size());
    Eigen::MatrixXd out(m, m);
    std::vector<double> plus(u.values().begin(), u.values().end()), minus = plus;
    std::vector<double> fp(u.size()), fm(u.size());
    for (Eigen::Index c = 0; c < m; ++c) {
        const std::size_t q = interior[static_cast<std::size_t>(c)];
        plus[q] += eps;
        minus[q] -= eps;
        op.apply(plus, fp);
        op.apply(minus, fm);
        for (Eigen::Index r = 0; r < m; ++r) {
            const std::size_t i = interior[static_cast<std::size_t>(r)];
            out(r, c) = (fp[i] - fm[i]) / (2.0 * eps);
        }
        plus[q] = minus[q] = u[q];
    }
    return out;
}

}  // namespace

TEST(Laplacian, SineIsADiscreteEigenfunction) {
    const std::size_t n = 41;
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, n));
    const double h = 1.0 / (n - 1);
    const double lambda = 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2);
    const Field u = Field::sample(g, [](double x, double) { return std::sin(std::numbers::pi * x); });
    const Field img = apply_local(ops::Laplacian{}, u);
    for (std::size_t i : g->interior()) EXPECT_NEAR(img[i], lambda * u[i], 1e-9);
}

TEST(Laplacian, TwoDimensionalEigenfunction) {
    const std::size_t n = 17;
    const GridPtr g = make_grid(Grid::unit(2, n));
    const double h = 1.0 / (n - 1);
    const double lambda = 8.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2);
    const Field u = Field::sample(g, [](double x, double y) {
        return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    });
    const Field img = apply_local(ops::Laplacian{}, u);
    for (std::size_t i : g->interior()) EXPECT_NEAR(img[i], lambda * u[i], 1e-9);
}

TEST(LocalOperators, ReduceToLaplacianAtLinearParameters) {
    const GridPtr g = make_grid(Grid::unit(2, 12));
    const Field u = random_field(g, 3);
    const Field lap = apply_local(ops::Laplacian{}, u);
    EXPECT_LT(max_diff(apply_local(ops::PLaplacian{2.0}, u), lap), 1e-10);
    EXPECT_LT(max_diff(apply_local(ops::PorousMedium{1.0}, u), lap), 1e-10);
    EXPECT_LT(max_diff(apply_local(ops::DoublyNonlinear{2.0, 1.0}, u), lap), 1e-10);
}

TEST(PorousMedium, IsLaplacianOfPower) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 31));
    const Field u = random_field(g, 5);
    Field um = u;
    for (double& v : um.values()) v = std::pow(v, 2.5);
    EXPECT_LT(max_diff(apply_local(ops::PorousMedium{2.5}, u), apply_local(ops::Laplacian{}, um)), 1e-10);
}

TEST(PLaplacian, MatchesBruteForceFluxDifferences1D) {
    const std::size_t n = 25;
    const double p = 3.0;
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, n));
    const double h = 1.0 / (n - 1);
    const Field u = random_field(g, 11);
    const Field img = apply_local(ops::PLaplacian{p}, u);
    auto flux = [&](double d) { return std::pow(std::abs(d), p - 2.0) * d; };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double right = flux((u[i + 1] - u[i]) / h), left = flux((u[i] - u[i - 1]) / h);
        EXPECT_NEAR(img[i], -(right - left) / h, 1e-9 * std::max(1.0, std::abs(img[i])));
    }
}

TEST(MeanCurvature, SmallSlopesApproachLaplacian) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 41));
    const Field u = Field::sample(g, [](double x, double) { return std::sin(std::numbers::pi * x); });
    const double eps = 1e-4;
    const Field mc = apply_local(ops::MeanCurvature{}, u.scaled(eps));
    const Field lap = apply_local(ops::Laplacian{}, u);
    EXPECT_LT(max_diff(mc.scaled(1.0 / eps), lap) / max_abs(lap), 1e-6);
}

TEST(LocalOperators, HomogeneityScaling) {
    const GridPtr g = make_grid(Grid::unit(2, 10));
    const Field u = random_field(g, 21);
    for (const OperatorSpec& spec : {OperatorSpec(ops::PLaplacian{3.0}), OperatorSpec(ops::PorousMedium{2.0}),
                                     OperatorSpec(ops::DoublyNonlinear{2.5, 1.5})}) {
        const double c = 1.7, q = spec.homogeneity();
        const Field a = apply_local(spec, u.scaled(c));
        const Field b = apply_local(spec, u).scaled(std::pow(c, q));
        EXPECT_LT(max_diff(a, b), 1e-10 * max_abs(b)) << spec.name();
    }
}

TEST(LocalOperators, DivergenceFormConservesMass) {
    // Integral of -div(flux) equals the flux leaving through the boundary faces.
    const GridPtr g = make_grid(Grid::unit(2, 14));
    const Field u = random_field(g, 8);
    for (const OperatorSpec& spec : {OperatorSpec(ops::Laplacian{}), OperatorSpec(ops::PLaplacian{3.0}),
                                     OperatorSpec(ops::MeanCurvature{})}) {
        const LocalOperator op(g, spec);
        const Field img = op.apply(u);
        double total = 0.0;
        for (std::size_t i : g->interior()) total += g->cell_volume() * img[i];
        EXPECT_NEAR(total, op.boundary_flux(u.values()), 1e-10 * std::max(1.0, std::abs(total))) << spec.name();
    }
}

TEST(LocalOperators, JacobianMatchesFiniteDifferences) {
    const GridPtr g = make_grid(Grid::unit(2, 8));
    const Field u = Field::sample(g, [](double x, double y) { return 0.2 + x * (1 - x) * (1 + y); });
    for (const OperatorSpec& spec : {OperatorSpec(ops::Laplacian{}), OperatorSpec(ops::PLaplacian{3.0}),
                                     OperatorSpec(ops::PorousMedium{2.0}), OperatorSpec(ops::MeanCurvature{})}) {
        const auto op = make_operator(spec, g);
        const Eigen::MatrixXd j = dense(op->jacobian(u.values()));
        const Eigen::MatrixXd fd = fd_jacobian(*op, u, 1e-6);
        EXPECT_LT((j - fd).cwiseAbs().maxCoeff(), 1e-4 * fd.cwiseAbs().maxCoeff()) << spec.name();
    }
}

TEST(NonlocalOperators, JacobianMatchesFiniteDifferences) {
    const GridPtr line = make_grid(Grid::line(0.0, 1.0, 15));
    const GridPtr square = make_grid(Grid::unit(2, 7));
    const std::vector<std::pair<OperatorSpec, GridPtr>> cases = {
        {ops::FracLaplacian{0.4}, line},
        {ops::FracPLaplacian{0.5, 3.0}, line},
        {ops::FracSum{{{0.3, 2.0, 1.0}, {0.7, 3.0, 2.0}}}, line},
        {ops::FracPorousMedium{0.5, 2.0}, line},
        {ops::DirectionalFrac{{{0.3, 1.0}, {0.6, 2.0}}}, square},
        {ops::FracPLaplacian{0.5, 2.5}, square},
    };
    for (const auto& [spec, g] : cases) {
        // No two nodes share a value: |d|^(p-2) with p < 3 has a kink at d = 0 that spoils finite differences.
        const Field u = Field::sample(g, [](double x, double y) { return 0.3 + x + 0.1 * x * x + 0.37 * y * y; });
        const auto op = make_operator(spec, g);
        const Eigen::MatrixXd j = dense(op->jacobian(u.values()));
        const Eigen::MatrixXd fd = fd_jacobian(*op, u, 1e-6);
        EXPECT_LT((j - fd).cwiseAbs().maxCoeff(), 1e-5 * fd.cwiseAbs().maxCoeff()) << spec.name();
    }
}

TEST(FracLaplacian, HalfPowerOfSemicircleIsConstant) {
    // With the unnormalised kernel |x-y|^-2, (-Delta)^{1/2} (1 - x^2)_+^{1/2} = pi on (-1, 1).
    const GridPtr g = make_grid(Grid::line(-1.0, 1.0, 401));
    const Field u = Field::sample(g, [](double x, double) { return std::sqrt(std::max(0.0, 1.0 - x * x)); });
    const Field img = apply_nonlocal(ops::FracLaplacian{0.5}, u);
    for (std::size_t i : g->interior()) {
        const double x = g->coordinates(i)[0];
        if (std::abs(x) <= 0.5) {
            EXPECT_NEAR(img[i] / std::numbers::pi, 1.0, 0.01) << x;
        }
    }
}

TEST(FracLaplacian, ConvergesUnderRefinementForSmoothDatum) {
    // Successive refinements of a C^2 profile vanishing at the boundary approach a limit.
    auto at_center = [](std::size_t n) {
        const GridPtr g = make_grid(Grid::line(0.0, 1.0, n));
        const Field u = Field::sample(g, [](double x, double) { return std::pow(x * (1 - x), 2); });
        return apply_nonlocal(ops::FracLaplacian{0.3}, u)[(n - 1) / 2];
    };
    const double a = at_center(101), b = at_center(201), c = at_center(401);
    EXPECT_LT(std::abs(c - b), 0.6 * std::abs(b - a));
    EXPECT_LT(std::abs(c - b) / std::abs(c), 1e-2);
}

TEST(NonlocalOperators, EnergyIdentityOnRandomFields) {
    const GridPtr line = make_grid(Grid::line(0.0, 1.0, 33));
    const GridPtr square = make_grid(Grid::unit(2, 11));
    const std::vector<std::pair<OperatorSpec, GridPtr>> cases = {
        {ops::FracLaplacian{0.5}, line},         {ops::FracPLaplacian{0.3, 4.0}, line},
        {ops::FracPorousMedium{0.6, 3.0}, line}, {ops::FracSum{{{0.2, 2.0, 0.5}, {0.8, 1.5, 2.0}}}, line},
        {ops::FracLaplacian{0.7}, square},       {ops::DirectionalFrac{{{0.4, 1.0}, {0.8, 0.5}}}, square},
        {ops::FracPorousMedium{0.5, 2.0}, square},
    };
    unsigned seed = 1;
    for (const auto& [spec, g] : cases) {
        const auto op = make_operator(spec, g);
        for (double s : {1.5, 2.0, 4.0}) {
            const Field u = random_field(g, seed++);
            const double direct = inner_energy(u, s, op->apply(u));
            const double sym = symmetrized_energy(*op, u, s);
            EXPECT_GT(sym, 0.0);
            EXPECT_NEAR(direct, sym, 1e-10 * std::abs(sym)) << spec.name() << " s=" << s;
        }
    }
}

TEST(FracSum, SingletonEqualsFracPLaplacianAndSumsAreLinearInTerms) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 29));
    const Field u = random_field(g, 4);
    const Field single = apply_nonlocal(ops::FracSum{{{0.4, 3.0, 1.0}}}, u);
    EXPECT_EQ(max_diff(single, apply_nonlocal(ops::FracPLaplacian{0.4, 3.0}, u)), 0.0);

    const Field a = apply_nonlocal(ops::FracPLaplacian{0.3, 2.0}, u);
    const Field b = apply_nonlocal(ops::FracPLaplacian{0.7, 3.0}, u);
    const Field sum = apply_nonlocal(ops::FracSum{{{0.3, 2.0, 1.5}, {0.7, 3.0, 2.0}}}, u);
    for (std::size_t n = 0; n < g->size(); ++n) EXPECT_NEAR(sum[n], 1.5 * a[n] + 2.0 * b[n], 1e-10 * max_abs(sum));
}

TEST(DirectionalFrac, OneAxisInOneDimensionIsScaledFracLaplacian) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 31));
    const Field u = random_field(g, 6);
    const Field dir = apply_nonlocal(ops::DirectionalFrac{{{0.35, 2.5}}}, u);
    const Field iso = apply_nonlocal(ops::FracLaplacian{0.35}, u).scaled(2.5);
    EXPECT_LT(max_diff(dir, iso), 1e-12 * max_abs(iso));
}

TEST(DirectionalFrac, SeparableDatumFactorsAlongAxes) {
    // For u = f(x) g(y), each axis term acts on its own factor.
    const std::size_t n = 15;
    const GridPtr sq = make_grid(Grid::unit(2, n));
    const GridPtr line = make_grid(Grid::line(0.0, 1.0, n));
    auto f = [](double x) { return x * (1 - x); };
    auto q = [](double y) { return std::sin(std::numbers::pi * y); };
    const Field u = Field::sample(sq, [&](double x, double y) { return f(x) * q(y); });
    const Field fx = apply_nonlocal(ops::FracLaplacian{0.3}, Field::sample(line, [&](double x, double) { return f(x); }));
    const Field gy = apply_nonlocal(ops::FracLaplacian{0.6}, Field::sample(line, [&](double y, double) { return q(y); }));
    const Field img = apply_nonlocal(ops::DirectionalFrac{{{0.3, 1.0}, {0.6, 1.0}}}, u);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const auto xy = sq->coordinates(sq->node(i, j));
            const double expect = fx[i] * q(xy[1]) + f(xy[0]) * gy[j];
            EXPECT_NEAR(img[sq->node(i, j)], expect, 1e-10 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST(NonlocalOperators, HomogeneityScaling) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 21));
    const Field u = random_field(g, 12);
    for (const OperatorSpec& spec : {OperatorSpec(ops::FracLaplacian{0.4}), OperatorSpec(ops::FracPLaplacian{0.5, 3.0}),
                                     OperatorSpec(ops::FracPorousMedium{0.5, 2.0})}) {
        const double c = 0.37;
        const Field a = apply_nonlocal(spec, u.scaled(c));
        const Field b = apply_nonlocal(spec, u).scaled(std::pow(c, spec.homogeneity()));
        EXPECT_LT(max_diff(a, b), 1e-12 * max_abs(b)) << spec.name();
    }
}

TEST(NonlocalOperators, PositiveAtTheMaximum) {
    // At a global maximum every difference u(x) - u(y) is >= 0, so the image is positive there.
    const GridPtr g = make_grid(Grid::unit(2, 13));
    const Field u = random_field(g, 77);
    std::size_t arg = 0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (u[n] > u[arg]) arg = n;
    }
    for (const OperatorSpec& spec : {OperatorSpec(ops::FracLaplacian{0.5}), OperatorSpec(ops::FracPLaplacian{0.3, 1.5}),
                                     OperatorSpec(ops::FracMeanCurvature{0.5})}) {
        EXPECT_GT(make_operator(spec, g)->apply(u)[arg], 0.0) << spec.name();
    }
}

TEST(Operators, DispatchRejectsWrongFamilies) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 9));
    const Field u = random_field(g, 1);
    EXPECT_THROW(apply_local(ops::FracLaplacian{0.5}, u), ParameterError);
    EXPECT_THROW(apply_nonlocal(ops::Laplacian{}, u), ParameterError);
    EXPECT_THROW(apply_frac_mean_curvature(ops::FracLaplacian{0.5}, u), ParameterError);
    EXPECT_THROW(make_operator(ops::DirectionalFrac{{{0.5, 1.0}, {0.5, 1.0}}}, g), ParameterError);
    const LocalOperator lap(g, ops::Laplacian{});
    EXPECT_THROW(symmetrized_energy(lap, u, 2.0), ParameterError);
}

TEST(OperatorSpec, ValidatesParameterRanges) {
    EXPECT_THROW(OperatorSpec(ops::PLaplacian{1.0}), ParameterError);
    EXPECT_THROW(OperatorSpec(ops::PorousMedium{0.0}), ParameterError);
    EXPECT_THROW(OperatorSpec(ops::FracLaplacian{1.0}), ParameterError);
    EXPECT_THROW(OperatorSpec(ops::FracLaplacian{0.0}), ParameterError);
    EXPECT_THROW(OperatorSpec(ops::FracSum{}), ParameterError);
    EXPECT_THROW(OperatorSpec(ops::FracSum{{{0.5, 2.0, 0.0}}}), ParameterError);
    EXPECT_NO_THROW(OperatorSpec(ops::DoublyNonlinear{1.5, 0.5}));
}

TEST(OperatorSpec, PredictedGammaTable) {
    EXPECT_EQ(predicted_gamma(ops::Laplacian{}), 1.0);
    EXPECT_EQ(predicted_gamma(ops::PLaplacian{3.0}), 2.0);
    EXPECT_EQ(predicted_gamma(ops::PorousMedium{2.0}), 2.0);
    EXPECT_EQ(predicted_gamma(ops::DoublyNonlinear{3.0, 2.0}), 4.0);
    EXPECT_EQ(predicted_gamma(ops::MeanCurvature{}), 1.0);
    EXPECT_EQ(predicted_gamma(ops::FracPLaplacian{0.5, 3.0}), 2.0);
    EXPECT_EQ(predicted_gamma(ops::FracSum{{{0.3, 2.0, 1.0}, {0.7, 3.0, 2.0}}}), 2.0);
    EXPECT_EQ(predicted_gamma(ops::DirectionalFrac{{{0.5, 1.0}, {0.5, 1.0}}}), 1.0);
    EXPECT_EQ(predicted_gamma(ops::FracPorousMedium{0.5, 2.0}), 2.0);
    EXPECT_EQ(predicted_gamma(ops::FracMeanCurvature{0.5}), 1.0);
}
