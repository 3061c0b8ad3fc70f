#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fradiff/analysis.hpp"

using namespace fradiff;

namespace {

Field sine(const GridPtr& g, double amplitude = 1.0) {
    return Field::sample(g, [amplitude](double x, double) { return amplitude * std::sin(std::numbers::pi * x); });
}

std::vector<double> geometric(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = a * std::pow(b / a, double(k) / double(n - 1));
    return t;
}

}  // namespace

TEST(StructuralRatio, ZeroFieldIsVacuous) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 11));
    EXPECT_TRUE(std::isinf(sa_ratio(Field::zeros(g), Field::zeros(g), 2.0, 1.0)));
    EXPECT_TRUE(std::isinf(check_sa(Field::zeros(g), ops::Laplacian{}, 2.0)));
    EXPECT_THROW(sa_ratio(sine(g), sine(g), 1.0, 1.0), ParameterError);
    EXPECT_THROW(sa_ratio(sine(g), sine(g), 2.0, 0.0), ParameterError);
}

TEST(StructuralRatio, LaplacianEigenmodeGivesEigenvalue) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 101));
    EXPECT_NEAR(check_sa(sine(g), ops::Laplacian{}, 2.0) / (std::numbers::pi * std::numbers::pi), 1.0, 0.02);
}

TEST(StructuralRatio, InvariantUnderScalingWithMatchingHomogeneity) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 61));
    for (const OperatorSpec& spec : {OperatorSpec(ops::Laplacian{}), OperatorSpec(ops::PorousMedium{2.0}),
                                     OperatorSpec(ops::PLaplacian{3.0}), OperatorSpec(ops::FracLaplacian{0.4})}) {
        for (double s : {2.0, 3.0}) {
            const double r1 = check_sa(sine(g), spec, s);
            const double r2 = check_sa(sine(g, 7.5), spec, s);
            EXPECT_GT(r1, 0.0);
            EXPECT_NEAR(r2 / r1, 1.0, 1e-10) << spec.name() << " s=" << s;
        }
    }
}

TEST(CaputoNormInequality, ConstantHistoryHasZeroSlack) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 21));
    const TimeMesh mesh = TimeMesh::uniform(0.5, 1.0, 5);
    HistoryBuffer h(sine(g));
    std::vector<double> norms{lp_norm(sine(g), 3.0)};
    for (std::size_t k = 1; k <= 5; ++k) {
        Field u = sine(g);
        u.set_time(mesh[k]);
        h.push(u);
        norms.push_back(lp_norm(u, 3.0));
        EXPECT_EQ(check_lemma_az(norms, h, 3.0, mesh, k), 0.0);
    }
}

TEST(CaputoNormInequality, SeparableHistoryIsAnEqualityCase) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 21));
    const TimeMesh mesh = TimeMesh::graded(0.4, 3.0, 12);
    const double s = 2.5;
    HistoryBuffer h(sine(g));
    std::vector<double> norms{lp_norm(sine(g), s)};
    for (std::size_t k = 1; k <= mesh.steps(); ++k) {
        Field u = sine(g, 1.0 / (1.0 + mesh[k]));
        u.set_time(mesh[k]);
        h.push(u);
        norms.push_back(lp_norm(u, s));
        const AzTerms terms = lemma_az_terms(norms, h.field(k), discrete_caputo(h, mesh, k), s, mesh, k);
        EXPECT_NEAR(terms.slack(), 0.0, 1e-12 * az_scale(norms, s, mesh, k, terms)) << k;
    }
}

TEST(CaputoNormInequality, HoldsForArbitraryNonnegativeHistories) {
    // Holder's inequality makes the discrete inequality hold for any nonnegative history.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const GridPtr g = make_grid(Grid::unit(2, 7));
    for (int trial = 0; trial < 20; ++trial) {
        const TimeMesh mesh = trial % 2 ? TimeMesh::uniform(0.3, 2.0, 8) : TimeMesh::graded(0.7, 2.0, 8);
        const double s = 1.5 + trial * 0.2;
        auto random = [&](double t) {
            std::vector<double> v(g->size(), 0.0);
            for (std::size_t n : g->interior()) v[n] = unit(rng) < 0.2 ? 0.0 : 3.0 * unit(rng);
            return Field(g, std::move(v), t);
        };
        HistoryBuffer h(random(0.0));
        std::vector<double> norms{lp_norm(h.field(0), s)};
        for (std::size_t k = 1; k <= mesh.steps(); ++k) {
            h.push(random(mesh[k]));
            norms.push_back(lp_norm(h.field(k), s));
            const AzTerms terms = lemma_az_terms(norms, h.field(k), discrete_caputo(h, mesh, k), s, mesh, k);
            EXPECT_GE(terms.slack(), -kAuditTolerance * az_scale(norms, s, mesh, k, terms)) << trial << " " << k;
        }
    }
}

TEST(CaputoNormInequality, RequiresEnoughNorms) {
    const GridPtr g = make_grid(Grid::line(0.0, 1.0, 11));
    const TimeMesh mesh = TimeMesh::uniform(0.5, 1.0, 2);
    HistoryBuffer h(sine(g));
    Field u = sine(g, 0.5);
    u.set_time(mesh[1]);
    h.push(u);
    EXPECT_THROW(check_lemma_az(std::vector<double>{1.0}, h, 2.0, mesh, 1), ParameterError);
    EXPECT_THROW(check_lemma_az(std::vector<double>{1.0, 0.5}, h, 2.0, mesh, 2), ParameterError);
}

TEST(DecayFit, RecoversExactPowerLaw) {
    const auto t = geometric(1.0, 1e4, 200);
    std::vector<double> v(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) v[k] = 5.0 * std::pow(t[k], -0.3);
    const DecayFit fit = fit_decay_exponent(t, v);
    EXPECT_NEAR(fit.exponent, 0.3, 1e-12);
    EXPECT_LT(fit.residual, 1e-12);
    EXPECT_LE(fit.t_begin, 1e3);
    EXPECT_EQ(fit.t_end, 1e4);
    EXPECT_GE(fit.points, 10u);
}

TEST(DecayFit, ConstantSeriesHasZeroExponent) {
    const auto t = geometric(0.1, 1e3, 100);
    const std::vector<double> v(t.size(), 2.0);
    EXPECT_NEAR(fit_decay_exponent(t, v).exponent, 0.0, 1e-14);
}

TEST(DecayFit, MittagLefflerTailDecaysLikeTheOrder) {
    const double alpha = 0.5;
    const auto t = geometric(1e2, 1e4, 120);
    std::vector<double> v(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) v[k] = mittag_leffler(alpha, -std::pow(t[k], alpha));
    EXPECT_NEAR(fit_decay_exponent(t, v).exponent / alpha, 1.0, 0.05);
}

TEST(DecayFit, RejectsDegenerateWindows) {
    const auto t = geometric(1.0, 1e4, 50);
    const std::vector<double> v(t.size(), 1.0);
    EXPECT_THROW(fit_decay_exponent(t, std::vector<double>(49, 1.0)), FitError);
    EXPECT_THROW(fit_decay_exponent(std::vector<double>{}, std::vector<double>{}), FitError);
    EXPECT_THROW(fit_decay_exponent(t, v, 1.0), FitError);
    EXPECT_THROW(fit_decay_exponent(geometric(1.0, 1e4, 8), std::vector<double>(8, 1.0)), FitError);
    EXPECT_THROW(fit_decay_exponent(geometric(1.0, 5.0, 50), v), FitError);
    std::vector<double> bad = v;
    bad.back() = 0.0;
    EXPECT_THROW(fit_decay_exponent(t, bad), FitError);
    std::vector<double> flat = t;
    flat[10] = flat[9];
    EXPECT_THROW(fit_decay_exponent(flat, v), FitError);
}

TEST(EstimateCstar, TakesTheLargestWeightedSample) {
    const std::vector<double> t{0.0, 1.0, 4.0}, v{2.0, 1.0, 0.5};
    EXPECT_DOUBLE_EQ(estimate_cstar(t, v, 0.5, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(estimate_cstar(t, v, 0.5, 0.5), 2.5);
    EXPECT_THROW(estimate_cstar(t, std::vector<double>{1.0}, 0.5, 1.0), ParameterError);
}
