#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "fradiff/caputo.hpp"
#include "fradiff/operators.hpp"

namespace fradiff {

struct SolverOptions {
    double newton_tol = 1e-10;  ///< relative residual target
    std::size_t newton_max_iter = 50;
    std::size_t picard_max_iter = 200;
    std::size_t anderson_depth = 3;
};

struct StepStats {
    std::size_t newton_iterations = 0;
    std::size_t picard_iterations = 0;
    double residual = 0.0;  ///< final relative residual
    bool used_fallback = false;
};

/**
 * Implicit L1 time stepping for D^alpha u + N[u] = 0 with zero Dirichlet data.
 *
 * Step k solves c_k (u^k - rhs) + N[u^k] = 0 for the interior values, where
 * c_k = a_{k,k} and rhs = u^(k-1) - (1/c_k) sum_{j<k} a_{k,j} (u^j - u^(j-1)).
 */
class Stepper {
public:
    Stepper(const OperatorSpec& spec, GridPtr grid, TimeMesh mesh, SolverOptions solver = {},
            OperatorOptions op_options = {})
        : mesh_(std::move(mesh)), solver_(solver), op_(make_operator(spec, std::move(grid), op_options)) {}

    const DiscreteOperator& op() const { return *op_; }
    const TimeMesh& mesh() const { return mesh_; }
    const SolverOptions& options() const { return solver_; }

    /// Computes u^k from a history holding u^0 .. u^(k-1).
    Field step(const HistoryBuffer& history, std::size_t k, StepStats* stats = nullptr) const {
        if (k < 1 || k > mesh_.steps()) throw ParameterError("step index outside the mesh");
        if (history.last() + 1 != k) throw ParameterError("history must be complete through step k-1");
        if (!same_grid(history.grid_ptr(), op_->grid_ptr())) throw StructuralError("history and operator grids differ");

        const auto a = l1_coefficients(mesh_, k);
        const double c = a[k - 1];
        std::vector<double> rhs(history.latest().begin(), history.latest().end());
        for (std::size_t j = 1; j < k; ++j) {
            const auto d = history.increment(j);
            const double w = a[j - 1] / c;
            for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] -= w * d[n];
        }

        StepStats local;
        std::vector<double> u(history.latest().begin(), history.latest().end());
        const bool ok = newton(u, rhs, c, local) || picard(u, rhs, c, local);
        if (stats) *stats = local;
        if (!ok) throw StepError("implicit step did not converge", k, local.residual);
        for (std::size_t n = 0; n < u.size(); ++n) {
            if (op_->grid().is_boundary(n)) u[n] = 0.0;
        }
        return Field(op_->grid_ptr(), std::move(u), mesh_[k]).clamped();
    }

private:
    /// Relative residual of c (u - rhs) + N[u]; writes the interior residual vector.
    double residual(const std::vector<double>& u, const std::vector<double>& rhs, double c,
                    Eigen::VectorXd& res) const {
        const auto interior = op_->grid().interior();
        std::vector<double> image(u.size());
        op_->apply(u, image);
        res.resize(static_cast<Eigen::Index>(interior.size()));
        double scale = 0.0;
        for (std::size_t k = 0; k < interior.size(); ++k) {
            const std::size_t n = interior[k];
            res[static_cast<Eigen::Index>(k)] = c * (u[n] - rhs[n]) + image[n];
            scale = std::max({scale, c * std::abs(u[n]), c * std::abs(rhs[n]), std::abs(image[n])});
        }
        const double norm = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
        if (scale == 0.0) return 0.0;
        return norm / scale;
    }

    Eigen::VectorXd solve(const std::vector<double>& u, double c, const Eigen::VectorXd& res) const {
        Jacobian jac = op_->jacobian(u);
        if (auto* dense = std::get_if<DenseJacobian>(&jac)) {
            dense->diagonal().array() += c;
            return dense->partialPivLu().solve(res);
        }
        auto& sparse = std::get<SparseJacobian>(jac);
        SparseJacobian shift(sparse.rows(), sparse.cols());
        shift.setIdentity();
        SparseJacobian system = sparse + c * shift;
        system.makeCompressed();
        Eigen::SparseLU<SparseJacobian> lu;
        lu.compute(system);
        if (lu.info() != Eigen::Success) return Eigen::VectorXd::Constant(res.size(), std::nan(""));
        return lu.solve(res);
    }

    bool newton(std::vector<double>& u, const std::vector<double>& rhs, double c, StepStats& stats) const {
        const auto interior = op_->grid().interior();
        Eigen::VectorXd res, trial_res;
        double rel = residual(u, rhs, c, res);
        for (std::size_t it = 0; it < solver_.newton_max_iter; ++it) {
            stats.residual = rel;
            if (rel <= solver_.newton_tol) return true;
            const Eigen::VectorXd delta = solve(u, c, res);
            if (!delta.allFinite()) return false;
            const double norm0 = res.cwiseAbs().maxCoeff();
            bool accepted = false;
            std::vector<double> trial = u;
            for (double lambda = 1.0; lambda >= 1.0 / 1024.0; lambda *= 0.5) {
                for (std::size_t k = 0; k < interior.size(); ++k) {
                    trial[interior[k]] = u[interior[k]] - lambda * delta[static_cast<Eigen::Index>(k)];
                }
                const double trial_rel = residual(trial, rhs, c, trial_res);
                if (trial_res.cwiseAbs().maxCoeff() < (1.0 - 1e-4 * lambda) * norm0 || trial_rel <= solver_.newton_tol) {
                    u = trial;
                    res = trial_res;
                    rel = trial_rel;
                    accepted = true;
                    break;
                }
            }
            ++stats.newton_iterations;
            if (!accepted) {
                stats.residual = rel;
                return rel <= solver_.newton_tol;
            }
        }
        stats.residual = rel;
        return rel <= solver_.newton_tol;
    }

    /// Fixed point u = rhs - N[u]/c with Anderson mixing.
    bool picard(std::vector<double>& u, const std::vector<double>& rhs, double c, StepStats& stats) const {
        stats.used_fallback = true;
        const auto interior = op_->grid().interior();
        const auto m = static_cast<Eigen::Index>(interior.size());
        std::vector<double> image(u.size());
        auto map = [&](const Eigen::VectorXd& x) {
            std::vector<double> full(u.size(), 0.0);
            for (Eigen::Index k = 0; k < m; ++k) full[interior[static_cast<std::size_t>(k)]] = x[k];
            op_->apply(full, image);
            Eigen::VectorXd g(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                const std::size_t n = interior[static_cast<std::size_t>(k)];
                g[k] = rhs[n] - image[n] / c;
            }
            return g;
        };
        Eigen::VectorXd x(m);
        for (Eigen::Index k = 0; k < m; ++k) x[k] = u[interior[static_cast<std::size_t>(k)]];
        std::deque<Eigen::VectorXd> dg, df;
        Eigen::VectorXd g_prev, f_prev;
        Eigen::VectorXd res;
        for (std::size_t it = 0; it < solver_.picard_max_iter; ++it) {
            const Eigen::VectorXd g = map(x);
            const Eigen::VectorXd f = g - x;
            if (it > 0) {
                dg.push_back(g - g_prev);
                df.push_back(f - f_prev);
                if (dg.size() > solver_.anderson_depth) {
                    dg.pop_front();
                    df.pop_front();
                }
            }
            g_prev = g;
            f_prev = f;
            Eigen::VectorXd next = g;
            if (!df.empty()) {
                Eigen::MatrixXd F(m, static_cast<Eigen::Index>(df.size())), G(m, static_cast<Eigen::Index>(dg.size()));
                for (std::size_t i = 0; i < df.size(); ++i) {
                    F.col(static_cast<Eigen::Index>(i)) = df[i];
                    G.col(static_cast<Eigen::Index>(i)) = dg[i];
                }
                const Eigen::VectorXd gamma = F.colPivHouseholderQr().solve(f);
                if (gamma.allFinite()) next = g - G * gamma;
            }
            x = next;
            ++stats.picard_iterations;
            for (Eigen::Index k = 0; k < m; ++k) u[interior[static_cast<std::size_t>(k)]] = x[k];
            const double rel = residual(u, rhs, c, res);
            stats.residual = rel;
            if (!std::isfinite(rel)) return false;
            if (rel <= solver_.newton_tol) return true;
        }
        return false;
    }

    TimeMesh mesh_;
    SolverOptions solver_;
    std::unique_ptr<DiscreteOperator> op_;
};

/// One implicit step with a freshly assembled operator.
inline Field step(const OperatorSpec& spec, const HistoryBuffer& history, const TimeMesh& mesh, std::size_t k,
                  const SolverOptions& solver = {}) {
    return Stepper(spec, history.grid_ptr(), mesh, solver).step(history, k);
}

}  // namespace fradiff
