// LASSO by cyclic coordinate descent with soft-thresholding.
//
// Objective: (1/2) sum_mu (y - x w)^2 + lambda * ||w||_1  (no 1/M factor).
// A sweep is converged when the largest coordinate update falls below
// cfg.tol and the KKT residual is within 5 * tol, so the stationarity
// conditions hold at the reported solution by construction.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "vg/core.hpp"
#include "vg/ridge.hpp"

namespace vg {

struct LassoConfig {
    double lambda = 0.0;
    double tol = 1e-8;        // max absolute coordinate update per sweep
    long max_sweeps = 10000;
};

// Smallest lambda with all-zero solution: max_j |x_j^T y|.
inline double lasso_lambda_max(const Dataset& data) {
    return (data.x.transpose() * data.y).cwiseAbs().maxCoeff();
}

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

inline FitResult fit_lasso(const Dataset& data, const LassoConfig& cfg,
                           const std::optional<Vector>& warm_start = std::nullopt) {
    if (cfg.lambda < 0.0) throw InvalidInput("lasso: lambda must be nonnegative");
    if (!(cfg.tol > 0.0)) throw InvalidInput("lasso: tol must be positive");
    const Eigen::Index n = data.n_features();

    Vector w = Vector::Zero(n);
    if (warm_start) {
        if (warm_start->size() != n) throw InvalidInput("lasso: warm start size mismatch");
        w = *warm_start;
    }

    const Vector col_sq = data.x.colwise().squaredNorm();
    Vector residual = data.y - data.x * w;

    FitResult fit;
    fit.solver_id = SolverId::lasso;
    fit.reg_strength = cfg.lambda;

    const double kkt_tol = 5.0 * cfg.tol;
    long sweep = 0;
    bool converged = false;
    for (; sweep < cfg.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (col_sq(j) <= 0.0) continue;  // constant column, weight stays 0
            const double old_w = w(j);
            const double rho = data.x.col(j).dot(residual) + old_w * col_sq(j);
            const double new_w = soft_threshold(rho, cfg.lambda) / col_sq(j);
            const double change = new_w - old_w;
            if (change != 0.0) {
                residual -= change * data.x.col(j);
                w(j) = new_w;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        if (max_change < cfg.tol) {
            // Check stationarity on the maintained residual before stopping.
            double kkt = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (col_sq(j) <= 0.0) continue;
                const double g = data.x.col(j).dot(residual);
                const double v = w(j) == 0.0 ? std::max(0.0, std::abs(g) - cfg.lambda)
                                             : std::abs(g - cfg.lambda * (w(j) > 0 ? 1.0 : -1.0));
                kkt = std::max(kkt, v);
            }
            if (kkt <= kkt_tol) {
                converged = true;
                ++sweep;
                break;
            }
        }
    }

    fit.w = std::move(w);
    fit.iterations = sweep;
    fit.converged = converged;
    fit.loss = 0.5 * residual.squaredNorm() + cfg.lambda * fit.w.lpNorm<1>();
    fit.beta = detail::precision_from_rss(data.n_samples(), residual.squaredNorm());
    return fit;
}

// Sequential fits over a strictly descending lambda grid with warm starts.
inline std::vector<FitResult> lasso_path(const Dataset& data, const std::vector<double>& lambdas,
                                         double tol = 1e-8, long max_sweeps = 10000) {
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] < lambdas[i - 1]))
            throw InvalidInput("lasso_path: lambdas must be strictly descending");

    std::vector<FitResult> fits;
    fits.reserve(lambdas.size());
    std::optional<Vector> warm;
    for (double lambda : lambdas) {
        LassoConfig cfg{lambda, tol, max_sweeps};
        fits.push_back(fit_lasso(data, cfg, warm));
        warm = fits.back().w;
    }
    return fits;
}

}  // namespace vg
