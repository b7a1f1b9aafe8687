// Closed-form Ridge regression.
#pragma once

#include <Eigen/Cholesky>

#include "vg/core.hpp"
#include "vg/linalg.hpp"

namespace vg {

namespace detail {

// Noise precision estimate M / (2 E) with E = RSS / 2 for hard masks.
inline double precision_from_rss(Eigen::Index m_samples, double rss) {
    return static_cast<double>(m_samples) / std::max(rss, 1e-300);
}

}  // namespace detail

// w = (x^T x + lambda I)^-1 x^T y. lambda = 0 routes through the SVD
// pseudoinverse; a rank-deficient design is noted on the result.
inline FitResult fit_ridge(const Dataset& data, double lambda) {
    if (lambda < 0.0) throw InvalidInput("ridge: lambda must be nonnegative");
    const Eigen::Index n = data.n_features();

    FitResult fit;
    fit.solver_id = SolverId::ridge;
    fit.reg_strength = lambda;
    fit.iterations = 1;
    fit.converged = true;

    if (lambda == 0.0) {
        PinvSolution sol = pseudoinverse_solve_full(data.x, data.y);
        fit.w = std::move(sol.w);
        if (sol.rank < n) fit.note = "rank-deficient: minimum-norm pseudoinverse solution";
    } else {
        Matrix gram = data.x.transpose() * data.x;
        gram.diagonal().array() += lambda;
        fit.w = Eigen::LLT<Matrix>(gram).solve(data.x.transpose() * data.y);
    }

    fit.loss = (data.y - data.x * fit.w).squaredNorm();
    fit.beta = detail::precision_from_rss(data.n_samples(), fit.loss);
    return fit;
}

// Sweep over a lambda grid reusing the Gram matrix across solves.
inline std::vector<FitResult> ridge_path(const Dataset& data, const std::vector<double>& lambdas) {
    const Matrix gram = data.x.transpose() * data.x;
    const Vector xty = data.x.transpose() * data.y;

    std::vector<FitResult> fits;
    fits.reserve(lambdas.size());
    for (double lambda : lambdas) {
        if (lambda <= 0.0) {
            fits.push_back(fit_ridge(data, lambda));
            continue;
        }
        Matrix reg = gram;
        reg.diagonal().array() += lambda;

        FitResult fit;
        fit.solver_id = SolverId::ridge;
        fit.reg_strength = lambda;
        fit.iterations = 1;
        fit.converged = true;
        fit.w = Eigen::LLT<Matrix>(reg).solve(xty);
        fit.loss = (data.y - data.x * fit.w).squaredNorm();
        fit.beta = detail::precision_from_rss(data.n_samples(), fit.loss);
        fits.push_back(std::move(fit));
    }
    return fits;
}

}  // namespace vg
