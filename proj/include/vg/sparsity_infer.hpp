// Infer the data sparsity from an observed sigma_sel(rho_model) curve by
// nonnegative least squares against the mean-field uncertainty kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "vg/core.hpp"
#include "vg/metrics.hpp"

namespace vg {

struct SparsityPosterior {
    Vector grid;              // candidate rho_data values, strictly increasing
    Vector probs;             // nonnegative, sums to 1
    double point_estimate = 0.0;     // grid[argmax probs], ties toward smaller rho
    double weighted_estimate = 0.0;  // prob-weighted mean of the top-2 candidates
    double residual = 0.0;           // || sigma_obs - T p ||_2
    bool degenerate = false;
};

// Lawson-Hanson active-set NNLS: min_{p >= 0} ||A p - b||_2. The KKT
// tolerance is scaled by the gradient magnitude at zero so the solve is
// invariant to rescaling b.
inline Vector nnls(const Matrix& a, const Vector& b, double kkt_tol = 1e-10,
                   int max_iters = 10000) {
    const Eigen::Index n = a.cols();
    Vector x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Vector residual = b;
    Vector dual = a.transpose() * residual;
    const double tol = kkt_tol * std::max(1.0, dual.cwiseAbs().maxCoeff());

    auto solve_passive = [&](Vector& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Matrix ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
        const Vector zp = ap.colPivHouseholderQr().solve(b);
        z.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
    };

    int iters = 0;
    while (iters++ < max_iters) {
        dual.noalias() = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_dual = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && dual(j) > best_dual) {
                best_dual = dual(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        Vector z(n);
        solve_passive(z);
        while (true) {
            bool feasible = true;
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    feasible = false;
                    const double step = x(j) / (x(j) - z(j));
                    alpha = std::min(alpha, step);
                }
            }
            if (feasible) break;
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-14) {
                    x(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
            if (std::none_of(passive.begin(), passive.end(), [](bool p) { return p; })) break;
            solve_passive(z);
        }
        for (Eigen::Index j = 0; j < n; ++j)
            x(j) = passive[static_cast<std::size_t>(j)] ? std::max(z(j), 0.0) : 0.0;
    }
    return x;
}

inline Vector default_sparsity_grid(int n_features) {
    if (n_features < 4) throw InvalidInput("default_sparsity_grid: need N >= 4");
    const int k_max = n_features / 4;
    Vector grid(k_max);
    for (int k = 1; k <= k_max; ++k)
        grid(k - 1) = static_cast<double>(k) / static_cast<double>(n_features);
    return grid;
}

inline SparsityPosterior infer_data_sparsity(
    const std::vector<std::pair<double, double>>& curve, const Vector& grid) {
    const Eigen::Index k_count = grid.size();
    if (k_count < 1) throw InvalidInput("infer_data_sparsity: empty candidate grid");
    for (Eigen::Index k = 0; k < k_count; ++k) {
        if (!(grid(k) > 0.0) || !(grid(k) < 1.0))
            throw InvalidInput("infer_data_sparsity: grid candidates must lie in (0, 1)");
        if (k > 0 && !(grid(k) > grid(k - 1)))
            throw InvalidInput("infer_data_sparsity: grid must be strictly increasing");
    }
    if (static_cast<Eigen::Index>(curve.size()) < k_count)
        throw InvalidInput("infer_data_sparsity: need at least as many curve points as candidates");

    double rho_lo = 1.0, rho_hi = 0.0;
    for (const auto& [rho, sigma] : curve) {
        rho_lo = std::min(rho_lo, rho);
        rho_hi = std::max(rho_hi, rho);
        (void)sigma;
    }
    const bool straddles = ((grid.array() >= rho_lo) && (grid.array() <= rho_hi)).any();
    if (!straddles)
        throw InvalidInput("infer_data_sparsity: curve does not span any grid candidate");

    const Eigen::Index j_count = static_cast<Eigen::Index>(curve.size());
    Vector sigma_obs(j_count);
    Matrix templates(j_count, k_count);
    for (Eigen::Index j = 0; j < j_count; ++j) {
        sigma_obs(j) = curve[static_cast<std::size_t>(j)].second;
        const double rho_m = curve[static_cast<std::size_t>(j)].first;
        for (Eigen::Index k = 0; k < k_count; ++k)
            templates(j, k) = meanfield_selection_uncertainty(rho_m, grid(k));
    }

    SparsityPosterior post;
    post.grid = grid;
    if (sigma_obs.cwiseAbs().maxCoeff() == 0.0) {
        post.probs = Vector::Constant(k_count, 1.0 / static_cast<double>(k_count));
        post.point_estimate = grid(0);
        post.weighted_estimate = grid(0);
        post.residual = 0.0;
        post.degenerate = true;
        return post;
    }

    const Vector p = nnls(templates, sigma_obs);
    const double total = p.sum();
    if (!(total > 0.0))
        throw NumericalError("infer_data_sparsity: degenerate fit, kernel mixture collapsed");

    post.probs = p / total;
    post.residual = (sigma_obs - templates * p).norm();

    Eigen::Index arg_best = 0;
    for (Eigen::Index k = 1; k < k_count; ++k)
        if (post.probs(k) > post.probs(arg_best)) arg_best = k;  // ties keep smaller rho
    post.point_estimate = grid(arg_best);

    if (k_count == 1) {
        post.weighted_estimate = grid(0);
    } else {
        Eigen::Index second = arg_best == 0 ? 1 : 0;
        for (Eigen::Index k = 0; k < k_count; ++k) {
            if (k == arg_best) continue;
            if (post.probs(k) > post.probs(second)) second = k;
        }
        const double mass = post.probs(arg_best) + post.probs(second);
        post.weighted_estimate =
            mass > 0.0
                ? (post.probs(arg_best) * grid(arg_best) + post.probs(second) * grid(second)) / mass
                : grid(arg_best);
    }
    return post;
}

inline SparsityPosterior infer_data_sparsity(
    const std::vector<std::pair<double, double>>& curve, int n_features) {
    return infer_data_sparsity(curve, default_sparsity_grid(n_features));
}

}  // namespace vg
