// Mask extraction for the two baselines. VG masks come out of the solver
// directly; LASSO weights get an elbow threshold from a zero-centered
// two-component Gaussian mixture, Ridge weights are cut at an
// ensemble-calibrated lower bound on unregularized fits.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "vg/core.hpp"
#include "vg/linalg.hpp"

namespace vg {

struct ElbowFit {
    double sigma_narrow = 0.0;
    double sigma_wide = 0.0;
    double mix_weight = 0.5;  // weight of the narrow component
    double threshold = 0.0;
    int em_iters = 0;
    bool converged = false;
};

struct RidgeBound {
    double w_lower = 0.0;
    int n_calibration = 0;
};

namespace detail {

inline double log_normal_pdf(double v, double var) {
    return -0.5 * (std::log(2.0 * M_PI * var) + v * v / var);
}

// One EM run for the two-component zero-mean mixture. Variances are floored
// so the spike component cannot collapse onto exact zeros.
inline ElbowFit em_two_gaussians(const Vector& w, double sigma_n0, double sigma_w0) {
    const Eigen::Index n = w.size();
    const double var_floor = std::max(1e-12 * w.squaredNorm() / static_cast<double>(n), 1e-30);

    double var_n = std::max(sigma_n0 * sigma_n0, var_floor);
    double var_w = std::max(sigma_w0 * sigma_w0, 2.0 * var_floor);
    double pi_n = 0.5;

    ElbowFit fit;
    double prev_ll = -std::numeric_limits<double>::infinity();
    Vector resp(n);
    constexpr int kMaxIters = 2000;
    for (int it = 0; it < kMaxIters; ++it) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ln = std::log(pi_n) + log_normal_pdf(w(i), var_n);
            const double lw = std::log(1.0 - pi_n) + log_normal_pdf(w(i), var_w);
            const double hi = std::max(ln, lw);
            const double lse = hi + std::log(std::exp(ln - hi) + std::exp(lw - hi));
            resp(i) = std::exp(ln - lse);
            ll += lse;
        }

        const double rn = resp.sum();
        const double rw = static_cast<double>(n) - rn;
        if (rn > 0.0) var_n = std::max((resp.array() * w.array().square()).sum() / rn, var_floor);
        if (rw > 0.0)
            var_w = std::max(((1.0 - resp.array()) * w.array().square()).sum() / rw, var_floor);
        pi_n = std::min(std::max(rn / static_cast<double>(n), 1e-12), 1.0 - 1e-12);

        fit.em_iters = it + 1;
        if (ll - prev_ll < 1e-10 && it > 0) {
            fit.converged = true;
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }

    if (var_n > var_w) {
        std::swap(var_n, var_w);
        pi_n = 1.0 - pi_n;
    }
    fit.sigma_narrow = std::sqrt(var_n);
    fit.sigma_wide = std::sqrt(var_w);
    fit.mix_weight = pi_n;

    // Equal-responsibility magnitude: pi_n phi(t; var_n) = pi_w phi(t; var_w).
    const double prec_gap = 1.0 / var_n - 1.0 / var_w;
    if (prec_gap <= 0.0) {
        fit.threshold = std::numeric_limits<double>::infinity();
    } else {
        const double t2 =
            2.0 * std::log(pi_n * fit.sigma_wide / ((1.0 - pi_n) * fit.sigma_narrow)) / prec_gap;
        fit.threshold = t2 > 0.0 ? std::sqrt(t2) : 0.0;
    }
    return fit;
}

inline double mixture_loglik(const Vector& w, const ElbowFit& fit) {
    const double var_n = fit.sigma_narrow * fit.sigma_narrow;
    const double var_w = fit.sigma_wide * fit.sigma_wide;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double ln = std::log(fit.mix_weight) + log_normal_pdf(w(i), var_n);
        const double lw = std::log(1.0 - fit.mix_weight) + log_normal_pdf(w(i), var_w);
        const double hi = std::max(ln, lw);
        ll += hi + std::log(std::exp(ln - hi) + std::exp(lw - hi));
    }
    return ll;
}

}  // namespace detail

// Threshold LASSO weights at the elbow between the near-zero cluster and the
// dispersed relevant weights. Mask entry is 1 iff |w_i| > threshold.
inline std::pair<Vector, ElbowFit> mask_from_lasso(const Vector& w) {
    const Eigen::Index n = w.size();
    if (n < 4) throw InvalidInput("mask_from_lasso: need at least 4 weights");

    if ((w.array() == 0.0).all()) {
        ElbowFit degenerate;
        degenerate.sigma_narrow = 0.0;
        degenerate.sigma_wide = 1.0;
        degenerate.threshold = 0.0;
        degenerate.converged = false;
        return {Vector::Zero(n), degenerate};
    }

    const double mean = w.mean();
    const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(n));
    if (sd == 0.0) throw NumericalError("mask_from_lasso: all weights identical");

    const double scale = std::sqrt(w.squaredNorm() / static_cast<double>(n));
    const double inits[3][2] = {{0.1 * scale, 2.0 * scale},
                                {0.05 * scale, 1.0 * scale},
                                {0.2 * scale, 4.0 * scale}};
    ElbowFit best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (const auto& init : inits) {
        ElbowFit fit = detail::em_two_gaussians(w, init[0], init[1]);
        const double ll = detail::mixture_loglik(w, fit);
        if (ll > best_ll) {
            best_ll = ll;
            best = fit;
        }
    }

    Vector m(n);
    for (Eigen::Index i = 0; i < n; ++i) m(i) = std::abs(w(i)) > best.threshold ? 1.0 : 0.0;
    return {std::move(m), best};
}

// Mean over datasets of the smallest absolute coefficient of an
// unregularized fit. Weights at or above this bound count as relevant.
inline RidgeBound calibrate_ridge_bound(const std::vector<Dataset>& datasets) {
    if (datasets.empty()) throw InvalidInput("calibrate_ridge_bound: empty dataset list");
    double acc = 0.0;
    for (const auto& data : datasets) {
        const Vector w = pseudoinverse_solve(data.x, data.y);
        acc += w.cwiseAbs().minCoeff();
    }
    RidgeBound bound;
    bound.w_lower = acc / static_cast<double>(datasets.size());
    bound.n_calibration = static_cast<int>(datasets.size());
    return bound;
}

inline Vector mask_from_ridge(const Vector& w, const RidgeBound& bound) {
    Vector m(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        m(i) = std::abs(w(i)) >= bound.w_lower ? 1.0 : 0.0;
    return m;
}

inline double rho_from_mask(const Vector& m) {
    if (m.size() == 0) throw InvalidInput("rho_from_mask: empty mask");
    if ((m.array() < 0.0).any() || (m.array() > 1.0).any())
        throw InvalidInput("rho_from_mask: entries must lie in [0, 1]");
    return m.mean();
}

}  // namespace vg
