// Ensemble metrics: generalization error, selection error, selection
// uncertainty, and their closed-form mean-field counterparts.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "vg/core.hpp"

namespace vg {

struct EnsembleStats {
    double rho_model_mean = 0.0;
    double e_gen = 0.0;
    double e_sel = std::numeric_limits<double>::quiet_NaN();  // NaN when truth unknown
    double sigma_sel = 0.0;
    Vector mean_mask;
    int n_members = 0;
};

// Normalized test error sqrt(sum (y - yhat)^2 / sum y^2) averaged over
// members. VG predicts with mask-weighted coefficients m_i w_i, the convex
// baselines with raw w_i.
inline double member_generalization_error(const FitResult& fit, const Dataset& test) {
    Vector coef = fit.w;
    if (fit.solver_id == SolverId::vg) {
        if (fit.m.size() != fit.w.size())
            throw InvalidInput("generalization_error: vg fit lacks masks");
        coef = fit.m.cwiseProduct(fit.w);
    }
    const double target_norm = test.y.squaredNorm();
    if (!(target_norm > 0.0))
        throw InvalidInput("generalization_error: degenerate test set, zero target norm");
    const Vector resid = test.y - test.x * coef;
    return std::sqrt(resid.squaredNorm() / target_norm);
}

inline double generalization_error(const std::vector<FitResult>& fits,
                                   const std::vector<Dataset>& tests) {
    if (fits.empty() || fits.size() != tests.size())
        throw InvalidInput("generalization_error: fits and tests must pair up");
    double acc = 0.0;
    for (std::size_t k = 0; k < fits.size(); ++k)
        acc += member_generalization_error(fits[k], tests[k]);
    return acc / static_cast<double>(fits.size());
}

// Rate of wrong selections, (1/N) sum_i [ s_i(1-m_i) + (1-s_i)m_i ],
// averaged over members. Soft masks enter the formula as-is.
inline double member_selection_error(const std::vector<int>& s_star, const Vector& m) {
    if (static_cast<Eigen::Index>(s_star.size()) != m.size())
        throw InvalidInput("selection_error: length mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        acc += s_star[static_cast<std::size_t>(i)] ? (1.0 - m(i)) : m(i);
    return acc / static_cast<double>(m.size());
}

inline double selection_error(const std::vector<std::pair<std::vector<int>, Vector>>& pairs) {
    if (pairs.empty()) throw InvalidInput("selection_error: no members");
    double acc = 0.0;
    for (const auto& [s_star, m] : pairs) acc += member_selection_error(s_star, m);
    return acc / static_cast<double>(pairs.size());
}

inline double selection_error(const std::vector<int>& s_star, const std::vector<Vector>& masks) {
    if (masks.empty()) throw InvalidInput("selection_error: no members");
    double acc = 0.0;
    for (const auto& m : masks) acc += member_selection_error(s_star, m);
    return acc / static_cast<double>(masks.size());
}

// sigma_sel = (1/N) sum_i <m_i>(1 - <m_i>) over the ensemble-mean mask.
inline std::pair<double, Vector> selection_uncertainty(const std::vector<Vector>& masks) {
    if (masks.size() < 2)
        throw InvalidInput("selection_uncertainty: need at least 2 members");
    const Eigen::Index n = masks.front().size();
    Vector mean_mask = Vector::Zero(n);
    for (const auto& m : masks) {
        if (m.size() != n) throw InvalidInput("selection_uncertainty: mask length mismatch");
        mean_mask += m;
    }
    mean_mask /= static_cast<double>(masks.size());
    const double sigma =
        (mean_mask.array() * (1.0 - mean_mask.array())).sum() / static_cast<double>(n);
    return {sigma, std::move(mean_mask)};
}

inline double meanfield_selection_error(double rho_model, double rho_data) {
    if (rho_model < 0.0 || rho_model > 1.0 || rho_data < 0.0 || rho_data > 1.0)
        throw InvalidInput("meanfield_selection_error: densities must lie in [0, 1]");
    return std::abs(rho_model - rho_data);
}

// Mean-field uncertainty kernel: under-selection branch (rho_m/rho_d)(rho_d -
// rho_m), over-selection branch (rho_m - rho_d)(1 - rho_m)/(1 - rho_d).
inline double meanfield_selection_uncertainty(double rho_model, double rho_data) {
    if (rho_model < 0.0 || rho_model > 1.0 || rho_data < 0.0 || rho_data > 1.0)
        throw InvalidInput("meanfield_selection_uncertainty: densities must lie in [0, 1]");
    if (rho_model == rho_data) return 0.0;
    if (rho_model < rho_data) return (rho_model / rho_data) * (rho_data - rho_model);
    return (rho_model - rho_data) * (1.0 - rho_model) / (1.0 - rho_data);
}

}  // namespace vg
