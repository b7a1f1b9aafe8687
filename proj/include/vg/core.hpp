// Shared domain types and error taxonomy.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Maps to CLI exit code 2.
struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Maps to CLI exit code 3 (unreadable files, schema mismatches).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Maps to CLI exit code 4 (non-finite losses, degenerate fits).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A regression problem: M samples by N features plus the target vector.
// Immutable after construction; safe to share read-only across workers.
struct Dataset {
    Matrix x;  // M x N
    Vector y;  // length M
    std::vector<std::string> feature_names;  // empty or size N
    bool centered = false;

    Eigen::Index n_samples() const { return x.rows(); }
    Eigen::Index n_features() const { return x.cols(); }
};

inline void validate_dataset(const Dataset& d) {
    if (d.x.rows() != d.y.size())
        throw InvalidInput("dataset: x has " + std::to_string(d.x.rows()) +
                           " rows but y has " + std::to_string(d.y.size()));
    if (!d.x.allFinite() || !d.y.allFinite())
        throw InvalidInput("dataset: non-finite entries");
    if (!d.feature_names.empty() &&
        static_cast<Eigen::Index>(d.feature_names.size()) != d.x.cols())
        throw InvalidInput("dataset: feature_names size mismatch");
    if (d.centered) {
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
            const double mean = d.x.col(j).mean();
            const double sd = std::sqrt(d.x.col(j).squaredNorm() / d.x.rows() - mean * mean);
            if (std::abs(mean) > 1e-10 * (sd + 1.0))
                throw InvalidInput("dataset: column " + std::to_string(j) + " not centered");
        }
        const double ymean = d.y.mean();
        const double ysd = std::sqrt(d.y.squaredNorm() / d.y.size() - ymean * ymean);
        if (std::abs(ymean) > 1e-10 * (ysd + 1.0))
            throw InvalidInput("dataset: y not centered");
    }
}

// Teacher model behind a synthetic dataset. s_star[i] == 1 iff w_star[i] != 0.
struct GroundTruth {
    Vector w_star;
    std::vector<int> s_star;
    double rho_data = 0.0;      // nominal density
    double noise_std = 0.0;     // sigma_xi, recorded by generate_dataset

    double realized_density() const {
        if (s_star.empty()) return 0.0;
        long on = 0;
        for (int s : s_star) on += s;
        return static_cast<double>(on) / static_cast<double>(s_star.size());
    }
};

enum class SolverId { ridge, lasso, vg };

inline const char* solver_name(SolverId s) {
    switch (s) {
        case SolverId::ridge: return "ridge";
        case SolverId::lasso: return "lasso";
        case SolverId::vg: return "vg";
    }
    return "?";
}

inline SolverId solver_from_name(const std::string& s) {
    if (s == "ridge") return SolverId::ridge;
    if (s == "lasso") return SolverId::lasso;
    if (s == "vg") return SolverId::vg;
    throw InvalidInput("unknown solver: " + s);
}

// Output of any solver. Ridge/LASSO leave m empty and rho_model NaN until the
// masking pass fills them in; fit_vg populates both directly.
struct FitResult {
    Vector w;
    Vector m;
    double beta = 0.0;        // derived noise precision, M / (2 E(m, w))
    double rho_model = std::numeric_limits<double>::quiet_NaN();
    double loss = 0.0;
    double reg_strength = 0.0;  // lambda or gamma
    SolverId solver_id = SolverId::ridge;
    long iterations = 0;
    bool converged = false;
    std::string note;  // set on fallbacks and degenerate fits
};

}  // namespace vg
