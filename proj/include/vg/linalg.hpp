// Dense linear-algebra primitives shared by the solvers.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <limits>

#include "vg/core.hpp"

namespace vg {

struct PinvSolution {
    Vector w;
    Eigen::Index rank = 0;
    double cutoff = 0.0;
};

// Minimum-norm least-squares solution w = x^+ y via SVD. Singular values
// below rcond * sigma_max are treated as zero, rcond = eps * max(M, N).
inline PinvSolution pseudoinverse_solve_full(const Matrix& x, const Vector& y) {
    if (x.rows() < 1 || x.cols() < 1) throw InvalidInput("pseudoinverse: empty matrix");
    if (x.rows() != y.size()) throw InvalidInput("pseudoinverse: shape mismatch");
    if (!x.allFinite() || !y.allFinite()) throw InvalidInput("pseudoinverse: non-finite input");

    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double rcond = std::numeric_limits<double>::epsilon() *
                         static_cast<double>(std::max(x.rows(), x.cols()));
    const double cutoff = rcond * svd.singularValues()(0);

    const Vector& sv = svd.singularValues();
    Vector uty = svd.matrixU().transpose() * y;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            uty(i) /= sv(i);
            ++rank;
        } else {
            uty(i) = 0.0;
        }
    }
    return {svd.matrixV() * uty, rank, cutoff};
}

inline Vector pseudoinverse_solve(const Matrix& x, const Vector& y) {
    return pseudoinverse_solve_full(x, y).w;
}

// Subtracts column means from x and the mean from y in place.
inline void center_in_place(Matrix& x, Vector& y) {
    x.rowwise() -= x.colwise().mean();
    y.array() -= y.mean();
}

}  // namespace vg
