#include <catch2/catch_amalgamated.hpp>

#include "vg/datagen.hpp"
#include "vg/ridge.hpp"

#include <cmath>

using namespace vg;

namespace {

Dataset random_dataset(Eigen::Index m, Eigen::Index n, std::uint64_t seed,
                       bool center = true) {
    Rng rng(seed);
    Dataset d;
    d.x.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d.x(i, j) = rng.normal();
    d.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) d.y(i) = rng.normal();
    if (center) {
        center_in_place(d.x, d.y);
        d.centered = true;
    }
    return d;
}

} // namespace

TEST_CASE("identity design with unit penalty halves the targets", "[ridge]") {
    Dataset d;
    d.x = Matrix::Identity(3, 3);
    d.y = Vector::Zero(3);
    d.y << 3.0, 0.0, 0.0;
    auto fit = fit_ridge(d, 1.0);
    REQUIRE(fit.w(0) == Catch::Approx(1.5).epsilon(1e-12));
    REQUIRE(fit.w(1) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(fit.w(2) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(fit.solver_id == SolverId::ridge);
    REQUIRE(fit.converged);
    REQUIRE(fit.reg_strength == 1.0);
}

TEST_CASE("ridge satisfies its normal equations", "[ridge]") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto d = random_dataset(40, 12, seed);
        for (double lambda : {1e-3, 0.1, 1.0, 25.0}) {
            auto fit = fit_ridge(d, lambda);
            Vector resid = (d.x.transpose() * d.x + lambda * Matrix::Identity(12, 12)) * fit.w
                           - d.x.transpose() * d.y;
            double scale = (d.x.transpose() * d.y).norm() + 1.0;
            REQUIRE(resid.norm() / scale < 1e-8);
            REQUIRE(fit.loss == Catch::Approx((d.y - d.x * fit.w).squaredNorm()));
            REQUIRE(fit.beta == Catch::Approx(static_cast<double>(d.n_samples()) / fit.loss));
        }
    }
}

TEST_CASE("coefficient norm decays with the penalty", "[ridge]") {
    auto d = random_dataset(16, 32, 11);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
        auto fit = fit_ridge(d, lambda);
        double norm = fit.w.norm();
        REQUIRE(norm < prev + 1e-12);
        prev = norm;
    }
}

TEST_CASE("vanishing penalty approaches the pseudoinverse", "[ridge]") {
    auto d = random_dataset(16, 32, 13);
    // normal equations at cond ~ sigma^2/lambda: 1e-8 balances the analytic
    // O(lambda) bias against the numeric O(eps/lambda) roundoff
    auto fit = fit_ridge(d, 1e-8);
    Vector pinv = pseudoinverse_solve(d.x, d.y);
    REQUIRE((fit.w - pinv).norm() < 1e-4 * (1.0 + pinv.norm()));
}

TEST_CASE("zero penalty on a wide design flags rank deficiency", "[ridge]") {
    auto d = random_dataset(8, 16, 17);
    auto fit = fit_ridge(d, 0.0);
    REQUIRE((d.x * fit.w - d.y).norm() < 1e-8);
    REQUIRE(fit.note.find("pseudoinverse") != std::string::npos);
}

TEST_CASE("negative penalty is rejected", "[ridge]") {
    auto d = random_dataset(8, 4, 19);
    REQUIRE_THROWS_AS(fit_ridge(d, -1.0), InvalidInput);
}

TEST_CASE("ridge path matches individual fits", "[ridge]") {
    auto d = random_dataset(30, 10, 23);
    std::vector<double> grid{1e-3, 1e-1, 1.0, 10.0};
    auto path = ridge_path(d, grid);
    REQUIRE(path.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto single = fit_ridge(d, grid[i]);
        REQUIRE((path[i].w - single.w).norm() < 1e-10);
        REQUIRE(path[i].reg_strength == grid[i]);
    }
}
