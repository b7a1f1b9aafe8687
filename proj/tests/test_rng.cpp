#include <catch2/catch_amalgamated.hpp>

#include "vg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using vg::Rng;

TEST_CASE("same seed gives identical streams", "[rng]") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.uniform() == b.uniform());
    }
    Rng c(1234), d(4321);
    bool diverged = false;
    for (int i = 0; i < 32 && !diverged; ++i) diverged = c.raw() != d.raw();
    REQUIRE(diverged);
}

TEST_CASE("uniform stays in the half-open unit interval", "[rng]") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 200000; ++i) {
        double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    // with 2e5 draws both tails should get exercised
    REQUIRE(lo < 1e-4);
    REQUIRE(hi > 1.0 - 1e-4);
}

TEST_CASE("uniform(lo, hi) respects its bounds and mean", "[rng]") {
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform(-2.0, 6.0);
        REQUIRE(u >= -2.0);
        REQUIRE(u < 6.0);
        sum += u;
    }
    REQUIRE(std::abs(sum / n - 2.0) < 0.05);
}

TEST_CASE("normal moments", "[rng]") {
    Rng rng(42);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
    }
    REQUIRE(std::abs(s1 / n) < 0.01);
    REQUIRE(std::abs(s2 / n - 1.0) < 0.02);
    REQUIRE(std::abs(s3 / n) < 0.05);

    double sum = 0.0;
    for (int i = 0; i < n / 4; ++i) sum += rng.normal(3.0, 0.5);
    REQUIRE(std::abs(sum / (n / 4) - 3.0) < 0.01);
}

TEST_CASE("choose returns k distinct in-range indices", "[rng]") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto picked = rng.choose(37, 12);
        REQUIRE(picked.size() == 12);
        std::set<std::size_t> uniq(picked.begin(), picked.end());
        REQUIRE(uniq.size() == 12);
        for (auto i : picked) REQUIRE(i < 37);
    }
    REQUIRE(rng.choose(5, 5).size() == 5);
    REQUIRE(rng.choose(5, 0).empty());
}

TEST_CASE("choose covers the range roughly uniformly", "[rng]") {
    Rng rng(99);
    std::vector<int> counts(16, 0);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        for (auto i : rng.choose(16, 4)) counts[i]++;
    }
    // each index expected trials/4 = 5000 times
    for (int c : counts) {
        REQUIRE(c > 4500);
        REQUIRE(c < 5500);
    }
}

TEST_CASE("derive_seed separates tags and bases", "[rng]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base = 0; base < 8; ++base) {
        for (std::uint64_t tag = 0; tag < 64; ++tag) {
            seen.insert(vg::derive_seed(base, tag));
        }
    }
    REQUIRE(seen.size() == 8 * 64);
    REQUIRE(vg::derive_seed(10, 3) == vg::derive_seed(10, 3));
}

TEST_CASE("below covers the modulus", "[rng]") {
    Rng rng(3);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        auto v = rng.below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 7);
}
