// Schema-faithful stand-ins for the two real benchmark tables, used by the
// acceptance binary when the raw downloads are not present. Shapes, column
// layouts, missing-value conventions and split arithmetic match the real
// files; targets are driven by a small planted set of relevant columns so
// the sparsity-inference checks have a known answer.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "vg/core.hpp"
#include "vg/rng.hpp"

namespace fixtures {

constexpr long kCcRows = 2215;
constexpr int kCcRelevantA = 6;   // raw column indices of the planted features
constexpr int kCcRelevantB = 20;
constexpr long kBfTrainRows = 52397;
constexpr long kBfTestRows1 = 3800;
constexpr long kBfTestRows2 = 3824;
constexpr int kBfRelevant = 7;    // base column driving the target

// 2215 x 147 community table: 4 id columns, 125 predictive, 18 goal counts.
// The last 24 predictive columns carry scattered '?' so the loader retains
// exactly 101; the target goal column is a linear function of two predictive
// columns in log space.
inline void write_cc_fixture(const std::string& path, std::uint64_t seed) {
    vg::Rng rng(seed);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw vg::DataError("cannot write fixture: " + path);

    const int target_goal = 136;
    std::string line;
    line.reserve(4096);
    char buf[64];
    for (long r = 0; r < kCcRows; ++r) {
        line.clear();
        std::snprintf(buf, sizeof(buf), "community%ld,CA,%ld,%ld", r, r % 50, r % 97);
        line += buf;

        double z_a = 0.0, z_b = 0.0;
        for (int c = 4; c < 129; ++c) {
            const bool droppable = c >= 105;
            // six '?' cells per droppable column, deterministically scattered
            bool missing = false;
            if (droppable) {
                for (int k = 0; k < 6 && !missing; ++k)
                    missing = (13L * c + 97L * k) % kCcRows == r;
            }
            if (missing) {
                line += ",?";
                rng.normal(); // keep the stream aligned across rows
                continue;
            }
            const double z = rng.normal();
            if (c == kCcRelevantA) z_a = z;
            if (c == kCcRelevantB) z_b = z;
            std::snprintf(buf, sizeof(buf), ",%.6f", std::exp(z));
            line += buf;
        }
        for (int c = 129; c < 147; ++c) {
            long v;
            if (c == target_goal) {
                const double raw = 200.0 + 60.0 * z_a - 45.0 * z_b + 5.0 * rng.normal();
                v = std::max(0L, std::lround(raw));
            } else {
                v = std::lround(std::abs(2.0 * rng.normal()));
            }
            std::snprintf(buf, sizeof(buf), ",%ld", v);
            line += buf;
        }
        line += '\n';
        out << line;
    }
}

namespace detail {

inline void write_bf_file(std::ofstream& out, long row_begin, long row_count,
                          std::uint64_t seed) {
    vg::Rng rng(vg::derive_seed(seed, static_cast<std::uint64_t>(row_begin)));
    std::string line;
    line.reserve(4096);
    char buf[64];
    for (long i = 0; i < row_count; ++i) {
        line.clear();
        double v_rel = 0.0;
        for (int c = 0; c < 60; ++c) {
            const double scale = 1.0 + static_cast<double>(c % 4);
            double v = scale * rng.normal();
            if (c == kBfRelevant) {
                v = rng.normal();
                v_rel = v;
            }
            std::snprintf(buf, sizeof(buf), c ? ",%.5f" : "%.5f", v);
            line += buf;
        }
        for (int c = 60; c < 280; ++c) {
            std::snprintf(buf, sizeof(buf), ",%ld", (row_begin + i + c) % 9);
            line += buf;
        }
        const double raw = 3.0 + 2.4 * v_rel + 0.6 * rng.normal();
        std::snprintf(buf, sizeof(buf), ",%ld", std::max(0L, std::lround(raw)));
        line += buf;
        line += '\n';
        out << line;
    }
}

} // namespace detail

// Canonical blog layout: one train file plus dated test files, 281 numeric
// columns, 60021 rows in total.
inline void write_bf_fixture(const std::string& dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    struct Part {
        const char* name;
        long begin;
        long count;
    };
    const Part parts[] = {{"blogData_train.csv", 0, kBfTrainRows},
                          {"blogData_test_2012.03.25.00_00.csv", kBfTrainRows, kBfTestRows1},
                          {"blogData_test_2012.03.26.00_00.csv", kBfTrainRows + kBfTestRows1,
                           kBfTestRows2}};
    for (const auto& part : parts) {
        std::ofstream out(fs::path(dir) / part.name, std::ios::binary);
        if (!out) throw vg::DataError(std::string("cannot write fixture: ") + part.name);
        detail::write_bf_file(out, part.begin, part.count, seed);
    }
}

} // namespace fixtures
