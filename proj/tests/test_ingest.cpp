#include <catch2/catch_amalgamated.hpp>

#include "vg/ingest.hpp"
#include "vg/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

using namespace vg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path()
               / ("vging_" + std::to_string(::getpid()) + "_"
                  + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

constexpr int kRows = 30;

// Deterministic field formulas shared by the writer and the oracles below.
double cc_predictive(int r, int c) {
    if (c == 4) return r == 0 ? 1e-9 : 10.0 + r; // one extreme low outlier
    return 1.0 + static_cast<double>((r * 31 + c * 17) % 97) / 10.0;
}

double cc_goal(int r, int c) {
    return c == 130 ? 1000.0 + r : static_cast<double>(r % 5);
}

void write_cc_fixture(const std::string& path, bool with_header) {
    std::ofstream out(path);
    if (with_header) {
        for (int c = 0; c < 147; ++c) {
            if (c) out << ',';
            if (c < 4)
                out << "meta" << c;
            else if (c < 129)
                out << "pred" << c;
            else
                out << "crime" << c;
        }
        out << '\n';
    }
    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < 147; ++c) {
            if (c) out << ',';
            if (c == 0) {
                out << "community" << r;
            } else if (c < 4) {
                out << c;
            } else if (c < 129) {
                if (c == 10 && r == 3) out << '?';
                else if (c == 50 && r == 7) out << "abc";
                else out << cc_predictive(r, c);
            } else {
                if (c == 130 && (r == 11 || r == 23)) out << '?';
                else out << cc_goal(r, c);
            }
        }
        out << '\n';
    }
}

std::vector<int> cc_kept_rows() {
    std::vector<int> rows;
    for (int r = 0; r < kRows; ++r)
        if (r != 11 && r != 23) rows.push_back(r);
    return rows;
}

// Replicates the documented transform for one predictive column.
std::vector<double> cc_expected_column(int c) {
    auto rows = cc_kept_rows();
    const auto m = static_cast<double>(rows.size());
    std::vector<double> v;
    double eps = std::numeric_limits<double>::infinity();
    for (int r : rows) {
        double raw = cc_predictive(r, c);
        if (raw > 0.0) eps = std::min(eps, raw);
        v.push_back(raw);
    }
    for (auto& x : v) x = std::log(std::max(x, 0.0) + eps);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= m;
    double ss = 0.0;
    for (auto& x : v) {
        x -= mean;
        ss += x * x;
    }
    double sd = std::sqrt(ss / m);
    for (auto& x : v) x = std::max(x / sd, -3.0);
    double mean2 = 0.0;
    for (double x : v) mean2 += x;
    mean2 /= m;
    for (auto& x : v) x -= mean2;
    return v;
}

// Blog fixture formulas.
double bf_base(int r, int c) {
    if (c == 0) {
        if (r == 0) return 0.0;
        if (r == 1) return std::exp(1.0) - 1.0;
        if (r == 2) return -(std::exp(1.0) - 1.0);
        return static_cast<double>((r * 13 + 7) % 19) - 9.0;
    }
    if (c == 5) return 7.0; // constant, must be dropped with its copy
    return static_cast<double>((r * 29 + c * 11) % 23) - 11.0;
}

double bf_target(int r) { return static_cast<double>((r * 37) % 41) / 3.0; }

void write_bf_file(const std::string& path, int row_begin, int row_count) {
    std::ofstream out(path);
    for (int i = 0; i < row_count; ++i) {
        const int r = row_begin + i;
        for (int c = 0; c < 281; ++c) {
            if (c) out << ',';
            if (c < 60) out << bf_base(r, c);
            else if (c == 280) out << bf_target(r);
            else out << ((r + c) % 7);
        }
        out << '\n';
    }
}

Dataset indexed_dataset(long m) {
    Dataset d;
    d.x.resize(m, 3);
    Rng rng(5);
    for (long r = 0; r < m; ++r) {
        d.x(r, 0) = static_cast<double>(r); // row marker survives centering shifts
        d.x(r, 1) = rng.normal();
        d.x(r, 2) = rng.normal();
    }
    d.y.resize(m);
    for (long r = 0; r < m; ++r) d.y(r) = rng.normal();
    d.feature_names = {"marker", "a", "b"};
    return d;
}

} // namespace

TEST_CASE("cc loader applies the documented pipeline", "[ingest]") {
    TempDir tmp;
    write_cc_fixture(tmp.file("cc.csv"), false);
    auto [data, report] = load_cc(tmp.file("cc.csv"));

    REQUIRE(report.n_raw_attributes == 125);
    REQUIRE(report.n_instances == 28); // two rows lost to missing targets
    REQUIRE(report.n_kept_features == 123);
    REQUIRE(data.x.rows() == 28);
    REQUIRE(data.x.cols() == 123);
    REQUIRE(data.centered);

    // the two corrupted predictive columns are reported by name
    bool saw_11 = false, saw_51 = false;
    for (const auto& s : report.dropped_columns) {
        if (s.find("attr_011") != std::string::npos) saw_11 = true;
        if (s.find("attr_051") != std::string::npos) saw_51 = true;
    }
    REQUIRE(saw_11);
    REQUIRE(saw_51);

    bool warned_rows = false, warned_count = false;
    for (const auto& s : report.warnings) {
        if (s.find("2 rows dropped") != std::string::npos) warned_rows = true;
        if (s.find("expected 101") != std::string::npos) warned_count = true;
    }
    REQUIRE(warned_rows);
    REQUIRE(warned_count);

    // goal_131 dominates the column sums
    bool target_logged = false;
    for (const auto& s : report.transform_log)
        if (s.find("goal_131") != std::string::npos) target_logged = true;
    REQUIRE(target_logged);

    // column 4 carries the planted outlier; verify clamp and re-center exactly
    REQUIRE(data.feature_names[0] == "attr_005");
    auto expected = cc_expected_column(4);
    for (int r = 0; r < 28; ++r)
        REQUIRE(data.x(r, 0) == Catch::Approx(expected[static_cast<std::size_t>(r)]).margin(1e-9));
    // the outlier would sit far below -3 without the clamp
    REQUIRE(data.x.col(0).minCoeff() > -3.2);

    // standardized target
    REQUIRE(std::abs(data.y.mean()) < 1e-12);
    REQUIRE(data.y.squaredNorm() / 28.0 == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cc loader detects an optional header", "[ingest]") {
    TempDir tmp;
    write_cc_fixture(tmp.file("cc_hdr.csv"), true);
    auto [data, report] = load_cc(tmp.file("cc_hdr.csv"));
    REQUIRE(report.n_instances == 28);
    REQUIRE(data.feature_names[0] == "pred4"); // names come from the header now
    bool target_logged = false;
    for (const auto& s : report.transform_log)
        if (s.find("crime130") != std::string::npos) target_logged = true;
    REQUIRE(target_logged);
}

TEST_CASE("cc loader rejects malformed rows", "[ingest]") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("short.csv"));
        out << "a,b,c\n";
    }
    REQUIRE_THROWS_AS(load_cc(tmp.file("short.csv")), DataError);
    REQUIRE_THROWS_AS(load_cc(tmp.file("missing.csv")), DataError);
}

TEST_CASE("bf loader builds signed-log copies and drops dead pairs", "[ingest]") {
    TempDir tmp;
    write_bf_file(tmp.file("bf.csv"), 0, 40);
    auto [data, report] = load_bf(tmp.file("bf.csv"));

    REQUIRE(report.n_instances == 40);
    REQUIRE(report.n_kept_features == 118); // 60 pairs minus the constant pair
    REQUIRE(data.x.cols() == 118);
    REQUIRE(data.centered);

    // base block then signed-log block, constant pair feat_006/slog_006 gone
    REQUIRE(data.feature_names[0] == "feat_001");
    REQUIRE(data.feature_names[59] == "slog_001");
    for (const auto& name : data.feature_names) {
        REQUIRE(name != "feat_006");
        REQUIRE(name != "slog_006");
    }

    // replicate the signed-log transform for base column 0
    std::vector<double> slog(40);
    for (int r = 0; r < 40; ++r) {
        double v = bf_base(r, 0);
        slog[static_cast<std::size_t>(r)] = std::copysign(std::log1p(std::abs(v)), v);
    }
    REQUIRE(slog[0] == 0.0);
    REQUIRE(slog[1] == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(slog[2] == Catch::Approx(-1.0).epsilon(1e-15));
    double mean = 0.0;
    for (double v : slog) mean += v;
    mean /= 40.0;
    double ss = 0.0;
    for (double v : slog) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / 40.0);
    for (int r = 0; r < 40; ++r)
        REQUIRE(data.x(r, 59)
                == Catch::Approx((slog[static_cast<std::size_t>(r)] - mean) / sd).margin(1e-9));

    // every kept column is standardized
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
        REQUIRE(std::abs(data.x.col(j).mean()) < 1e-9);
        REQUIRE(data.x.col(j).squaredNorm() / 40.0 == Catch::Approx(1.0).epsilon(1e-9));
    }
    REQUIRE(std::abs(data.y.mean()) < 1e-12);
}

TEST_CASE("bf loader concatenates a canonical directory", "[ingest]") {
    TempDir tmp;
    fs::create_directories(tmp.path / "blog");
    write_bf_file((tmp.path / "blog" / "blogData_train.csv").string(), 0, 25);
    write_bf_file((tmp.path / "blog" / "blogData_test_2012.02.02.00_00.csv").string(), 35, 5);
    write_bf_file((tmp.path / "blog" / "blogData_test_2012.02.01.00_00.csv").string(), 25, 10);

    auto [data, report] = load_bf((tmp.path / "blog").string());
    REQUIRE(report.n_instances == 40);

    // order must equal train plus tests sorted by filename; compare against
    // the equivalent single concatenated file
    write_bf_file(tmp.file("all.csv"), 0, 40);
    auto [flat, flat_report] = load_bf(tmp.file("all.csv"));
    REQUIRE((data.x - flat.x).norm() == 0.0);
    REQUIRE((data.y - flat.y).norm() == 0.0);
}

TEST_CASE("bf loader enforces the column contract", "[ingest]") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("bad.csv"));
        for (int c = 0; c < 280; ++c) out << (c ? "," : "") << 1;
        out << '\n';
    }
    REQUIRE_THROWS_AS(load_bf(tmp.file("bad.csv")), DataError);

    {
        std::ofstream out(tmp.file("nonnum.csv"));
        for (int c = 0; c < 281; ++c) out << (c ? "," : "") << (c == 3 ? "x" : "1");
        out << '\n';
    }
    REQUIRE_THROWS_AS(load_bf(tmp.file("nonnum.csv")), DataError);

    TempDir empty_dir;
    REQUIRE_THROWS_AS(load_bf(empty_dir.path.string()), DataError);
}

TEST_CASE("make_split produces the documented sizes", "[ingest]") {
    auto d = indexed_dataset(2215);
    auto [train, test] = make_split(d, 0.15, 9);
    REQUIRE(train.n_samples() == 332); // round(0.15 * 2215)
    REQUIRE(test.n_samples() == 1883);
    REQUIRE(train.n_features() == 3);
    REQUIRE(train.feature_names == d.feature_names);
    REQUIRE(test.feature_names == d.feature_names);
}

TEST_CASE("split sides are disjoint and exhaustive", "[ingest]") {
    const long m = 500;
    auto d = indexed_dataset(m);
    auto [train, test] = make_split(d, 0.2, 31);
    REQUIRE(train.n_samples() + test.n_samples() == m);

    // the marker column is row index plus a common shift, so values identify rows
    std::set<long> seen;
    double shift = 0.0;
    {
        // recover the shift from the smallest element across both sides
        double lo = std::min(train.x.col(0).minCoeff(), test.x.col(0).minCoeff());
        shift = -lo;
    }
    auto collect = [&](const Dataset& part) {
        for (long r = 0; r < part.n_samples(); ++r) {
            auto idx = static_cast<long>(std::llround(part.x(r, 0) + shift));
            REQUIRE(idx >= 0);
            REQUIRE(idx < m);
            REQUIRE(seen.insert(idx).second); // no duplicates anywhere
        }
    };
    collect(train);
    collect(test);
    REQUIRE(static_cast<long>(seen.size()) == m);
}

TEST_CASE("splits are centered by the training statistics", "[ingest]") {
    auto d = indexed_dataset(400);
    auto [train, test] = make_split(d, 0.25, 17);
    REQUIRE(train.centered);
    REQUIRE_FALSE(test.centered);
    for (int j = 0; j < 3; ++j) REQUIRE(std::abs(train.x.col(j).mean()) < 1e-10);
    REQUIRE(std::abs(train.y.mean()) < 1e-10);

    // test side uses train means: its own means differ from zero in general
    double drift = 0.0;
    for (int j = 0; j < 3; ++j) drift += std::abs(test.x.col(j).mean());
    drift += std::abs(test.y.mean());
    REQUIRE(drift > 1e-8);
}

TEST_CASE("splitting is deterministic in the seed", "[ingest]") {
    auto d = indexed_dataset(300);
    auto [tr1, te1] = make_split(d, 0.3, 77);
    auto [tr2, te2] = make_split(d, 0.3, 77);
    REQUIRE((tr1.x - tr2.x).norm() == 0.0);
    REQUIRE((te1.y - te2.y).norm() == 0.0);

    auto [tr3, te3] = make_split(d, 0.3, 78);
    REQUIRE((tr1.x - tr3.x).norm() > 0.0);
}

TEST_CASE("make_splits derives one split per member", "[ingest]") {
    auto d = indexed_dataset(200);
    SplitSpec spec;
    spec.train_fraction = 0.2;
    spec.n_splits = 3;
    spec.seed = 4;
    auto splits = make_splits(d, spec);
    REQUIRE(splits.size() == 3);
    REQUIRE((splits[0].first.x - splits[1].first.x).norm() > 0.0);
    REQUIRE((splits[1].first.x - splits[2].first.x).norm() > 0.0);

    // reproducible as a batch
    auto again = make_splits(d, spec);
    for (int k = 0; k < 3; ++k)
        REQUIRE((splits[static_cast<std::size_t>(k)].first.x
                 - again[static_cast<std::size_t>(k)].first.x).norm() == 0.0);
}

TEST_CASE("split fraction validation", "[ingest]") {
    auto d = indexed_dataset(50);
    REQUIRE_THROWS_AS(make_split(d, 0.0, 1), InvalidInput);
    REQUIRE_THROWS_AS(make_split(d, 1.0, 1), InvalidInput);
    REQUIRE_THROWS_AS(make_split(d, 0.001, 1), InvalidInput); // empty train side
}
