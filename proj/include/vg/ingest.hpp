// Loaders for the two real tabular benchmarks and the overlapping random
// train/test split generator.
//
// Communities & Crimes (unnormalized): 147 comma-separated columns per row,
// no header in the canonical distribution; columns 0-3 are community
// identifiers, columns 4-128 the 125 predictive attributes, columns 129-146
// the 18 crime-count goal variables. Missing entries are "?".
//
// Blog Feedback: 281 numeric columns, no header; columns 0-59 are the
// quantitative site and post statistics, column 280 the feedback target.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "vg/core.hpp"
#include "vg/rng.hpp"

namespace vg {

struct SplitSpec {
    double train_fraction = 0.15;
    int n_splits = 1;
    std::uint64_t seed = 0;
};

struct PreprocessReport {
    int n_raw_attributes = 0;
    int n_kept_features = 0;
    long n_instances = 0;
    std::vector<std::string> dropped_columns;
    std::vector<std::string> transform_log;
    std::vector<std::string> warnings;
};

namespace detail {

constexpr int kCcColumns = 147;
constexpr int kCcMetaColumns = 4;
constexpr int kCcPredictive = 125;
constexpr int kCcGoals = 18;
constexpr int kBfColumns = 281;
constexpr int kBfQuantitative = 60;
constexpr int kBfTargetColumn = 280;

inline bool parse_field(std::string_view field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

inline bool is_missing(std::string_view field) {
    return field.empty() || field == "?" || field == " ?";
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string text;
    in.seekg(0, std::ios::end);
    text.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(text.data(), static_cast<std::streamsize>(text.size()));
    return text;
}

// Split raw CSV text into per-row field views. No quoting in either source.
inline std::vector<std::vector<std::string_view>> split_rows(const std::string& text,
                                                             const std::string& path) {
    std::vector<std::vector<std::string_view>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::size_t line_end = eol;
        if (line_end > pos && text[line_end - 1] == '\r') --line_end;
        if (line_end > pos) {
            std::vector<std::string_view> fields;
            std::size_t start = pos;
            for (std::size_t i = pos; i <= line_end; ++i) {
                if (i == line_end || text[i] == ',') {
                    fields.emplace_back(text.data() + start, i - start);
                    start = i + 1;
                }
            }
            rows.push_back(std::move(fields));
        }
        pos = eol + 1;
    }
    if (rows.empty()) throw DataError("empty file: " + path);
    return rows;
}

inline void standardize_column(Eigen::Ref<Vector> col, double& mean_out, double& sd_out) {
    mean_out = col.mean();
    col.array() -= mean_out;
    sd_out = std::sqrt(col.squaredNorm() / static_cast<double>(col.size()));
    if (sd_out > 0.0) col /= sd_out;
}

}  // namespace detail

// Communities & Crimes. Drops predictive attributes containing missing or
// non-numeric entries, picks the goal column with the largest total count as
// the target, log-transforms features, standardizes, clamps standardized
// values below -3, and re-centers.
inline std::pair<Dataset, PreprocessReport> load_cc(const std::string& path) {
    const std::string text = detail::read_file(path);
    auto rows = detail::split_rows(text, path);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != detail::kCcColumns)
            throw DataError(path + ": row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows[r].size()) + " columns, expected " +
                            std::to_string(detail::kCcColumns));
    }

    // A header is present when the first predictive cell of row 0 is neither
    // numeric nor a missing marker (data rows always carry a number there).
    std::vector<std::string> col_names(detail::kCcColumns);
    double probe;
    const bool has_header = !detail::parse_field(rows[0][detail::kCcMetaColumns], probe) &&
                            !detail::is_missing(rows[0][detail::kCcMetaColumns]);
    if (has_header) {
        for (int c = 0; c < detail::kCcColumns; ++c) col_names[static_cast<std::size_t>(c)] = std::string(rows[0][static_cast<std::size_t>(c)]);
        rows.erase(rows.begin());
    } else {
        const char* meta[] = {"communityname", "state", "countycode", "communitycode"};
        for (int c = 0; c < detail::kCcColumns; ++c) {
            char buf[16];
            if (c < detail::kCcMetaColumns) {
                col_names[static_cast<std::size_t>(c)] = meta[c];
            } else if (c < detail::kCcMetaColumns + detail::kCcPredictive) {
                std::snprintf(buf, sizeof(buf), "attr_%03d", c + 1);
                col_names[static_cast<std::size_t>(c)] = buf;
            } else {
                std::snprintf(buf, sizeof(buf), "goal_%03d", c + 1);
                col_names[static_cast<std::size_t>(c)] = buf;
            }
        }
    }

    const long m_raw = static_cast<long>(rows.size());
    PreprocessReport report;
    report.n_raw_attributes = detail::kCcPredictive;

    // Predictive columns: keep only fully numeric ones.
    std::vector<int> kept_cols;
    for (int c = detail::kCcMetaColumns; c < detail::kCcMetaColumns + detail::kCcPredictive; ++c) {
        bool ok = true;
        for (long r = 0; r < m_raw && ok; ++r) {
            double v;
            if (!detail::parse_field(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], v)) ok = false;
        }
        if (ok)
            kept_cols.push_back(c);
        else
            report.dropped_columns.push_back(col_names[static_cast<std::size_t>(c)] +
                                             " (missing or non-numeric values)");
    }
    if (kept_cols.empty()) throw DataError(path + ": no usable predictive columns");

    // Target: goal column with the largest total over parseable entries.
    const int goal_begin = detail::kCcMetaColumns + detail::kCcPredictive;
    int target_col = goal_begin;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (int c = goal_begin; c < goal_begin + detail::kCcGoals; ++c) {
        double sum = 0.0;
        for (long r = 0; r < m_raw; ++r) {
            double v;
            if (detail::parse_field(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], v)) sum += v;
        }
        if (sum > best_sum) {
            best_sum = sum;
            target_col = c;
        }
    }
    report.transform_log.push_back("target column: " + col_names[static_cast<std::size_t>(target_col)]);

    // Rows with an unusable target are dropped.
    std::vector<long> kept_rows;
    std::vector<double> target_raw;
    for (long r = 0; r < m_raw; ++r) {
        double v;
        if (detail::parse_field(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(target_col)], v)) {
            kept_rows.push_back(r);
            target_raw.push_back(v);
        }
    }
    if (static_cast<long>(kept_rows.size()) < m_raw)
        report.warnings.push_back(std::to_string(m_raw - static_cast<long>(kept_rows.size())) +
                                  " rows dropped for missing target");
    const long m = static_cast<long>(kept_rows.size());
    if (m < 4) throw DataError(path + ": too few usable rows");

    Dataset data;
    data.x.resize(m, static_cast<Eigen::Index>(kept_cols.size()));
    for (std::size_t jj = 0; jj < kept_cols.size(); ++jj) {
        const auto c = static_cast<std::size_t>(kept_cols[jj]);
        for (long r = 0; r < m; ++r) {
            double v;
            detail::parse_field(rows[static_cast<std::size_t>(kept_rows[static_cast<std::size_t>(r)])][c], v);
            data.x(r, static_cast<Eigen::Index>(jj)) = v;
        }
    }

    // Log transform with a column-adaptive offset, standardize, clamp at -3.
    std::vector<std::string> names;
    std::vector<Eigen::Index> final_cols;
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
        double eps = std::numeric_limits<double>::infinity();
        for (long r = 0; r < m; ++r)
            if (data.x(r, j) > 0.0) eps = std::min(eps, data.x(r, j));
        if (!std::isfinite(eps)) {
            report.dropped_columns.push_back(col_names[static_cast<std::size_t>(kept_cols[static_cast<std::size_t>(j)])] +
                                             " (no positive values)");
            continue;
        }
        for (long r = 0; r < m; ++r)
            data.x(r, j) = std::log(std::max(data.x(r, j), 0.0) + eps);
        double mean, sd;
        detail::standardize_column(data.x.col(j), mean, sd);
        if (sd == 0.0) {
            report.dropped_columns.push_back(col_names[static_cast<std::size_t>(kept_cols[static_cast<std::size_t>(j)])] +
                                             " (zero variance)");
            continue;
        }
        final_cols.push_back(j);
        names.push_back(col_names[static_cast<std::size_t>(kept_cols[static_cast<std::size_t>(j)])]);
    }
    if (static_cast<Eigen::Index>(final_cols.size()) < data.x.cols()) {
        Matrix pruned(m, static_cast<Eigen::Index>(final_cols.size()));
        for (std::size_t jj = 0; jj < final_cols.size(); ++jj)
            pruned.col(static_cast<Eigen::Index>(jj)) = data.x.col(final_cols[jj]);
        data.x = std::move(pruned);
    }
    data.x = data.x.cwiseMax(-3.0);
    // Clamping shifts column means slightly; re-center so downstream solvers
    // see exactly centered inputs.
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x.col(j).array() -= data.x.col(j).mean();
    report.transform_log.push_back("features: log(v + min positive), standardized, clamped at -3, re-centered");

    data.y = Eigen::Map<const Vector>(target_raw.data(), m);
    double y_mean, y_sd;
    detail::standardize_column(data.y, y_mean, y_sd);
    if (y_sd == 0.0) throw DataError(path + ": target has zero variance");
    report.transform_log.push_back("target: standardized");

    data.feature_names = std::move(names);
    data.centered = true;
    report.n_kept_features = static_cast<int>(data.x.cols());
    report.n_instances = m;
    if (report.n_kept_features != 101)
        report.warnings.push_back("retained " + std::to_string(report.n_kept_features) +
                                  " features, expected 101");
    validate_dataset(data);
    return {std::move(data), std::move(report)};
}

// Blog Feedback. Accepts either the canonical directory (train file plus
// test files, concatenated with test files in sorted order) or one CSV.
inline std::pair<Dataset, PreprocessReport> load_bf(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        std::string train;
        std::vector<std::string> tests;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (name.rfind("blogData_train", 0) == 0)
                train = entry.path().string();
            else if (name.rfind("blogData_test", 0) == 0)
                tests.push_back(entry.path().string());
        }
        if (train.empty()) throw DataError(path + ": no blogData_train*.csv found");
        std::sort(tests.begin(), tests.end());
        files.push_back(train);
        files.insert(files.end(), tests.begin(), tests.end());
    } else {
        files.push_back(path);
    }

    std::vector<double> values;  // row-major staging for the 60 base columns
    std::vector<double> target;
    for (const auto& file : files) {
        const std::string text = detail::read_file(file);
        const auto rows = detail::split_rows(text, file);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (static_cast<int>(rows[r].size()) != detail::kBfColumns)
                throw DataError(file + ": row " + std::to_string(r + 1) + " has " +
                                std::to_string(rows[r].size()) + " columns, expected " +
                                std::to_string(detail::kBfColumns));
            for (int c = 0; c < detail::kBfQuantitative; ++c) {
                double v;
                if (!detail::parse_field(rows[r][static_cast<std::size_t>(c)], v))
                    throw DataError(file + ": non-numeric value at row " + std::to_string(r + 1) +
                                    ", column " + std::to_string(c + 1));
                values.push_back(v);
            }
            double t;
            if (!detail::parse_field(rows[r][detail::kBfTargetColumn], t))
                throw DataError(file + ": non-numeric target at row " + std::to_string(r + 1));
            target.push_back(t);
        }
    }

    const long m = static_cast<long>(target.size());
    if (m < 4) throw DataError(path + ": too few rows");

    PreprocessReport report;
    report.n_raw_attributes = detail::kBfColumns - 1;
    report.n_instances = m;
    report.transform_log.push_back("kept the " + std::to_string(detail::kBfQuantitative) +
                                   " quantitative columns, appended signed-log copies");

    Dataset data;
    const int q = detail::kBfQuantitative;
    data.x.resize(m, 2 * q);
    for (long r = 0; r < m; ++r)
        for (int c = 0; c < q; ++c) {
            const double v = values[static_cast<std::size_t>(r) * static_cast<std::size_t>(q) +
                                    static_cast<std::size_t>(c)];
            data.x(r, c) = v;
            data.x(r, q + c) = std::copysign(std::log1p(std::abs(v)), v);
        }

    data.feature_names.reserve(static_cast<std::size_t>(2 * q));
    for (int c = 0; c < q; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "feat_%03d", c + 1);
        data.feature_names.emplace_back(buf);
    }
    for (int c = 0; c < q; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "slog_%03d", c + 1);
        data.feature_names.emplace_back(buf);
    }

    // Standardize everything; a zero-variance base column takes its
    // signed-log copy down with it so the 2x pairing survives.
    std::vector<int> dead;
    for (int c = 0; c < q; ++c) {
        double mean, sd;
        detail::standardize_column(data.x.col(c), mean, sd);
        double mean2, sd2;
        detail::standardize_column(data.x.col(q + c), mean2, sd2);
        if (sd == 0.0 || sd2 == 0.0) dead.push_back(c);
    }
    if (!dead.empty()) {
        std::vector<Eigen::Index> keep;
        for (int c = 0; c < q; ++c)
            if (std::find(dead.begin(), dead.end(), c) == dead.end()) keep.push_back(c);
        Matrix pruned(m, static_cast<Eigen::Index>(2 * keep.size()));
        std::vector<std::string> names;
        for (std::size_t jj = 0; jj < keep.size(); ++jj) {
            pruned.col(static_cast<Eigen::Index>(jj)) = data.x.col(keep[jj]);
            pruned.col(static_cast<Eigen::Index>(keep.size() + jj)) = data.x.col(q + keep[jj]);
            names.push_back(data.feature_names[static_cast<std::size_t>(keep[jj])]);
        }
        for (std::size_t jj = 0; jj < keep.size(); ++jj)
            names.push_back(data.feature_names[static_cast<std::size_t>(q + keep[jj])]);
        for (int c : dead)
            report.dropped_columns.push_back(data.feature_names[static_cast<std::size_t>(c)] +
                                             " (zero variance, with signed-log copy)");
        data.x = std::move(pruned);
        data.feature_names = std::move(names);
    }

    data.y = Eigen::Map<const Vector>(target.data(), m);
    double y_mean, y_sd;
    detail::standardize_column(data.y, y_mean, y_sd);
    if (y_sd == 0.0) throw DataError(path + ": target has zero variance");
    report.transform_log.push_back("all columns and target standardized");

    data.centered = true;
    report.n_kept_features = static_cast<int>(data.x.cols());
    validate_dataset(data);
    return {std::move(data), std::move(report)};
}

// One train/test split: round(r*M) uniformly chosen training rows, the rest
// test. Train columns and target are re-centered with train means, and the
// same offsets are applied to the test side.
inline std::pair<Dataset, Dataset> make_split(const Dataset& data, double train_fraction,
                                              std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw InvalidInput("make_split: train_fraction must lie in (0, 1)");
    const long m = data.n_samples();
    const long n_train = std::llround(train_fraction * static_cast<double>(m));
    if (n_train < 1 || n_train >= m)
        throw InvalidInput("make_split: split leaves an empty train or test side");

    Rng rng(seed);
    std::vector<std::size_t> train_idx = rng.choose(static_cast<std::size_t>(m),
                                                    static_cast<std::size_t>(n_train));
    std::sort(train_idx.begin(), train_idx.end());
    std::vector<char> in_train(static_cast<std::size_t>(m), 0);
    for (std::size_t idx : train_idx) in_train[idx] = 1;

    Dataset train, test;
    train.x.resize(n_train, data.n_features());
    train.y.resize(n_train);
    test.x.resize(m - n_train, data.n_features());
    test.y.resize(m - n_train);
    long ti = 0, si = 0;
    for (long r = 0; r < m; ++r) {
        if (in_train[static_cast<std::size_t>(r)]) {
            train.x.row(ti) = data.x.row(r);
            train.y(ti++) = data.y(r);
        } else {
            test.x.row(si) = data.x.row(r);
            test.y(si++) = data.y(r);
        }
    }

    const Vector col_means = train.x.colwise().mean();
    const double y_mean = train.y.mean();
    train.x.rowwise() -= col_means.transpose();
    train.y.array() -= y_mean;
    test.x.rowwise() -= col_means.transpose();
    test.y.array() -= y_mean;

    train.feature_names = data.feature_names;
    test.feature_names = data.feature_names;
    train.centered = true;
    test.centered = false;  // centered with train offsets, not its own
    return {std::move(train), std::move(test)};
}

inline std::vector<std::pair<Dataset, Dataset>> make_splits(const Dataset& data,
                                                            const SplitSpec& spec) {
    if (spec.n_splits < 1) throw InvalidInput("make_splits: n_splits must be positive");
    std::vector<std::pair<Dataset, Dataset>> splits;
    splits.reserve(static_cast<std::size_t>(spec.n_splits));
    for (int k = 0; k < spec.n_splits; ++k)
        splits.push_back(make_split(data, spec.train_fraction, spec.seed + 1 + static_cast<std::uint64_t>(k)));
    return splits;
}

}  // namespace vg
