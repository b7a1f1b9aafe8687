// Serialization: CSV tables, JSON for fit results and ground truth, a
// versioned binary dataset cache, and the config hash that binds emitted
// tables to the experiment settings.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vg/core.hpp"

namespace vg {

// Full round-trip precision so identical runs emit identical bytes.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

inline CsvTable read_csv(const std::string& path, bool has_header = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (first && has_header) {
            table.header = std::move(cells);
            first = false;
        } else {
            first = false;
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

// Dataset CSV export: a version comment, then feature names + "target".
inline void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "# vgds-csv 1\n";
    for (Eigen::Index j = 0; j < data.n_features(); ++j) {
        const std::string name = j < static_cast<Eigen::Index>(data.feature_names.size())
                                     ? data.feature_names[static_cast<std::size_t>(j)]
                                     : "x" + std::to_string(j);
        out << name << ',';
    }
    out << "target\n";
    for (Eigen::Index i = 0; i < data.n_samples(); ++i) {
        for (Eigen::Index j = 0; j < data.n_features(); ++j)
            out << format_double(data.x(i, j)) << ',';
        out << format_double(data.y(i)) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void put_doubles(std::ostream& out, const double* p, std::size_t count) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
}

inline void get_doubles(std::istream& in, double* p, std::size_t count) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * 8));
}

}  // namespace detail

// Binary cache layout (little-endian): magic "VGDS", u64 version, u64 flags
// (bit0 centered, bit1 truth present), u64 M, u64 N, N length-prefixed
// feature names, x row-major, y, then optionally w_star, s_star (bytes),
// rho_data, noise_std.
inline constexpr std::uint64_t kDatasetCacheVersion = 1;

inline void save_dataset_cache(const std::string& path, const Dataset& data,
                               const GroundTruth* truth = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write("VGDS", 4);
    detail::put_u64(out, kDatasetCacheVersion);
    detail::put_u64(out, (data.centered ? 1u : 0u) | (truth ? 2u : 0u));
    const auto m = static_cast<std::uint64_t>(data.n_samples());
    const auto n = static_cast<std::uint64_t>(data.n_features());
    detail::put_u64(out, m);
    detail::put_u64(out, n);
    for (std::uint64_t j = 0; j < n; ++j) {
        const std::string name = j < data.feature_names.size()
                                     ? data.feature_names[static_cast<std::size_t>(j)]
                                     : "x" + std::to_string(j);
        detail::put_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    std::vector<double> row(n);
    for (std::uint64_t i = 0; i < m; ++i) {
        for (std::uint64_t j = 0; j < n; ++j)
            row[static_cast<std::size_t>(j)] =
                data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        detail::put_doubles(out, row.data(), n);
    }
    detail::put_doubles(out, data.y.data(), m);
    if (truth) {
        detail::put_doubles(out, truth->w_star.data(), n);
        for (std::uint64_t j = 0; j < n; ++j) {
            const char b = truth->s_star[static_cast<std::size_t>(j)] ? 1 : 0;
            out.write(&b, 1);
        }
        detail::put_doubles(out, &truth->rho_data, 1);
        detail::put_doubles(out, &truth->noise_std, 1);
    }
    if (!out) throw DataError("write failed: " + path);
}

inline bool load_dataset_cache(const std::string& path, Dataset& data, GroundTruth* truth) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != "VGDS")
        throw DataError("not a dataset cache: " + path);
    if (detail::get_u64(in) != kDatasetCacheVersion)
        throw DataError("unsupported cache version: " + path);
    const std::uint64_t flags = detail::get_u64(in);
    const std::uint64_t m = detail::get_u64(in);
    const std::uint64_t n = detail::get_u64(in);
    if (m == 0 || n == 0 || m > (1u << 26) || n > (1u << 26))
        throw DataError("corrupt cache header: " + path);

    data.feature_names.clear();
    data.feature_names.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) {
        const std::uint64_t len = detail::get_u64(in);
        if (len > 4096) throw DataError("corrupt feature name: " + path);
        std::string name(len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(len));
        data.feature_names.push_back(std::move(name));
    }
    data.x.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<double> row(n);
    for (std::uint64_t i = 0; i < m; ++i) {
        detail::get_doubles(in, row.data(), n);
        for (std::uint64_t j = 0; j < n; ++j)
            data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                row[static_cast<std::size_t>(j)];
    }
    data.y.resize(static_cast<Eigen::Index>(m));
    detail::get_doubles(in, data.y.data(), m);
    data.centered = (flags & 1u) != 0;

    const bool has_truth = (flags & 2u) != 0;
    if (has_truth && truth) {
        truth->w_star.resize(static_cast<Eigen::Index>(n));
        detail::get_doubles(in, truth->w_star.data(), n);
        truth->s_star.resize(n);
        for (std::uint64_t j = 0; j < n; ++j) {
            char b = 0;
            in.read(&b, 1);
            truth->s_star[static_cast<std::size_t>(j)] = b ? 1 : 0;
        }
        detail::get_doubles(in, &truth->rho_data, 1);
        detail::get_doubles(in, &truth->noise_std, 1);
    }
    if (!in) throw DataError("truncated cache: " + path);
    return has_truth;
}

inline nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json j;
    j["solver"] = solver_name(fit.solver_id);
    j["reg_strength"] = fit.reg_strength;
    j["rho_model"] = fit.rho_model;
    j["loss"] = fit.loss;
    j["beta"] = fit.beta;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["w"] = std::vector<double>(fit.w.data(), fit.w.data() + fit.w.size());
    j["m"] = std::vector<double>(fit.m.data(), fit.m.data() + fit.m.size());
    if (!fit.note.empty()) j["note"] = fit.note;
    return j;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
    FitResult fit;
    fit.solver_id = solver_from_name(j.at("solver").get<std::string>());
    fit.reg_strength = j.at("reg_strength").get<double>();
    fit.rho_model = j.at("rho_model").get<double>();
    fit.loss = j.at("loss").get<double>();
    fit.beta = j.at("beta").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.iterations = j.at("iterations").get<long>();
    const auto w = j.at("w").get<std::vector<double>>();
    const auto m = j.at("m").get<std::vector<double>>();
    fit.w = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    fit.m = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
    if (j.contains("note")) fit.note = j.at("note").get<std::string>();
    return fit;
}

inline nlohmann::json truth_to_json(const GroundTruth& truth) {
    nlohmann::json j;
    j["w_star"] = std::vector<double>(truth.w_star.data(),
                                      truth.w_star.data() + truth.w_star.size());
    j["s_star"] = truth.s_star;
    j["rho_data"] = truth.rho_data;
    j["noise_std"] = truth.noise_std;
    return j;
}

// FNV-1a over the canonical (key-sorted) JSON dump. Execution parameters
// like worker count or output paths must not enter the hashed object.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t config_hash(const nlohmann::json& semantic_config) {
    return fnv1a64(semantic_config.dump());
}

inline std::string hash_string(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace vg
