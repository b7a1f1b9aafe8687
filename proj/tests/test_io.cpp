#include <catch2/catch_amalgamated.hpp>

#include "vg/datagen.hpp"
#include "vg/io.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

using namespace vg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path()
               / ("vgtest_" + std::to_string(::getpid()) + "_"
                  + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("format_double round-trips binary64 exactly", "[io]") {
    for (double v : {0.0, 1.0, -1.0, 1.0 / 3.0, 1e-300, 6.02214076e23,
                     0.1 + 0.2, 47.0 / 256.0}) {
        REQUIRE(std::stod(format_double(v)) == v);
    }
    REQUIRE(format_double(1.5) == "1.5");
}

TEST_CASE("csv tables survive a write-read cycle", "[io]") {
    TempDir tmp;
    CsvTable t;
    t.header = {"solver", "value", "note"};
    t.rows = {{"ridge", format_double(0.125), "ok"},
              {"vg", format_double(-3.75), ""}};
    write_csv(tmp.file("t.csv"), t);
    auto back = read_csv(tmp.file("t.csv"));
    REQUIRE(back.header == t.header);
    REQUIRE(back.rows == t.rows);
}

TEST_CASE("dataset cache round-trips bit for bit", "[io]") {
    TempDir tmp;
    SpikeSlabSpec spec;
    spec.n_features = 24;
    spec.n_samples = 40;
    spec.rho_data = 0.25;
    Rng rng(101);
    auto truth = sample_teacher_weights(spec, rng);
    auto data = generate_dataset(truth, spec.n_samples, rng);
    data.feature_names.clear();
    for (int j = 0; j < 24; ++j) data.feature_names.push_back("f" + std::to_string(j));

    save_dataset_cache(tmp.file("d.vgds"), data, &truth);

    Dataset loaded;
    GroundTruth loaded_truth;
    bool has_truth = load_dataset_cache(tmp.file("d.vgds"), loaded, &loaded_truth);
    REQUIRE(has_truth);
    REQUIRE(loaded.x.rows() == data.x.rows());
    REQUIRE((loaded.x - data.x).norm() == 0.0);
    REQUIRE((loaded.y - data.y).norm() == 0.0);
    REQUIRE(loaded.centered == data.centered);
    REQUIRE(loaded.feature_names == data.feature_names);
    REQUIRE((loaded_truth.w_star - truth.w_star).norm() == 0.0);
    REQUIRE(loaded_truth.s_star == truth.s_star);
    REQUIRE(loaded_truth.rho_data == truth.rho_data);
    REQUIRE(loaded_truth.noise_std == truth.noise_std);
}

TEST_CASE("cache without truth reports its absence", "[io]") {
    TempDir tmp;
    Dataset d;
    d.x = Matrix::Identity(3, 3);
    d.y.resize(3);
    d.y << 1, 2, 3;
    save_dataset_cache(tmp.file("plain.vgds"), d);
    Dataset back;
    GroundTruth t;
    REQUIRE_FALSE(load_dataset_cache(tmp.file("plain.vgds"), back, &t));
    REQUIRE((back.x - d.x).norm() == 0.0);
}

TEST_CASE("corrupt cache magic is rejected", "[io]") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("junk.vgds"), std::ios::binary);
        out << "NOPE and some trailing garbage";
    }
    Dataset d;
    REQUIRE_THROWS_AS(load_dataset_cache(tmp.file("junk.vgds"), d, nullptr), DataError);
}

TEST_CASE("fit results round-trip through json", "[io]") {
    FitResult fit;
    fit.solver_id = SolverId::vg;
    fit.reg_strength = -2.5;
    fit.rho_model = 0.0625;
    fit.loss = 123.456;
    fit.beta = 0.789;
    fit.converged = true;
    fit.iterations = 4242;
    fit.w = Vector::Zero(3);
    fit.w << 0.1, -0.2, 0.3;
    fit.m = Vector::Zero(3);
    fit.m << 0.9, 0.1, 0.5;
    fit.note = "plateau";

    auto j = fit_to_json(fit);
    auto back = fit_from_json(j);
    REQUIRE(back.solver_id == fit.solver_id);
    REQUIRE(back.reg_strength == fit.reg_strength);
    REQUIRE(back.rho_model == fit.rho_model);
    REQUIRE(back.loss == fit.loss);
    REQUIRE(back.beta == fit.beta);
    REQUIRE(back.converged == fit.converged);
    REQUIRE(back.iterations == fit.iterations);
    REQUIRE((back.w - fit.w).norm() == 0.0);
    REQUIRE((back.m - fit.m).norm() == 0.0);
    REQUIRE(back.note == fit.note);

    REQUIRE(j.at("solver").get<std::string>() == "vg");
    REQUIRE(j.contains("reg_strength"));
    REQUIRE(j.contains("rho_model"));
}

TEST_CASE("config hash is stable and sensitive", "[io]") {
    nlohmann::json a = {{"alpha", 1.0}, {"grid", {1, 2, 3}}};
    nlohmann::json b = {{"alpha", 1.0}, {"grid", {1, 2, 3}}};
    nlohmann::json c = {{"alpha", 1.0000001}, {"grid", {1, 2, 3}}};
    REQUIRE(config_hash(a) == config_hash(b));
    REQUIRE(config_hash(a) != config_hash(c));
    REQUIRE(hash_string(config_hash(a)).size() == 16);
    // pinned fnv1a64 reference: empty input gives the offset basis
    REQUIRE(fnv1a64("") == 14695981039346656037ull);
    REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("json files round-trip", "[io]") {
    TempDir tmp;
    nlohmann::json j = {{"name", "run"}, {"members", 200}, {"rho", 47.0 / 256.0}};
    write_json_file(tmp.file("cfg.json"), j);
    auto back = read_json_file(tmp.file("cfg.json"));
    REQUIRE(back == j);
}

TEST_CASE("dataset csv export carries names and values", "[io]") {
    TempDir tmp;
    Dataset d;
    d.x.resize(2, 2);
    d.x << 0.25, -1.5, 3.0, 0.125;
    d.y.resize(2);
    d.y << 1.0, -2.0;
    d.feature_names = {"left", "right"};
    write_dataset_csv(tmp.file("d.csv"), d);

    std::ifstream in(tmp.file("d.csv"));
    std::string line;
    std::getline(in, line);
    REQUIRE(line.find("vgds-csv") != std::string::npos);
    std::getline(in, line);
    REQUIRE(line == "left,right,target");
    std::getline(in, line);
    REQUIRE(line == "0.25,-1.5,1");
}
