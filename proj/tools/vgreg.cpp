// vgreg: sparse-regression experiment driver.
//
// Subcommands: generate, fit, sweep, target-rho, infer-sparsity, reproduce,
// ingest. Exit codes: 0 success, 2 invalid configuration, 3 data error,
// 4 numerical failure.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vg/datagen.hpp"
#include "vg/garrote.hpp"
#include "vg/harness.hpp"
#include "vg/ingest.hpp"
#include "vg/io.hpp"
#include "vg/lasso.hpp"
#include "vg/masking.hpp"
#include "vg/ridge.hpp"
#include "vg/sparsity_infer.hpp"

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int workers = 0;  // 0 = hardware concurrency
    std::string out = ".";
    std::string data_dir;
    std::string config_path;
};

int effective_workers(const GlobalOpts& g) {
    if (g.workers > 0) return g.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string effective_data_dir(const GlobalOpts& g) {
    if (!g.data_dir.empty()) return g.data_dir;
    if (const char* env = std::getenv("VGREG_DATA_DIR")) return env;
    return "data";
}

// Fill an ExperimentConfig from a JSON config file. CLI flags still win;
// callers apply them afterwards.
void apply_config_json(vg::ExperimentConfig& cfg, const nlohmann::json& j) {
    if (j.contains("solvers")) {
        cfg.solvers.clear();
        for (const auto& s : j.at("solvers")) cfg.solvers.push_back(vg::solver_from_name(s));
    }
    if (j.contains("source")) cfg.source = vg::source_from_name(j.at("source"));
    if (j.contains("spec")) {
        const auto& s = j.at("spec");
        if (s.contains("n_features")) cfg.spec.n_features = s.at("n_features").get<long>();
        if (s.contains("n_samples")) cfg.spec.n_samples = s.at("n_samples").get<long>();
        if (s.contains("rho_data")) cfg.spec.rho_data = s.at("rho_data").get<double>();
        if (s.contains("snr")) cfg.spec.snr = s.at("snr").get<double>();
        if (s.contains("density_mode"))
            cfg.spec.density_mode = s.at("density_mode").get<std::string>() == "binomial"
                                        ? vg::DensityMode::binomial
                                        : vg::DensityMode::exact_count;
    }
    if (j.contains("train_fraction")) cfg.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("ridge_grid")) cfg.ridge_grid = j.at("ridge_grid").get<std::vector<double>>();
    if (j.contains("lasso_grid")) cfg.lasso_grid = j.at("lasso_grid").get<std::vector<double>>();
    if (j.contains("vg_grid")) cfg.vg_grid = j.at("vg_grid").get<std::vector<double>>();
    if (j.contains("n_members")) cfg.n_members = j.at("n_members").get<int>();
    if (j.contains("seed_base")) cfg.seed_base = j.at("seed_base").get<std::uint64_t>();
    if (j.contains("lasso_tol")) cfg.lasso_tol = j.at("lasso_tol").get<double>();
    if (j.contains("lasso_max_sweeps")) cfg.lasso_max_sweeps = j.at("lasso_max_sweeps").get<int>();
    if (j.contains("data_path")) cfg.data_path = j.at("data_path").get<std::string>();
    if (j.contains("vg")) {
        const auto& v = j.at("vg");
        if (v.contains("lr_init")) cfg.vg.lr_init = v.at("lr_init").get<double>();
        if (v.contains("lr_stop")) cfg.vg.lr_stop = v.at("lr_stop").get<double>();
        if (v.contains("lr_decay_factor"))
            cfg.vg.lr_decay_factor = v.at("lr_decay_factor").get<double>();
        if (v.contains("plateau_patience"))
            cfg.vg.plateau_patience = v.at("plateau_patience").get<int>();
        if (v.contains("max_iters")) cfg.vg.max_iters = v.at("max_iters").get<long>();
        if (v.contains("mask_init")) cfg.vg.mask_init = v.at("mask_init").get<double>();
        if (v.contains("adam_beta1")) cfg.vg.adam_beta1 = v.at("adam_beta1").get<double>();
        if (v.contains("adam_beta2")) cfg.vg.adam_beta2 = v.at("adam_beta2").get<double>();
        if (v.contains("adam_eps")) cfg.vg.adam_eps = v.at("adam_eps").get<double>();
    }
}

// Loads real data when the experiment needs it.
std::optional<vg::Dataset> load_real(const vg::ExperimentConfig& cfg, const GlobalOpts& g) {
    if (cfg.source == vg::DataSource::synthetic) return std::nullopt;
    const std::string path = !cfg.data_path.empty()
                                 ? cfg.data_path
                                 : vg::resolve_real_path(effective_data_dir(g), cfg.source);
    auto [data, report] =
        cfg.source == vg::DataSource::cc ? vg::load_cc(path) : vg::load_bf(path);
    for (const auto& w : report.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    return std::move(data);
}

nlohmann::json report_to_json(const vg::PreprocessReport& report) {
    return {{"n_raw_attributes", report.n_raw_attributes},
            {"n_kept_features", report.n_kept_features},
            {"n_instances", report.n_instances},
            {"dropped_columns", report.dropped_columns},
            {"transform_log", report.transform_log},
            {"warnings", report.warnings}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse linear regression toolkit: variational garrote with "
                 "ridge and lasso baselines"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Base seed for all randomness");
    app.add_option("--workers", g.workers, "Worker threads (0 = hardware)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--data-dir", g.data_dir, "Raw data directory (overrides VGREG_DATA_DIR)");
    app.add_option("--config", g.config_path, "JSON config file; CLI flags override");

    // generate
    auto* cmd_gen = app.add_subcommand("generate", "Write a synthetic dataset cache");
    double gen_rho = 5.0 / 256.0, gen_snr = 3.0;
    long gen_n = 256, gen_m = 256;
    std::string gen_mode = "exact_count";
    bool gen_csv = false;
    cmd_gen->add_option("--rho", gen_rho, "Teacher density rho_data");
    cmd_gen->add_option("--n", gen_n, "Number of features");
    cmd_gen->add_option("--m", gen_m, "Number of samples");
    cmd_gen->add_option("--snr", gen_snr, "Signal-to-noise ratio");
    cmd_gen->add_option("--mode", gen_mode, "exact_count or binomial");
    cmd_gen->add_flag("--csv", gen_csv, "Also export CSV");

    // fit
    auto* cmd_fit = app.add_subcommand("fit", "Single fit on a cached dataset, JSON result");
    std::string fit_solver = "vg", fit_data, fit_out;
    double fit_reg = 0.0;
    cmd_fit->add_option("--solver", fit_solver, "ridge | lasso | vg");
    cmd_fit->add_option("--data", fit_data, "Dataset cache path")->required();
    cmd_fit->add_option("--reg", fit_reg, "Regularization strength (lambda or gamma)");
    cmd_fit->add_option("--result", fit_out, "Result file (default stdout)");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "Full regularization sweep, CSV out");
    std::string sweep_source = "", sweep_name = "sweep";
    double sweep_rho = -1.0;
    int sweep_members = -1;
    cmd_sweep->add_option("--source", sweep_source, "synthetic | cc | bf");
    cmd_sweep->add_option("--rho", sweep_rho, "Synthetic teacher density");
    cmd_sweep->add_option("--members", sweep_members, "Ensemble size");
    cmd_sweep->add_option("--name", sweep_name, "Output file stem");

    // target-rho
    auto* cmd_target = app.add_subcommand("target-rho", "Find reg strength hitting a density");
    std::string target_solver = "vg", target_source = "synthetic";
    double target_value = 0.0, target_tol = 1.0 / 256.0, target_data_rho = -1.0;
    int target_members = 20;
    cmd_target->add_option("--solver", target_solver, "ridge | lasso | vg")->required();
    cmd_target->add_option("--target", target_value, "Desired rho_model")->required();
    cmd_target->add_option("--tol", target_tol, "Density tolerance");
    cmd_target->add_option("--source", target_source, "synthetic | cc | bf");
    cmd_target->add_option("--rho", target_data_rho, "Synthetic teacher density");
    cmd_target->add_option("--members", target_members, "Ensemble size for evaluation");

    // infer-sparsity
    auto* cmd_infer = app.add_subcommand("infer-sparsity", "Invert a sigma_sel curve");
    std::string infer_curve, infer_solver = "";
    int infer_nfeat = 0;
    cmd_infer->add_option("--curve", infer_curve, "CSV with rho_model,sigma_sel (or sweep CSV)")
        ->required();
    cmd_infer->add_option("--solver", infer_solver, "Filter sweep CSV rows to one solver");
    cmd_infer->add_option("--n-features", infer_nfeat, "Feature count for the candidate grid")
        ->required();

    // reproduce
    auto* cmd_repro = app.add_subcommand("reproduce", "Run a figure protocol");
    std::string repro_fig;
    double repro_scale = 0.01;
    cmd_repro->add_option("--fig", repro_fig, "fig2a | fig2b | fig2c | fig3 | fig4")->required();
    cmd_repro->add_option("--scale", repro_scale, "Ensemble scale relative to 20000");

    // ingest
    auto* cmd_ingest = app.add_subcommand("ingest", "Load and cache a real dataset");
    std::string ingest_dataset, ingest_path;
    cmd_ingest->add_option("--dataset", ingest_dataset, "cc | bf")->required();
    cmd_ingest->add_option("--path", ingest_path, "Raw file (cc) or file/directory (bf)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(g.out);

        if (*cmd_gen) {
            vg::SpikeSlabSpec spec;
            spec.n_features = gen_n;
            spec.n_samples = gen_m;
            spec.rho_data = gen_rho;
            spec.snr = gen_snr;
            spec.seed = g.seed;
            if (gen_mode == "binomial")
                spec.density_mode = vg::DensityMode::binomial;
            else if (gen_mode != "exact_count")
                throw vg::InvalidInput("unknown density mode: " + gen_mode);
            vg::Rng rng(spec.seed);
            vg::GroundTruth truth = vg::sample_teacher_weights(spec, rng);
            const vg::Dataset data = vg::generate_dataset(truth, spec.n_samples, rng, spec.snr);
            const std::string cache = g.out + "/dataset.vgds";
            vg::save_dataset_cache(cache, data, &truth);
            vg::write_json_file(g.out + "/truth.json", vg::truth_to_json(truth));
            if (gen_csv) vg::write_dataset_csv(g.out + "/dataset.csv", data);
            std::printf("wrote %s (M=%ld, N=%ld, %ld relevant)\n", cache.c_str(),
                        static_cast<long>(data.n_samples()), static_cast<long>(data.n_features()),
                        std::lround(truth.realized_density() *
                                    static_cast<double>(data.n_features())));
            return 0;
        }

        if (*cmd_fit) {
            vg::Dataset data;
            vg::GroundTruth truth;
            vg::load_dataset_cache(fit_data, data, &truth);
            vg::FitResult fit;
            const vg::SolverId solver = vg::solver_from_name(fit_solver);
            if (solver == vg::SolverId::ridge) {
                fit = vg::fit_ridge(data, fit_reg);
                const vg::RidgeBound bound = vg::calibrate_ridge_bound({data});
                fit.m = vg::mask_from_ridge(fit.w, bound);
                fit.rho_model = vg::rho_from_mask(fit.m);
            } else if (solver == vg::SolverId::lasso) {
                vg::LassoConfig lcfg;
                lcfg.lambda = fit_reg;
                fit = vg::fit_lasso(data, lcfg, std::nullopt);
                auto [mask, elbow] = vg::mask_from_lasso(fit.w);
                (void)elbow;
                fit.m = std::move(mask);
                fit.rho_model = vg::rho_from_mask(fit.m);
            } else {
                vg::VgConfig vcfg;
                vcfg.gamma = fit_reg;
                vcfg.seed = g.seed;
                fit = vg::fit_vg(data, vcfg);
            }
            const nlohmann::json j = vg::fit_to_json(fit);
            if (fit_out.empty())
                std::printf("%s\n", j.dump(2).c_str());
            else
                vg::write_json_file(fit_out, j);
            return 0;
        }

        if (*cmd_sweep || *cmd_target) {
            vg::ExperimentConfig cfg;
            if (!g.config_path.empty()) apply_config_json(cfg, vg::read_json_file(g.config_path));
            cfg.worker_count = effective_workers(g);
            if (app.count("--seed")) cfg.seed_base = g.seed;

            if (*cmd_sweep) {
                if (!sweep_source.empty()) cfg.source = vg::source_from_name(sweep_source);
                if (sweep_rho > 0.0) cfg.spec.rho_data = sweep_rho;
                if (sweep_members > 0) cfg.n_members = sweep_members;
                const auto real = load_real(cfg, g);
                const vg::SweepOutput out =
                    vg::run_sweep(cfg, real.has_value() ? &*real : nullptr);
                vg::apply_default_grids(cfg);
                const std::string csv = g.out + "/" + sweep_name + ".csv";
                vg::write_sweep_csv(csv, out);
                nlohmann::json sidecar = vg::semantic_json(cfg);
                sidecar["config_hash"] = vg::hash_string(out.hash);
                vg::write_json_file(g.out + "/" + sweep_name + "_config.json", sidecar);
                std::printf("wrote %s\n", csv.c_str());
                return 0;
            }

            if (target_source != "synthetic") cfg.source = vg::source_from_name(target_source);
            if (target_data_rho > 0.0) cfg.spec.rho_data = target_data_rho;
            cfg.n_members = target_members;
            const auto real = load_real(cfg, g);
            const vg::TargetRhoResult res =
                vg::target_rho(cfg, vg::solver_from_name(target_solver), target_value,
                               target_tol, real.has_value() ? &*real : nullptr);
            nlohmann::json j = {{"solver", target_solver},
                                {"reg_strength", res.reg_strength},
                                {"achieved_rho", res.achieved_rho},
                                {"steps", res.steps},
                                {"bracket_warning", res.bracket_warning}};
            std::printf("%s\n", j.dump(2).c_str());
            return 0;
        }

        if (*cmd_infer) {
            const vg::CsvTable table = vg::read_csv(infer_curve);
            int rho_col = -1, sigma_col = -1, solver_col = -1, valid_col = -1;
            for (std::size_t c = 0; c < table.header.size(); ++c) {
                if (table.header[c] == "rho_model") rho_col = static_cast<int>(c);
                if (table.header[c] == "sigma_sel") sigma_col = static_cast<int>(c);
                if (table.header[c] == "solver") solver_col = static_cast<int>(c);
                if (table.header[c] == "valid") valid_col = static_cast<int>(c);
            }
            if (rho_col < 0 || sigma_col < 0)
                throw vg::DataError("curve CSV needs rho_model and sigma_sel columns");
            std::vector<std::pair<double, double>> curve;
            for (const auto& row : table.rows) {
                if (solver_col >= 0 && !infer_solver.empty() &&
                    row[static_cast<std::size_t>(solver_col)] != infer_solver)
                    continue;
                if (valid_col >= 0 && row[static_cast<std::size_t>(valid_col)] == "0") continue;
                const double rho = std::strtod(row[static_cast<std::size_t>(rho_col)].c_str(), nullptr);
                const double sigma =
                    std::strtod(row[static_cast<std::size_t>(sigma_col)].c_str(), nullptr);
                if (std::isfinite(rho) && std::isfinite(sigma)) curve.emplace_back(rho, sigma);
            }
            const vg::SparsityPosterior post =
                vg::infer_data_sparsity(curve, vg::default_sparsity_grid(infer_nfeat));
            vg::CsvTable ptab;
            ptab.header = {"rho_candidate", "prob"};
            for (Eigen::Index i = 0; i < post.grid.size(); ++i)
                ptab.rows.push_back(
                    {vg::format_double(post.grid(i)), vg::format_double(post.probs(i))});
            vg::write_csv(g.out + "/posterior.csv", ptab);
            const nlohmann::json j = {
                {"point_estimate", post.point_estimate},
                {"weighted_estimate", post.weighted_estimate},
                {"residual", post.residual},
                {"n_variables_point", post.point_estimate * infer_nfeat},
                {"n_variables_weighted", post.weighted_estimate * infer_nfeat},
                {"degenerate", post.degenerate}};
            vg::write_json_file(g.out + "/posterior_summary.json", j);
            std::printf("%s\n", j.dump(2).c_str());
            return 0;
        }

        if (*cmd_repro) {
            const auto files =
                vg::reproduce_figure(vg::figure_from_name(repro_fig), repro_scale, g.seed,
                                     g.out, effective_workers(g), effective_data_dir(g));
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }

        if (*cmd_ingest) {
            const vg::DataSource source = vg::source_from_name(ingest_dataset);
            const std::string path = !ingest_path.empty()
                                         ? ingest_path
                                         : vg::resolve_real_path(effective_data_dir(g), source);
            auto [data, report] =
                source == vg::DataSource::cc ? vg::load_cc(path) : vg::load_bf(path);
            const std::string cache = g.out + "/" + ingest_dataset + ".vgds";
            vg::save_dataset_cache(cache, data, nullptr);
            vg::write_json_file(g.out + "/" + ingest_dataset + "_report.json",
                                report_to_json(report));
            for (const auto& w : report.warnings)
                std::fprintf(stderr, "warning: %s\n", w.c_str());
            std::printf("wrote %s (M=%ld, N=%ld)\n", cache.c_str(),
                        static_cast<long>(data.n_samples()),
                        static_cast<long>(data.n_features()));
            return 0;
        }
    } catch (const vg::InvalidInput& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return 2;
    } catch (const vg::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const vg::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
