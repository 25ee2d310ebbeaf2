// Batch front end: sample atom clouds, build mild solutions, run ensemble
// studies. All outputs are deterministic functions of (config, seed); worker
// count never changes bytes.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spde/config.hpp"
#include "spde/estimators.hpp"
#include "spde/io.hpp"
#include "spde/parallel.hpp"
#include "spde/rng.hpp"
#include "spde/solver.hpp"
#include "spde/version.hpp"

namespace {

using spde::cfg::FlatConfig;
namespace fs = std::filesystem;

bool log_enabled() {
    const char* v = std::getenv("SPDE_HEAVY_LOG");
    return v && *v && std::string(v) != "0";
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[spde-heavy] " << msg << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 0;
};

void add_common_flags(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory")->required();
    sub->add_option("--seed", args.seed, "override ensemble.master_seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_option("--workers", args.workers, "worker threads for ensembles");
}

FlatConfig load_config(const CommonArgs& args) {
    FlatConfig config = FlatConfig::parse_file(args.config_path);
    if (args.seed_given) config.set("ensemble.master_seed", std::to_string(args.seed));
    return config;
}

fs::path prepare_out(const CommonArgs& args) {
    fs::path out(args.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw spde::IoError("cannot create output directory " + out.string());
    return out;
}

int effective_workers(const CommonArgs& args, const FlatConfig& config) {
    if (args.workers > 0) return args.workers;
    return static_cast<int>(config.get_int("ensemble.workers", 1));
}

std::string manifest_text(const std::string& command, const FlatConfig& config,
                          std::uint64_t master_seed,
                          const std::vector<std::pair<std::string, std::uint64_t>>& files = {}) {
    std::string text;
    text += "version = ";
    text += spde::kVersion;
    text += "\ncommand = " + command;
    text += "\nmaster_seed = " + std::to_string(master_seed);
    text += "\n[config]\n";
    text += config.echo();
    if (!files.empty()) {
        text += "[files]\n";
        for (const auto& [name, seed] : files)
            text += name + " seed=" + std::to_string(seed) + "\n";
    }
    return text;
}

void warn_unused(const FlatConfig& config) {
    for (const std::string& key : config.unused_keys())
        log_line("config key not consumed by this command: " + key);
}

int cmd_analyze_kernel(const CommonArgs& args) {
    FlatConfig config = load_config(args);
    fs::path out = prepare_out(args);

    const int dim = static_cast<int>(config.get_int("domain.dim", 1));
    const spde::KernelSpec kernel = spde::cfg::kernel_from_config(config, dim);
    const double horizon = config.get_double("domain.T", 1.0);
    const int points = static_cast<int>(config.get_int("analysis.p_points", 50));
    if (points < 2) throw spde::ConfigError("analysis.p_points must be at least 2");

    const double p_upper = 1.0 + kernel.rho / (kernel.tau * dim);
    std::string region = "p,q_lower\n";
    for (int i = 1; i <= points; ++i) {
        const double p = p_upper * i / (points + 1);
        const double q_lower = spde::admissible_threshold(p, kernel.rho, kernel.tau, dim);
        region += spde::io::format_double(p);
        region += ',';
        region += spde::io::format_double(q_lower);
        region += '\n';
    }
    spde::io::write_text((out / "region.csv").string(), region);

    spde::io::json summary;
    summary["version"] = spde::kVersion;
    summary["kernel"] = spde::io::describe(kernel);
    summary["p_upper"] = p_upper;
    summary["time_horizon"] = horizon;
    if (config.has("exponents.p")) {
        const spde::ExponentPair e = spde::cfg::exponents_from_config(config);
        const auto adm = spde::admissible(e.p, e.q, kernel);
        const auto feas = spde::exponent_feasible(e, kernel);
        summary["admissible"] = {{"p", e.p},
                                 {"q", e.q},
                                 {"admissible", adm.admissible},
                                 {"p_upper", adm.p_upper},
                                 {"q_lower", adm.q_lower}};
        summary["feasible"] = {{"eta", e.eta},
                               {"feasible", feas.feasible},
                               {"eta_min", feas.eta_min},
                               {"growth_slack", feas.growth_slack}};
        const double np = spde::kernel_lp_norm(kernel, e.p, horizon);
        const double nq = spde::kernel_lp_norm(kernel, e.q, horizon);
        summary["lp_norms"] = {{"p_norm", np},
                               {"p_norm_finite", std::isfinite(np)},
                               {"q_norm", nq},
                               {"q_norm_finite", std::isfinite(nq)}};
    }
    spde::io::write_json((out / "analysis.json").string(), summary);
    spde::io::write_text((out / "manifest.txt").string(),
                         manifest_text("analyze-kernel", config,
                                       config.get_u64("ensemble.master_seed", 1)));
    warn_unused(config);
    log_line("analyze-kernel: wrote " + (out / "region.csv").string());
    return 0;
}

int cmd_sample(const CommonArgs& args) {
    FlatConfig config = load_config(args);
    fs::path out = prepare_out(args);

    const spde::ExponentPair exponents = spde::cfg::exponents_from_config(config);
    const spde::LevyMarkSpec noise = spde::cfg::noise_from_config(config, exponents);
    noise.validate();
    const spde::Box box = spde::cfg::box_from_config(config);
    const spde::EnsembleConfig ensemble = spde::cfg::ensemble_from_config(config);
    const int workers = effective_workers(args, config);
    if (ensemble.realizations < 1)
        throw spde::ConfigError("ensemble.n must be at least 1 for sample");

    std::vector<std::pair<std::string, std::uint64_t>> files(
        static_cast<std::size_t>(ensemble.realizations));
    spde::parallel_for(static_cast<std::size_t>(ensemble.realizations), workers,
                       [&](std::size_t i) {
                           const std::uint64_t seed =
                               spde::realization_seed(ensemble.master_seed, i);
                           const spde::NoiseRealization real = spde::sample_noise(noise, box, seed);
                           char name[32];
                           std::snprintf(name, sizeof name, "atoms_%04zu", i);
                           spde::io::write_atoms_csv((out / (std::string(name) + ".csv")).string(),
                                                     real);
                           spde::io::write_json((out / (std::string(name) + ".json")).string(),
                                                spde::io::noise_sidecar(real, noise));
                           files[i] = {std::string(name) + ".csv", seed};
                       });
    spde::io::write_text((out / "manifest.txt").string(),
                         manifest_text("sample", config, ensemble.master_seed, files));
    warn_unused(config);
    log_line("sample: wrote " + std::to_string(ensemble.realizations) + " atom clouds");
    return 0;
}

int cmd_solve(const CommonArgs& args) {
    FlatConfig config = load_config(args);
    fs::path out = prepare_out(args);

    spde::ProblemSpec problem = spde::cfg::problem_from_config(config);
    spde::validate(problem);
    const spde::StoppingConfig stopping =
        spde::cfg::stopping_from_config(config, problem.exponents.eta);
    const double tol = config.get_double("solver.tol", 1e-6);
    const int max_iter = static_cast<int>(config.get_int("solver.max_iter", 50));
    const std::uint64_t master_seed = config.get_u64("ensemble.master_seed", 1);
    const std::uint64_t seed = spde::realization_seed(master_seed, 0);

    const spde::NoiseRealization real = spde::sample_noise(problem.noise, problem.box, seed);
    log_line("solve: sampled " + std::to_string(real.atoms.size()) + " atoms");

    spde::io::json diag_json;
    diag_json["version"] = spde::kVersion;
    diag_json["seed"] = seed;

    spde::FieldGrid field;
    if (config.has("solver.levels")) {
        std::vector<int> levels;
        for (long l : config.get_int_list("solver.levels")) levels.push_back(static_cast<int>(l));
        spde::GlueResult glued =
            spde::glue(problem, real, levels, stopping.eta, tol, max_iter);
        field = std::move(glued.field);
        spde::io::json g;
        g["levels"] = glued.diag.levels;
        spde::io::json taus = spde::io::json::array();
        for (const auto& tau : glued.diag.stopping_times) {
            if (tau)
                taus.push_back(*tau);
            else
                taus.push_back(nullptr);
        }
        g["stopping_times"] = taus;
        g["level_used"] = glued.diag.level_used;
        g["guard_mass_bound"] = glued.diag.guard_mass_bound;
        diag_json["glue"] = g;
    } else {
        spde::SolveResult result = spde::solve(problem, real, stopping, tol, max_iter);
        field = std::move(result.field);
        diag_json.update(spde::io::describe(result.diag));
        log_line("solve: converged after " + std::to_string(result.diag.converged_iteration) +
                 " Picard updates");
    }

    spde::io::write_field_csv((out / "field.csv").string(), field);
    if (config.get_bool("output.binary", false))
        spde::io::write_field_binary((out / "field.bin").string(), field);
    spde::io::write_json((out / "diagnostics.json").string(), diag_json);
    spde::io::write_text((out / "manifest.txt").string(),
                         manifest_text("solve", config, master_seed));
    warn_unused(config);
    return 0;
}

int cmd_study(const CommonArgs& args, const std::string& kind) {
    FlatConfig config = load_config(args);
    fs::path out = prepare_out(args);

    spde::EnsembleConfig ensemble = spde::cfg::ensemble_from_config(config);
    ensemble.workers = effective_workers(args, config);
    const double tol = config.get_double("solver.tol", 1e-6);
    const int max_iter = static_cast<int>(config.get_int("solver.max_iter", 50));

    spde::io::json report;
    std::vector<spde::io::StudyRow> rows;

    if (kind == "stopping") {
        const spde::ExponentPair exponents = spde::cfg::exponents_from_config(config);
        const spde::LevyMarkSpec noise = spde::cfg::noise_from_config(config, exponents);
        noise.validate();
        const spde::Box box = spde::cfg::box_from_config(config);
        const double eta = config.get_double("stopping.eta", exponents.eta);
        std::vector<int> levels;
        for (long l : config.get_int_list("study.levels")) levels.push_back(static_cast<int>(l));
        const spde::StoppingStudy study =
            spde::stopping_time_study(noise, box, levels, eta, ensemble);
        report = spde::io::study_json(study);
        rows = spde::io::study_rows(study);
    } else {
        spde::ProblemSpec problem = spde::cfg::problem_from_config(config);
        spde::validate(problem);
        const spde::StoppingConfig stopping =
            spde::cfg::stopping_from_config(config, problem.exponents.eta);
        if (kind == "truncation") {
            const std::string mode_name = config.get_string("study.mode", "jump_size");
            spde::TruncationMode mode;
            if (mode_name == "jump_size")
                mode = spde::TruncationMode::jump_size;
            else if (mode_name == "support")
                mode = spde::TruncationMode::support;
            else
                throw spde::ConfigError("study.mode must be jump_size or support, got '" +
                                        mode_name + "'");
            const spde::TruncationStudy study = spde::truncation_convergence_study(
                problem, stopping, mode, config.get_double_list("study.levels"), ensemble, tol,
                max_iter);
            report = spde::io::study_json(study);
            rows = spde::io::study_rows(study);
        } else if (kind == "picard") {
            const int iterations = static_cast<int>(config.get_int("study.iterations", 25));
            const spde::PicardStudy study =
                spde::picard_decay_study(problem, stopping, iterations, ensemble);
            report = spde::io::study_json(study);
            rows = spde::io::study_rows(study);
        } else if (kind == "moment") {
            const double slack = config.get_double("study.slack", 0.25);
            const spde::MomentStudy study =
                spde::moment_growth_check(problem, stopping, config.get_double_list("study.radii"),
                                          ensemble, slack, tol, max_iter);
            report = spde::io::study_json(study);
            rows = spde::io::study_rows(study);
        } else {
            throw spde::ConfigError(
                "study kind must be truncation, picard, moment or stopping, got '" + kind + "'");
        }
    }

    report["version"] = spde::kVersion;
    spde::io::write_json((out / "study.json").string(), report);
    spde::io::write_study_csv((out / "study.csv").string(), rows);
    spde::io::write_text((out / "manifest.txt").string(),
                         manifest_text("study " + kind, config, ensemble.master_seed));
    warn_unused(config);
    log_line("study " + kind + ": wrote " + (out / "study.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavy-tailed stochastic heat equation toolkit"};
    app.require_subcommand(1);

    CommonArgs analyze_args, sample_args, solve_args, study_args;
    std::string study_kind;

    CLI::App* analyze = app.add_subcommand("analyze-kernel", "kernel norms and (p,q) region");
    add_common_flags(analyze, analyze_args);
    CLI::App* sample = app.add_subcommand("sample", "draw atom clouds");
    add_common_flags(sample, sample_args);
    CLI::App* solve = app.add_subcommand("solve", "build the mild solution");
    add_common_flags(solve, solve_args);
    CLI::App* study = app.add_subcommand("study", "ensemble study");
    study->add_option("kind", study_kind, "truncation | picard | moment | stopping")->required();
    add_common_flags(study, study_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) return cmd_analyze_kernel(analyze_args);
        if (sample->parsed()) return cmd_sample(sample_args);
        if (solve->parsed()) return cmd_solve(solve_args);
        if (study->parsed()) return cmd_study(study_args, study_kind);
        return 2;
    } catch (const spde::SolveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const spde::QuadratureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const spde::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const spde::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const spde::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
