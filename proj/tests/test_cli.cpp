#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "spde/config.hpp"
#include "spde/io.hpp"
#include "spde/noise.hpp"
#include "spde/rng.hpp"
#include "spde/solver.hpp"
#include "spde/version.hpp"

using namespace spde;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_root() {
    return fs::temp_directory_path() / "spde_cli_tests";
}

// Fresh directory per label so test cases cannot see each other's files.
std::string fresh_dir(const std::string& label) {
    fs::path p = scratch_root() / label;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    fs::create_directories(scratch_root());
    std::string tag = std::to_string(counter++);
    std::string out_file = (scratch_root() / ("stdout_" + tag)).string();
    std::string err_file = (scratch_root() / ("stderr_" + tag)).string();
    std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + SPDE_HEAVY_BIN + " " + args +
                      " >" + out_file + " 2>" + err_file;
    int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::string write_config(const std::string& label, const std::string& text) {
    std::string path = (scratch_root() / (label + ".cfg")).string();
    fs::create_directories(scratch_root());
    io::write_text(path, text);
    return path;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Base problem shared with the library-level suites: additive noise over a
// short horizon so solves converge after one Picard update.
const std::string kSolveConfig =
    "domain.T = 0.5\n"
    "domain.R = 6\n"
    "domain.R_eval = 2\n"
    "domain.dim = 1\n"
    "exponents.p = 1.3\n"
    "exponents.q = 1.1\n"
    "exponents.eta = 1.2\n"
    "noise.family = stable\n"
    "noise.alpha = 1.2\n"
    "noise.c = 1\n"
    "noise.cutoff = 0.2\n"
    "sigma.kind = one\n"
    "initial.kind = bump\n"
    "initial.height = 1\n"
    "initial.width = 0.8\n"
    "grid.time_steps = 6\n"
    "grid.sites_per_dim = 41\n";

}  // namespace

TEST_CASE("malformed invocations exit 2 and --help exits 0") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate --config a --out b").code == 2);
    CHECK(run_cli("solve").code == 2);
    CHECK(run_cli("solve --config only.cfg").code == 2);
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("study --config a --out b").code == 2);  // missing kind
}

TEST_CASE("analyze-kernel writes the region table, summary json and manifest") {
    std::string cfg_path = write_config("analyze",
                                        "domain.T = 1\n"
                                        "analysis.p_points = 10\n"
                                        "exponents.p = 1.3\n"
                                        "exponents.q = 1.1\n"
                                        "exponents.eta = 1.2\n"
                                        "ensemble.master_seed = 5\n");
    std::string out = fresh_dir("analyze_out");
    RunResult r = run_cli("analyze-kernel --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);

    std::string region = slurp(out + "/region.csv");
    std::vector<std::string> lines;
    {
        std::stringstream ss(region);
        std::string line;
        while (std::getline(ss, line)) lines.push_back(line);
    }
    REQUIRE(lines.size() == 11);
    CHECK(lines[0] == "p,q_lower");
    // Row i holds p = p_upper * i / (points + 1) with its admissibility floor.
    const double p5 = 3.0 * 5 / 11;
    CHECK(lines[5] == io::format_double(p5) + "," +
                          io::format_double(admissible_threshold(p5, 2.0, 1.0, 1)));

    io::json summary = io::json::parse(slurp(out + "/analysis.json"));
    CHECK(summary["version"] == kVersion);
    CHECK(summary["kernel"]["rho"] == 2.0);
    CHECK(summary["p_upper"] == 3.0);
    CHECK(summary["admissible"]["admissible"] == true);
    CHECK(summary["admissible"]["q_lower"] == admissible_threshold(1.3, 2.0, 1.0, 1));
    CHECK(summary["feasible"]["feasible"] == true);
    CHECK(summary["lp_norms"]["p_norm_finite"] == true);

    std::string manifest = slurp(out + "/manifest.txt");
    CHECK(contains(manifest, std::string("version = ") + kVersion));
    CHECK(contains(manifest, "command = analyze-kernel"));
    CHECK(contains(manifest, "master_seed = 5"));
    CHECK(contains(manifest, "[config]"));
    CHECK(contains(manifest, "analysis.p_points = 10"));
}

TEST_CASE("sample writes per-realization clouds with derived seeds") {
    const std::string text =
        "domain.T = 0.3\n"
        "domain.R = 1.5\n"
        "exponents.p = 1.3\n"
        "exponents.q = 1.1\n"
        "exponents.eta = 1.2\n"
        "noise.alpha = 1.2\n"
        "noise.c = 1\n"
        "noise.cutoff = 0.2\n"
        "ensemble.n = 3\n"
        "ensemble.master_seed = 11\n";
    std::string cfg_path = write_config("sample", text);
    std::string out = fresh_dir("sample_out");
    RunResult r = run_cli("sample --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);

    cfg::FlatConfig parsed = cfg::FlatConfig::parse_string(text);
    LevyMarkSpec spec = cfg::noise_from_config(parsed, cfg::exponents_from_config(parsed));
    Box box = cfg::box_from_config(parsed);

    for (std::size_t i = 0; i < 3; ++i) {
        std::string stem = out + "/atoms_000" + std::to_string(i);
        const std::uint64_t seed = realization_seed(11, i);
        io::json sidecar = io::json::parse(slurp(stem + ".json"));
        CHECK(sidecar["seed"] == seed);
        CHECK(sidecar["version"] == kVersion);

        NoiseRealization expect = sample_noise(spec, box, seed);
        NoiseRealization got = io::read_atoms_csv(stem + ".csv");
        REQUIRE(got.atoms.size() == expect.atoms.size());
        CHECK(sidecar["atom_count"] == expect.atoms.size());
        for (std::size_t k = 0; k < got.atoms.size(); ++k) {
            CHECK(got.atoms[k].t == expect.atoms[k].t);
            CHECK(got.atoms[k].x[0] == expect.atoms[k].x[0]);
            CHECK(got.atoms[k].z == expect.atoms[k].z);
        }
    }
    CHECK_FALSE(fs::exists(out + "/atoms_0003.csv"));

    std::string manifest = slurp(out + "/manifest.txt");
    CHECK(contains(manifest, "command = sample"));
    CHECK(contains(manifest, "[files]"));
    CHECK(contains(manifest, "atoms_0000.csv seed=" + std::to_string(realization_seed(11, 0))));
}

TEST_CASE("solve reproduces the library result and mirrors csv in binary") {
    std::string cfg_path = write_config("solve", kSolveConfig + "output.binary = true\n");
    std::string out = fresh_dir("solve_out");
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);

    io::json diag = io::json::parse(slurp(out + "/diagnostics.json"));
    CHECK(diag["version"] == kVersion);
    CHECK(diag["seed"] == realization_seed(1, 0));
    CHECK(diag["converged"] == true);
    CHECK(diag["converged_iteration"] == 1);  // additive coefficient
    CHECK(diag["iterations_run"] == 2);

    cfg::FlatConfig parsed = cfg::FlatConfig::parse_string(kSolveConfig);
    ProblemSpec problem = cfg::problem_from_config(parsed);
    NoiseRealization real =
        sample_noise(problem.noise, problem.box, realization_seed(1, 0));
    SolveResult expect = solve(problem, real, StoppingConfig{1, problem.exponents.eta}, 1e-6, 50);

    FieldGrid from_bin = io::read_field_binary(out + "/field.bin");
    REQUIRE(from_bin.values.size() == expect.field.values.size());
    for (std::size_t i = 0; i < from_bin.values.size(); ++i)
        CHECK(from_bin.values[i] == expect.field.values[i]);

    std::string csv = slurp(out + "/field.csv");
    CHECK(contains(csv, "t,x1,y"));
    std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + expect.field.values.size());
}

TEST_CASE("solve with a zero coefficient and zero start stays identically zero") {
    std::string text = kSolveConfig;
    text.replace(text.find("sigma.kind = one"), std::string("sigma.kind = one").size(),
                 "sigma.kind = zero");
    text.replace(text.find("initial.kind = bump"), std::string("initial.kind = bump").size(),
                 "initial.kind = zero");
    std::string cfg_path = write_config("solve_zero", text + "output.binary = true\n");
    std::string out = fresh_dir("solve_zero_out");
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);
    FieldGrid field = io::read_field_binary(out + "/field.bin");
    for (double v : field.values) CHECK(v == 0.0);
}

TEST_CASE("solve with a level ladder emits glue diagnostics") {
    std::string text = kSolveConfig;
    // Bounded marks: no jump ever crosses the adaptive thresholds, so every
    // ladder level keeps the full cloud and no stopping time fires.
    text.replace(text.find("noise.family = stable"), std::string("noise.family = stable").size(),
                 "noise.family = discrete");
    text.replace(text.find("noise.alpha = 1.2\n"), std::string("noise.alpha = 1.2\n").size(), "");
    text.replace(text.find("noise.c = 1\n"), std::string("noise.c = 1\n").size(), "");
    text.replace(text.find("noise.cutoff = 0.2"), std::string("noise.cutoff = 0.2").size(),
                 "noise.atoms = 0.5:2\nnoise.cutoff = 0.3");
    std::string cfg_path = write_config("solve_glue", text + "solver.levels = 50, 100\n");
    std::string out = fresh_dir("solve_glue_out");
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);

    io::json diag = io::json::parse(slurp(out + "/diagnostics.json"));
    REQUIRE(diag.contains("glue"));
    CHECK(diag["glue"]["levels"] == std::vector<int>{50, 100});
    REQUIRE(diag["glue"]["stopping_times"].size() == 2);
    CHECK(diag["glue"]["stopping_times"][0].is_null());
    CHECK(diag["glue"]["stopping_times"][1].is_null());
    REQUIRE(diag["glue"]["level_used"].size() == 7);  // time_steps + 1
    for (const auto& lvl : diag["glue"]["level_used"]) CHECK(lvl == 50);
}

TEST_CASE("exponents outside the admissible region exit 2 with the threshold") {
    std::string text = kSolveConfig;
    // q = 0.5 sits below the q_lower = 0.6 floor that p = 1.5 induces.
    text.replace(text.find("exponents.p = 1.3"), std::string("exponents.p = 1.3").size(),
                 "exponents.p = 1.5");
    text.replace(text.find("exponents.q = 1.1"), std::string("exponents.q = 1.1").size(),
                 "exponents.q = 0.5");
    std::string cfg_path = write_config("solve_bad_q", text);
    std::string out = fresh_dir("solve_bad_q_out");
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + out);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "admissible region"));
    CHECK(contains(r.err, "0.6"));
}

TEST_CASE("an unreachable tolerance exits 3 with the solver message") {
    std::string text = kSolveConfig;
    text.replace(text.find("sigma.kind = one"), std::string("sigma.kind = one").size(),
                 "sigma.kind = identity");
    std::string cfg_path =
        write_config("solve_stall", text + "solver.tol = 1e-300\nsolver.max_iter = 1\n");
    std::string out = fresh_dir("solve_stall_out");
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + out);
    CHECK(r.code == 3);
    CHECK(contains(r.err, "no convergence"));
}

TEST_CASE("an output directory blocked by a regular file exits 4") {
    fs::create_directories(scratch_root());
    std::string blocker = (scratch_root() / "blocker").string();
    io::write_text(blocker, "occupied\n");
    std::string cfg_path = write_config("blocked", kSolveConfig);
    RunResult r = run_cli("solve --config " + cfg_path + " --out " + blocker + "/sub");
    CHECK(r.code == 4);
    CHECK(contains(r.err, "cannot create output directory"));
}

TEST_CASE("solve reruns are byte identical") {
    std::string cfg_path = write_config("rerun", kSolveConfig + "output.binary = true\n");
    std::string a = fresh_dir("rerun_a");
    std::string b = fresh_dir("rerun_b");
    CHECK(run_cli("solve --config " + cfg_path + " --out " + a).code == 0);
    CHECK(run_cli("solve --config " + cfg_path + " --out " + b).code == 0);
    for (const char* name : {"field.csv", "field.bin", "diagnostics.json", "manifest.txt"}) {
        std::string fa = slurp(a + "/" + name);
        CHECK_FALSE(fa.empty());
        CHECK(fa == slurp(b + "/" + name));
    }
}

TEST_CASE("stopping study output does not depend on worker count") {
    std::string cfg_path = write_config("study_stop",
                                        "domain.T = 1\n"
                                        "domain.R = 2\n"
                                        "exponents.p = 1.3\n"
                                        "exponents.q = 1.1\n"
                                        "exponents.eta = 1.5\n"
                                        "noise.alpha = 1.2\n"
                                        "noise.c = 1\n"
                                        "study.levels = 1, 2, 4\n"
                                        "ensemble.n = 40\n"
                                        "ensemble.master_seed = 7\n");
    std::string a = fresh_dir("study_stop_a");
    std::string b = fresh_dir("study_stop_b");
    CHECK(run_cli("study stopping --config " + cfg_path + " --out " + a + " --workers 1").code == 0);
    CHECK(run_cli("study stopping --config " + cfg_path + " --out " + b + " --workers 8").code == 0);
    for (const char* name : {"study.csv", "study.json", "manifest.txt"}) {
        std::string fa = slurp(a + "/" + name);
        CHECK_FALSE(fa.empty());
        CHECK(fa == slurp(b + "/" + name));
    }
    std::string csv = slurp(a + "/study.csv");
    CHECK(contains(csv, "study,param,seed,value"));
    CHECK(contains(csv, "stopping,1,-1,"));
    CHECK(contains(csv, "stopping_tau,4,39,"));
    io::json report = io::json::parse(slurp(a + "/study.json"));
    CHECK(report["study"] == "stopping");
    CHECK(report["seeds"] == 40);
    CHECK(contains(slurp(a + "/manifest.txt"), "command = study stopping"));
}

TEST_CASE("truncation study runs end to end through the front end") {
    std::string text = kSolveConfig;
    text.replace(text.find("grid.time_steps = 6"), std::string("grid.time_steps = 6").size(),
                 "grid.time_steps = 4");
    text.replace(text.find("grid.sites_per_dim = 41"),
                 std::string("grid.sites_per_dim = 41").size(), "grid.sites_per_dim = 21");
    std::string cfg_path = write_config("study_trunc", text +
                                                           "study.levels = 1, 1e9\n"
                                                           "ensemble.n = 2\n");
    std::string out = fresh_dir("study_trunc_out");
    RunResult r = run_cli("study truncation --config " + cfg_path + " --out " + out);
    CHECK(r.code == 0);
    io::json report = io::json::parse(slurp(out + "/study.json"));
    CHECK(report["study"] == "truncation");
    CHECK(report["mode"] == "jump_size");
    CHECK(report["final_gap_zero"] == true);
    CHECK(report["schema_version"] == kStudySchemaVersion);
    CHECK(contains(slurp(out + "/study.csv"), "truncation,1,-1,"));
}

TEST_CASE("unknown study kinds exit 2") {
    std::string cfg_path = write_config("study_bad", kSolveConfig);
    std::string out = fresh_dir("study_bad_out");
    RunResult r = run_cli("study frobnicate --config " + cfg_path + " --out " + out);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "study kind must be truncation, picard, moment or stopping"));
}

TEST_CASE("--seed overrides the master seed everywhere it is recorded") {
    const std::string text =
        "domain.T = 0.3\n"
        "domain.R = 1.5\n"
        "exponents.p = 1.3\n"
        "exponents.q = 1.1\n"
        "exponents.eta = 1.2\n"
        "noise.alpha = 1.2\n"
        "noise.c = 1\n"
        "ensemble.n = 1\n"
        "ensemble.master_seed = 11\n";
    std::string cfg_path = write_config("seed_override", text);
    std::string out = fresh_dir("seed_override_out");
    RunResult r = run_cli("sample --config " + cfg_path + " --out " + out + " --seed 42");
    CHECK(r.code == 0);
    std::string manifest = slurp(out + "/manifest.txt");
    CHECK(contains(manifest, "master_seed = 42"));
    CHECK(contains(manifest, "ensemble.master_seed = 42"));
    CHECK_FALSE(contains(manifest, "master_seed = 11"));
    io::json sidecar = io::json::parse(slurp(out + "/atoms_0000.json"));
    CHECK(sidecar["seed"] == realization_seed(42, 0));
}

TEST_CASE("diagnostic logging is gated by SPDE_HEAVY_LOG") {
    std::string cfg_path = write_config("logging",
                                        "domain.T = 1\n"
                                        "analysis.p_points = 2\n");
    std::string quiet = fresh_dir("log_quiet");
    RunResult off = run_cli("analyze-kernel --config " + cfg_path + " --out " + quiet,
                            "SPDE_HEAVY_LOG=0");
    CHECK(off.code == 0);
    CHECK(off.err.empty());

    std::string loud = fresh_dir("log_loud");
    RunResult on = run_cli("analyze-kernel --config " + cfg_path + " --out " + loud,
                           "SPDE_HEAVY_LOG=1");
    CHECK(on.code == 0);
    CHECK(contains(on.err, "[spde-heavy]"));
}
