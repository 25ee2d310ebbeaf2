#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spde/config.hpp"
#include "spde/io.hpp"
#include "spde/version.hpp"

using namespace spde;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool message_contains(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("spde_io_test_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

double parse_back(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::strtod(s.c_str(), nullptr);
}

}  // namespace

TEST_CASE("format_double: exact decimal round trip for awkward values") {
    for (double v : {0.1, 1.0 / 3.0, -2.25, 1e-300, 5e-324, -0.0, 0.0, 1e-5,
                     1.7976931348623157e308, 42.0, -123456789.123456789}) {
        CHECK(same_bits(parse_back(io::format_double(v)), v));
    }
    CHECK(io::format_double(kInf) == "inf");
    CHECK(io::format_double(-kInf) == "-inf");
    CHECK(io::format_double(-0.0) == "-0");
    CHECK(io::format_double(42.0) == "42");
}

TEST_CASE("atoms csv: header, bitwise round trip, empty cloud") {
    NoiseRealization real;
    real.box = Box{1.0, 2.0, 2};
    real.cutoff = 0.1;
    real.atoms = {{0.125, Point{0.5, -1.75, 0.0}, 2.5},
                  {0.5, Point{-0.1, 0.2, 0.0}, -1.0 / 3.0},
                  {0.75, Point{1e-10, 1.5, 0.0}, 42.0}};
    std::string path = tmp_path("atoms.csv");
    io::write_atoms_csv(path, real);

    std::string text = slurp(path);
    CHECK(text.substr(0, text.find('\n')) == "t,x1,x2,z");

    NoiseRealization back = io::read_atoms_csv(path);
    CHECK(back.box.dim == 2);
    REQUIRE(back.atoms.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(same_bits(back.atoms[i].t, real.atoms[i].t));
        CHECK(same_bits(back.atoms[i].x[0], real.atoms[i].x[0]));
        CHECK(same_bits(back.atoms[i].x[1], real.atoms[i].x[1]));
        CHECK(same_bits(back.atoms[i].z, real.atoms[i].z));
    }

    NoiseRealization none;
    none.box = Box{0.0, 1.0, 1};
    std::string empty_path = tmp_path("atoms_empty.csv");
    io::write_atoms_csv(empty_path, none);
    CHECK(slurp(empty_path) == "t,x1,z\n");
    CHECK(io::read_atoms_csv(empty_path).atoms.empty());
}

TEST_CASE("atoms csv: error diagnostics") {
    CHECK_THROWS_AS(io::read_atoms_csv(tmp_path("no_such_file.csv")), IoError);

    std::string bad_header = tmp_path("atoms_bad_header.csv");
    io::write_text(bad_header, "time,x1,z\n0,0,1\n");
    try {
        io::read_atoms_csv(bad_header);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(message_contains(e, "unexpected atom header in"));
    }

    std::string ragged = tmp_path("atoms_ragged.csv");
    io::write_text(ragged, "t,x1,z\n0,0\n");
    try {
        io::read_atoms_csv(ragged);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(message_contains(e, "ragged row in"));
    }

    std::string bad_num = tmp_path("atoms_bad_num.csv");
    io::write_text(bad_num, "t,x1,z\n0,zebra,1\n");
    try {
        io::read_atoms_csv(bad_num);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(message_contains(e, "bad numeric field"));
    }
}

TEST_CASE("field csv: golden bytes for a two-level grid") {
    FieldGrid grid = FieldGrid::uniform(0.5, 1, 1, 2, 1.0, 1.3);
    grid.values = {1.5, -2.25, 1.0 / 3.0, 1e-5};
    std::string path = tmp_path("field.csv");
    io::write_field_csv(path, grid);
    CHECK(slurp(path) ==
          "t,x1,y\n"
          "0,-1,1.5\n"
          "0,1,-2.25\n"
          "0.5,-1,0.33333333333333331\n"
          "0.5,1,1.0000000000000001e-05\n");
}

TEST_CASE("field binary: bitwise round trip and corruption diagnostics") {
    FieldGrid grid = FieldGrid::uniform(2.0, 3, 2, 4, 1.5, 1.1);
    oracle::Xorshift rng(5);
    for (double& v : grid.values) v = rng.uniform(-10.0, 10.0);
    grid.values[0] = -0.0;
    grid.values[1] = 5e-324;
    grid.values[2] = kInf;

    std::string path = tmp_path("field.bin");
    io::write_field_binary(path, grid);
    std::string raw = slurp(path);
    CHECK(raw.size() == 5 + 1 + 2 + 8 + 8 + 8 + 8 + 8 * grid.times.size() +
                            8 * grid.values.size());
    CHECK(raw.substr(0, 5) == "SPDH1");

    FieldGrid back = io::read_field_binary(path);
    CHECK(back.dim == 2);
    CHECK(back.sites_per_dim == 4);
    CHECK(same_bits(back.radius, 1.5));
    CHECK(same_bits(back.norm_p, 1.1));
    REQUIRE(back.times.size() == grid.times.size());
    REQUIRE(back.values.size() == grid.values.size());
    for (std::size_t i = 0; i < grid.times.size(); ++i)
        CHECK(same_bits(back.times[i], grid.times[i]));
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        CHECK(same_bits(back.values[i], grid.values[i]));

    std::string bad_magic = tmp_path("field_bad_magic.bin");
    std::string corrupt = raw;
    corrupt[0] = 'X';
    io::write_text(bad_magic, corrupt);
    CHECK_THROWS_AS(io::read_field_binary(bad_magic), IoError);

    std::string truncated = tmp_path("field_truncated.bin");
    io::write_text(truncated, raw.substr(0, raw.size() - 4));
    try {
        io::read_field_binary(truncated);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(message_contains(e, "truncated field binary"));
    }

    std::string trailing = tmp_path("field_trailing.bin");
    io::write_text(trailing, raw + "junk");
    try {
        io::read_field_binary(trailing);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(message_contains(e, "trailing bytes"));
    }
}

TEST_CASE("study csv: golden rows including the ensemble marker and inf") {
    std::vector<io::StudyRow> rows{{"truncation", "2", -1, 0.5},
                                   {"truncation", "2", 0, kInf},
                                   {"stopping_tau", "4", 17, 0.25}};
    std::string path = tmp_path("study.csv");
    io::write_study_csv(path, rows);
    CHECK(slurp(path) ==
          "study,param,seed,value\n"
          "truncation,2,-1,0.5\n"
          "truncation,2,0,inf\n"
          "stopping_tau,4,17,0.25\n");
}

TEST_CASE("study_rows: ensemble row first, then seeds, per parameter") {
    TruncationStudy t;
    t.levels = {1.0, 8.0};
    t.ensemble_gap = {Estimate{0.5, 0.1, 2}, Estimate{0.0, 0.0, 2}};
    t.seed_gap = {{0.4, 0.0}, {0.6, 0.0}};
    auto rows = io::study_rows(t);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].study == "truncation");
    CHECK(rows[0].param == "1");
    CHECK(rows[0].seed == -1);
    CHECK(rows[0].value == 0.5);
    CHECK(rows[1].seed == 0);
    CHECK(rows[1].value == 0.4);
    CHECK(rows[2].seed == 1);
    CHECK(rows[3].param == "8");
    CHECK(rows[3].seed == -1);

    PicardStudy p;
    p.iterations = 2;
    p.ensemble_increment = {Estimate{1.0, 0.0, 1}, Estimate{0.0, 0.0, 1}};
    p.seed_increment = {{0.9, 0.0}};
    auto prow = io::study_rows(p);
    REQUIRE(prow.size() == 4);
    CHECK(prow[0].study == "picard");
    CHECK(prow[0].param == "1");  // iterations are 1-based in reports
    CHECK(prow[2].param == "2");

    StoppingStudy s;
    s.eta = 1.5;
    s.points = {StoppingPoint{2, 0.5, 0.4, 0.51, 0.9}};
    s.taus = {{0.25}, {kInf}};
    auto srow = io::study_rows(s);
    REQUIRE(srow.size() == 5);
    CHECK(srow[0].study == "stopping");
    CHECK(srow[0].value == 0.5);
    CHECK(srow[1].study == "stopping_exact");
    CHECK(srow[1].value == 0.4);
    CHECK(srow[2].study == "stopping_bound");
    CHECK(srow[2].value == 0.9);
    CHECK(srow[3].study == "stopping_tau");
    CHECK(srow[3].seed == 0);
    CHECK(srow[4].value == kInf);
}

TEST_CASE("study_json: schema version and study names") {
    CHECK(io::study_json(TruncationStudy{})["schema_version"] == kStudySchemaVersion);
    CHECK(io::study_json(TruncationStudy{})["study"] == "truncation");
    CHECK(io::study_json(PicardStudy{})["study"] == "picard");
    CHECK(io::study_json(MomentStudy{})["study"] == "moment");
    CHECK(io::study_json(StoppingStudy{})["study"] == "stopping");
}

TEST_CASE("noise sidecar and describe() cover the bookkeeping") {
    LevyMarkSpec spec = LevyMarkSpec::discrete({{0.5, 2.0}, {2.0, 0.5}}, 0.3, 1.3, 1.1);
    Box box{1.0, 1.5, 1};
    NoiseRealization real = sample_noise(spec, box, 99);

    io::json j = io::noise_sidecar(real, spec);
    CHECK(j["spec"]["family"] == "discrete");
    CHECK(j["spec"]["atoms"].size() == 2);
    CHECK(j["box"]["radius"] == 1.5);
    CHECK(j["seed"] == real.seed);
    CHECK(j["cutoff"] == real.cutoff);
    CHECK(j["atom_count"] == real.atoms.size());
    CHECK(j["compensated"] == real.comp.compensated);
    CHECK(j["drift_density"] == real.comp.drift_density);
    CHECK(j["discarded_moment_bound"] == real.comp.discarded_moment_bound);
    CHECK(j["version"] == kVersion);

    io::json k = io::describe(KernelSpec::heat(2));
    CHECK(k["rho"] == 2.0);
    CHECK(k["tau"] == 1.0);
    CHECK(k["lambda"] == 0.25);
    CHECK(k["dim"] == 2);
    CHECK(k["norm_const"] == KernelSpec::heat(2).norm_const);

    SolveDiagnostics diag;
    CHECK(io::describe(diag)["applied_stopping_time"].is_null());
    diag.applied_stopping_time = 0.25;
    CHECK(io::describe(diag)["applied_stopping_time"] == 0.25);

    io::json st = io::describe(LevyMarkSpec::stable(1.2, 1.0, 0.1, 1.3, 1.1));
    CHECK(st["family"] == "stable");
    CHECK(st["alpha"] == 1.2);
    CHECK(st["c"] == 1.0);
}

TEST_CASE("write targets that cannot be opened raise IoError") {
    CHECK_THROWS_AS(io::write_text("/no/such/dir/file.txt", "x"), IoError);
    CHECK_THROWS_AS(io::write_study_csv("/no/such/dir/file.csv", {}), IoError);
}

TEST_CASE("FlatConfig: parsing, comments, echo stability, error lines") {
    cfg::FlatConfig c = cfg::FlatConfig::parse_string(
        "# leading comment\n"
        "\n"
        "domain.T = 1.5   # trailing comment\n"
        "domain.R = 2\n"
        "sigma.kind = clamp\n");
    CHECK(c.has("domain.T"));
    CHECK(c.get_double("domain.T") == 1.5);
    CHECK(c.get_string("sigma.kind") == "clamp");
    CHECK(c.echo() == "domain.T = 1.5\ndomain.R = 2\nsigma.kind = clamp\n");

    // set() keeps position for existing keys and appends new ones.
    c.set("domain.R", "3");
    c.set("grid.time_steps", "7");
    CHECK(c.echo() == "domain.T = 1.5\ndomain.R = 3\nsigma.kind = clamp\ngrid.time_steps = 7\n");

    try {
        cfg::FlatConfig::parse_string("a = 1\nb = 2\nnonsense line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "config line 3"));
        CHECK(message_contains(e, "expected 'key = value'"));
    }
    try {
        cfg::FlatConfig::parse_string("a = 1\na = 2\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "config line 2"));
        CHECK(message_contains(e, "duplicate key"));
    }
    try {
        cfg::FlatConfig::parse_string("bad key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "bad key"));
    }
    CHECK_THROWS_AS(cfg::FlatConfig::parse_string("= 5\n"), ConfigError);
    CHECK_THROWS_AS(cfg::FlatConfig::parse_file(tmp_path("missing.cfg")), ConfigError);
}

TEST_CASE("FlatConfig: typed getters, fallbacks, lists, unused keys") {
    cfg::FlatConfig c = cfg::FlatConfig::parse_string(
        "num = 2.5\n"
        "int = -7\n"
        "word = abc\n"
        "flag = true\n"
        "offswitch = 0\n"
        "list = 1, 2.5 ,-3\n"
        "ints = 4,5,6\n"
        "big = 18446744073709551615\n"
        "stray = 1\n");
    CHECK(c.get_double("num") == 2.5);
    CHECK(c.get_int("int") == -7);
    CHECK(c.get_string("word") == "abc");
    CHECK(c.get_bool("flag", false));
    CHECK_FALSE(c.get_bool("offswitch", true));
    CHECK(c.get_bool("absent", true));
    CHECK(c.get_double("absent", 9.5) == 9.5);
    CHECK(c.get_int("absent", 12) == 12);
    CHECK(c.get_string("absent", "dflt") == "dflt");
    CHECK(c.get_u64("big", 0) == 18446744073709551615ULL);
    CHECK(c.get_u64("absent", 3) == 3);
    CHECK(c.get_double_list("list") == std::vector<double>{1.0, 2.5, -3.0});
    CHECK(c.get_int_list("ints") == std::vector<long>{4, 5, 6});

    CHECK_THROWS_AS(c.get_string("nope"), ConfigError);
    try {
        c.get_double("word");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "is not a number"));
    }
    try {
        c.get_int("num");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "is not an integer"));
    }
    try {
        c.get_bool("word", true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "expected true/false"));
    }

    auto unused = c.unused_keys();
    CHECK(std::find(unused.begin(), unused.end(), "stray") != unused.end());
    CHECK(std::find(unused.begin(), unused.end(), "num") == unused.end());
}

TEST_CASE("kernel_from_config: families, defaults and the parabolic bridge") {
    cfg::FlatConfig none = cfg::FlatConfig::parse_string("");
    KernelSpec heat = cfg::kernel_from_config(none, 1);
    CHECK(heat.rho == KernelSpec::heat(1).rho);
    CHECK(heat.norm_const == KernelSpec::heat(1).norm_const);

    cfg::FlatConfig para = cfg::FlatConfig::parse_string("kernel.family = parabolic\nkernel.m = 1\n");
    KernelSpec p1 = cfg::kernel_from_config(para, 2);
    KernelSpec h2 = KernelSpec::heat(2);
    CHECK(p1.rho == h2.rho);
    CHECK(p1.tau == h2.tau);
    CHECK(p1.lambda == h2.lambda);
    CHECK(p1.norm_const == h2.norm_const);

    cfg::FlatConfig para2 = cfg::FlatConfig::parse_string(
        "kernel.family = parabolic\nkernel.m = 2\nkernel.lambda = 0.4\n");
    CHECK(cfg::kernel_from_config(para2, 1).lambda == 0.4);

    cfg::FlatConfig gen = cfg::FlatConfig::parse_string(
        "kernel.family = general\nkernel.rho = 1.5\nkernel.tau = 0.8\nkernel.lambda = 0.3\n");
    KernelSpec g = cfg::kernel_from_config(gen, 1);
    CHECK(g.rho == 1.5);
    CHECK(g.tau == 0.8);
    CHECK(g.lambda == 0.3);

    cfg::FlatConfig bad = cfg::FlatConfig::parse_string("kernel.family = fourier\n");
    CHECK_THROWS_AS(cfg::kernel_from_config(bad, 1), ConfigError);
}

TEST_CASE("sigma_from_config: the five kinds and their guards") {
    auto build = [](const std::string& text) {
        cfg::FlatConfig c = cfg::FlatConfig::parse_string(text);
        return cfg::sigma_from_config(c);
    };
    SigmaSpec one = build("");
    CHECK(one.name == "one");
    CHECK(one.fn(123.0) == 1.0);
    CHECK(one.lipschitz == 0.0);
    CHECK(one.growth->exponent == 0.0);

    CHECK(build("sigma.kind = zero\n").fn(5.0) == 0.0);
    CHECK(build("sigma.kind = identity\n").fn(-4.5) == -4.5);

    SigmaSpec clamp = build("sigma.kind = clamp\nsigma.cap = 2\n");
    CHECK(clamp.fn(3.0) == 2.0);
    CHECK(clamp.fn(-3.0) == -2.0);
    CHECK(clamp.fn(0.5) == 0.5);
    CHECK(clamp.growth->scale == 2.0);
    CHECK_THROWS_AS(build("sigma.kind = clamp\nsigma.cap = 0\n"), ConfigError);

    SigmaSpec pw = build("sigma.kind = power\nsigma.gamma = 0.5\n");
    CHECK(oracle::rel_err(pw.fn(2.0), std::pow(5.0, 0.25)) < 1e-15);
    CHECK(pw.growth->exponent == 0.5);
    CHECK(pw.lipschitz == 0.5);
    CHECK_THROWS_AS(build("sigma.kind = power\nsigma.gamma = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(build("sigma.kind = power\nsigma.gamma = -0.1\n"), ConfigError);
    CHECK_THROWS_AS(build("sigma.kind = cubic\n"), ConfigError);
    CHECK_THROWS_AS(build("sigma.kind = power\n"), ConfigError);  // gamma required
}

TEST_CASE("initial_from_config: shapes, sup bounds and guards") {
    KernelSpec kernel = KernelSpec::heat(1);
    auto build = [&](const std::string& text) {
        cfg::FlatConfig c = cfg::FlatConfig::parse_string(text);
        return cfg::initial_from_config(c, kernel);
    };
    InitialSpec zero = build("");
    CHECK(zero.name == "zero");
    CHECK(zero.fn(Point{1.0, 0.0, 0.0}) == 0.0);
    CHECK(zero.sup_abs == 0.0);

    InitialSpec cst = build("initial.kind = const\ninitial.value = -2\n");
    CHECK(cst.fn(Point{5.0, 0.0, 0.0}) == -2.0);
    CHECK(cst.sup_abs == 2.0);

    InitialSpec bump = build("initial.kind = bump\ninitial.height = 2\ninitial.width = 0.7\n");
    CHECK(oracle::rel_err(bump.fn(Point{0.3, 0.0, 0.0}), 2.0 * std::exp(-0.09 / 0.49)) < 1e-14);
    CHECK(bump.sup_abs == 2.0);
    CHECK_THROWS_AS(build("initial.kind = bump\ninitial.width = 0\n"), ConfigError);

    InitialSpec kin = build("initial.kind = kernel\ninitial.s0 = 0.2\n");
    Point x{0.4, 0.0, 0.0};
    CHECK(kin.fn(x) == kernel_density(kernel, 0.2, x));
    CHECK(kin.sup_abs == kernel_density(kernel, 0.2, Point{0.0, 0.0, 0.0}));
    CHECK_THROWS_AS(build("initial.kind = kernel\ninitial.s0 = 0\n"), ConfigError);
    CHECK_THROWS_AS(build("initial.kind = wavelet\n"), ConfigError);
}

TEST_CASE("noise_from_config: stable and discrete families") {
    ExponentPair e{1.3, 1.1, 1.2};
    cfg::FlatConfig st = cfg::FlatConfig::parse_string("noise.alpha = 1.2\nnoise.c = 1\n");
    LevyMarkSpec stable = cfg::noise_from_config(st, e);
    const auto* marks = std::get_if<StableMarks>(&stable.family);
    REQUIRE(marks != nullptr);
    CHECK(marks->alpha == 1.2);
    CHECK(stable.cutoff == 0.1);  // default
    CHECK(stable.drift == 0.0);
    CHECK(stable.p == 1.3);
    CHECK(stable.q == 1.1);

    cfg::FlatConfig disc = cfg::FlatConfig::parse_string(
        "noise.family = discrete\n"
        "noise.atoms = 0.5:2, -0.25:1 ,2:0.5\n"
        "noise.cutoff = 0.3\n");
    LevyMarkSpec discrete = cfg::noise_from_config(disc, e);
    const auto* table = std::get_if<DiscreteMarks>(&discrete.family);
    REQUIRE(table != nullptr);
    REQUIRE(table->atoms.size() == 3);
    CHECK(table->atoms[0].z == 0.5);
    CHECK(table->atoms[0].rate == 2.0);
    CHECK(table->atoms[1].z == -0.25);
    CHECK(table->atoms[2].rate == 0.5);
    CHECK(discrete.cutoff == 0.3);

    cfg::FlatConfig bad = cfg::FlatConfig::parse_string(
        "noise.family = discrete\nnoise.atoms = 0.5;2\n");
    CHECK_THROWS_AS(cfg::noise_from_config(bad, e), ConfigError);
    cfg::FlatConfig unknown = cfg::FlatConfig::parse_string("noise.family = gaussian\n");
    CHECK_THROWS_AS(cfg::noise_from_config(unknown, e), ConfigError);
}

TEST_CASE("box, grid, stopping and ensemble blocks with defaults") {
    cfg::FlatConfig c = cfg::FlatConfig::parse_string(
        "domain.T = 0.5\n"
        "domain.R = 6\n"
        "stopping.level = 4\n"
        "ensemble.n = 32\n"
        "ensemble.master_seed = 123\n"
        "ensemble.workers = 2\n");
    Box box = cfg::box_from_config(c);
    CHECK(box.time_horizon == 0.5);
    CHECK(box.radius == 6.0);
    CHECK(box.dim == 1);  // default

    GridSpec grid = cfg::grid_from_config(c);
    CHECK(grid.time_steps == 20);
    CHECK(grid.sites_per_dim == 121);

    StoppingConfig sc = cfg::stopping_from_config(c, 1.7);
    CHECK(sc.level == 4);
    CHECK(sc.eta == 1.7);  // falls back to the handed-in eta

    EnsembleConfig ens = cfg::ensemble_from_config(c);
    CHECK(ens.realizations == 32);
    CHECK(ens.master_seed == 123);
    CHECK(ens.workers == 2);

    cfg::FlatConfig blank = cfg::FlatConfig::parse_string("");
    CHECK_THROWS_AS(cfg::box_from_config(blank), ConfigError);
    EnsembleConfig dflt = cfg::ensemble_from_config(blank);
    CHECK(dflt.realizations == 256);
    CHECK(dflt.master_seed == 1);
    CHECK(dflt.workers == 1);
}

TEST_CASE("problem_from_config: full assembly passes validation") {
    const std::string text =
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
        "sigma.kind = clamp\n"
        "sigma.cap = 2\n"
        "initial.kind = bump\n"
        "initial.height = 1\n"
        "initial.width = 0.8\n"
        "grid.time_steps = 6\n"
        "grid.sites_per_dim = 41\n";
    cfg::FlatConfig c = cfg::FlatConfig::parse_string(text);
    ProblemSpec problem = cfg::problem_from_config(c);
    CHECK_NOTHROW(validate(problem));
    CHECK(problem.eval_radius == 2.0);
    CHECK(problem.sigma.name == "clamp");
    CHECK(problem.initial.name == "bump");
    CHECK(problem.grid.time_steps == 6);

    cfg::FlatConfig missing = cfg::FlatConfig::parse_string(
        "domain.T = 0.5\ndomain.R = 6\nexponents.p = 1.3\nexponents.q = 1.1\n"
        "exponents.eta = 1.2\nnoise.alpha = 1.2\nnoise.c = 1\n");
    try {
        cfg::problem_from_config(missing);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "missing config key 'domain.R_eval'"));
    }
}
