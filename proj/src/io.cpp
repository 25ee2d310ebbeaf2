#include "spde/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spde/version.hpp"

namespace spde::io {

namespace {

constexpr char kFieldMagic[5] = {'S', 'P', 'D', 'H', '1'};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u16(std::string& buf, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("truncated field binary");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& tok, const std::string& path) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw IoError("bad numeric field '" + tok + "' in " + path);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_atoms_csv(const std::string& path, const NoiseRealization& real) {
    auto out = open_out(path);
    std::string text = "t";
    for (int i = 0; i < real.box.dim; ++i) text += ",x" + std::to_string(i + 1);
    text += ",z\n";
    for (const NoiseAtom& a : real.atoms) {
        text += format_double(a.t);
        for (int i = 0; i < real.box.dim; ++i) {
            text += ',';
            text += format_double(a.x[i]);
        }
        text += ',';
        text += format_double(a.z);
        text += '\n';
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

NoiseRealization read_atoms_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing header in " + path);
    auto cols = split_csv(line);
    if (cols.size() < 3 || cols.front() != "t" || cols.back() != "z")
        throw IoError("unexpected atom header in " + path);
    int dim = static_cast<int>(cols.size()) - 2;
    if (dim > 3) throw IoError("atom file has more than 3 spatial columns: " + path);

    NoiseRealization real;
    real.box.dim = dim;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto toks = split_csv(line);
        if (toks.size() != cols.size()) throw IoError("ragged row in " + path);
        NoiseAtom a{};
        a.t = parse_double(toks[0], path);
        for (int i = 0; i < dim; ++i) a.x[i] = parse_double(toks[1 + i], path);
        a.z = parse_double(toks[dim + 1], path);
        real.atoms.push_back(a);
    }
    return real;
}

json noise_sidecar(const NoiseRealization& real, const LevyMarkSpec& spec) {
    json j;
    j["spec"] = describe(spec);
    j["box"] = describe(real.box);
    j["seed"] = real.seed;
    j["cutoff"] = real.cutoff;
    j["atom_count"] = real.atoms.size();
    j["compensated"] = real.comp.compensated;
    j["drift_density"] = real.comp.drift_density;
    j["discarded_moment_bound"] = real.comp.discarded_moment_bound;
    j["version"] = kVersion;
    return j;
}

void write_field_csv(const std::string& path, const FieldGrid& grid) {
    auto out = open_out(path);
    std::string text = "t";
    for (int i = 0; i < grid.dim; ++i) text += ",x" + std::to_string(i + 1);
    text += ",y\n";
    const long sites = grid.n_sites();
    for (int k = 0; k < grid.levels(); ++k) {
        for (long s = 0; s < sites; ++s) {
            Point x = grid.site_point(s);
            text += format_double(grid.times[static_cast<std::size_t>(k)]);
            for (int i = 0; i < grid.dim; ++i) {
                text += ',';
                text += format_double(x[i]);
            }
            text += ',';
            text += format_double(grid.value(k, s));
            text += '\n';
        }
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_field_binary(const std::string& path, const FieldGrid& grid) {
    std::string buf;
    buf.append(kFieldMagic, sizeof kFieldMagic);
    put_u8(buf, static_cast<std::uint8_t>(grid.dim));
    put_u16(buf, 0);
    put_u64(buf, static_cast<std::uint64_t>(grid.levels()));
    put_u64(buf, static_cast<std::uint64_t>(grid.sites_per_dim));
    put_f64(buf, grid.radius);
    put_f64(buf, grid.norm_p);
    for (double t : grid.times) put_f64(buf, t);
    for (double v : grid.values) put_f64(buf, v);
    auto out = open_out(path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

FieldGrid read_field_binary(const std::string& path) {
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < sizeof kFieldMagic ||
        std::memcmp(buf.data(), kFieldMagic, sizeof kFieldMagic) != 0)
        throw IoError("bad field binary magic in " + path);

    ByteReader r{buf, sizeof kFieldMagic};
    FieldGrid grid;
    grid.dim = r.u8();
    r.u16();
    auto levels = r.u64();
    grid.sites_per_dim = static_cast<int>(r.u64());
    grid.radius = r.f64();
    grid.norm_p = r.f64();
    if (grid.dim < 1 || grid.dim > 3 || grid.sites_per_dim < 2)
        throw IoError("bad field binary geometry in " + path);
    grid.times.resize(levels);
    for (auto& t : grid.times) t = r.f64();
    grid.values.resize(levels * static_cast<std::size_t>(grid.n_sites()));
    for (auto& v : grid.values) v = r.f64();
    if (r.pos != buf.size()) throw IoError("trailing bytes in " + path);
    return grid;
}

json describe(const KernelSpec& spec) {
    return json{{"rho", spec.rho},
                {"tau", spec.tau},
                {"lambda", spec.lambda},
                {"dim", spec.dim},
                {"norm_const", spec.norm_const}};
}

json describe(const LevyMarkSpec& spec) {
    json j;
    if (const auto* st = std::get_if<StableMarks>(&spec.family)) {
        j["family"] = "stable";
        j["alpha"] = st->alpha;
        j["c"] = st->c;
    } else {
        const auto& disc = std::get<DiscreteMarks>(spec.family);
        j["family"] = "discrete";
        json atoms = json::array();
        for (const MarkAtom& a : disc.atoms) atoms.push_back(json{{"z", a.z}, {"rate", a.rate}});
        j["atoms"] = atoms;
    }
    j["cutoff"] = spec.cutoff;
    j["drift"] = spec.drift;
    j["p"] = spec.p;
    j["q"] = spec.q;
    return j;
}

json describe(const Box& box) {
    return json{{"time_horizon", box.time_horizon}, {"radius", box.radius}, {"dim", box.dim}};
}

json describe(const SolveDiagnostics& diag) {
    json j;
    j["increments"] = diag.increments;
    j["converged_iteration"] = diag.converged_iteration;
    j["iterations_run"] = diag.iterations_run;
    j["converged"] = diag.converged;
    j["guard_mass_bound"] = diag.guard_mass_bound;
    j["initial_boundary_loss"] = diag.initial_boundary_loss;
    j["atoms_total"] = diag.atoms_total;
    j["atoms_retained"] = diag.atoms_retained;
    if (diag.applied_stopping_time)
        j["applied_stopping_time"] = *diag.applied_stopping_time;
    else
        j["applied_stopping_time"] = nullptr;
    return j;
}

json describe(const Estimate& est) {
    return json{{"value", est.value}, {"std_error", est.std_error}, {"count", est.count}};
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
    auto out = open_out(path);
    std::string text = "study,param,seed,value\n";
    for (const StudyRow& r : rows) {
        text += r.study;
        text += ',';
        text += r.param;
        text += ',';
        text += std::to_string(r.seed);
        text += ',';
        text += format_double(r.value);
        text += '\n';
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

json study_json(const TruncationStudy& study) {
    json j;
    j["schema_version"] = kStudySchemaVersion;
    j["study"] = "truncation";
    j["mode"] = study.mode == TruncationMode::jump_size ? "jump_size" : "support";
    j["levels"] = study.levels;
    json gaps = json::array();
    for (const Estimate& e : study.ensemble_gap) gaps.push_back(describe(e));
    j["ensemble_gap"] = gaps;
    j["seeds"] = study.seed_gap.size();
    j["per_seed_monotone"] = study.per_seed_monotone;
    j["final_gap_zero"] = study.final_gap_zero;
    return j;
}

json study_json(const PicardStudy& study) {
    json j;
    j["schema_version"] = kStudySchemaVersion;
    j["study"] = "picard";
    j["iterations"] = study.iterations;
    json inc = json::array();
    for (const Estimate& e : study.ensemble_increment) inc.push_back(describe(e));
    j["ensemble_increment"] = inc;
    j["seeds"] = study.seed_increment.size();
    j["fitted_log_c"] = study.fitted_log_c;
    j["ensemble_eventually_decreasing"] = study.ensemble_eventually_decreasing;
    j["final_ensemble_increment"] = study.final_ensemble_increment;
    return j;
}

json study_json(const MomentStudy& study) {
    json j;
    j["schema_version"] = kStudySchemaVersion;
    j["study"] = "moment";
    j["moment_exponent"] = study.moment_exponent;
    j["growth_exponent"] = study.growth_exponent;
    j["slack"] = study.slack;
    j["radii"] = study.radii;
    json ladder = json::array();
    for (const Estimate& e : study.ladder) ladder.push_back(describe(e));
    j["ladder"] = ladder;
    j["seeds"] = study.seed_sup.size();
    j["bounded"] = study.bounded;
    return j;
}

json study_json(const StoppingStudy& study) {
    json j;
    j["schema_version"] = kStudySchemaVersion;
    j["study"] = "stopping";
    j["eta"] = study.eta;
    json pts = json::array();
    for (const StoppingPoint& p : study.points) {
        pts.push_back(json{{"level", p.level},
                           {"empirical_prob", p.empirical_prob},
                           {"exact_prob", p.exact_prob},
                           {"intensity", p.intensity},
                           {"shell_sum_bound", p.shell_sum_bound}});
    }
    j["points"] = pts;
    j["seeds"] = study.taus.size();
    j["monotonicity_violations"] = study.monotonicity_violations;
    j["strictly_decreasing"] = study.strictly_decreasing;
    return j;
}

std::vector<StudyRow> study_rows(const TruncationStudy& study) {
    std::vector<StudyRow> rows;
    for (std::size_t l = 0; l < study.levels.size(); ++l) {
        const std::string param = format_double(study.levels[l]);
        rows.push_back({"truncation", param, -1, study.ensemble_gap[l].value});
        for (std::size_t s = 0; s < study.seed_gap.size(); ++s)
            rows.push_back({"truncation", param, static_cast<long>(s), study.seed_gap[s][l]});
    }
    return rows;
}

std::vector<StudyRow> study_rows(const PicardStudy& study) {
    std::vector<StudyRow> rows;
    for (int n = 0; n < study.iterations; ++n) {
        const std::string param = std::to_string(n + 1);
        rows.push_back({"picard", param, -1, study.ensemble_increment[static_cast<std::size_t>(n)].value});
        for (std::size_t s = 0; s < study.seed_increment.size(); ++s)
            rows.push_back({"picard", param, static_cast<long>(s),
                            study.seed_increment[s][static_cast<std::size_t>(n)]});
    }
    return rows;
}

std::vector<StudyRow> study_rows(const MomentStudy& study) {
    std::vector<StudyRow> rows;
    for (std::size_t b = 0; b < study.radii.size(); ++b) {
        const std::string param = format_double(study.radii[b]);
        rows.push_back({"moment", param, -1, study.ladder[b].value});
        for (std::size_t s = 0; s < study.seed_sup.size(); ++s)
            rows.push_back({"moment", param, static_cast<long>(s), study.seed_sup[s][b]});
    }
    return rows;
}

std::vector<StudyRow> study_rows(const StoppingStudy& study) {
    std::vector<StudyRow> rows;
    for (std::size_t l = 0; l < study.points.size(); ++l) {
        const StoppingPoint& p = study.points[l];
        const std::string param = std::to_string(p.level);
        rows.push_back({"stopping", param, -1, p.empirical_prob});
        rows.push_back({"stopping_exact", param, -1, p.exact_prob});
        rows.push_back({"stopping_bound", param, -1, p.shell_sum_bound});
        for (std::size_t s = 0; s < study.taus.size(); ++s)
            rows.push_back({"stopping_tau", param, static_cast<long>(s), study.taus[s][l]});
    }
    return rows;
}

void write_json(const std::string& path, const json& j) {
    auto out = open_out(path);
    const std::string text = j.dump(2) + "\n";
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace spde::io
