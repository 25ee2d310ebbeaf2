#include "spde/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace spde::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(value);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double parse_double_token(const std::string& key, const std::string& tok) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + tok + "' is not a number");
    return v;
}

long parse_int_token(const std::string& key, const std::string& tok) {
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + tok + "' is not an integer");
    return v;
}

}  // namespace

FlatConfig FlatConfig::parse_string(const std::string& text) {
    FlatConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key.find(' ') != std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
        for (const auto& [k, v] : cfg.entries_)
            if (k == key)
                throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
        cfg.entries_.emplace_back(std::move(key), std::move(value));
    }
    return cfg;
}

FlatConfig FlatConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

const std::string* FlatConfig::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) {
            used_.insert(key);
            return &v;
        }
    return nullptr;
}

bool FlatConfig::has(const std::string& key) const { return find(key) != nullptr; }

std::string FlatConfig::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ConfigError("missing config key '" + key + "'");
    return *v;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double FlatConfig::get_double(const std::string& key) const {
    return parse_double_token(key, get_string(key));
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_double_token(key, *v) : fallback;
}

long FlatConfig::get_int(const std::string& key) const {
    return parse_int_token(key, get_string(key));
}

long FlatConfig::get_int(const std::string& key, long fallback) const {
    const std::string* v = find(key);
    return v ? parse_int_token(key, *v) : fallback;
}

std::uint64_t FlatConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v->c_str(), &end, 10);
    if (end == v->c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + *v + "' is not an unsigned integer");
    return static_cast<std::uint64_t>(x);
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + *v + "'");
}

std::vector<double> FlatConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : split_list(get_string(key)))
        out.push_back(parse_double_token(key, tok));
    return out;
}

std::vector<long> FlatConfig::get_int_list(const std::string& key) const {
    std::vector<long> out;
    for (const std::string& tok : split_list(get_string(key)))
        out.push_back(parse_int_token(key, tok));
    return out;
}

void FlatConfig::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
        if (k == key) {
            v = value;
            return;
        }
    entries_.emplace_back(key, value);
}

std::string FlatConfig::echo() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::vector<std::string> FlatConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

KernelSpec kernel_from_config(const FlatConfig& cfg, int dim) {
    const std::string family = cfg.get_string("kernel.family", "heat");
    if (family == "heat") return KernelSpec::heat(dim);
    if (family == "parabolic") {
        int m = static_cast<int>(cfg.get_int("kernel.m"));
        if (cfg.has("kernel.lambda"))
            return KernelSpec::parabolic(m, dim, cfg.get_double("kernel.lambda"));
        return KernelSpec::parabolic(m, dim);
    }
    if (family == "general")
        return KernelSpec(cfg.get_double("kernel.rho"), cfg.get_double("kernel.tau"),
                          cfg.get_double("kernel.lambda"), dim);
    throw ConfigError("kernel.family must be heat, parabolic or general, got '" + family + "'");
}

ExponentPair exponents_from_config(const FlatConfig& cfg) {
    return ExponentPair{cfg.get_double("exponents.p"), cfg.get_double("exponents.q"),
                        cfg.get_double("exponents.eta")};
}

LevyMarkSpec noise_from_config(const FlatConfig& cfg, const ExponentPair& exponents) {
    const std::string family = cfg.get_string("noise.family", "stable");
    const double cutoff = cfg.get_double("noise.cutoff", 0.1);
    const double drift = cfg.get_double("noise.drift", 0.0);
    if (family == "stable")
        return LevyMarkSpec::stable(cfg.get_double("noise.alpha"), cfg.get_double("noise.c"),
                                    cutoff, exponents.p, exponents.q, drift);
    if (family == "discrete") {
        std::vector<MarkAtom> atoms;
        const std::string raw = cfg.get_string("noise.atoms", "");
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = [&] {
                std::size_t a = item.find_first_not_of(" \t");
                if (a == std::string::npos) return std::string();
                std::size_t b = item.find_last_not_of(" \t");
                return item.substr(a, b - a + 1);
            }();
            if (item.empty()) continue;
            auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError("noise.atoms entries must look like z:rate, got '" + item + "'");
            atoms.push_back(MarkAtom{parse_double_token("noise.atoms", item.substr(0, colon)),
                                     parse_double_token("noise.atoms", item.substr(colon + 1))});
        }
        return LevyMarkSpec::discrete(std::move(atoms), cutoff, exponents.p, exponents.q, drift);
    }
    throw ConfigError("noise.family must be stable or discrete, got '" + family + "'");
}

SigmaSpec sigma_from_config(const FlatConfig& cfg) {
    const std::string kind = cfg.get_string("sigma.kind", "one");
    SigmaSpec sigma;
    sigma.name = kind;
    if (kind == "one") {
        sigma.fn = [](double) { return 1.0; };
        sigma.lipschitz = 0.0;
        sigma.growth = GrowthDecl{1.0, 0.0};
    } else if (kind == "zero") {
        sigma.fn = [](double) { return 0.0; };
        sigma.lipschitz = 0.0;
        sigma.growth = GrowthDecl{0.0, 0.0};
    } else if (kind == "identity") {
        sigma.fn = [](double y) { return y; };
        sigma.lipschitz = 1.0;
        sigma.growth = GrowthDecl{1.0, 1.0};
    } else if (kind == "clamp") {
        const double cap = cfg.get_double("sigma.cap", 1.0);
        if (cap <= 0.0) throw ConfigError("sigma.cap must be positive");
        sigma.fn = [cap](double y) { return std::clamp(y, -cap, cap); };
        sigma.lipschitz = 1.0;
        sigma.growth = GrowthDecl{cap, 0.0};
    } else if (kind == "power") {
        const double gamma = cfg.get_double("sigma.gamma");
        if (gamma < 0.0 || gamma > 1.0)
            throw ConfigError("sigma.gamma must lie in [0, 1]");
        sigma.fn = [gamma](double y) { return std::pow(1.0 + y * y, 0.5 * gamma); };
        sigma.lipschitz = std::max(gamma, 1e-12);
        sigma.growth = GrowthDecl{1.0, gamma};
    } else {
        throw ConfigError("sigma.kind must be one, zero, identity, clamp or power, got '" + kind +
                          "'");
    }
    return sigma;
}

InitialSpec initial_from_config(const FlatConfig& cfg, const KernelSpec& kernel) {
    const std::string kind = cfg.get_string("initial.kind", "zero");
    InitialSpec initial;
    initial.name = kind;
    if (kind == "zero") {
        initial.fn = [](const Point&) { return 0.0; };
        initial.sup_abs = 0.0;
    } else if (kind == "const") {
        const double value = cfg.get_double("initial.value");
        initial.fn = [value](const Point&) { return value; };
        initial.sup_abs = std::abs(value);
    } else if (kind == "bump") {
        const double height = cfg.get_double("initial.height", 1.0);
        const double width = cfg.get_double("initial.width", 0.5);
        if (width <= 0.0) throw ConfigError("initial.width must be positive");
        const int dim = kernel.dim;
        initial.fn = [height, width, dim](const Point& x) {
            double r = norm2(x, dim);
            return height * std::exp(-(r * r) / (width * width));
        };
        initial.sup_abs = std::abs(height);
    } else if (kind == "kernel") {
        const double s0 = cfg.get_double("initial.s0");
        if (s0 <= 0.0) throw ConfigError("initial.s0 must be positive");
        KernelSpec k = kernel;
        initial.fn = [k, s0](const Point& x) { return kernel_density(k, s0, x); };
        initial.sup_abs = kernel_density(kernel, s0, Point{0.0, 0.0, 0.0});
    } else {
        throw ConfigError("initial.kind must be zero, const, bump or kernel, got '" + kind + "'");
    }
    return initial;
}

Box box_from_config(const FlatConfig& cfg) {
    Box box;
    box.time_horizon = cfg.get_double("domain.T");
    box.radius = cfg.get_double("domain.R");
    box.dim = static_cast<int>(cfg.get_int("domain.dim", 1));
    return box;
}

GridSpec grid_from_config(const FlatConfig& cfg) {
    GridSpec grid;
    grid.time_steps = static_cast<int>(cfg.get_int("grid.time_steps", grid.time_steps));
    grid.sites_per_dim = static_cast<int>(cfg.get_int("grid.sites_per_dim", grid.sites_per_dim));
    return grid;
}

ProblemSpec problem_from_config(const FlatConfig& cfg) {
    const Box box = box_from_config(cfg);
    const KernelSpec kernel = kernel_from_config(cfg, box.dim);
    const ExponentPair exponents = exponents_from_config(cfg);
    return ProblemSpec{kernel,
                       sigma_from_config(cfg),
                       initial_from_config(cfg, kernel),
                       noise_from_config(cfg, exponents),
                       box,
                       cfg.get_double("domain.R_eval"),
                       exponents,
                       grid_from_config(cfg)};
}

StoppingConfig stopping_from_config(const FlatConfig& cfg, double default_eta) {
    StoppingConfig sc;
    sc.level = static_cast<int>(cfg.get_int("stopping.level", 1));
    sc.eta = cfg.get_double("stopping.eta", default_eta);
    return sc;
}

EnsembleConfig ensemble_from_config(const FlatConfig& cfg) {
    EnsembleConfig ens;
    ens.realizations = static_cast<int>(cfg.get_int("ensemble.n", ens.realizations));
    ens.master_seed = cfg.get_u64("ensemble.master_seed", 1);
    ens.workers = static_cast<int>(cfg.get_int("ensemble.workers", 1));
    return ens;
}

}  // namespace spde::cfg
