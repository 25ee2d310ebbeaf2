#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spde/estimators.hpp"
#include "spde/solver.hpp"

namespace spde::cfg {

/// Flat `key = value` text with dotted sections, `#` comments and one entry
/// per line. Entry order is preserved so `echo()` is a stable canonical form
/// for manifests. Getters record which keys were consumed; `unused_keys()`
/// reports likely typos.
class FlatConfig {
public:
    static FlatConfig parse_file(const std::string& path);
    static FlatConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<long> get_int_list(const std::string& key) const;

    /// Inserts or overwrites; used for command-line overrides so that the
    /// echoed manifest reflects the effective configuration.
    void set(const std::string& key, const std::string& value);

    std::string echo() const;
    std::vector<std::string> unused_keys() const;

private:
    const std::string* find(const std::string& key) const;

    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::set<std::string> used_;
};

/// kernel.family = heat | parabolic | general
///   parabolic: kernel.m, optional kernel.lambda
///   general:   kernel.rho, kernel.tau, kernel.lambda
KernelSpec kernel_from_config(const FlatConfig& cfg, int dim);

/// exponents.p, exponents.q, exponents.eta
ExponentPair exponents_from_config(const FlatConfig& cfg);

/// noise.family = stable (noise.alpha, noise.c) | discrete (noise.atoms as
/// comma-separated z:rate pairs); noise.cutoff, optional noise.drift.
LevyMarkSpec noise_from_config(const FlatConfig& cfg, const ExponentPair& exponents);

/// sigma.kind = one | zero | identity | clamp (sigma.cap) | power (sigma.gamma)
SigmaSpec sigma_from_config(const FlatConfig& cfg);

/// initial.kind = zero | const (initial.value) | bump (initial.height,
/// initial.width) | kernel (initial.s0: the kernel density at that time)
InitialSpec initial_from_config(const FlatConfig& cfg, const KernelSpec& kernel);

/// domain.T, domain.R, domain.dim
Box box_from_config(const FlatConfig& cfg);

/// grid.time_steps, grid.sites_per_dim
GridSpec grid_from_config(const FlatConfig& cfg);

/// Assembles the full problem; requires domain.R_eval.
ProblemSpec problem_from_config(const FlatConfig& cfg);

/// stopping.level (default 1), stopping.eta (default: the handed-in eta)
StoppingConfig stopping_from_config(const FlatConfig& cfg, double default_eta);

/// ensemble.n, ensemble.master_seed
EnsembleConfig ensemble_from_config(const FlatConfig& cfg);

}  // namespace spde::cfg
