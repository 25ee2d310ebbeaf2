#pragma once

#include <span>
#include <vector>

#include "spde/solver.hpp"

namespace spde {

/// Ensemble layout shared by all studies. Realization i always uses
/// realization_seed(master_seed, i); aggregation order is the seed order, so
/// results do not depend on `workers`.
struct EnsembleConfig {
    int realizations = 256;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;  ///< bootstrap standard error (200 resamples)
    int count = 0;
};

/// Empirical space-time moment norm over an ensemble of fields on one
/// geometry: max over grid nodes with t <= horizon and |x|_inf <= radius of
/// (mean over realizations of |Y|^p)^(1/max(p,1)).
Estimate empirical_bp_norm(std::span<const FieldGrid> fields, double p, double horizon,
                           double radius);

enum class TruncationMode { jump_size, support };

struct TruncationStudy {
    TruncationMode mode = TruncationMode::jump_size;
    std::vector<double> levels;
    std::vector<Estimate> ensemble_gap;          ///< per level, coupled ensemble norm
    std::vector<std::vector<double>> seed_gap;   ///< [seed][level] sup-node gap
    bool per_seed_monotone = false;              ///< gaps non-increasing on every seed
    bool final_gap_zero = false;                 ///< every seed exactly 0 at the last level
};

/// Couples, per seed, the reference solve (adaptive truncation only) with
/// solves of the additionally truncated cloud at each level of `levels`.
TruncationStudy truncation_convergence_study(const ProblemSpec& problem,
                                             const StoppingConfig& cfg, TruncationMode mode,
                                             std::vector<double> levels,
                                             const EnsembleConfig& ensemble,
                                             double tol = 1e-6, int max_iter = 50);

struct PicardStudy {
    int iterations = 0;
    std::vector<Estimate> ensemble_increment;      ///< per n, norm over the eval box
    std::vector<std::vector<double>> seed_increment;  ///< [seed][n] sup-node increment
    double fitted_log_c = 0.0;   ///< least-squares fit of log C against the decay envelope
    bool ensemble_eventually_decreasing = false;
    double final_ensemble_increment = 0.0;
};

PicardStudy picard_decay_study(const ProblemSpec& problem, const StoppingConfig& cfg,
                               int iterations, const EnsembleConfig& ensemble);

struct MomentStudy {
    double moment_exponent = 0.0;          ///< q
    double growth_exponent = 0.0;          ///< declared sigma growth
    double slack = 0.0;
    std::vector<double> radii;
    std::vector<Estimate> ladder;          ///< sup over box of mean |Y|^q
    std::vector<std::vector<double>> seed_sup;  ///< [seed][box] sup |Y_i|^q
    bool bounded = false;                  ///< PASS verdict
};

/// Estimates sup_x E|Y(t,x)|^q on a nested ladder of evaluation boxes and
/// passes when the top of the ladder has saturated (relative increase between
/// the two largest boxes below `slack`). Refuses configurations whose
/// declared sigma growth exponent exceeds q/p.
MomentStudy moment_growth_check(const ProblemSpec& problem, const StoppingConfig& cfg,
                                std::vector<double> radii, const EnsembleConfig& ensemble,
                                double slack = 0.25, double tol = 1e-6, int max_iter = 50);

struct StoppingPoint {
    int level = 0;
    double empirical_prob = 0.0;   ///< fraction of seeds with tau <= T
    double exact_prob = 0.0;       ///< 1 - exp(-intensity): super-threshold atoms are Poisson
    double intensity = 0.0;        ///< T * integral over the box of mass{|z| > N w(x)}
    double shell_sum_bound = 0.0;  ///< unit-measure shell bound truncated to the box
};

struct StoppingStudy {
    double eta = 0.0;
    std::vector<StoppingPoint> points;
    std::vector<std::vector<double>> taus;  ///< [seed][level], +inf for the sentinel
    long monotonicity_violations = 0;       ///< pathwise tau(N) decreasing in N
    bool strictly_decreasing = false;       ///< empirical probs strictly decreasing
};

StoppingStudy stopping_time_study(const LevyMarkSpec& spec, const Box& box,
                                  std::vector<int> levels, double eta,
                                  const EnsembleConfig& ensemble);

}  // namespace spde
