#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "spde/common.hpp"

namespace spde {

/// Jump-size regions used by the moment conditions: |z| <= 1 vs |z| > 1.
enum class JumpRegion { small_jumps, big_jumps };

/// Symmetric alpha-stable jump intensity c |z|^(-1-alpha) dz on R \ {0}.
struct StableMarks {
    double alpha;
    double c;
};

/// One row of a discrete mark table: an atom at z with the given rate.
struct MarkAtom {
    double z;
    double rate;
};

/// Finite discrete jump intensity sum rate_k * delta_{z_k}.
struct DiscreteMarks {
    std::vector<MarkAtom> atoms;
};

/// Mark law of the driving noise together with the sampling cutoff, the
/// deterministic drift density and the declared moment exponents.
///
/// Jumps below `cutoff` are not sampled. With p >= 1 the retained band
/// [cutoff, 1] enters in compensated form, so the compensator mean of that
/// band is folded into the effective drift. With p < 1 the noise is a raw
/// Poisson sum; that convention requires drift == small-jump mean so that
/// no deterministic part remains.
struct LevyMarkSpec {
    std::variant<StableMarks, DiscreteMarks> family;
    double cutoff = 0.1;
    double drift = 0.0;
    double p = 1.0;
    double q = 1.0;

    static LevyMarkSpec stable(double alpha, double c, double cutoff, double p, double q,
                               double drift = 0.0);
    static LevyMarkSpec discrete(std::vector<MarkAtom> atoms, double cutoff, double p, double q,
                                 double drift = 0.0);

    /// Throws ValidationError when the declared exponents violate the moment
    /// conditions, the cutoff is outside (0,1], or the drift convention for
    /// p < 1 is broken.
    void validate() const;
};

/// integral of |z|^e over the region. +infinity is a legitimate value.
double moment_integral(const LevyMarkSpec& spec, double e, JumpRegion region);

/// intensity mass of {|z| >= threshold}; threshold must be positive.
double tail_mass(const LevyMarkSpec& spec, double threshold);

/// intensity mass of {|z| > threshold} (strict version, differs from
/// tail_mass only for discrete tables with an atom at the threshold).
double strict_tail_mass(const LevyMarkSpec& spec, double threshold);

/// integral of z over cutoff <= |z| <= 1 (the compensator mean of the
/// retained small-jump band). Zero for symmetric families.
double band_mean(const LevyMarkSpec& spec);

/// integral of z over |z| <= 1; finite whenever the small-jump p-moment is
/// finite with p <= 1.
double small_jump_mean(const LevyMarkSpec& spec);

/// Upper bound on the p-th moment mass discarded below the cutoff.
double discarded_moment_bound(const LevyMarkSpec& spec);

/// Deterministic part and bookkeeping that sampling applied to a realization.
struct Compensation {
    bool compensated = false;     ///< p >= 1 convention in force
    double band_mean = 0.0;       ///< compensator mean of [cutoff, 1]
    double drift_density = 0.0;   ///< effective deterministic density
    double discarded_moment_bound = 0.0;
};

struct NoiseAtom {
    double t;
    Point x;
    double z;
};

/// One sampled noise realization on a space-time box. Atoms are stored in
/// generation order; `seed` is the exact engine seed that produced them.
struct NoiseRealization {
    std::vector<NoiseAtom> atoms;
    Box box;
    double cutoff = 0.0;
    std::uint64_t seed = 0;
    Compensation comp;
};

/// Draws the atom cloud: a Poisson number of atoms with mean
/// T * (2R)^d * tail_mass(cutoff), uniform positions, marks by inverse CDF.
/// Draw order (count; per atom t, x_1..x_d, mark) is part of the contract.
NoiseRealization sample_noise(const LevyMarkSpec& spec, const Box& box, std::uint64_t seed);

/// Keeps small jumps (|z| <= 1) and big jumps up to |z| <= level.
NoiseRealization truncate_jump_size(const NoiseRealization& real, double level);

/// Removes big jumps (|z| > 1) located outside [-radius, radius]^d.
NoiseRealization restrict_support(const NoiseRealization& real, double radius);

/// Adaptive truncation threshold level * (1 + |x|^eta).
struct StoppingConfig {
    int level = 1;      ///< N >= 1
    double eta = 1.0;   ///< spatial growth exponent
};

/// 1 + |x|^eta with the Euclidean norm.
double threshold_weight(const Point& x, int dim, double eta);

/// Keeps atoms with |z| <= level * threshold_weight(x); retention is
/// non-strict at equality.
NoiseRealization truncate_adaptive(const NoiseRealization& real, const StoppingConfig& cfg);

/// First atom time exceeding the adaptive threshold, or nullopt when no atom
/// in the window exceeds it (the "beyond the window" sentinel).
std::optional<double> stopping_time(const NoiseRealization& real, const StoppingConfig& cfg);

/// Radius r(n) such that the centered ball has Lebesgue measure n; the
/// successive shells between r(n-1) and r(n) all have measure one.
double shell_radius(int n, int dim);

}  // namespace spde
