#pragma once

#include <vector>

#include "spde/common.hpp"

namespace spde {

/// Requested discretization: uniform time levels and a uniform site lattice
/// per coordinate spanning the full noise box.
struct GridSpec {
    int time_steps = 20;
    int sites_per_dim = 121;
};

/// Space-time lattice with one value per node. Levels are time indices;
/// sites are lexicographic over the per-dimension lattice.
struct FieldGrid {
    std::vector<double> times;   ///< K+1 levels, times[0] = 0
    int dim = 1;
    int sites_per_dim = 2;
    double radius = 1.0;         ///< sites span [-radius, radius] per coordinate
    double norm_p = 1.0;         ///< exponent used by ensemble diagnostics
    std::vector<double> values;  ///< levels * n_sites, level-major

    static FieldGrid uniform(double time_horizon, int steps, int dim, int sites_per_dim,
                             double radius, double norm_p);

    int levels() const { return static_cast<int>(times.size()); }
    long n_sites() const;
    double spacing() const { return 2.0 * radius / (sites_per_dim - 1); }
    double site_coord(int i) const { return -radius + i * spacing(); }
    Point site_point(long flat) const;

    double value(int level, long site) const { return values[static_cast<std::size_t>(level) * n_sites() + site]; }
    double& value(int level, long site) { return values[static_cast<std::size_t>(level) * n_sites() + site]; }

    /// Index of the last level strictly before s (predictable left endpoint),
    /// clamped to 0.
    int level_before(double s) const;

    /// Multilinear interpolation at level `level`. Points outside the site
    /// hull (beyond a small rounding slack) raise GuardBandError.
    double interpolate(int level, const Point& x) const;

    bool same_geometry(const FieldGrid& other) const;
};

}  // namespace spde
