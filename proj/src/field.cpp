#include "spde/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spde {

FieldGrid FieldGrid::uniform(double time_horizon, int steps, int dim, int sites_per_dim,
                             double radius, double norm_p) {
    if (!(time_horizon >= 0.0)) throw std::invalid_argument("FieldGrid: negative horizon");
    if (steps < 1) throw std::invalid_argument("FieldGrid: need at least one time step");
    if (dim < 1 || dim > 3) throw std::invalid_argument("FieldGrid: dim must be 1, 2 or 3");
    if (sites_per_dim < 2) throw std::invalid_argument("FieldGrid: need at least two sites per dim");
    if (!(radius > 0.0)) throw std::invalid_argument("FieldGrid: radius must be positive");

    FieldGrid grid;
    grid.dim = dim;
    grid.sites_per_dim = sites_per_dim;
    grid.radius = radius;
    grid.norm_p = norm_p;
    grid.times.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) grid.times[k] = time_horizon * k / steps;
    grid.values.assign(static_cast<std::size_t>(steps + 1) * grid.n_sites(), 0.0);
    return grid;
}

long FieldGrid::n_sites() const {
    long n = 1;
    for (int i = 0; i < dim; ++i) n *= sites_per_dim;
    return n;
}

Point FieldGrid::site_point(long flat) const {
    Point x{0.0, 0.0, 0.0};
    for (int i = dim - 1; i >= 0; --i) {
        x[i] = site_coord(static_cast<int>(flat % sites_per_dim));
        flat /= sites_per_dim;
    }
    return x;
}

int FieldGrid::level_before(double s) const {
    auto it = std::lower_bound(times.begin(), times.end(), s);
    long idx = static_cast<long>(it - times.begin()) - 1;
    return idx < 0 ? 0 : static_cast<int>(idx);
}

double FieldGrid::interpolate(int level, const Point& x) const {
    const double dx = spacing();
    const double slack = 1e-9 * (1.0 + radius);
    int cell[3] = {0, 0, 0};
    double w[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) {
        if (x[i] < -radius - slack || x[i] > radius + slack) {
            std::ostringstream msg;
            msg << "interpolate: coordinate " << i << " = " << x[i]
                << " outside the site hull [-" << radius << ", " << radius << "]";
            throw GuardBandError(msg.str());
        }
        double u = (x[i] + radius) / dx;
        int c = static_cast<int>(std::floor(u));
        c = std::clamp(c, 0, sites_per_dim - 2);
        cell[i] = c;
        w[i] = std::clamp(u - c, 0.0, 1.0);
    }
    double acc = 0.0;
    int corners = 1 << dim;
    for (int m = 0; m < corners; ++m) {
        double weight = 1.0;
        long flat = 0;
        for (int i = 0; i < dim; ++i) {
            int hi = (m >> i) & 1;
            weight *= hi ? w[i] : 1.0 - w[i];
            flat = flat * sites_per_dim + (cell[i] + hi);
        }
        acc += weight * value(level, flat);
    }
    return acc;
}

bool FieldGrid::same_geometry(const FieldGrid& other) const {
    return dim == other.dim && sites_per_dim == other.sites_per_dim &&
           radius == other.radius && times == other.times;
}

}  // namespace spde
