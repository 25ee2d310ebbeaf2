#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spde {

/// Spatial point, up to 3 dimensions. Unused coordinates stay zero.
using Point = std::array<double, 3>;

inline double norm2(const Point& x, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

inline double norm_inf(const Point& x, int dim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

/// Simulation window [0,T] x [-R,R]^dim.
struct Box {
    double time_horizon = 1.0;
    double radius = 1.0;
    int dim = 1;

    double volume() const {
        double v = time_horizon;
        for (int i = 0; i < dim; ++i) v *= 2.0 * radius;
        return v;
    }
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GuardBandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when Picard iteration does not reach tolerance; carries the
/// increment trace so callers can report it instead of a partial field.
struct SolveError : std::runtime_error {
    std::vector<double> increments;
    SolveError(const std::string& msg, std::vector<double> trace)
        : std::runtime_error(msg), increments(std::move(trace)) {}
};

/// Kahan compensated accumulator. Summation order is fixed by the caller.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace spde
