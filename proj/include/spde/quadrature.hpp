#pragma once

#include <functional>
#include <vector>

namespace spde::quad {

/// Gauss-Legendre rule on [-1,1]. Nodes/weights are computed once per order
/// and cached; orders up to 64 are supported.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int order);

/// Composite Gauss-Legendre integral of f over [a,b] with `panels` equal
/// panels of `order` points each.
double integrate(const std::function<double(double)>& f, double a, double b,
                 int order, int panels);

/// One-dimensional panel layout for [a,b]: panel width at most `max_width`,
/// at least one panel, capped at `max_panels`.
int panel_count(double a, double b, double max_width, int max_panels);

}  // namespace spde::quad
