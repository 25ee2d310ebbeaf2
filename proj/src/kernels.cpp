#include "spde/kernels.hpp"

#include <cmath>
#include <limits>

#include "spde/quadrature.hpp"

namespace spde {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_kernel_params(double rho, double tau, double lambda, int dim) {
    if (!(rho > 0.0)) throw std::invalid_argument("KernelSpec: rho must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("KernelSpec: tau must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("KernelSpec: lambda must be positive");
    if (dim < 1 || dim > 3) throw std::invalid_argument("KernelSpec: dim must be 1, 2 or 3");
}
}  // namespace

double normalization_constant(double rho, double tau, double lambda, int dim) {
    check_kernel_params(rho, tau, lambda, dim);
    double d = static_cast<double>(dim);
    // K = rho * lambda^(d/rho) * Gamma(d/2) / (2 pi^(d/2) Gamma(d/rho))
    double log_k = std::log(rho) + (d / rho) * std::log(lambda) + std::lgamma(d / 2.0) -
                   std::log(2.0) - (d / 2.0) * std::log(kPi) - std::lgamma(d / rho);
    return std::exp(log_k);
}

KernelSpec::KernelSpec(double rho_, double tau_, double lambda_, int dim_)
    : rho(rho_), tau(tau_), lambda(lambda_), dim(dim_),
      norm_const(normalization_constant(rho_, tau_, lambda_, dim_)) {}

KernelSpec KernelSpec::heat(int dim) { return KernelSpec(2.0, 1.0, 0.25, dim); }

KernelSpec KernelSpec::parabolic(int m, int dim, double lambda) {
    if (m < 1) throw std::invalid_argument("KernelSpec::parabolic: order must be >= 1");
    double mm = static_cast<double>(m);
    return KernelSpec(2.0 * mm / (2.0 * mm - 1.0), 1.0 / (2.0 * mm - 1.0), lambda, dim);
}

double kernel_density(const KernelSpec& spec, double t, const Point& x) {
    if (!(t > 0.0)) return 0.0;
    double r = norm2(x, spec.dim);
    double arg = spec.lambda * std::pow(r, spec.rho) / std::pow(t, spec.tau);
    return spec.norm_const * std::pow(t, -spec.tau * spec.dim / spec.rho) * std::exp(-arg);
}

double PowerRescaling::prefactor(double t) const {
    return coeff * std::pow(t, t_exponent);
}

PowerRescaling power_rescaling(const KernelSpec& spec, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("power_rescaling: p must be positive");
    KernelSpec rescaled(spec.rho, spec.tau, p * spec.lambda, spec.dim);
    double coeff = std::exp(p * std::log(spec.norm_const) - std::log(rescaled.norm_const));
    double t_exponent = -(p - 1.0) * spec.tau * spec.dim / spec.rho;
    return PowerRescaling{coeff, t_exponent, rescaled};
}

double kernel_lp_norm(const KernelSpec& spec, double p, double time_horizon) {
    if (!(p > 0.0)) throw std::invalid_argument("kernel_lp_norm: p must be positive");
    if (!(time_horizon >= 0.0)) throw std::invalid_argument("kernel_lp_norm: negative horizon");
    double a = (p - 1.0) * spec.tau * spec.dim / spec.rho;
    if (a >= 1.0) return kInf;
    PowerRescaling rs = power_rescaling(spec, p);
    // The rescaled kernel integrates to one in space, so only the time
    // prefactor survives: integral of coeff * t^(-a) over (0, T].
    return rs.coeff * std::pow(time_horizon, 1.0 - a) / (1.0 - a);
}

double gaussian_abs_moment(double variance, double p) {
    if (!(variance > 0.0)) throw std::invalid_argument("gaussian_abs_moment: variance must be positive");
    if (!(p > -1.0)) throw std::invalid_argument("gaussian_abs_moment: requires p > -1");
    double log_m = 0.5 * p * std::log(2.0 * variance) - 0.5 * std::log(kPi) +
                   std::lgamma(0.5 * (1.0 + p));
    return std::exp(log_m);
}

double iterated_time_integral(double t, double a, int n) {
    if (!(a > -1.0)) throw std::invalid_argument("iterated_time_integral: requires a > -1");
    if (n < 1) throw std::invalid_argument("iterated_time_integral: n must be >= 1");
    if (!(t >= 0.0)) throw std::invalid_argument("iterated_time_integral: negative t");
    if (t == 0.0) return 0.0;
    double nn = static_cast<double>(n);
    double log_v = nn * std::lgamma(1.0 + a) - std::lgamma(1.0 + (1.0 + a) * nn) +
                   nn * (1.0 + a) * std::log(t);
    return std::exp(log_v);
}

double admissible_threshold(double p, double rho, double tau, double dim) {
    return p / (1.0 + tau * (1.0 + rho / (tau * dim) - p));
}

AdmissibilityReport admissible(double p, double q, const KernelSpec& spec) {
    if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("admissible: exponents must be positive");
    double d = static_cast<double>(spec.dim);
    double p_upper = 1.0 + spec.rho / (spec.tau * d);
    double q_lower = admissible_threshold(p, spec.rho, spec.tau, d);
    bool ok = (p < p_upper) && (q > q_lower) && (q <= p);
    return AdmissibilityReport{ok, p_upper, q_lower};
}

FeasibilityReport exponent_feasible(const ExponentPair& e, const KernelSpec& spec) {
    double d = static_cast<double>(spec.dim);
    double eta_min = d / e.q;
    double a = 1.0 - (e.p - 1.0) * spec.tau * d / spec.rho;
    double slack = a - e.eta * (e.p - e.q) / spec.rho;
    bool ok = (e.eta > eta_min) && (a > 0.0) && (slack > 0.0);
    return FeasibilityReport{ok, eta_min, slack};
}

double picard_decay_log(int n, double log_c, const ExponentPair& e, const KernelSpec& spec) {
    if (n < 0) throw std::invalid_argument("picard_decay_log: n must be >= 0");
    if (!(e.q <= e.p)) throw std::invalid_argument("picard_decay_log: requires q <= p");
    double d = static_cast<double>(spec.dim);
    double a = 1.0 - (e.p - 1.0) * spec.tau * d / spec.rho;
    if (!(a > 0.0))
        throw std::invalid_argument("picard_decay_log: p outside the admissible range");
    double nn = static_cast<double>(n);
    double head = (d + nn * e.eta * (e.p - e.q)) / spec.rho;
    return nn * log_c + std::lgamma(head) + nn * std::lgamma(a) - std::lgamma(1.0 + a * nn);
}

double picard_decay_bound(int n, double c, const ExponentPair& e, const KernelSpec& spec) {
    if (!(c > 0.0)) throw std::invalid_argument("picard_decay_bound: C must be positive");
    return std::exp(picard_decay_log(n, std::log(c), e, spec));
}

double kernel_mass_outside_radius(const KernelSpec& spec, double t, double radius) {
    if (!(t > 0.0)) return 0.0;
    if (!(radius >= 0.0)) throw std::invalid_argument("kernel_mass_outside_radius: negative radius");
    // Radial reduction: with v = (lambda / t^tau)^(1/rho) |x| the mass outside
    // radius r is  integral_{v0}^{inf} v^(d-1) e^(-v^rho) dv / (Gamma(d/rho)/rho),
    // v0 = r / scale.
    double d = static_cast<double>(spec.dim);
    double scale = std::pow(std::pow(t, spec.tau) / spec.lambda, 1.0 / spec.rho);
    double v0 = radius / scale;
    double v_max = std::pow(60.0, 1.0 / spec.rho) + v0;
    auto integrand = [&](double v) {
        return std::pow(v, d - 1.0) * std::exp(-std::pow(v, spec.rho));
    };
    int panels = quad::panel_count(v0, v_max, 0.5, 256);
    double tail = quad::integrate(integrand, v0, v_max, 24, panels);
    double total = std::exp(std::lgamma(d / spec.rho) - std::log(spec.rho));
    double frac = tail / total;
    if (frac < 0.0) frac = 0.0;
    if (frac > 1.0) frac = 1.0;
    return frac;
}

}  // namespace spde
