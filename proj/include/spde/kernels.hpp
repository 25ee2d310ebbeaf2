#pragma once

#include "spde/common.hpp"

namespace spde {

/// Generalized Gaussian convolution kernel
///
///   g(t,x) = K * t^(-tau*d/rho) * exp(-lambda * |x|^rho / t^tau),  t > 0,
///
/// with K chosen so that g(t,.) integrates to 1 over R^d for every t.
/// rho controls the tail shape, tau the time scaling, lambda the decay rate.
/// The heat semigroup is (rho, tau, lambda) = (2, 1, 1/4); higher-order
/// parabolic equations of order m map to rho = 2m/(2m-1), tau = 1/(2m-1).
struct KernelSpec {
    double rho;
    double tau;
    double lambda;
    int dim;
    double norm_const;  ///< K, fixed by the other four fields.

    KernelSpec(double rho_, double tau_, double lambda_, int dim_);

    static KernelSpec heat(int dim);
    /// Order-m parabolic preset. lambda is not determined by m; the default
    /// makes m = 1 coincide with the heat preset.
    static KernelSpec parabolic(int m, int dim, double lambda = 0.25);
};

/// Moment exponents for the driving noise: p for small jumps, q for big
/// jumps (q <= p), and the spatial growth exponent eta used by adaptive
/// truncation.
struct ExponentPair {
    double p;
    double q;
    double eta;
};

/// Mass-one normalization constant K(rho, tau, lambda, d).
double normalization_constant(double rho, double tau, double lambda, int dim);

/// g(t,x); zero for t <= 0.
double kernel_density(const KernelSpec& spec, double t, const Point& x);

/// Pointwise power of the kernel expressed through the same family:
///   g^p(t,x) = prefactor(t) * g'(t,x),
/// where g' has lambda' = p*lambda and prefactor(t) = coeff * t^t_exponent.
struct PowerRescaling {
    double coeff;
    double t_exponent;
    KernelSpec rescaled;

    double prefactor(double t) const;
};

PowerRescaling power_rescaling(const KernelSpec& spec, double p);

/// integral over [0,T] x R^d of g^p. Returns +infinity (a first-class value
/// here, not an error) exactly when p >= 1 + rho/(tau*d).
double kernel_lp_norm(const KernelSpec& spec, double p, double time_horizon);

/// E|X|^p for X ~ N(0, variance), valid for p > -1:
///   (2 variance)^(p/2) * Gamma((1+p)/2) / sqrt(pi).
double gaussian_abs_moment(double variance, double p);

/// n-fold iterated integral of the kernel (t - s)^a over the ordered simplex
/// 0 < t_n < ... < t_1 < t, valid for a > -1:
///   Gamma(1+a)^n / Gamma(1 + (1+a) n) * t^((1+a) n).
double iterated_time_integral(double t, double a, int n);

/// Moment-exponent window in which the fixed-point construction closes:
/// p < 1 + rho/(tau*d) and q in (threshold(p), p].
struct AdmissibilityReport {
    bool admissible;
    double p_upper;   ///< 1 + rho/(tau*d)
    double q_lower;   ///< p / (1 + tau * (1 + rho/(tau*d) - p))
};

AdmissibilityReport admissible(double p, double q, const KernelSpec& spec);

/// Raw threshold q_lower(p) without constructing a KernelSpec; usable for
/// arbitrary dimension (e.g. large-d limits in region tables).
double admissible_threshold(double p, double rho, double tau, double dim);

/// Feasibility window for the truncation growth exponent eta:
/// eta > d/q and eta (p - q) / rho < 1 - (p-1) tau d / rho.
struct FeasibilityReport {
    bool feasible;
    double eta_min;       ///< d/q
    double growth_slack;  ///< (1 - (p-1) tau d / rho) - eta (p-q)/rho, must be > 0
};

FeasibilityReport exponent_feasible(const ExponentPair& e, const KernelSpec& spec);

/// log of the n-th Picard-tail majorant
///   C^n * Gamma((d + n eta (p-q))/rho) * Gamma(A)^n / Gamma(1 + A n),
/// A = 1 - (p-1) tau d / rho. Evaluated entirely through lgamma; the ratio
/// overflows long before the quantity itself is meaningless otherwise.
/// Requires A > 0 (i.e. p below the admissible upper bound).
double picard_decay_log(int n, double log_c, const ExponentPair& e, const KernelSpec& spec);

/// exp of picard_decay_log; may round to 0 or overflow to +infinity at the
/// extremes, which is acceptable for diagnostics.
double picard_decay_bound(int n, double c, const ExponentPair& e, const KernelSpec& spec);

/// Fraction of the mass of g(t,.) outside the centered ball of radius r,
/// via radial quadrature. Monotone increasing in t; used for guard bands.
double kernel_mass_outside_radius(const KernelSpec& spec, double t, double radius);

}  // namespace spde
