#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spde/field.hpp"
#include "spde/kernels.hpp"
#include "spde/noise.hpp"

namespace spde {

/// Declared polynomial growth bound |sigma(y)| <= scale * (1 + |y|^exponent).
struct GrowthDecl {
    double scale = 1.0;
    double exponent = 0.0;
};

/// Multiplicative coefficient. The Lipschitz constant is declared by the
/// caller and spot-checked at validation; `growth` is optional and only
/// needed by moment diagnostics.
struct SigmaSpec {
    std::function<double(double)> fn;
    std::string name = "custom";
    double lipschitz = 1.0;
    std::optional<GrowthDecl> growth;
};

/// Bounded measurable initial condition with a declared sup bound.
struct InitialSpec {
    std::function<double(const Point&)> fn;
    std::string name = "custom";
    double sup_abs = 1.0;
};

/// Full problem description: kernel, coefficient, initial condition, noise,
/// the sampling box, the trusted evaluation radius and the discretization.
struct ProblemSpec {
    KernelSpec kernel;
    SigmaSpec sigma;
    InitialSpec initial;
    LevyMarkSpec noise;
    Box box;
    double eval_radius = 1.0;
    ExponentPair exponents{1.0, 1.0, 1.0};
    GridSpec grid;
};

/// Kernel mass that can leak across the guard band R - R_eval over the
/// horizon (worst case t = T). Kept below 1e-4 by validation.
double guard_band_mass_bound(const ProblemSpec& problem);

/// Checks kernel/exponent admissibility, the eta feasibility window, the
/// noise moment conditions, declared Lipschitz/growth bounds (spot check),
/// box/grid sanity and the guard band. Throws ValidationError.
void validate(const ProblemSpec& problem);

/// Deterministic part of the mild solution on a grid geometry:
/// values[k][site] = integral of g(t_k, x - y) psi(y) over the noise box,
/// by per-node Gauss-Legendre quadrature with a settling check.
struct InitialField {
    std::vector<double> values;
    /// Worst kernel mass lost outside the box, over sites inside the eval box.
    double max_boundary_loss = 0.0;
};

InitialField initial_field(const ProblemSpec& problem, const FieldGrid& geometry);

/// Atom-cloud convolution at one node:
///   sum over atoms (s,y,z), s < t, of g(t-s, x-y) sigma(field(s,y)) z
/// plus the deterministic drift integral when the realization carries one.
/// Field values at atom positions use the last level strictly before s and
/// multilinear interpolation in space. Reference implementation; the solver
/// uses an equivalent batched path.
double stochastic_convolution(const KernelSpec& kernel, const SigmaSpec& sigma,
                              const FieldGrid& field, const NoiseRealization& real,
                              double t, const Point& x);

struct SolveDiagnostics {
    std::vector<double> increments;   ///< sup-norm of each Picard increment
    int converged_iteration = -1;     ///< iterate at which the fixed point was reached
    int iterations_run = 0;
    bool converged = false;
    double guard_mass_bound = 0.0;
    double initial_boundary_loss = 0.0;
    std::size_t atoms_total = 0;
    std::size_t atoms_retained = 0;
    std::optional<double> applied_stopping_time;
};

struct SolveResult {
    FieldGrid field;
    SolveDiagnostics diag;
};

/// One Picard update: next(t_k, x) = Y0(t_k, x) + convolution against the
/// current field. The overload without a precomputed InitialField computes it
/// on the fly.
FieldGrid picard_step(const ProblemSpec& problem, const FieldGrid& field,
                      const NoiseRealization& real, const InitialField& init);
FieldGrid picard_step(const ProblemSpec& problem, const FieldGrid& field,
                      const NoiseRealization& real);

struct PicardRun {
    FieldGrid field;
    SolveDiagnostics diag;
    /// Per-iteration |increment| per node; filled when requested.
    std::vector<std::vector<double>> increment_fields;
};

/// Runs exactly `iterations` Picard updates after adaptive truncation at
/// cfg; never throws on non-convergence. Used by decay studies.
PicardRun picard_run(const ProblemSpec& problem, const NoiseRealization& real,
                     const StoppingConfig& cfg, int iterations, bool record_fields);

/// Full solve: adaptive truncation at cfg, Picard iteration until the grid
/// sup increment drops to tol. Throws SolveError with the increment trace on
/// non-convergence, and on non-finite values.
SolveResult solve(const ProblemSpec& problem, const NoiseRealization& real,
                  const StoppingConfig& cfg, double tol = 1e-6, int max_iter = 50);

struct GlueDiagnostics {
    std::vector<int> levels;                          ///< truncation ladder
    std::vector<std::optional<double>> stopping_times;
    std::vector<int> level_used;                      ///< per time index
    double guard_mass_bound = 0.0;
};

struct GlueResult {
    FieldGrid field;
    GlueDiagnostics diag;
};

/// Pathwise glue across a ladder of truncation levels: each time level takes
/// its values from the smallest ladder entry whose stopping time has not yet
/// been passed. Fails when the horizon outruns the top of the ladder.
GlueResult glue(const ProblemSpec& problem, const NoiseRealization& real,
                const std::vector<int>& levels, double eta, double tol = 1e-6,
                int max_iter = 50);

}  // namespace spde
