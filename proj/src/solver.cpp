#include "spde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spde/quadrature.hpp"

namespace spde {

namespace {

constexpr double kGuardMassTol = 1e-4;

double dist2(const Point& a, const Point& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_spot(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace

double guard_band_mass_bound(const ProblemSpec& problem) {
    double guard = problem.box.radius - problem.eval_radius;
    if (guard < 0.0) guard = 0.0;
    if (!(problem.box.time_horizon > 0.0)) return 0.0;
    // The outside mass is monotone in t, so the horizon is the worst case.
    return kernel_mass_outside_radius(problem.kernel, problem.box.time_horizon, guard);
}

void validate(const ProblemSpec& problem) {
    if (problem.kernel.dim != problem.box.dim)
        throw ValidationError("ProblemSpec: kernel and box dimension differ");
    problem.noise.validate();
    if (problem.exponents.p != problem.noise.p || problem.exponents.q != problem.noise.q)
        throw ValidationError("ProblemSpec: exponents (p, q) must match the noise declaration");

    auto adm = admissible(problem.exponents.p, problem.exponents.q, problem.kernel);
    if (!adm.admissible) {
        std::ostringstream msg;
        msg << "ProblemSpec: exponents outside the admissible region: need p < " << adm.p_upper
            << " and q in (" << adm.q_lower << ", p]; got p = " << problem.exponents.p
            << ", q = " << problem.exponents.q;
        throw ValidationError(msg.str());
    }
    auto feas = exponent_feasible(problem.exponents, problem.kernel);
    if (!feas.feasible) {
        std::ostringstream msg;
        msg << "ProblemSpec: eta = " << problem.exponents.eta
            << " outside the feasibility window: need eta > " << feas.eta_min
            << " and positive growth slack (got " << feas.growth_slack << ")";
        throw ValidationError(msg.str());
    }

    if (!(problem.box.time_horizon >= 0.0)) throw ValidationError("ProblemSpec: negative horizon");
    if (!(problem.box.radius > 0.0)) throw ValidationError("ProblemSpec: box radius must be positive");
    if (!(problem.eval_radius > 0.0) || problem.eval_radius > problem.box.radius)
        throw ValidationError("ProblemSpec: eval radius must lie in (0, box radius]");
    if (problem.grid.time_steps < 1 || problem.grid.sites_per_dim < 2)
        throw ValidationError("ProblemSpec: grid too coarse");

    double guard_mass = guard_band_mass_bound(problem);
    if (!(guard_mass < kGuardMassTol)) {
        std::ostringstream msg;
        msg << "ProblemSpec: guard band too thin: kernel mass bound " << guard_mass
            << " across R - R_eval = " << problem.box.radius - problem.eval_radius
            << " exceeds " << kGuardMassTol << "; widen the box or shrink the eval radius";
        throw ValidationError(msg.str());
    }

    // Spot checks of the declared coefficient bounds on a fixed sample set.
    if (!problem.sigma.fn) throw ValidationError("ProblemSpec: sigma function not set");
    if (!problem.initial.fn) throw ValidationError("ProblemSpec: initial condition not set");
    const double slack = 1e-9;
    for (int i = 0; i < 40; ++i) {
        double a = -20.0 + i;
        double b = a + 0.37 * (i + 1);
        double lhs = std::abs(problem.sigma.fn(a) - problem.sigma.fn(b));
        check_spot(lhs <= problem.sigma.lipschitz * std::abs(a - b) * (1.0 + slack) + 1e-12,
                   "ProblemSpec: sigma violates its declared Lipschitz constant");
        if (problem.sigma.growth) {
            double bound = problem.sigma.growth->scale *
                           (1.0 + std::pow(std::abs(a), problem.sigma.growth->exponent));
            check_spot(std::abs(problem.sigma.fn(a)) <= bound * (1.0 + slack) + 1e-12,
                       "ProblemSpec: sigma violates its declared growth bound");
        }
    }
    for (int i = 0; i < 20; ++i) {
        Point y{0.0, 0.0, 0.0};
        for (int k = 0; k < problem.box.dim; ++k)
            y[k] = problem.box.radius * std::sin(1.7 * (i + 1) * (k + 1));
        check_spot(std::abs(problem.initial.fn(y)) <=
                       problem.initial.sup_abs * (1.0 + slack) + 1e-12,
                   "ProblemSpec: initial condition exceeds its declared sup bound");
    }
}

namespace {

/// Per-dimension quadrature nodes in the rescaled variable v, where
/// y = x - scale * v and the kernel weight is exp(-|v|^rho). Segments are
/// split at v = 0 (cusp for rho < 2... kept unconditionally) and into panels
/// of bounded width.
struct NodeList {
    std::vector<double> v;
    std::vector<double> w;
};

NodeList dim_nodes(double lo, double hi, int order, double max_width) {
    NodeList out;
    if (!(hi > lo)) return out;
    std::vector<double> breaks{lo};
    if (lo < 0.0 && hi > 0.0) breaks.push_back(0.0);
    breaks.push_back(hi);
    const auto& rule = quad::gauss_legendre(order);
    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        double a = breaks[seg], b = breaks[seg + 1];
        int panels = quad::panel_count(a, b, max_width, 256);
        double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            double mid = a + (p + 0.5) * h;
            double half = 0.5 * h;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                out.v.push_back(mid + half * rule.nodes[i]);
                out.w.push_back(half * rule.weights[i]);
            }
        }
    }
    return out;
}

struct NodeQuad {
    double value;
    double mass;
};

NodeQuad initial_quad_once(const ProblemSpec& problem, double scale, double prefactor,
                           double v_max, const Point& x, int order, double max_width) {
    const int dim = problem.box.dim;
    const double rho = problem.kernel.rho;
    const double R = problem.box.radius;

    NodeList axes[3];
    for (int i = 0; i < dim; ++i) {
        double lo = std::max(-v_max, (x[i] - R) / scale);
        double hi = std::min(v_max, (x[i] + R) / scale);
        axes[i] = dim_nodes(lo, hi, order, max_width);
        if (axes[i].v.empty()) return NodeQuad{0.0, 0.0};
    }
    // Pad unused dimensions with a unit node so one triple loop covers d <= 3.
    for (int i = dim; i < 3; ++i) axes[i] = NodeList{{0.0}, {1.0}};

    double val = 0.0, mass = 0.0;
    Point y{0.0, 0.0, 0.0};
    for (std::size_t i0 = 0; i0 < axes[0].v.size(); ++i0) {
        double v0 = axes[0].v[i0];
        for (std::size_t i1 = 0; i1 < axes[1].v.size(); ++i1) {
            double v1 = axes[1].v[i1];
            for (std::size_t i2 = 0; i2 < axes[2].v.size(); ++i2) {
                double v2 = axes[2].v[i2];
                double r2 = v0 * v0 + v1 * v1 + v2 * v2;
                double weight = axes[0].w[i0] * axes[1].w[i1] * axes[2].w[i2] *
                                std::exp(-std::pow(r2, 0.5 * rho));
                y[0] = x[0] - scale * v0;
                y[1] = x[1] - scale * v1;
                y[2] = x[2] - scale * v2;
                val += weight * problem.initial.fn(y);
                mass += weight;
            }
        }
    }
    return NodeQuad{prefactor * val, prefactor * mass};
}

}  // namespace

InitialField initial_field(const ProblemSpec& problem, const FieldGrid& geometry) {
    const auto& k = problem.kernel;
    const int dim = problem.box.dim;
    const long n_sites = geometry.n_sites();

    InitialField out;
    out.values.assign(static_cast<std::size_t>(geometry.levels()) * n_sites, 0.0);

    // t-independent prefactor of the rescaled integral.
    double prefactor = k.norm_const * std::pow(k.lambda, -static_cast<double>(dim) / k.rho);
    double v_max = std::pow(38.0, 1.0 / k.rho);
    // Escalation ladder: refine both the rule order and the panel width until
    // two consecutive stages agree; narrow features of the initial condition
    // need narrower panels, not just higher order.
    struct Stage {
        int order;
        double max_width;
    };
    const Stage stages_small[5] = {{16, 6.0}, {24, 3.0}, {32, 1.5}, {40, 0.75}, {48, 0.375}};
    const Stage stages_3d[3] = {{12, 6.0}, {18, 3.0}, {26, 1.5}};
    const Stage* stages = dim <= 2 ? stages_small : stages_3d;
    const int n_stages = dim <= 2 ? 5 : 3;

    for (long s = 0; s < n_sites; ++s)
        out.values[s] = problem.initial.fn(geometry.site_point(s));

    for (int lev = 1; lev < geometry.levels(); ++lev) {
        double t = geometry.times[lev];
        if (!(t > 0.0)) {
            for (long s = 0; s < n_sites; ++s)
                out.values[static_cast<std::size_t>(lev) * n_sites + s] = out.values[s];
            continue;
        }
        double scale = std::pow(std::pow(t, k.tau) / k.lambda, 1.0 / k.rho);
        for (long s = 0; s < n_sites; ++s) {
            Point x = geometry.site_point(s);
            NodeQuad prev = initial_quad_once(problem, scale, prefactor, v_max, x,
                                              stages[0].order, stages[0].max_width);
            bool settled = false;
            for (int stage = 1; stage < n_stages; ++stage) {
                NodeQuad cur = initial_quad_once(problem, scale, prefactor, v_max, x,
                                                 stages[stage].order, stages[stage].max_width);
                double tol = 1e-9 + 1e-7 * std::max(1.0, std::abs(cur.value));
                if (std::abs(cur.value - prev.value) <= tol) {
                    prev = cur;
                    settled = true;
                    break;
                }
                prev = cur;
            }
            if (!settled) {
                std::ostringstream msg;
                msg << "initial_field: quadrature did not settle at t = " << t << ", x = (";
                for (int i = 0; i < dim; ++i) msg << (i ? ", " : "") << x[i];
                msg << ")";
                throw QuadratureError(msg.str());
            }
            out.values[static_cast<std::size_t>(lev) * n_sites + s] = prev.value;
            // Track the lost kernel mass only where the field is trusted;
            // sites hugging the box edge always lose ~half the mass.
            if (norm_inf(x, dim) <= problem.eval_radius * (1.0 + 1e-12)) {
                double loss = std::max(0.0, 1.0 - prev.mass);
                out.max_boundary_loss = std::max(out.max_boundary_loss, loss);
            }
        }
    }
    return out;
}

namespace {

/// Left-endpoint time quadrature of the drift integral at (t, x):
/// sum over full (and one partial) steps [t_j, min(t_{j+1}, t)) of
/// width * trapezoid over sites of g(t - t_j, x - y) sigma_table(j, y).
double drift_term_at(const KernelSpec& kernel, const FieldGrid& grid,
                     const std::vector<double>& sigma_table, double t, const Point& x) {
    const int dim = grid.dim;
    const int n = grid.sites_per_dim;
    const long n_sites = grid.n_sites();
    const double dx = grid.spacing();
    double cell = 1.0;
    for (int i = 0; i < dim; ++i) cell *= dx;

    double acc = 0.0;
    for (int j = 0; j + 1 < grid.levels() && grid.times[j] < t; ++j) {
        double width = std::min(grid.times[j + 1], t) - grid.times[j];
        if (!(width > 0.0)) continue;
        double dt = t - grid.times[j];
        double space = 0.0;
        for (long s = 0; s < n_sites; ++s) {
            Point y = grid.site_point(s);
            double wgt = 1.0;
            long rem = s;
            for (int i = dim - 1; i >= 0; --i) {
                int idx = static_cast<int>(rem % n);
                rem /= n;
                if (idx == 0 || idx == n - 1) wgt *= 0.5;
            }
            double r2 = dist2(x, y, dim);
            double g = kernel.norm_const * std::pow(dt, -kernel.tau * dim / kernel.rho) *
                       std::exp(-kernel.lambda * std::pow(r2, 0.5 * kernel.rho) *
                                std::pow(dt, -kernel.tau));
            space += wgt * g * sigma_table[static_cast<std::size_t>(j) * n_sites + s];
        }
        acc += width * space * cell;
    }
    return acc;
}

std::vector<double> sigma_of_field(const SigmaSpec& sigma, const FieldGrid& grid) {
    std::vector<double> table(grid.values.size());
    for (std::size_t i = 0; i < table.size(); ++i) table[i] = sigma.fn(grid.values[i]);
    return table;
}

/// Batched Picard updater. Atom order, interpolation stencils and kernel
/// time factors are frozen at construction so every step sums in the same
/// order with the same coefficients.
class PicardEngine {
public:
    PicardEngine(const ProblemSpec& problem, const NoiseRealization& real, FieldGrid geometry,
                 const InitialField& init)
        : problem_(problem), geometry_(std::move(geometry)), init_(init) {
        const int dim = geometry_.dim;
        atoms_ = real.atoms;
        std::sort(atoms_.begin(), atoms_.end(), [](const NoiseAtom& a, const NoiseAtom& b) {
            return std::tie(a.t, a.x[0], a.x[1], a.x[2], a.z) <
                   std::tie(b.t, b.x[0], b.x[1], b.x[2], b.z);
        });
        const double slack = 1e-9 * (1.0 + geometry_.radius);
        for (const auto& a : atoms_) {
            if (norm_inf(a.x, dim) > geometry_.radius + slack) {
                std::ostringstream msg;
                msg << "picard: atom at |x|_inf = " << norm_inf(a.x, dim)
                    << " outside the interpolation hull of radius " << geometry_.radius;
                throw GuardBandError(msg.str());
            }
        }
        drift_ = real.comp.drift_density;

        levels_ = geometry_.levels();
        level_end_.resize(levels_);
        for (int k = 0; k < levels_; ++k) {
            double t = geometry_.times[k];
            level_end_[k] = static_cast<long>(
                std::lower_bound(atoms_.begin(), atoms_.end(), t,
                                 [](const NoiseAtom& a, double value) { return a.t < value; }) -
                atoms_.begin());
        }

        // Interpolation stencils at atom positions (fixed across iterations).
        const int corners = 1 << dim;
        stencil_offsets_.resize(atoms_.size() * corners);
        stencil_weights_.resize(atoms_.size() * corners);
        atom_level_.resize(atoms_.size());
        const double dx = geometry_.spacing();
        const int n = geometry_.sites_per_dim;
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            atom_level_[a] = geometry_.level_before(atoms_[a].t);
            int cell[3] = {0, 0, 0};
            double w[3] = {0.0, 0.0, 0.0};
            for (int i = 0; i < dim; ++i) {
                double u = (atoms_[a].x[i] + geometry_.radius) / dx;
                int c = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
                cell[i] = c;
                w[i] = std::clamp(u - c, 0.0, 1.0);
            }
            for (int m = 0; m < corners; ++m) {
                double weight = 1.0;
                long flat = 0;
                for (int i = 0; i < dim; ++i) {
                    int hi = (m >> i) & 1;
                    weight *= hi ? w[i] : 1.0 - w[i];
                    flat = flat * n + (cell[i] + hi);
                }
                stencil_offsets_[a * corners + m] = flat;
                stencil_weights_[a * corners + m] = weight;
            }
        }

        // Kernel time factors per (level, atom): g = amp * exp(-decay * r^rho).
        const auto& ker = problem_.kernel;
        double te = ker.tau * dim / ker.rho;
        amp_.assign(static_cast<std::size_t>(levels_) * atoms_.size(), 0.0);
        decay_.assign(amp_.size(), 0.0);
        for (int k = 1; k < levels_; ++k) {
            for (long a = 0; a < level_end_[k]; ++a) {
                double dt = geometry_.times[k] - atoms_[a].t;
                std::size_t idx = static_cast<std::size_t>(k) * atoms_.size() + a;
                amp_[idx] = ker.norm_const * std::pow(dt, -te);
                decay_[idx] = ker.lambda * std::pow(dt, -ker.tau);
            }
        }
    }

    const FieldGrid& geometry() const { return geometry_; }

    void step(const FieldGrid& prev, FieldGrid& next) const {
        const int dim = geometry_.dim;
        const int corners = 1 << dim;
        const long n_sites = geometry_.n_sites();
        const double rho = problem_.kernel.rho;
        const bool quadratic = rho == 2.0;

        std::vector<double> sig_z(atoms_.size());
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            const double* base = prev.values.data() +
                                 static_cast<std::size_t>(atom_level_[a]) * n_sites;
            double v = 0.0;
            for (int m = 0; m < corners; ++m)
                v += stencil_weights_[a * corners + m] * base[stencil_offsets_[a * corners + m]];
            sig_z[a] = problem_.sigma.fn(v) * atoms_[a].z;
        }

        std::vector<double> sigma_table;
        if (drift_ != 0.0) sigma_table = sigma_of_field(problem_.sigma, prev);

        for (long s = 0; s < n_sites; ++s) next.value(0, s) = init_.values[s];
        for (int k = 1; k < levels_; ++k) {
            const std::size_t row = static_cast<std::size_t>(k) * atoms_.size();
            for (long s = 0; s < n_sites; ++s) {
                Point x = geometry_.site_point(s);
                KahanSum acc;
                for (long a = 0; a < level_end_[k]; ++a) {
                    double r2 = dist2(x, atoms_[a].x, dim);
                    double powr = quadratic ? r2 : std::pow(r2, 0.5 * rho);
                    acc.add(amp_[row + a] * std::exp(-decay_[row + a] * powr) * sig_z[a]);
                }
                double val = init_.values[static_cast<std::size_t>(k) * n_sites + s] + acc.value();
                if (drift_ != 0.0)
                    val += drift_ * drift_term_at(problem_.kernel, prev, sigma_table,
                                                  geometry_.times[k], x);
                next.value(k, s) = val;
            }
        }
    }

private:
    const ProblemSpec& problem_;
    FieldGrid geometry_;
    InitialField init_;
    std::vector<NoiseAtom> atoms_;
    std::vector<long> level_end_;
    std::vector<int> atom_level_;
    std::vector<long> stencil_offsets_;
    std::vector<double> stencil_weights_;
    std::vector<double> amp_;
    std::vector<double> decay_;
    double drift_ = 0.0;
    int levels_ = 0;
};

double sup_diff(const FieldGrid& a, const FieldGrid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

FieldGrid make_geometry(const ProblemSpec& problem) {
    return FieldGrid::uniform(problem.box.time_horizon, problem.grid.time_steps,
                              problem.box.dim, problem.grid.sites_per_dim,
                              problem.box.radius, problem.exponents.p);
}

}  // namespace

double stochastic_convolution(const KernelSpec& kernel, const SigmaSpec& sigma,
                              const FieldGrid& field, const NoiseRealization& real,
                              double t, const Point& x) {
    const int dim = field.dim;
    KahanSum acc;
    for (const auto& atom : real.atoms) {
        if (!(atom.t < t)) continue;  // the endpoint is excluded
        double dt = t - atom.t;
        double level_value = field.interpolate(field.level_before(atom.t), atom.x);
        double r2 = dist2(x, atom.x, dim);
        double g = kernel.norm_const * std::pow(dt, -kernel.tau * dim / kernel.rho) *
                   std::exp(-kernel.lambda * std::pow(r2, 0.5 * kernel.rho) *
                            std::pow(dt, -kernel.tau));
        acc.add(g * sigma.fn(level_value) * atom.z);
    }
    double out = acc.value();
    if (real.comp.drift_density != 0.0) {
        std::vector<double> sigma_table = sigma_of_field(sigma, field);
        out += real.comp.drift_density * drift_term_at(kernel, field, sigma_table, t, x);
    }
    return out;
}

FieldGrid picard_step(const ProblemSpec& problem, const FieldGrid& field,
                      const NoiseRealization& real, const InitialField& init) {
    PicardEngine engine(problem, real, field, init);
    FieldGrid next = field;
    engine.step(field, next);
    return next;
}

FieldGrid picard_step(const ProblemSpec& problem, const FieldGrid& field,
                      const NoiseRealization& real) {
    InitialField init = initial_field(problem, field);
    return picard_step(problem, field, real, init);
}

namespace {

PicardRun iterate(const ProblemSpec& problem, const NoiseRealization& truncated,
                  const NoiseRealization& original, const StoppingConfig& cfg,
                  const InitialField& init, int max_iter, double tol, bool stop_at_tol,
                  bool record_fields) {
    FieldGrid geometry = make_geometry(problem);
    PicardEngine engine(problem, truncated, geometry, init);

    PicardRun run;
    run.diag.guard_mass_bound = guard_band_mass_bound(problem);
    run.diag.initial_boundary_loss = init.max_boundary_loss;
    run.diag.atoms_total = original.atoms.size();
    run.diag.atoms_retained = truncated.atoms.size();
    run.diag.applied_stopping_time = stopping_time(original, cfg);

    FieldGrid prev = geometry;
    prev.values = init.values;
    FieldGrid next = geometry;

    for (int n = 1; n <= max_iter; ++n) {
        engine.step(prev, next);
        double delta = sup_diff(next, prev);
        run.diag.increments.push_back(delta);
        run.diag.iterations_run = n;
        if (record_fields) {
            std::vector<double> diff(next.values.size());
            for (std::size_t i = 0; i < diff.size(); ++i)
                diff[i] = std::abs(next.values[i] - prev.values[i]);
            run.increment_fields.push_back(std::move(diff));
        }
        std::swap(prev.values, next.values);
        if (!std::isfinite(delta)) break;
        if (stop_at_tol && delta < tol) {
            run.diag.converged = true;
            run.diag.converged_iteration = n - 1;
            break;
        }
    }
    run.field = std::move(prev);
    return run;
}

SolveResult solve_with_init(const ProblemSpec& problem, const NoiseRealization& real,
                            const StoppingConfig& cfg, const InitialField& init, double tol,
                            int max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solve: max_iter must be >= 1");
    NoiseRealization truncated = truncate_adaptive(real, cfg);
    PicardRun run = iterate(problem, truncated, real, cfg, init, max_iter, tol,
                            /*stop_at_tol=*/true, /*record_fields=*/false);
    for (double v : run.field.values)
        if (!std::isfinite(v))
            throw SolveError("solve: non-finite field value", run.diag.increments);
    if (!run.diag.converged) {
        std::ostringstream msg;
        msg << "solve: no convergence after " << run.diag.iterations_run
            << " iterations; last increment " << run.diag.increments.back() << " vs tol " << tol;
        throw SolveError(msg.str(), run.diag.increments);
    }
    return SolveResult{std::move(run.field), std::move(run.diag)};
}

}  // namespace

PicardRun picard_run(const ProblemSpec& problem, const NoiseRealization& real,
                     const StoppingConfig& cfg, int iterations, bool record_fields) {
    if (iterations < 1) throw std::invalid_argument("picard_run: iterations must be >= 1");
    NoiseRealization truncated = truncate_adaptive(real, cfg);
    InitialField init = initial_field(problem, make_geometry(problem));
    return iterate(problem, truncated, real, cfg, init, iterations, 0.0,
                   /*stop_at_tol=*/false, record_fields);
}

SolveResult solve(const ProblemSpec& problem, const NoiseRealization& real,
                  const StoppingConfig& cfg, double tol, int max_iter) {
    InitialField init = initial_field(problem, make_geometry(problem));
    return solve_with_init(problem, real, cfg, init, tol, max_iter);
}

GlueResult glue(const ProblemSpec& problem, const NoiseRealization& real,
                const std::vector<int>& levels, double eta, double tol, int max_iter) {
    if (levels.empty()) throw std::invalid_argument("glue: need at least one level");
    for (std::size_t j = 0; j < levels.size(); ++j) {
        if (levels[j] < 1) throw std::invalid_argument("glue: levels must be >= 1");
        if (j > 0 && levels[j] <= levels[j - 1])
            throw std::invalid_argument("glue: levels must be strictly increasing");
    }

    GlueResult out;
    out.diag.levels = levels;
    for (int level : levels)
        out.diag.stopping_times.push_back(stopping_time(real, StoppingConfig{level, eta}));

    FieldGrid geometry = make_geometry(problem);
    out.diag.level_used.assign(geometry.levels(), -1);
    for (int k = 0; k < geometry.levels(); ++k) {
        double t = geometry.times[k];
        for (std::size_t j = 0; j < levels.size(); ++j) {
            const auto& tau = out.diag.stopping_times[j];
            if (!tau || t <= *tau) {
                out.diag.level_used[k] = levels[j];
                break;
            }
        }
        if (out.diag.level_used[k] < 0) {
            std::ostringstream msg;
            msg << "glue: time " << t << " lies beyond the stopping time of the top level "
                << levels.back() << "; extend the ladder";
            throw SolveError(msg.str(), {});
        }
    }

    InitialField init = initial_field(problem, geometry);
    out.diag.guard_mass_bound = guard_band_mass_bound(problem);

    std::vector<SolveResult> solutions;
    std::vector<int> solved_levels;
    out.field = geometry;
    for (int k = 0; k < geometry.levels(); ++k) {
        int level = out.diag.level_used[k];
        std::size_t pos = 0;
        for (; pos < solved_levels.size(); ++pos)
            if (solved_levels[pos] == level) break;
        if (pos == solved_levels.size()) {
            solutions.push_back(
                solve_with_init(problem, real, StoppingConfig{level, eta}, init, tol, max_iter));
            solved_levels.push_back(level);
        }
        const FieldGrid& src = solutions[pos].field;
        for (long s = 0; s < geometry.n_sites(); ++s)
            out.field.value(k, s) = src.value(k, s);
    }
    return out;
}

}  // namespace spde
