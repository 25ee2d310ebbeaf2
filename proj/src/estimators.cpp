#include "spde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spde/parallel.hpp"
#include "spde/quadrature.hpp"
#include "spde/rng.hpp"

namespace spde {

namespace {

constexpr int kBootstrapResamples = 200;
constexpr std::uint64_t kBootstrapSeed = 0x626F6F7473747261ULL;

/// Flat node indices with t <= horizon and |x|_inf <= radius (plus rounding
/// slack), level-major like FieldGrid::values.
std::vector<std::size_t> node_mask(const FieldGrid& geometry, double horizon, double radius) {
    std::vector<std::size_t> mask;
    const long n_sites = geometry.n_sites();
    const double t_slack = 1e-12 * (1.0 + horizon);
    const double x_slack = 1e-9 * (1.0 + radius);
    std::vector<char> site_ok(n_sites);
    for (long s = 0; s < n_sites; ++s)
        site_ok[s] = norm_inf(geometry.site_point(s), geometry.dim) <= radius + x_slack;
    for (int k = 0; k < geometry.levels(); ++k) {
        if (geometry.times[k] > horizon + t_slack) break;
        for (long s = 0; s < n_sites; ++s)
            if (site_ok[s]) mask.push_back(static_cast<std::size_t>(k) * n_sites + s);
    }
    return mask;
}

/// Core of the ensemble norm: rows are realizations, columns are nodes.
Estimate bp_norm_core(const std::vector<std::vector<double>>& rows, double p) {
    if (rows.empty()) throw std::invalid_argument("empirical norm: empty ensemble");
    const std::size_t n_nodes = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != n_nodes) throw std::invalid_argument("empirical norm: ragged ensemble");
    const double inv_pstar = 1.0 / std::max(p, 1.0);
    const int n = static_cast<int>(rows.size());

    auto eval = [&](const std::vector<int>& pick) {
        double best = 0.0;
        for (std::size_t j = 0; j < n_nodes; ++j) {
            double mean = 0.0;
            for (int i : pick) mean += std::pow(std::abs(rows[i][j]), p);
            mean /= pick.size();
            if (mean > best) best = mean;
        }
        return std::pow(best, inv_pstar);
    };

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Estimate est;
    est.value = n_nodes == 0 ? 0.0 : eval(all);
    est.count = n;
    if (n > 1 && n_nodes > 0) {
        Rng rng(kBootstrapSeed);
        double mean = 0.0, m2 = 0.0;
        std::vector<int> pick(n);
        for (int b = 0; b < kBootstrapResamples; ++b) {
            for (int i = 0; i < n; ++i)
                pick[i] = static_cast<int>(rng.uniform() * n);
            double v = eval(pick);
            double delta = v - mean;
            mean += delta / (b + 1);
            m2 += delta * (v - mean);
        }
        est.std_error = std::sqrt(m2 / (kBootstrapResamples - 1));
    }
    return est;
}

std::vector<double> gather(const std::vector<double>& values,
                           const std::vector<std::size_t>& mask) {
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = values[mask[i]];
    return out;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        double slack = 1e-12 * (1.0 + std::abs(v[i - 1]));
        if (v[i] > v[i - 1] + slack) return false;
    }
    return true;
}

}  // namespace

Estimate empirical_bp_norm(std::span<const FieldGrid> fields, double p, double horizon,
                           double radius) {
    if (fields.empty()) throw std::invalid_argument("empirical_bp_norm: empty ensemble");
    if (!(p > 0.0)) throw std::invalid_argument("empirical_bp_norm: p must be positive");
    const FieldGrid& first = fields.front();
    for (const auto& f : fields)
        if (!f.same_geometry(first))
            throw std::invalid_argument("empirical_bp_norm: mismatched grid geometries");
    auto mask = node_mask(first, horizon, radius);
    std::vector<std::vector<double>> rows;
    rows.reserve(fields.size());
    for (const auto& f : fields) rows.push_back(gather(f.values, mask));
    return bp_norm_core(rows, p);
}

TruncationStudy truncation_convergence_study(const ProblemSpec& problem,
                                             const StoppingConfig& cfg, TruncationMode mode,
                                             std::vector<double> levels,
                                             const EnsembleConfig& ensemble, double tol,
                                             int max_iter) {
    if (levels.empty()) throw std::invalid_argument("truncation study: empty level grid");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0)) throw std::invalid_argument("truncation study: levels must be positive");
        if (i > 0 && !(levels[i] > levels[i - 1]))
            throw std::invalid_argument("truncation study: levels must be strictly increasing");
    }
    if (ensemble.realizations < 1) throw std::invalid_argument("truncation study: empty ensemble");
    validate(problem);

    const int n = ensemble.realizations;
    const std::size_t n_levels = levels.size();
    // diffs[level][seed] = coupled gap values on the trusted nodes.
    std::vector<std::vector<std::vector<double>>> diffs(
        n_levels, std::vector<std::vector<double>>(n));
    std::vector<std::vector<double>> seed_gap(n, std::vector<double>(n_levels, 0.0));

    FieldGrid geometry = FieldGrid::uniform(problem.box.time_horizon, problem.grid.time_steps,
                                            problem.box.dim, problem.grid.sites_per_dim,
                                            problem.box.radius, problem.exponents.p);
    auto mask = node_mask(geometry, problem.box.time_horizon, problem.eval_radius);

    parallel_for(n, ensemble.workers, [&](long i) {
        std::uint64_t seed = realization_seed(ensemble.master_seed, static_cast<std::uint64_t>(i));
        NoiseRealization real = sample_noise(problem.noise, problem.box, seed);
        SolveResult ref = solve(problem, real, cfg, tol, max_iter);
        std::vector<double> ref_vals = gather(ref.field.values, mask);
        for (std::size_t l = 0; l < n_levels; ++l) {
            NoiseRealization cand = mode == TruncationMode::jump_size
                                        ? truncate_jump_size(real, levels[l])
                                        : restrict_support(real, levels[l]);
            if (cand.seed != real.seed)
                throw std::logic_error("truncation study: coupling token mismatch");
            SolveResult sol = solve(problem, cand, cfg, tol, max_iter);
            std::vector<double> vals = gather(sol.field.values, mask);
            for (std::size_t j = 0; j < vals.size(); ++j) vals[j] -= ref_vals[j];
            seed_gap[i][l] = sup_abs(vals);
            diffs[l][i] = std::move(vals);
        }
    });

    TruncationStudy study;
    study.mode = mode;
    study.levels = std::move(levels);
    study.seed_gap = std::move(seed_gap);
    study.ensemble_gap.reserve(n_levels);
    for (std::size_t l = 0; l < n_levels; ++l)
        study.ensemble_gap.push_back(bp_norm_core(diffs[l], problem.exponents.p));
    study.per_seed_monotone = true;
    study.final_gap_zero = true;
    for (const auto& gaps : study.seed_gap) {
        if (!non_increasing(gaps)) study.per_seed_monotone = false;
        if (gaps.back() != 0.0) study.final_gap_zero = false;
    }
    return study;
}

PicardStudy picard_decay_study(const ProblemSpec& problem, const StoppingConfig& cfg,
                               int iterations, const EnsembleConfig& ensemble) {
    if (iterations < 1) throw std::invalid_argument("picard study: iterations must be >= 1");
    if (ensemble.realizations < 1) throw std::invalid_argument("picard study: empty ensemble");
    validate(problem);

    const int n = ensemble.realizations;
    FieldGrid geometry = FieldGrid::uniform(problem.box.time_horizon, problem.grid.time_steps,
                                            problem.box.dim, problem.grid.sites_per_dim,
                                            problem.box.radius, problem.exponents.p);
    auto mask = node_mask(geometry, problem.box.time_horizon, problem.eval_radius);

    // inc[n][seed] = |increment| on trusted nodes at iteration n.
    std::vector<std::vector<std::vector<double>>> inc(iterations,
                                                      std::vector<std::vector<double>>(n));
    std::vector<std::vector<double>> seed_increment(n, std::vector<double>(iterations, 0.0));

    parallel_for(n, ensemble.workers, [&](long i) {
        std::uint64_t seed = realization_seed(ensemble.master_seed, static_cast<std::uint64_t>(i));
        NoiseRealization real = sample_noise(problem.noise, problem.box, seed);
        PicardRun run = picard_run(problem, real, cfg, iterations, /*record_fields=*/true);
        for (int it = 0; it < iterations; ++it) {
            std::vector<double> vals = gather(run.increment_fields[it], mask);
            seed_increment[i][it] = sup_abs(vals);
            inc[it][i] = std::move(vals);
        }
    });

    PicardStudy study;
    study.iterations = iterations;
    study.seed_increment = std::move(seed_increment);
    study.ensemble_increment.reserve(iterations);
    for (int it = 0; it < iterations; ++it)
        study.ensemble_increment.push_back(bp_norm_core(inc[it], problem.exponents.p));
    study.final_ensemble_increment = study.ensemble_increment.back().value;

    // Fit C in the decay envelope by least squares on iterations with a
    // strictly positive norm.
    double sum_ny = 0.0, sum_n2 = 0.0;
    for (int it = 0; it < iterations; ++it) {
        double v = study.ensemble_increment[it].value;
        if (!(v > 0.0)) continue;
        int nn = it + 1;
        double envelope = picard_decay_log(nn, 0.0, problem.exponents, problem.kernel);
        sum_ny += nn * (std::log(v) - envelope);
        sum_n2 += static_cast<double>(nn) * nn;
    }
    study.fitted_log_c = sum_n2 > 0.0 ? sum_ny / sum_n2 : 0.0;

    std::vector<double> values;
    values.reserve(iterations);
    for (const auto& e : study.ensemble_increment) values.push_back(e.value);
    std::size_t peak = std::max_element(values.begin(), values.end()) - values.begin();
    std::vector<double> tail(values.begin() + peak, values.end());
    study.ensemble_eventually_decreasing = non_increasing(tail);
    return study;
}

MomentStudy moment_growth_check(const ProblemSpec& problem, const StoppingConfig& cfg,
                                std::vector<double> radii, const EnsembleConfig& ensemble,
                                double slack, double tol, int max_iter) {
    if (!problem.sigma.growth)
        throw ValidationError("moment check: sigma carries no growth declaration");
    double gamma = problem.sigma.growth->exponent;
    double limit = problem.exponents.q / problem.exponents.p;
    if (gamma > limit) {
        std::ostringstream msg;
        msg << "moment check: sigma growth exponent " << gamma
            << " exceeds q/p = " << limit
            << "; the q-th moment bound requires growth exponent in [0, q/p]";
        throw ValidationError(msg.str());
    }
    if (radii.size() < 2) throw std::invalid_argument("moment check: need at least two boxes");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || radii[i] > problem.eval_radius + 1e-12)
            throw std::invalid_argument("moment check: box radii must lie in (0, eval radius]");
        if (i > 0 && !(radii[i] > radii[i - 1]))
            throw std::invalid_argument("moment check: radii must be strictly increasing");
    }
    if (ensemble.realizations < 2) throw std::invalid_argument("moment check: ensemble too small");
    validate(problem);

    const int n = ensemble.realizations;
    const double q = problem.exponents.q;
    FieldGrid geometry = FieldGrid::uniform(problem.box.time_horizon, problem.grid.time_steps,
                                            problem.box.dim, problem.grid.sites_per_dim,
                                            problem.box.radius, problem.exponents.p);
    auto outer = node_mask(geometry, problem.box.time_horizon, radii.back());
    // Per box: positions inside `outer` (the boxes are nested).
    std::vector<std::vector<std::size_t>> box_pos(radii.size());
    for (std::size_t b = 0; b < radii.size(); ++b) {
        auto sub = node_mask(geometry, problem.box.time_horizon, radii[b]);
        std::size_t cursor = 0;
        for (std::size_t j = 0; j < outer.size(); ++j)
            if (cursor < sub.size() && outer[j] == sub[cursor]) {
                box_pos[b].push_back(j);
                ++cursor;
            }
    }

    std::vector<std::vector<double>> rows(n);
    parallel_for(n, ensemble.workers, [&](long i) {
        std::uint64_t seed = realization_seed(ensemble.master_seed, static_cast<std::uint64_t>(i));
        NoiseRealization real = sample_noise(problem.noise, problem.box, seed);
        SolveResult sol = solve(problem, real, cfg, tol, max_iter);
        rows[i] = gather(sol.field.values, outer);
    });

    MomentStudy study;
    study.moment_exponent = q;
    study.growth_exponent = gamma;
    study.slack = slack;
    study.radii = radii;
    study.seed_sup.assign(n, std::vector<double>(radii.size(), 0.0));

    Rng rng(kBootstrapSeed);
    for (std::size_t b = 0; b < radii.size(); ++b) {
        auto sup_mean = [&](const std::vector<int>& pick) {
            double best = 0.0;
            for (std::size_t pos : box_pos[b]) {
                double mean = 0.0;
                for (int i : pick) mean += std::pow(std::abs(rows[i][pos]), q);
                mean /= pick.size();
                best = std::max(best, mean);
            }
            return best;
        };
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        Estimate est;
        est.value = sup_mean(all);
        est.count = n;
        double mean = 0.0, m2 = 0.0;
        std::vector<int> pick(n);
        for (int r = 0; r < kBootstrapResamples; ++r) {
            for (int i = 0; i < n; ++i) pick[i] = static_cast<int>(rng.uniform() * n);
            double v = sup_mean(pick);
            double delta = v - mean;
            mean += delta / (r + 1);
            m2 += delta * (v - mean);
        }
        est.std_error = std::sqrt(m2 / (kBootstrapResamples - 1));
        study.ladder.push_back(est);
        for (int i = 0; i < n; ++i) {
            double best = 0.0;
            for (std::size_t pos : box_pos[b])
                best = std::max(best, std::pow(std::abs(rows[i][pos]), q));
            study.seed_sup[i][b] = best;
        }
    }

    double last = study.ladder[radii.size() - 1].value;
    double prev = study.ladder[radii.size() - 2].value;
    double rel = (last - prev) / std::max(prev, 1e-300);
    study.bounded = rel <= slack;
    return study;
}

StoppingStudy stopping_time_study(const LevyMarkSpec& spec, const Box& box,
                                  std::vector<int> levels, double eta,
                                  const EnsembleConfig& ensemble) {
    spec.validate();
    if (levels.empty()) throw std::invalid_argument("stopping study: empty level ladder");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 1) throw std::invalid_argument("stopping study: levels must be >= 1");
        if (i > 0 && levels[i] <= levels[i - 1])
            throw std::invalid_argument("stopping study: levels must be strictly increasing");
    }
    if (!(eta > 0.0)) throw std::invalid_argument("stopping study: eta must be positive");
    if (ensemble.realizations < 1) throw std::invalid_argument("stopping study: empty ensemble");

    const int n = ensemble.realizations;
    const double inf = std::numeric_limits<double>::infinity();
    StoppingStudy study;
    study.eta = eta;
    study.taus.assign(n, std::vector<double>(levels.size(), inf));

    parallel_for(n, ensemble.workers, [&](long i) {
        std::uint64_t seed = realization_seed(ensemble.master_seed, static_cast<std::uint64_t>(i));
        NoiseRealization real = sample_noise(spec, box, seed);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            auto tau = stopping_time(real, StoppingConfig{levels[l], eta});
            if (tau) study.taus[i][l] = *tau;
        }
    });

    for (const auto& row : study.taus)
        for (std::size_t l = 1; l < row.size(); ++l)
            if (row[l] < row[l - 1]) ++study.monotonicity_violations;

    // Super-threshold intensity over the box by tensor quadrature.
    auto intensity = [&](int level) {
        auto mass_at = [&](const Point& x) {
            return strict_tail_mass(spec, level * threshold_weight(x, box.dim, eta));
        };
        double R = box.radius;
        int panels = quad::panel_count(-R, R, std::max(0.25 * R, 0.05), 64);
        auto integrate_dim = [&](auto&& self, int d, Point x) -> double {
            auto f = [&](double v) {
                Point y = x;
                y[d] = v;
                if (d + 1 == box.dim) return mass_at(y);
                return self(self, d + 1, y);
            };
            return quad::integrate(f, -R, R, 24, panels);
        };
        return box.time_horizon * integrate_dim(integrate_dim, 0, Point{0.0, 0.0, 0.0});
    };

    for (std::size_t l = 0; l < levels.size(); ++l) {
        StoppingPoint pt;
        pt.level = levels[l];
        long hits = 0;
        for (const auto& row : study.taus)
            if (row[l] <= box.time_horizon) ++hits;
        pt.empirical_prob = static_cast<double>(hits) / n;
        pt.intensity = intensity(levels[l]);
        pt.exact_prob = -std::expm1(-pt.intensity);
        // Shells of unit measure: on shell m the weight is at least
        // 1 + r(m-1)^eta, and shells beyond the circumscribed ball of the box
        // cannot contribute.
        double circum = std::sqrt(static_cast<double>(box.dim)) * box.radius;
        double sum = 0.0;
        for (int m = 1; shell_radius(m - 1, box.dim) <= circum; ++m) {
            double weight = 1.0 + std::pow(shell_radius(m - 1, box.dim), eta);
            sum += box.time_horizon * strict_tail_mass(spec, levels[l] * weight);
        }
        pt.shell_sum_bound = sum;
        study.points.push_back(pt);
    }

    study.strictly_decreasing = true;
    for (std::size_t l = 1; l < study.points.size(); ++l)
        if (!(study.points[l].empirical_prob < study.points[l - 1].empirical_prob))
            study.strictly_decreasing = false;
    return study;
}

}  // namespace spde
