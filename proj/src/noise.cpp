#include "spde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spde/rng.hpp"

namespace spde {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

const StableMarks* as_stable(const LevyMarkSpec& spec) {
    return std::get_if<StableMarks>(&spec.family);
}
const DiscreteMarks* as_discrete(const LevyMarkSpec& spec) {
    return std::get_if<DiscreteMarks>(&spec.family);
}
}  // namespace

LevyMarkSpec LevyMarkSpec::stable(double alpha, double c, double cutoff, double p, double q,
                                  double drift) {
    LevyMarkSpec spec;
    spec.family = StableMarks{alpha, c};
    spec.cutoff = cutoff;
    spec.drift = drift;
    spec.p = p;
    spec.q = q;
    spec.validate();
    return spec;
}

LevyMarkSpec LevyMarkSpec::discrete(std::vector<MarkAtom> atoms, double cutoff, double p,
                                    double q, double drift) {
    LevyMarkSpec spec;
    spec.family = DiscreteMarks{std::move(atoms)};
    spec.cutoff = cutoff;
    spec.drift = drift;
    spec.p = p;
    spec.q = q;
    spec.validate();
    return spec;
}

void LevyMarkSpec::validate() const {
    if (!(cutoff > 0.0) || !(cutoff <= 1.0))
        throw ValidationError("LevyMarkSpec: cutoff must lie in (0, 1]; total intensity below it is unbounded");
    if (!(p > 0.0) || !(p < 2.0)) throw ValidationError("LevyMarkSpec: p must lie in (0, 2)");
    if (!(q > 0.0) || !(q <= p)) throw ValidationError("LevyMarkSpec: q must lie in (0, p]");
    if (const auto* s = as_stable(*this)) {
        if (!(s->alpha > 0.0) || !(s->alpha < 2.0))
            throw ValidationError("LevyMarkSpec: stable alpha must lie in (0, 2)");
        if (!(s->c > 0.0)) throw ValidationError("LevyMarkSpec: stable c must be positive");
    } else if (const auto* d = as_discrete(*this)) {
        for (const auto& a : d->atoms) {
            if (a.z == 0.0) throw ValidationError("LevyMarkSpec: discrete mark at z = 0");
            if (!(a.rate > 0.0)) throw ValidationError("LevyMarkSpec: discrete rate must be positive");
        }
    }
    if (moment_integral(*this, p, JumpRegion::small_jumps) == kInf)
        throw ValidationError("LevyMarkSpec: small-jump p-moment diverges (requires p > alpha for stable marks)");
    if (moment_integral(*this, q, JumpRegion::big_jumps) == kInf)
        throw ValidationError("LevyMarkSpec: big-jump q-moment diverges (requires q < alpha for stable marks)");
    if (p < 1.0) {
        // Raw-sum convention: the declared drift must cancel the small-jump
        // compensator exactly, leaving no deterministic part.
        double mean = small_jump_mean(*this);
        if (drift != mean) {
            std::ostringstream msg;
            msg << "LevyMarkSpec: with p < 1 the drift must equal the small-jump mean "
                << mean << " (got " << drift << ")";
            throw ValidationError(msg.str());
        }
    }
}

double moment_integral(const LevyMarkSpec& spec, double e, JumpRegion region) {
    if (const auto* s = as_stable(spec)) {
        if (region == JumpRegion::small_jumps)
            return e > s->alpha ? 2.0 * s->c / (e - s->alpha) : kInf;
        return e < s->alpha ? 2.0 * s->c / (s->alpha - e) : kInf;
    }
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms) {
        bool small = std::abs(a.z) <= 1.0;
        if ((region == JumpRegion::small_jumps) == small)
            acc += a.rate * std::pow(std::abs(a.z), e);
    }
    return acc;
}

double tail_mass(const LevyMarkSpec& spec, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("tail_mass: threshold must be positive");
    if (const auto* s = as_stable(spec))
        return 2.0 * s->c / s->alpha * std::pow(threshold, -s->alpha);
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) >= threshold) acc += a.rate;
    return acc;
}

double strict_tail_mass(const LevyMarkSpec& spec, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("strict_tail_mass: threshold must be positive");
    if (const auto* s = as_stable(spec))
        return 2.0 * s->c / s->alpha * std::pow(threshold, -s->alpha);
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) > threshold) acc += a.rate;
    return acc;
}

double band_mean(const LevyMarkSpec& spec) {
    if (as_stable(spec)) return 0.0;  // symmetric band
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) >= spec.cutoff && std::abs(a.z) <= 1.0) acc += a.rate * a.z;
    return acc;
}

double small_jump_mean(const LevyMarkSpec& spec) {
    if (as_stable(spec)) return 0.0;
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) <= 1.0) acc += a.rate * a.z;
    return acc;
}

double discarded_moment_bound(const LevyMarkSpec& spec) {
    if (const auto* s = as_stable(spec)) {
        // integral of |z|^p over |z| < cutoff
        return 2.0 * s->c * std::pow(spec.cutoff, spec.p - s->alpha) / (spec.p - s->alpha);
    }
    const auto* d = as_discrete(spec);
    double acc = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) < spec.cutoff) acc += a.rate * std::pow(std::abs(a.z), spec.p);
    return acc;
}

namespace {

double draw_mark(const LevyMarkSpec& spec, Rng& rng) {
    if (const auto* s = std::get_if<StableMarks>(&spec.family)) {
        double u_sign = rng.uniform();
        double u_mag = rng.uniform();
        // Inverse CDF of the normalized tail: P(|z| > r) = (cutoff/r)^alpha.
        double mag = spec.cutoff * std::pow(1.0 - u_mag, -1.0 / s->alpha);
        return u_sign < 0.5 ? -mag : mag;
    }
    const auto* d = std::get_if<DiscreteMarks>(&spec.family);
    double total = 0.0;
    for (const auto& a : d->atoms)
        if (std::abs(a.z) >= spec.cutoff) total += a.rate;
    double target = rng.uniform() * total;
    double acc = 0.0;
    for (const auto& a : d->atoms) {
        if (std::abs(a.z) < spec.cutoff) continue;
        acc += a.rate;
        if (target < acc) return a.z;
    }
    // Only reachable through rounding at the very top of the CDF.
    for (auto it = d->atoms.rbegin(); it != d->atoms.rend(); ++it)
        if (std::abs(it->z) >= spec.cutoff) return it->z;
    throw std::logic_error("draw_mark: empty retained mark table");
}

NoiseRealization strip_atoms(const NoiseRealization& real) {
    NoiseRealization out = real;
    out.atoms.clear();
    return out;
}

}  // namespace

NoiseRealization sample_noise(const LevyMarkSpec& spec, const Box& box, std::uint64_t seed) {
    spec.validate();
    if (!(box.time_horizon >= 0.0) || !(box.radius > 0.0))
        throw ValidationError("sample_noise: box must have T >= 0 and R > 0");

    NoiseRealization real;
    real.box = box;
    real.cutoff = spec.cutoff;
    real.seed = seed;
    real.comp.compensated = spec.p >= 1.0;
    real.comp.band_mean = band_mean(spec);
    real.comp.drift_density =
        real.comp.compensated ? spec.drift - real.comp.band_mean : 0.0;
    real.comp.discarded_moment_bound = discarded_moment_bound(spec);

    double mass = tail_mass(spec, spec.cutoff);
    double mean = box.time_horizon * mass;
    for (int i = 0; i < box.dim; ++i) mean *= 2.0 * box.radius;

    Rng rng(seed);
    std::uint64_t count = rng.poisson(mean);
    real.atoms.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NoiseAtom atom{};
        atom.t = box.time_horizon * rng.uniform();
        for (int k = 0; k < box.dim; ++k) atom.x[k] = box.radius * (2.0 * rng.uniform() - 1.0);
        atom.z = draw_mark(spec, rng);
        real.atoms.push_back(atom);
    }
    return real;
}

NoiseRealization truncate_jump_size(const NoiseRealization& real, double level) {
    if (!(level > 0.0)) throw std::invalid_argument("truncate_jump_size: level must be positive");
    NoiseRealization out = strip_atoms(real);
    for (const auto& a : real.atoms) {
        double mag = std::abs(a.z);
        if (mag <= 1.0 || mag <= level) out.atoms.push_back(a);
    }
    return out;
}

NoiseRealization restrict_support(const NoiseRealization& real, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("restrict_support: radius must be positive");
    NoiseRealization out = strip_atoms(real);
    for (const auto& a : real.atoms) {
        if (std::abs(a.z) <= 1.0 || norm_inf(a.x, real.box.dim) <= radius)
            out.atoms.push_back(a);
    }
    return out;
}

double threshold_weight(const Point& x, int dim, double eta) {
    return 1.0 + std::pow(norm2(x, dim), eta);
}

NoiseRealization truncate_adaptive(const NoiseRealization& real, const StoppingConfig& cfg) {
    if (cfg.level < 1) throw std::invalid_argument("truncate_adaptive: level must be >= 1");
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("truncate_adaptive: eta must be positive");
    NoiseRealization out = strip_atoms(real);
    for (const auto& a : real.atoms) {
        double bound = cfg.level * threshold_weight(a.x, real.box.dim, cfg.eta);
        if (std::abs(a.z) <= bound) out.atoms.push_back(a);
    }
    return out;
}

std::optional<double> stopping_time(const NoiseRealization& real, const StoppingConfig& cfg) {
    if (cfg.level < 1) throw std::invalid_argument("stopping_time: level must be >= 1");
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("stopping_time: eta must be positive");
    std::optional<double> first;
    for (const auto& a : real.atoms) {
        double bound = cfg.level * threshold_weight(a.x, real.box.dim, cfg.eta);
        if (std::abs(a.z) > bound && (!first || a.t < *first)) first = a.t;
    }
    return first;
}

double shell_radius(int n, int dim) {
    if (n < 0) throw std::invalid_argument("shell_radius: n must be >= 0");
    if (dim < 1 || dim > 3) throw std::invalid_argument("shell_radius: dim must be 1, 2 or 3");
    if (n == 0) return 0.0;
    double d = static_cast<double>(dim);
    // Ball of measure n: r = pi^(-1/2) * Gamma(1 + d/2)^(1/d) * n^(1/d).
    return std::exp(-0.5 * std::log(kPi) + std::lgamma(1.0 + d / 2.0) / d +
                    std::log(static_cast<double>(n)) / d);
}

}  // namespace spde
