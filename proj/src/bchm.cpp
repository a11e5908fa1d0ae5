#include "boxde/bchm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace boxde {

namespace {

struct MethodName {
    Method method;
    std::string_view id;
};

constexpr std::array<MethodName, 12> kMethodNames{{
    {Method::Saturation, "sat"},
    {Method::Mirror, "mirror"},
    {Method::Uniform, "uniform"},
    {Method::Beta, "beta"},
    {Method::ExpTarget, "expTarget"},
    {Method::ExpBest, "expBest"},
    {Method::ExpMidpoint, "expMidpoint"},
    {Method::VectorTarget, "vectorTarget"},
    {Method::VectorBest, "vectorBest"},
    {Method::VectorMidpoint, "vectorMidpoint"},
    {Method::Dismiss, "dismiss"},
    {Method::Adaptive, "adaptive"},
}};

void check_dimension(std::span<const double> y, const Bounds& bounds) {
    if (y.size() != bounds.dimension()) throw std::invalid_argument("dimension mismatch");
}

CorrectionOutcome unchanged(std::span<const double> y) {
    return CorrectionOutcome{Vector(y.begin(), y.end()), 0, std::nullopt};
}

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::string_view method_id(Method m) {
    for (const auto& e : kMethodNames)
        if (e.method == m) return e.id;
    throw std::invalid_argument("unknown method");
}

Method parse_method(std::string_view id) {
    for (const auto& e : kMethodNames)
        if (e.id == id) return e.method;
    throw std::invalid_argument("unknown method: " + std::string(id));
}

std::span<const double> CorrectionContext::reference(Reference r) const {
    switch (r) {
        case Reference::Target: return target;
        case Reference::PBest: return pbest;
        case Reference::Midpoint: return population_mean;
    }
    return target;
}

CorrectionOutcome saturate(std::span<const double> y, const Bounds& bounds) {
    check_dimension(y, bounds);
    CorrectionOutcome out{Vector(y.begin(), y.end()), 0, std::nullopt};
    auto& c = *out.corrected;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < bounds.lower(i)) {
            c[i] = bounds.lower(i);
            ++out.components_corrected;
        } else if (c[i] > bounds.upper(i)) {
            c[i] = bounds.upper(i);
            ++out.components_corrected;
        }
    }
    return out;
}

CorrectionOutcome mirror(std::span<const double> y, const Bounds& bounds) {
    check_dimension(y, bounds);
    CorrectionOutcome out{Vector(y.begin(), y.end()), 0, std::nullopt};
    auto& c = *out.corrected;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = bounds.lower(i);
        const double b = bounds.upper(i);
        if (bounds.contains(i, c[i])) continue;
        ++out.components_corrected;
        // A single reflection is the textbook formula; larger excursions fold
        // into the box, which is what repeated reflection converges to.
        const double once = c[i] < a ? 2.0 * a - c[i] : 2.0 * b - c[i];
        if (bounds.contains(i, once)) {
            c[i] = once;
            continue;
        }
        const double w = b - a;
        double t = std::fmod(c[i] - a, 2.0 * w);
        if (t < 0.0) t += 2.0 * w;
        if (t > w) t = 2.0 * w - t;
        c[i] = clamp_to(a + t, a, b);
    }
    return out;
}

CorrectionOutcome uniform_resample(std::span<const double> y, const Bounds& bounds, UnitSource& rng) {
    check_dimension(y, bounds);
    CorrectionOutcome out{Vector(y.begin(), y.end()), 0, std::nullopt};
    auto& c = *out.corrected;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (bounds.contains(i, c[i])) continue;
        ++out.components_corrected;
        c[i] = clamp_to(draw(rng, UniformDist{bounds.lower(i), bounds.upper(i)}), bounds.lower(i), bounds.upper(i));
    }
    return out;
}

BetaFitParams fit_beta_params(const PopulationStats& stats, const Bounds& bounds, double epsilon) {
    const std::size_t n = bounds.dimension();
    if (stats.mean.size() != n || stats.variance.size() != n) throw std::invalid_argument("dimension mismatch");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 0.5)");
    BetaFitParams p;
    p.epsilon = epsilon;
    p.alpha.assign(n, 0.0);
    p.beta.assign(n, 0.0);
    p.m.assign(n, 0.0);
    p.v.assign(n, 0.0);
    p.fallback_mask.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = bounds.width(i);
        const double m = clamp_to((stats.mean[i] - bounds.lower(i)) / w, epsilon, 1.0 - epsilon);
        const double v = stats.variance[i] / (w * w);
        p.m[i] = m;
        p.v[i] = v;
        if (!(v > 0.0)) {
            p.fallback_mask[i] = true;
            continue;
        }
        const double alpha = m * (m * (1.0 - m) / v - 1.0);
        const double beta = alpha * (1.0 - m) / m;
        p.alpha[i] = alpha;
        p.beta[i] = beta;
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            p.fallback_mask[i] = true;
    }
    return p;
}

CorrectionOutcome beta_correct(std::span<const double> y, const Bounds& bounds, const BetaFitParams& params,
                               UnitSource& rng) {
    check_dimension(y, bounds);
    if (params.alpha.size() != bounds.dimension()) throw std::invalid_argument("dimension mismatch");
    CorrectionOutcome out{Vector(y.begin(), y.end()), 0, std::nullopt};
    auto& c = *out.corrected;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (bounds.contains(i, c[i])) continue;
        ++out.components_corrected;
        const double a = bounds.lower(i);
        const double b = bounds.upper(i);
        if (params.fallback_mask[i]) {
            c[i] = clamp_to(draw(rng, UniformDist{a, b}), a, b);
        } else {
            const double u = draw(rng, BetaDist{params.alpha[i], params.beta[i]});
            c[i] = clamp_to(a + u * (b - a), a, b);
        }
    }
    return out;
}

CorrectionOutcome beta_correct(std::span<const double> y, const Bounds& bounds, const PopulationStats& stats,
                               UnitSource& rng, double epsilon) {
    return beta_correct(y, bounds, fit_beta_params(stats, bounds, epsilon), rng);
}

namespace {

// log(1 + s (e^d - 1)) for d <= 0 and s in [0, 1], accurate at both ends of s.
double log_mix(double s, double d) {
    const double t = s * std::expm1(d);
    if (t > -0.5) return std::log1p(t);
    return std::log((1.0 - s) + s * std::exp(d));
}

}  // namespace

double exp_confined_component(double y, double lower, double upper, double reference, double r) {
    double c = y;
    if (y < lower) {
        c = lower - log_mix(r, lower - reference);
    } else if (y > upper) {
        c = upper + log_mix(1.0 - r, reference - upper);
    }
    return clamp_to(c, lower, upper);
}

CorrectionOutcome exp_confined(std::span<const double> y, const Bounds& bounds, std::span<const double> reference,
                               UnitSource& rng) {
    check_dimension(y, bounds);
    if (reference.size() != y.size()) throw std::invalid_argument("dimension mismatch");
    CorrectionOutcome out{Vector(y.begin(), y.end()), 0, std::nullopt};
    auto& c = *out.corrected;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (bounds.contains(i, c[i])) continue;
        ++out.components_corrected;
        const double r = rng.next_unit();
        c[i] = exp_confined_component(c[i], bounds.lower(i), bounds.upper(i), reference[i], r);
    }
    return out;
}

double vector_alpha(std::span<const double> y, std::span<const double> reference, const Bounds& bounds) {
    check_dimension(y, bounds);
    if (reference.size() != y.size()) throw std::invalid_argument("dimension mismatch");
    double alpha = 1.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = reference[i];
        double ai = 1.0;
        if (y[i] < bounds.lower(i)) {
            if (r == y[i]) throw std::invalid_argument("degenerate reference");
            ai = (r - bounds.lower(i)) / (r - y[i]);
        } else if (y[i] > bounds.upper(i)) {
            if (r == y[i]) throw std::invalid_argument("degenerate reference");
            ai = (bounds.upper(i) - r) / (y[i] - r);
        }
        alpha = std::min(alpha, ai);
    }
    return clamp_to(alpha, 0.0, 1.0);
}

CorrectionOutcome vector_correct(std::span<const double> y, std::span<const double> reference, const Bounds& bounds) {
    const double alpha = vector_alpha(y, reference, bounds);
    CorrectionOutcome out{Vector(y.size()), count_violations(y, bounds), alpha};
    auto& c = *out.corrected;
    if (alpha == 1.0) {
        c.assign(y.begin(), y.end());
        return out;
    }
    for (std::size_t i = 0; i < y.size(); ++i)
        c[i] = clamp_to(reference[i] + alpha * (y[i] - reference[i]), bounds.lower(i), bounds.upper(i));
    return out;
}

CorrectionOutcome dismiss(std::span<const double> y, const Bounds& bounds) {
    check_dimension(y, bounds);
    const std::size_t violations = count_violations(y, bounds);
    if (violations == 0) return unchanged(y);
    return CorrectionOutcome{std::nullopt, violations, std::nullopt};
}

CorrectionOutcome correct(Method method, std::span<const double> y, const CorrectionContext& ctx, UnitSource& rng) {
    if (ctx.bounds == nullptr) throw std::invalid_argument("correction context has no bounds");
    const Bounds& bounds = *ctx.bounds;
    check_dimension(y, bounds);
    if (count_violations(y, bounds) == 0) {
        auto out = unchanged(y);
        if (method == Method::VectorTarget || method == Method::VectorBest || method == Method::VectorMidpoint)
            out.vector_alpha = 1.0;
        return out;
    }
    switch (method) {
        case Method::Saturation: return saturate(y, bounds);
        case Method::Mirror: return mirror(y, bounds);
        case Method::Uniform: return uniform_resample(y, bounds, rng);
        case Method::Beta:
            if (ctx.beta == nullptr) throw std::invalid_argument("beta correction needs fitted parameters");
            return beta_correct(y, bounds, *ctx.beta, rng);
        case Method::ExpTarget: return exp_confined(y, bounds, ctx.reference(Reference::Target), rng);
        case Method::ExpBest: return exp_confined(y, bounds, ctx.reference(Reference::PBest), rng);
        case Method::ExpMidpoint: return exp_confined(y, bounds, ctx.reference(Reference::Midpoint), rng);
        case Method::VectorTarget: return vector_correct(y, ctx.reference(Reference::Target), bounds);
        case Method::VectorBest: return vector_correct(y, ctx.reference(Reference::PBest), bounds);
        case Method::VectorMidpoint: return vector_correct(y, ctx.reference(Reference::Midpoint), bounds);
        case Method::Dismiss: return dismiss(y, bounds);
        case Method::Adaptive: throw std::invalid_argument("adaptive must be resolved by AdaptiveSelector");
    }
    throw std::invalid_argument("unknown method");
}

AdaptiveState AdaptiveState::fresh(const AdaptiveConfig& cfg) {
    AdaptiveState s;
    s.pool = {Method::VectorBest, Method::ExpBest, Method::Saturation, Method::VectorTarget, Method::Beta};
    const auto k = s.pool.size();
    if (cfg.update_period == 0) throw std::invalid_argument("update_period must be positive");
    if (!(cfg.floor_probability >= 0.0) || cfg.floor_probability * static_cast<double>(k) > 1.0)
        throw std::invalid_argument("floor_probability must lie in [0, 1/pool size]");
    s.probabilities.assign(k, 1.0 / static_cast<double>(k));
    s.uses.assign(k, 0);
    s.successes.assign(k, 0);
    s.update_period = cfg.update_period;
    s.floor_probability = cfg.floor_probability;
    return s;
}

std::size_t adaptive_select(AdaptiveState& state, UnitSource& rng) {
    const double u = rng.next_unit();
    double cumulative = 0.0;
    std::size_t pick = state.probabilities.size() - 1;
    for (std::size_t k = 0; k < state.probabilities.size(); ++k) {
        cumulative += state.probabilities[k];
        if (u < cumulative) {
            pick = k;
            break;
        }
    }
    ++state.uses[pick];
    return pick;
}

Vector apply_probability_floor(Vector p, double floor) {
    const std::size_t k = p.size();
    std::vector<bool> pinned(k, false);
    const Vector raw = p;
    for (;;) {
        std::size_t pinned_count = 0;
        std::size_t free_count = 0;
        double free_raw = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (pinned[i]) ++pinned_count;
            else {
                ++free_count;
                free_raw += raw[i];
            }
        }
        if (free_count == 0) break;
        const double free_mass = 1.0 - static_cast<double>(pinned_count) * floor;
        bool changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (pinned[i]) {
                p[i] = floor;
                continue;
            }
            p[i] = free_raw > 0.0 ? raw[i] / free_raw * free_mass : free_mass / static_cast<double>(free_count);
            if (p[i] < floor) {
                pinned[i] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return p;
}

AdaptiveState adaptive_update(const AdaptiveState& state) {
    AdaptiveState next = state;
    const std::size_t k = state.pool.size();
    Vector score(k);
    for (std::size_t i = 0; i < k; ++i)
        score[i] = (static_cast<double>(state.successes[i]) + 1.0) / (static_cast<double>(state.uses[i]) + 2.0);
    const double total = std::accumulate(score.begin(), score.end(), 0.0);
    for (auto& s : score) s /= total;
    next.probabilities = apply_probability_floor(std::move(score), state.floor_probability);
    std::fill(next.uses.begin(), next.uses.end(), 0);
    std::fill(next.successes.begin(), next.successes.end(), 0);
    return next;
}

}  // namespace boxde
