#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "boxde/core.hpp"
#include "boxde/rng.hpp"

namespace boxde {

/// Bound constraint handling methods. `Adaptive` is resolved to one of
/// the pool methods per infeasible trial by AdaptiveSelector.
enum class Method {
    Saturation,
    Mirror,
    Uniform,
    Beta,
    ExpTarget,
    ExpBest,
    ExpMidpoint,
    VectorTarget,
    VectorBest,
    VectorMidpoint,
    Dismiss,
    Adaptive,
};

inline constexpr std::array<Method, 12> kAllMethods{
    Method::Saturation, Method::Mirror,       Method::Uniform,    Method::Beta,
    Method::ExpTarget,  Method::ExpBest,      Method::ExpMidpoint, Method::VectorTarget,
    Method::VectorBest, Method::VectorMidpoint, Method::Dismiss,  Method::Adaptive,
};

/// Config/CSV identifiers: sat, mirror, uniform, beta, expTarget, ...
std::string_view method_id(Method m);
/// Throws std::invalid_argument("unknown method: <id>").
Method parse_method(std::string_view id);

enum class Reference { Target, PBest, Midpoint };

/// The result of repairing one trial vector.
struct CorrectionOutcome {
    /// Empty when the trial was dismissed.
    std::optional<Vector> corrected;
    std::size_t components_corrected = 0;
    /// Only set by vector-wise corrections.
    std::optional<double> vector_alpha;

    bool dismissed() const { return !corrected.has_value(); }
};

/// Beta shape parameters fitted to the population moments, per component.
struct BetaFitParams {
    Vector alpha;
    Vector beta;
    Vector m;
    Vector v;
    double epsilon = 0.1;
    /// Components where no valid Beta exists; those are resampled uniformly.
    std::vector<bool> fallback_mask;
};

/// Moment-matched Beta shapes on the normalised box:
///   m = (mean - a)/(b - a) clamped into [eps, 1 - eps], v = var/(b - a)^2,
///   alpha = m (m (1 - m)/v - 1), beta = alpha (1 - m)/m.
/// Non-positive shapes or v = 0 set the fallback flag instead of failing.
BetaFitParams fit_beta_params(const PopulationStats& stats, const Bounds& bounds, double epsilon = 0.1);

/// Everything a correction may consult besides the trial itself. The
/// vectors are borrowed and must outlive the call.
struct CorrectionContext {
    const Bounds* bounds = nullptr;
    std::span<const double> target;
    std::span<const double> pbest;
    std::span<const double> population_mean;
    const BetaFitParams* beta = nullptr;

    std::span<const double> reference(Reference r) const;
};

CorrectionOutcome saturate(std::span<const double> y, const Bounds& bounds);
CorrectionOutcome mirror(std::span<const double> y, const Bounds& bounds);
CorrectionOutcome uniform_resample(std::span<const double> y, const Bounds& bounds, UnitSource& rng);
CorrectionOutcome beta_correct(std::span<const double> y, const Bounds& bounds, const BetaFitParams& params,
                               UnitSource& rng);
CorrectionOutcome beta_correct(std::span<const double> y, const Bounds& bounds, const PopulationStats& stats,
                               UnitSource& rng, double epsilon = 0.1);

/// Exponentially confined correction of one lower/upper violation towards
/// `reference`, given the unit draw r. Exposed for tests of the limits.
double exp_confined_component(double y, double lower, double upper, double reference, double r);

CorrectionOutcome exp_confined(std::span<const double> y, const Bounds& bounds, std::span<const double> reference,
                               UnitSource& rng);

/// Largest step alpha in [0,1] such that R + alpha (y - R) stays in the box.
/// Throws std::invalid_argument("degenerate reference") if R_i == y_i on a
/// violated component.
double vector_alpha(std::span<const double> y, std::span<const double> reference, const Bounds& bounds);

/// c = alpha y + (1 - alpha) R on all components.
CorrectionOutcome vector_correct(std::span<const double> y, std::span<const double> reference, const Bounds& bounds);

CorrectionOutcome dismiss(std::span<const double> y, const Bounds& bounds);

/// Dispatches a concrete (non-adaptive) method. Feasible input is
/// returned unchanged without touching the stream.
CorrectionOutcome correct(Method method, std::span<const double> y, const CorrectionContext& ctx, UnitSource& rng);

/// Tunables of the adaptive selector.
struct AdaptiveConfig {
    std::size_t update_period = 25;
    double floor_probability = 0.05;
};

struct AdaptiveState {
    std::vector<Method> pool;
    Vector probabilities;
    std::vector<std::uint64_t> uses;
    std::vector<std::uint64_t> successes;
    std::size_t update_period = 25;
    double floor_probability = 0.05;

    /// Pool {vectorBest, expBest, sat, vectorTarget, beta}, uniform probabilities.
    static AdaptiveState fresh(const AdaptiveConfig& cfg = {});
};

/// Draws a pool index by CDF inversion and counts the use.
std::size_t adaptive_select(AdaptiveState& state, UnitSource& rng);

/// Laplace-smoothed success ratios, normalised, floored, renormalised.
/// Counters are reset.
AdaptiveState adaptive_update(const AdaptiveState& state);

/// Floors `p` at `floor` while keeping the sum at 1; the unfloored entries
/// keep their relative proportions.
Vector apply_probability_floor(Vector p, double floor);

}  // namespace boxde
