#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boxde/bchm.hpp"
#include "boxde/benchmarks.hpp"
#include "boxde/core.hpp"
#include "boxde/rng.hpp"
#include "boxde/telemetry.hpp"

namespace boxde {

enum class EngineKind { Classic, LShade };

std::string_view engine_name(EngineKind e);
EngineKind parse_engine(std::string_view s);

/// DE/rand/1/bin.
struct ClassicDEParams {
    std::size_t population_size = 50;
    double scale_factor = 0.5;
    double crossover_rate = 0.5;
};

struct ShadeParams {
    std::size_t memory_size = 6;
    /// Archive capacity as a multiple of the current population size.
    double archive_rate = 1.0;
    /// Initial population is round(init_population_factor * n).
    double init_population_factor = 18.0;
    std::size_t min_population = 4;
    double p_max = 0.2;
    bool reduction_enabled = true;
};

/// Marks a CR memory slot whose successful CR values all were zero.
inline constexpr double kTerminalCR = -1.0;

struct ShadeState {
    Vector memory_F;
    Vector memory_CR;
    std::size_t memory_index = 0;
    std::vector<Vector> archive;
    double archive_rate = 1.0;
    std::size_t initial_population = 0;
    std::size_t min_population = 4;
    double p_max = 0.2;
    std::uint64_t max_evaluations = 0;
    bool reduction_enabled = true;

    static ShadeState init(const ShadeParams& params, std::size_t dimension, std::uint64_t max_evaluations);

    std::size_t archive_capacity(std::size_t population_size) const;
};

/// Weighted Lehmer mean sum(w x^2) / sum(w x).
double weighted_lehmer_mean(std::span<const double> values, std::span<const double> weights);
double weighted_arithmetic_mean(std::span<const double> values, std::span<const double> weights);

/// Cauchy-sampled scale factor: resampled while <= 0, truncated to 1.
double sample_scale_factor(UnitSource& rng, double location);
/// Normal-sampled crossover rate clipped to [0,1]; 0 for a terminal slot.
double sample_crossover_rate(UnitSource& rng, double location);

/// Linear population size reduction schedule.
std::size_t lpsr_target_size(const ShadeState& state, std::uint64_t evaluations_used);

/// Owns the BCHM for one run: fixed method or the adaptive pool, the
/// per-generation context (mean, Beta fit) and the adaptive bookkeeping.
class BchmDriver {
public:
    BchmDriver(Method method, double beta_epsilon = 0.1, AdaptiveConfig adaptive = {});

    Method method() const { return method_; }

    void begin_generation(const Population& pop, const Bounds& bounds);

    struct Applied {
        CorrectionOutcome outcome;
        std::optional<std::size_t> pool_index;
    };

    Applied apply(std::span<const double> y, std::span<const double> target, std::span<const double> pbest,
                  UnitSource& correction_rng, UnitSource& selection_rng);

    /// Called after selection for every applied correction.
    void report(const Applied& applied, bool success);

    /// Advances the generation counter; runs the adaptive update every
    /// `update_period` generations.
    void end_generation();

    std::optional<Vector> probabilities() const;
    const std::optional<AdaptiveState>& adaptive_state() const { return adaptive_; }

private:
    Method method_;
    double beta_epsilon_;
    const Bounds* bounds_ = nullptr;
    Vector mean_;
    BetaFitParams beta_;
    bool beta_ready_ = false;
    std::optional<AdaptiveState> adaptive_;
    std::size_t generations_since_update_ = 0;
};

/// What one generation needs besides the population.
struct GenerationEnv {
    const Problem& problem;
    Evaluator& evaluator;
    BchmDriver& bchm;
    RngStream& variation_rng;
    RngStream& correction_rng;
    RngStream& selection_rng;
    std::uint64_t budget;
    Trajectory* telemetry = nullptr;
};

/// One DE/rand/1/bin generation. Stops early (keeping the remaining
/// targets) once the evaluation budget is spent.
Population classic_generation(Population pop, const ClassicDEParams& params, GenerationEnv& env);

/// One L-SHADE generation, including memory update, archive maintenance
/// and population size reduction.
Population lshade_generation(Population pop, ShadeState& state, GenerationEnv& env);

/// Rand/1 mutant x_r1 + F (x_r2 - x_r3).
Vector rand1_mutant(std::span<const double> base, std::span<const double> a, std::span<const double> b, double f);

/// Binomial crossover: mutant component if u_i < CR or i == forced_index.
Vector binomial_crossover(std::span<const double> target, std::span<const double> mutant, double cr,
                          std::size_t forced_index, UnitSource& rng);

/// Thrown by validate(); `what()` lists every offending field.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> fields);
    const std::vector<std::string>& fields() const { return fields_; }

private:
    std::vector<std::string> fields_;
};

struct RunConfig {
    std::shared_ptr<const Problem> problem;
    EngineKind engine = EngineKind::Classic;
    Method bchm = Method::Saturation;
    /// Feasible evaluations; 0 is invalid.
    std::uint64_t budget = 0;
    std::optional<double> target_error;
    std::uint64_t seed = 1;
    bool count_infeasible_evals = false;
    /// 0 picks a cap proportional to the budget.
    std::uint64_t max_generations = 0;
    ClassicDEParams classic;
    ShadeParams shade;
    double beta_epsilon = 0.1;
    AdaptiveConfig adaptive;
    ClassifierConfig classifier;
};

/// Throws ConfigError naming every invalid field.
void validate(const RunConfig& cfg);

struct RunResult {
    double final_best_error = kInfinity;
    double best_fitness = kInfinity;
    Vector best_position;
    PopulationStats final_stats;
    BehaviourClass behaviour = BehaviourClass::BB;
    /// False for problems without a known optimum value; `behaviour` is
    /// then variance-only (PC or BB).
    bool optimum_known = true;
    std::uint64_t evaluations = 0;
    std::uint64_t generations = 0;
    Trajectory trajectory;
    std::optional<AdaptiveState> adaptive;
};

RunResult run(const RunConfig& cfg);

}  // namespace boxde
