#include "boxde/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace boxde {

namespace {

std::vector<std::size_t> ranked_indices(const Population& pop) {
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pop.members[a].fitness < pop.members[b].fitness; });
    return idx;
}

// Draws an index in [0, n) different from every entry of `exclude`.
std::size_t draw_distinct(RngStream& rng, std::size_t n, std::initializer_list<std::size_t> exclude) {
    for (;;) {
        const std::size_t k = rng.below(n);
        if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) return k;
    }
}

Population initial_population(const Bounds& bounds, std::size_t size, Evaluator& eval, RngStream& rng) {
    Population pop;
    pop.members.resize(size);
    for (auto& m : pop.members) {
        m.position.resize(bounds.dimension());
        for (std::size_t i = 0; i < bounds.dimension(); ++i)
            m.position[i] = draw(rng, UniformDist{bounds.lower(i), bounds.upper(i)});
        m.fitness = eval(m.position);
    }
    pop.evaluations_used = eval.evaluations();
    return pop;
}

void trim_archive(std::vector<Vector>& archive, std::size_t capacity, RngStream& rng) {
    while (archive.size() > capacity) {
        const std::size_t k = rng.below(archive.size());
        archive[k] = std::move(archive.back());
        archive.pop_back();
    }
}

struct TrialResult {
    bool evaluated = false;
    double fitness = kInfinity;
    Vector position;
};

// Repairs (if needed) and evaluates trial j; shared by both engines.
TrialResult repair_and_evaluate(const Vector& trial, std::span<const double> target, std::span<const double> pbest,
                                GenerationEnv& env, std::uint64_t& corrections,
                                std::optional<BchmDriver::Applied>& applied) {
    TrialResult out;
    const auto& bounds = env.problem.bounds();
    applied.reset();
    if (count_violations(trial, bounds) == 0) {
        out.position = trial;
    } else {
        applied = env.bchm.apply(trial, target, pbest, env.correction_rng, env.selection_rng);
        ++corrections;
        if (applied->outcome.dismissed()) {
            // Strict-box evaluation of the raw trial: infinite, and counted
            // only when infeasible evaluations consume budget.
            out.fitness = env.evaluator(trial);
            return out;
        }
        out.position = *applied->outcome.corrected;
    }
    out.fitness = env.evaluator(out.position);
    out.evaluated = true;
    return out;
}

void finish_generation(Population& pop, std::span<const Vector> trials, std::uint64_t corrections,
                       GenerationEnv& env) {
    ++pop.generation;
    pop.evaluations_used = env.evaluator.evaluations();
    env.bchm.end_generation();
    if (env.telemetry != nullptr) {
        auto rec = record_generation(trials, pop, env.problem.bounds(), env.problem.optimum_value());
        rec.corrections_applied = corrections;
        rec.adaptive_probabilities = env.bchm.probabilities();
        env.telemetry->push(std::move(rec));
    }
}

}  // namespace

std::string_view engine_name(EngineKind e) { return e == EngineKind::Classic ? "classic" : "lshade"; }

EngineKind parse_engine(std::string_view s) {
    if (s == "classic") return EngineKind::Classic;
    if (s == "lshade") return EngineKind::LShade;
    throw std::invalid_argument("unknown engine: " + std::string(s));
}

ShadeState ShadeState::init(const ShadeParams& params, std::size_t dimension, std::uint64_t max_evaluations) {
    ShadeState s;
    s.memory_F.assign(params.memory_size, 0.5);
    s.memory_CR.assign(params.memory_size, 0.5);
    s.archive_rate = params.archive_rate;
    s.initial_population = std::max<std::size_t>(
        params.min_population, static_cast<std::size_t>(std::lround(params.init_population_factor * dimension)));
    s.min_population = params.min_population;
    s.p_max = params.p_max;
    s.max_evaluations = max_evaluations;
    s.reduction_enabled = params.reduction_enabled;
    return s;
}

std::size_t ShadeState::archive_capacity(std::size_t population_size) const {
    return static_cast<std::size_t>(std::lround(archive_rate * static_cast<double>(population_size)));
}

double weighted_lehmer_mean(std::span<const double> values, std::span<const double> weights) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        num += weights[k] * values[k] * values[k];
        den += weights[k] * values[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

double weighted_arithmetic_mean(std::span<const double> values, std::span<const double> weights) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        num += weights[k] * values[k];
        den += weights[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

double sample_scale_factor(UnitSource& rng, double location) {
    double f = 0.0;
    do {
        f = draw(rng, CauchyDist{location, 0.1});
    } while (f <= 0.0);
    return std::min(f, 1.0);
}

double sample_crossover_rate(UnitSource& rng, double location) {
    if (location == kTerminalCR) return 0.0;
    return std::clamp(draw(rng, NormalDist{location, 0.1}), 0.0, 1.0);
}

std::size_t lpsr_target_size(const ShadeState& state, std::uint64_t evaluations_used) {
    const double progress =
        state.max_evaluations == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(evaluations_used) / static_cast<double>(state.max_evaluations));
    const double n_init = static_cast<double>(state.initial_population);
    const double n_min = static_cast<double>(state.min_population);
    const auto target = static_cast<std::size_t>(std::lround(n_init + (n_min - n_init) * progress));
    return std::max(target, state.min_population);
}

Vector rand1_mutant(std::span<const double> base, std::span<const double> a, std::span<const double> b, double f) {
    Vector v(base.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = base[i] + f * (a[i] - b[i]);
    return v;
}

Vector binomial_crossover(std::span<const double> target, std::span<const double> mutant, double cr,
                          std::size_t forced_index, UnitSource& rng) {
    Vector trial(target.begin(), target.end());
    for (std::size_t i = 0; i < trial.size(); ++i)
        if (rng.next_unit() < cr || i == forced_index) trial[i] = mutant[i];
    return trial;
}

BchmDriver::BchmDriver(Method method, double beta_epsilon, AdaptiveConfig adaptive)
    : method_(method), beta_epsilon_(beta_epsilon) {
    if (method_ == Method::Adaptive) adaptive_ = AdaptiveState::fresh(adaptive);
}

void BchmDriver::begin_generation(const Population& pop, const Bounds& bounds) {
    bounds_ = &bounds;
    beta_ready_ = false;
    const bool needs_stats = method_ == Method::Beta || method_ == Method::ExpMidpoint ||
                             method_ == Method::VectorMidpoint || method_ == Method::Adaptive;
    if (!needs_stats) return;
    const auto stats = population_stats(pop);
    mean_ = stats.mean;
    if (method_ == Method::Beta || method_ == Method::Adaptive) {
        beta_ = fit_beta_params(stats, bounds, beta_epsilon_);
        beta_ready_ = true;
    }
}

BchmDriver::Applied BchmDriver::apply(std::span<const double> y, std::span<const double> target,
                                      std::span<const double> pbest, UnitSource& correction_rng,
                                      UnitSource& selection_rng) {
    if (bounds_ == nullptr) throw std::logic_error("BchmDriver::apply before begin_generation");
    CorrectionContext ctx{bounds_, target, pbest, mean_, beta_ready_ ? &beta_ : nullptr};
    Applied out;
    Method m = method_;
    if (adaptive_) {
        const std::size_t k = adaptive_select(*adaptive_, selection_rng);
        out.pool_index = k;
        m = adaptive_->pool[k];
    }
    out.outcome = correct(m, y, ctx, correction_rng);
    return out;
}

void BchmDriver::report(const Applied& applied, bool success) {
    if (adaptive_ && applied.pool_index && success) ++adaptive_->successes[*applied.pool_index];
}

void BchmDriver::end_generation() {
    if (!adaptive_) return;
    if (++generations_since_update_ >= adaptive_->update_period) {
        *adaptive_ = adaptive_update(*adaptive_);
        generations_since_update_ = 0;
    }
}

std::optional<Vector> BchmDriver::probabilities() const {
    if (!adaptive_) return std::nullopt;
    return adaptive_->probabilities;
}

Population classic_generation(Population pop, const ClassicDEParams& params, GenerationEnv& env) {
    const std::size_t N = pop.size();
    const std::size_t n = pop.dimension();
    if (N < 4) throw std::invalid_argument("population size must be at least 4");
    auto& rng = env.variation_rng;

    std::vector<Vector> trials(N);
    for (std::size_t j = 0; j < N; ++j) {
        const std::size_t r1 = draw_distinct(rng, N, {j});
        const std::size_t r2 = draw_distinct(rng, N, {j, r1});
        const std::size_t r3 = draw_distinct(rng, N, {j, r1, r2});
        const auto mutant = rand1_mutant(pop.members[r1].position, pop.members[r2].position,
                                         pop.members[r3].position, params.scale_factor);
        trials[j] = binomial_crossover(pop.members[j].position, mutant, params.crossover_rate, rng.below(n), rng);
    }

    env.bchm.begin_generation(pop, env.problem.bounds());
    const auto& best = pop.members[pop.best_index()].position;
    Population next = pop;
    std::uint64_t corrections = 0;
    std::optional<BchmDriver::Applied> applied;
    for (std::size_t j = 0; j < N; ++j) {
        if (env.evaluator.evaluations() >= env.budget) break;
        auto res = repair_and_evaluate(trials[j], pop.members[j].position, best, env, corrections, applied);
        const bool wins = res.evaluated && res.fitness <= pop.members[j].fitness;
        if (wins) next.members[j] = Individual{std::move(res.position), res.fitness};
        if (applied) env.bchm.report(*applied, wins);
    }
    finish_generation(next, trials, corrections, env);
    return next;
}

Population lshade_generation(Population pop, ShadeState& state, GenerationEnv& env) {
    const std::size_t N = pop.size();
    const std::size_t n = pop.dimension();
    const std::size_t H = state.memory_F.size();
    if (N < 4) throw std::invalid_argument("population size must be at least 4");
    auto& rng = env.variation_rng;
    const auto ranked = ranked_indices(pop);

    std::vector<Vector> trials(N);
    std::vector<std::size_t> pbest_of(N);
    Vector f_of(N);
    Vector cr_of(N);
    const double p_min = 2.0 / static_cast<double>(N);
    for (std::size_t j = 0; j < N; ++j) {
        const std::size_t slot = rng.below(H);
        cr_of[j] = sample_crossover_rate(rng, state.memory_CR[slot]);
        f_of[j] = sample_scale_factor(rng, state.memory_F[slot]);
        const double p = state.p_max > p_min ? draw(rng, UniformDist{p_min, state.p_max}) : p_min;
        const auto top = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(p * static_cast<double>(N))), 2, N);
        pbest_of[j] = ranked[rng.below(top)];

        const std::size_t r1 = draw_distinct(rng, N, {j});
        const std::size_t pool = N + state.archive.size();
        const std::size_t r2 = draw_distinct(rng, pool, {j, r1});
        const auto& x = pop.members[j].position;
        const auto& xp = pop.members[pbest_of[j]].position;
        const auto& x1 = pop.members[r1].position;
        const auto& x2 = r2 < N ? pop.members[r2].position : state.archive[r2 - N];
        Vector mutant(n);
        for (std::size_t i = 0; i < n; ++i) mutant[i] = x[i] + f_of[j] * (xp[i] - x[i]) + f_of[j] * (x1[i] - x2[i]);
        trials[j] = binomial_crossover(x, mutant, cr_of[j], rng.below(n), rng);
    }

    env.bchm.begin_generation(pop, env.problem.bounds());
    Population next = pop;
    std::uint64_t corrections = 0;
    Vector success_f;
    Vector success_cr;
    Vector improvement;
    std::optional<BchmDriver::Applied> applied;
    for (std::size_t j = 0; j < N; ++j) {
        if (env.evaluator.evaluations() >= env.budget) break;
        const auto& target = pop.members[j];
        auto res = repair_and_evaluate(trials[j], target.position, pop.members[pbest_of[j]].position, env,
                                       corrections, applied);
        const bool wins = res.evaluated && res.fitness <= target.fitness;
        if (wins) {
            if (res.fitness < target.fitness) {
                state.archive.push_back(target.position);
                success_f.push_back(f_of[j]);
                success_cr.push_back(cr_of[j]);
                improvement.push_back(target.fitness - res.fitness);
            }
            next.members[j] = Individual{std::move(res.position), res.fitness};
        }
        if (applied) env.bchm.report(*applied, wins);
    }

    if (!success_f.empty()) {
        const std::size_t k = state.memory_index;
        state.memory_F[k] = weighted_lehmer_mean(success_f, improvement);
        const double max_cr = *std::max_element(success_cr.begin(), success_cr.end());
        if (state.memory_CR[k] == kTerminalCR || max_cr == 0.0)
            state.memory_CR[k] = kTerminalCR;
        else
            state.memory_CR[k] = weighted_arithmetic_mean(success_cr, improvement);
        state.memory_index = (k + 1) % H;
    }

    if (state.reduction_enabled) {
        const std::size_t target_size = lpsr_target_size(state, env.evaluator.evaluations());
        if (target_size < next.size()) {
            auto order = ranked_indices(next);
            order.resize(target_size);
            std::sort(order.begin(), order.end());
            std::vector<Individual> kept;
            kept.reserve(target_size);
            for (auto idx : order) kept.push_back(std::move(next.members[idx]));
            next.members = std::move(kept);
        }
    }
    trim_archive(state.archive, state.archive_capacity(next.size()), rng);

    finish_generation(next, trials, corrections, env);
    return next;
}

ConfigError::ConfigError(std::vector<std::string> fields)
    : std::invalid_argument([&] {
          std::string msg = "invalid config:";
          for (const auto& f : fields) msg += " " + f + ";";
          return msg;
      }()),
      fields_(std::move(fields)) {}

void validate(const RunConfig& cfg) {
    std::vector<std::string> bad;
    if (!cfg.problem) bad.emplace_back("problem: missing");
    if (cfg.budget == 0) bad.emplace_back("budget: budget must be positive");
    if (cfg.target_error && !(*cfg.target_error >= 0.0)) bad.emplace_back("target_error: must be non-negative");
    if (cfg.classic.population_size < 4) bad.emplace_back("population_size: must be at least 4");
    if (!(cfg.classic.scale_factor >= 0.0 && cfg.classic.scale_factor <= 2.0))
        bad.emplace_back("scale_factor: must lie in [0, 2]");
    if (!(cfg.classic.crossover_rate >= 0.0 && cfg.classic.crossover_rate < 1.0))
        bad.emplace_back("crossover_rate: must lie in [0, 1)");
    if (cfg.shade.memory_size == 0) bad.emplace_back("memory_size: must be positive");
    if (!(cfg.shade.archive_rate >= 0.0)) bad.emplace_back("archive_rate: must be non-negative");
    if (cfg.shade.min_population < 4) bad.emplace_back("min_population: must be at least 4");
    if (!(cfg.shade.init_population_factor > 0.0)) bad.emplace_back("init_population_factor: must be positive");
    if (!(cfg.shade.p_max > 0.0 && cfg.shade.p_max <= 1.0)) bad.emplace_back("p_max: must lie in (0, 1]");
    if (!(cfg.beta_epsilon > 0.0 && cfg.beta_epsilon < 0.5)) bad.emplace_back("beta_epsilon: must lie in (0, 0.5)");
    if (cfg.adaptive.update_period == 0) bad.emplace_back("update_period: must be positive");
    if (!(cfg.adaptive.floor_probability >= 0.0 && cfg.adaptive.floor_probability * 5.0 <= 1.0))
        bad.emplace_back("floor_probability: must lie in [0, 0.2]");
    if (!(cfg.classifier.error_threshold > 0.0)) bad.emplace_back("error_threshold: must be positive");
    if (!(cfg.classifier.variance_threshold > 0.0)) bad.emplace_back("variance_threshold: must be positive");
    if (!bad.empty()) throw ConfigError(std::move(bad));
}

RunResult run(const RunConfig& cfg) {
    validate(cfg);
    const Problem& problem = *cfg.problem;
    const Bounds& bounds = problem.bounds();
    const std::size_t n = bounds.dimension();

    RngStream root(cfg.seed);
    RngStream init_rng = root.split("init");
    RngStream variation_rng = root.split("variation");
    RngStream correction_rng = root.split("correction");
    RngStream selection_rng = root.split("bchm-selection");

    Evaluator evaluator(problem, cfg.count_infeasible_evals);
    BchmDriver driver(cfg.bchm, cfg.beta_epsilon, cfg.adaptive);
    RunResult result;
    GenerationEnv env{problem, evaluator, driver, variation_rng, correction_rng, selection_rng, cfg.budget,
                      &result.trajectory};

    std::optional<ShadeState> shade;
    std::size_t initial_size = cfg.classic.population_size;
    if (cfg.engine == EngineKind::LShade) {
        shade = ShadeState::init(cfg.shade, n, cfg.budget);
        initial_size = shade->initial_population;
    }

    Population pop = initial_population(bounds, initial_size, evaluator, init_rng);
    {
        auto rec = record_generation({}, pop, bounds, problem.optimum_value());
        rec.adaptive_probabilities = driver.probabilities();
        result.trajectory.push(std::move(rec));
    }

    const std::uint64_t max_generations = cfg.max_generations != 0 ? cfg.max_generations : std::max<std::uint64_t>(cfg.budget, 1000);
    auto reached_target = [&] {
        return cfg.target_error && result.trajectory.back().best_error <= *cfg.target_error;
    };
    while (evaluator.evaluations() < cfg.budget && pop.generation < max_generations && !reached_target()) {
        if (shade)
            pop = lshade_generation(std::move(pop), *shade, env);
        else
            pop = classic_generation(std::move(pop), cfg.classic, env);
    }

    const auto& best = pop.members[pop.best_index()];
    result.best_fitness = best.fitness;
    result.best_position = best.position;
    result.final_stats = population_stats(pop);
    result.optimum_known = problem.optimum_value().has_value();
    result.final_best_error = result.optimum_known ? best.fitness - *problem.optimum_value() : best.fitness;
    const double class_error = result.optimum_known ? result.final_best_error : kInfinity;
    result.behaviour = classify(class_error, result.final_stats.max_variance(), cfg.classifier);
    result.evaluations = evaluator.evaluations();
    result.generations = pop.generation;
    result.adaptive = driver.adaptive_state();
    return result;
}

}  // namespace boxde
