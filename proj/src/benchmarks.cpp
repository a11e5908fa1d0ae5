#include "boxde/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "boxde/rng.hpp"

namespace boxde {

namespace {

constexpr std::array<CatalogEntry, 6> kCatalog{{
    {FunctionId::Sphere, "sphere", false},
    {FunctionId::SeparableEllipsoid, "separable_ellipsoid", false},
    {FunctionId::Rastrigin, "rastrigin", false},
    {FunctionId::LinearSlope, "linear_slope", true},
    {FunctionId::Rosenbrock, "rosenbrock", false},
    {FunctionId::DifferentPowers, "different_powers", false},
}};

constexpr double kBoxLow = -5.0;
constexpr double kBoxHigh = 5.0;
constexpr double kInnerLow = -4.0;
constexpr double kInnerHigh = 4.0;

// i / (n - 1) for 0-based i, the exponent ramp shared by several formulas.
double ramp(std::size_t i, std::size_t n) {
    return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::span<const CatalogEntry> function_catalog() { return kCatalog; }

const CatalogEntry& catalog_entry(FunctionId id) {
    for (const auto& e : kCatalog)
        if (e.id == id) return e;
    throw std::invalid_argument("unknown function");
}

FunctionId parse_function(std::string_view name) {
    for (const auto& e : kCatalog)
        if (e.name == name) return e.id;
    throw std::invalid_argument("unknown function");
}

std::string_view function_name(FunctionId id) { return catalog_entry(id).name; }

PlacementMode parse_mode(std::string_view name) {
    if (name == "sbox") return PlacementMode::Sbox;
    if (name == "bbob_like") return PlacementMode::BbobLike;
    throw std::invalid_argument("unknown mode");
}

std::string_view mode_name(PlacementMode mode) { return mode == PlacementMode::Sbox ? "sbox" : "bbob_like"; }

double raw_linear_slope(std::span<const double> x, std::span<const double> optimum) {
    if (x.size() != optimum.size()) throw std::invalid_argument("dimension mismatch");
    const std::size_t n = x.size();
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(optimum[i]) != kBoxHigh) throw std::invalid_argument("linear slope requires corner optimum");
        const double w = std::pow(10.0, ramp(i, n));
        const double sign = optimum[i] > 0.0 ? 1.0 : -1.0;
        f += w * (optimum[i] - x[i]) * sign;
    }
    return f;
}

double raw_objective(FunctionId id, std::span<const double> z) {
    const std::size_t n = z.size();
    double f = 0.0;
    switch (id) {
        case FunctionId::Sphere:
            for (double v : z) f += v * v;
            return f;
        case FunctionId::SeparableEllipsoid:
            for (std::size_t i = 0; i < n; ++i) f += std::pow(10.0, 6.0 * ramp(i, n)) * z[i] * z[i];
            return f;
        case FunctionId::Rastrigin: {
            double cos_sum = 0.0;
            for (double v : z) {
                cos_sum += std::cos(2.0 * std::numbers::pi * v);
                f += v * v;
            }
            return 10.0 * (static_cast<double>(n) - cos_sum) + f;
        }
        case FunctionId::Rosenbrock:
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double a = z[i] * z[i] - z[i + 1];
                const double b = z[i] - 1.0;
                f += 100.0 * a * a + b * b;
            }
            return f;
        case FunctionId::DifferentPowers:
            for (std::size_t i = 0; i < n; ++i) f += std::pow(std::abs(z[i]), 2.0 + 4.0 * ramp(i, n));
            return f;
        case FunctionId::LinearSlope:
            throw std::invalid_argument("linear slope is not a shifted formula; use raw_linear_slope");
    }
    throw std::invalid_argument("unknown function");
}

BenchmarkProblem::BenchmarkProblem(FunctionId id, std::int64_t instance, PlacementMode mode, Vector optimum_location,
                                   double optimum_value)
    : id_(id),
      instance_(instance),
      mode_(mode),
      bounds_(Bounds::cube(optimum_location.size(), kBoxLow, kBoxHigh)),
      optimum_(std::move(optimum_location)),
      optimum_value_(optimum_value) {
    if (optimum_.size() < 2) throw std::invalid_argument("dimension must be at least 2");
    if (!bounds_.contains(optimum_)) throw std::invalid_argument("optimum outside the box");
    if (id_ == FunctionId::LinearSlope)
        for (double v : optimum_)
            if (std::abs(v) != kBoxHigh) throw std::invalid_argument("linear slope requires corner optimum");
}

std::string BenchmarkProblem::name() const {
    return std::string(function_name(id_)) + "/i" + std::to_string(instance_) + "/d" +
           std::to_string(optimum_.size()) + "/" + std::string(mode_name(mode_));
}

double BenchmarkProblem::objective(std::span<const double> x) const {
    if (id_ == FunctionId::LinearSlope) return raw_linear_slope(x, optimum_) + optimum_value_;
    thread_local Vector z;
    z.resize(x.size());
    // Rosenbrock's raw minimum sits at z = 1.
    const double shift = id_ == FunctionId::Rosenbrock ? 1.0 : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - optimum_[i] + shift;
    return raw_objective(id_, z) + optimum_value_;
}

BenchmarkProblem make_instance(FunctionId id, std::int64_t instance, std::size_t dimension, PlacementMode mode) {
    if (dimension < 2) throw std::invalid_argument("dimension must be at least 2");
    const auto& entry = catalog_entry(id);
    RngStream rng = RngStream(hash_string("boxde/instance"))
                        .split(entry.name)
                        .split(static_cast<std::uint64_t>(instance))
                        .split(static_cast<std::uint64_t>(dimension))
                        .split(mode_name(mode));
    Vector optimum(dimension);
    if (id == FunctionId::LinearSlope) {
        for (auto& v : optimum) v = rng.next_unit() < 0.5 ? kBoxLow : kBoxHigh;
    } else {
        const bool full_box = mode == PlacementMode::Sbox && !entry.exempt_from_boundary_shift;
        const UniformDist dist = full_box ? UniformDist{kBoxLow, kBoxHigh} : UniformDist{kInnerLow, kInnerHigh};
        for (auto& v : optimum) v = draw(rng, dist);
    }
    const double offset = draw(rng, UniformDist{-100.0, 100.0});
    return BenchmarkProblem(id, instance, mode, std::move(optimum), offset);
}

BenchmarkProblem make_instance(std::string_view function, std::int64_t instance, std::size_t dimension,
                               PlacementMode mode) {
    return make_instance(parse_function(function), instance, dimension, mode);
}

BenchmarkProblem make_problem_at(FunctionId id, Vector optimum_location, double optimum_value) {
    return BenchmarkProblem(id, 0, PlacementMode::Sbox, std::move(optimum_location), optimum_value);
}

CallbackProblem::CallbackProblem(std::string name, Bounds bounds, Objective fn, std::optional<double> optimum_value)
    : name_(std::move(name)), bounds_(std::move(bounds)), fn_(std::move(fn)), optimum_value_(optimum_value) {
    if (!fn_) throw std::invalid_argument("callback problem needs an objective");
}

ProblemRegistry& ProblemRegistry::global() {
    static ProblemRegistry registry;
    return registry;
}

void ProblemRegistry::add(std::string name, Factory factory) {
    std::lock_guard lock(registry_mutex());
    for (const auto& e : kCatalog)
        if (e.name == name) throw std::invalid_argument("name clashes with a built-in function: " + name);
    for (auto& [n, f] : entries_)
        if (n == name) {
            f = std::move(factory);
            return;
        }
    entries_.emplace_back(std::move(name), std::move(factory));
}

bool ProblemRegistry::contains(std::string_view name) const {
    std::lock_guard lock(registry_mutex());
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::shared_ptr<const Problem> ProblemRegistry::create(std::string_view name, std::size_t dimension) const {
    Factory factory;
    {
        std::lock_guard lock(registry_mutex());
        for (const auto& [n, f] : entries_)
            if (n == name) factory = f;
    }
    if (!factory) throw std::invalid_argument("unknown function");
    return factory(dimension);
}

bool ProblemRegistry::remove(std::string_view name) {
    std::lock_guard lock(registry_mutex());
    const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

std::vector<std::string> ProblemRegistry::names() const {
    std::lock_guard lock(registry_mutex());
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
}

double evaluate_strict(const Problem& problem, std::span<const double> x) {
    const auto& b = problem.bounds();
    if (x.size() != b.dimension()) throw std::invalid_argument("dimension mismatch");
    if (!b.contains(x)) return kInfinity;
    return problem.objective(x);
}

double Evaluator::operator()(std::span<const double> x) {
    const double f = evaluate_strict(*problem_, x);
    if (f == kInfinity && !problem_->bounds().contains(x)) {
        ++infeasible_calls_;
        if (count_infeasible_) ++evaluations_;
    } else {
        ++evaluations_;
    }
    return f;
}

}  // namespace boxde
