#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxde/core.hpp"

namespace boxde {

enum class FunctionId { Sphere, SeparableEllipsoid, Rastrigin, LinearSlope, Rosenbrock, DifferentPowers };

/// SBOX: optimum anywhere in [-5,5]^n. BbobLike: optimum kept in [-4,4]^n.
enum class PlacementMode { Sbox, BbobLike };

struct CatalogEntry {
    FunctionId id;
    std::string_view name;
    /// Optimum stays in [-4,4]^n (or a corner for LinearSlope) in both modes.
    bool exempt_from_boundary_shift;
};

/// All built-in functions, in a fixed order.
std::span<const CatalogEntry> function_catalog();

/// Throws std::invalid_argument("unknown function") for unrecognised names.
FunctionId parse_function(std::string_view name);
std::string_view function_name(FunctionId id);
const CatalogEntry& catalog_entry(FunctionId id);

PlacementMode parse_mode(std::string_view name);
std::string_view mode_name(PlacementMode mode);

/// Anything the optimizers can minimise over a box.
///
/// `objective` is only called for points inside the closed box; strict-box
/// semantics (infinite fitness outside) live in Evaluator.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual const Bounds& bounds() const = 0;
    virtual double objective(std::span<const double> x) const = 0;
    virtual std::optional<double> optimum_value() const { return std::nullopt; }

    std::size_t dimension() const { return bounds().dimension(); }
};

/// Weighted linear slope with corner optimum; zero at the optimum.
/// Throws std::invalid_argument("linear slope requires corner optimum")
/// when some optimum[i] is not +-5.
double raw_linear_slope(std::span<const double> x, std::span<const double> optimum);

/// Raw formula of a catalogue function evaluated on shifted coordinates
/// z = x - x* (z = x - x* + 1 for Rosenbrock). Minimum 0.
double raw_objective(FunctionId id, std::span<const double> z);

class BenchmarkProblem final : public Problem {
public:
    BenchmarkProblem(FunctionId id, std::int64_t instance, PlacementMode mode, Vector optimum_location,
                     double optimum_value);

    std::string name() const override;
    const Bounds& bounds() const override { return bounds_; }
    double objective(std::span<const double> x) const override;
    std::optional<double> optimum_value() const override { return optimum_value_; }

    FunctionId function_id() const { return id_; }
    std::int64_t instance_id() const { return instance_; }
    PlacementMode mode() const { return mode_; }
    const Vector& optimum_location() const { return optimum_; }

private:
    FunctionId id_;
    std::int64_t instance_;
    PlacementMode mode_;
    Bounds bounds_;
    Vector optimum_;
    double optimum_value_;
};

/// Seeded instance: x* ~ U[-5,5]^n (Sbox, non-exempt) or U[-4,4]^n, a random
/// corner for LinearSlope, and f* ~ U[-100,100]. A pure function of its
/// arguments. Throws std::invalid_argument for dimension < 2.
BenchmarkProblem make_instance(FunctionId id, std::int64_t instance, std::size_t dimension, PlacementMode mode);
BenchmarkProblem make_instance(std::string_view function, std::int64_t instance, std::size_t dimension,
                               PlacementMode mode);

/// Explicit optimum placement, for experiments that need a controlled x*.
BenchmarkProblem make_problem_at(FunctionId id, Vector optimum_location, double optimum_value = 0.0);

/// A problem assembled from callables, the plugin interface for external
/// objectives.
class CallbackProblem final : public Problem {
public:
    using Objective = std::function<double(std::span<const double>)>;

    CallbackProblem(std::string name, Bounds bounds, Objective fn, std::optional<double> optimum_value = {});

    std::string name() const override { return name_; }
    const Bounds& bounds() const override { return bounds_; }
    double objective(std::span<const double> x) const override { return fn_(x); }
    std::optional<double> optimum_value() const override { return optimum_value_; }

private:
    std::string name_;
    Bounds bounds_;
    Objective fn_;
    std::optional<double> optimum_value_;
};

/// Named factories for plugin problems, keyed by name and taking the
/// requested dimension. Built-in catalogue names are not stored here.
class ProblemRegistry {
public:
    using Factory = std::function<std::shared_ptr<const Problem>(std::size_t dimension)>;

    static ProblemRegistry& global();

    void add(std::string name, Factory factory);
    bool contains(std::string_view name) const;
    std::shared_ptr<const Problem> create(std::string_view name, std::size_t dimension) const;
    bool remove(std::string_view name);
    std::vector<std::string> names() const;

private:
    std::vector<std::pair<std::string, Factory>> entries_;
};

/// Strict-box evaluation with a per-run evaluation counter.
///
/// Points outside the closed box get +infinity and, unless
/// `count_infeasible` is set, do not consume budget.
class Evaluator {
public:
    explicit Evaluator(const Problem& problem, bool count_infeasible = false)
        : problem_(&problem), count_infeasible_(count_infeasible) {}

    /// Throws std::invalid_argument("dimension mismatch").
    double operator()(std::span<const double> x);

    const Problem& problem() const { return *problem_; }
    std::uint64_t evaluations() const { return evaluations_; }
    std::uint64_t infeasible_calls() const { return infeasible_calls_; }

private:
    const Problem* problem_;
    bool count_infeasible_;
    std::uint64_t evaluations_ = 0;
    std::uint64_t infeasible_calls_ = 0;
};

/// Stateless strict-box evaluation.
double evaluate_strict(const Problem& problem, std::span<const double> x);

}  // namespace boxde
