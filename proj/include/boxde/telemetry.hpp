#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxde/core.hpp"

namespace boxde {

struct GenerationRecord {
    std::uint64_t generation = 0;
    std::uint64_t feasible_evaluations = 0;
    std::size_t population_size = 0;
    /// Best fitness minus f*; the raw best fitness when f* is unknown.
    double best_error = kInfinity;
    /// Out-of-box components over all trial components, before correction.
    double infeasible_component_ratio = 0.0;
    /// Trials with at least one out-of-box component over all trials.
    double infeasible_individual_ratio = 0.0;
    double max_component_variance = 0.0;
    double mean_component_variance = 0.0;
    std::uint64_t corrections_applied = 0;
    std::optional<Vector> adaptive_probabilities;

    bool operator==(const GenerationRecord&) const = default;
};

/// Column names of the trajectory CSV, in order.
std::span<const std::string_view> trajectory_columns();

/// Builds the record for a finished generation. `trials` must be the
/// uncorrected trial vectors; `population` the post-selection members.
GenerationRecord record_generation(std::span<const Vector> trials, const Population& population,
                                   const Bounds& bounds, std::optional<double> optimum_value);

struct ClassifierConfig {
    double error_threshold = 1e-6;
    double variance_threshold = 1e-8;
};

enum class BehaviourClass { GB, SF, PC, BB };

std::string_view behaviour_name(BehaviourClass c);
BehaviourClass parse_behaviour(std::string_view s);

/// GB: converged on the optimum. SF: optimum found, population still
/// spread. PC: converged elsewhere. BB: neither.
BehaviourClass classify(double final_error, double final_max_component_variance, const ClassifierConfig& cfg = {});

/// Per-run telemetry sink; single writer.
class Trajectory {
public:
    void push(GenerationRecord r) { records_.push_back(std::move(r)); }
    const std::vector<GenerationRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    const GenerationRecord& back() const { return records_.back(); }

    /// Comma separated, header row, LF endings, %.17g floats.
    void write_csv(std::ostream& out) const;
    static Trajectory read_csv(std::istream& in);

private:
    std::vector<GenerationRecord> records_;
};

/// Round-trip exact decimal representation ("%.17g"; "inf" for infinity).
std::string format_real(double v);
double parse_real(std::string_view s);

}  // namespace boxde
