#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace boxde {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using Vector = std::vector<double>;

/// Closed box [lower_0, upper_0] x ... x [lower_{n-1}, upper_{n-1}].
class Bounds {
public:
    /// Throws std::invalid_argument if the lengths differ, the box is
    /// empty, or any lower[i] >= upper[i].
    Bounds(Vector lower, Vector upper);

    /// The cube [low, high]^n.
    static Bounds cube(std::size_t n, double low, double high);

    std::size_t dimension() const { return lower_.size(); }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    double lower(std::size_t i) const { return lower_[i]; }
    double upper(std::size_t i) const { return upper_[i]; }
    double width(std::size_t i) const { return upper_[i] - lower_[i]; }

    bool contains(std::size_t i, double v) const { return v >= lower_[i] && v <= upper_[i]; }
    bool contains(std::span<const double> x) const;

    bool operator==(const Bounds&) const = default;

private:
    Vector lower_;
    Vector upper_;
};

struct Individual {
    Vector position;
    double fitness = kInfinity;
};

struct Population {
    std::vector<Individual> members;
    std::size_t generation = 0;
    std::uint64_t evaluations_used = 0;

    std::size_t size() const { return members.size(); }
    std::size_t dimension() const { return members.empty() ? 0 : members.front().position.size(); }

    /// Index of the member with the lowest fitness (first on ties).
    std::size_t best_index() const;
};

/// Per-component mean and population (1/N) variance.
struct PopulationStats {
    Vector mean;
    Vector variance;

    double max_variance() const;
    double mean_variance() const;
};

/// Throws std::invalid_argument("empty population") on an empty population.
PopulationStats population_stats(const Population& pop);
PopulationStats population_stats(std::span<const Vector> points);

struct ViolationProfile {
    std::vector<std::size_t> violated_indices;
    std::size_t count = 0;
};

/// Components of `y` outside the closed box. Throws
/// std::invalid_argument("dimension mismatch") if the lengths differ.
ViolationProfile violation_profile(std::span<const double> y, const Bounds& bounds);

/// Count-only variant for hot loops; no allocation.
std::size_t count_violations(std::span<const double> y, const Bounds& bounds);

}  // namespace boxde
