#include "boxde/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace boxde {

Bounds::Bounds(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw std::invalid_argument("bounds: dimension mismatch");
    if (lower_.empty()) throw std::invalid_argument("bounds: empty box");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
            throw std::invalid_argument("bounds: lower must be strictly below upper");
    }
}

Bounds Bounds::cube(std::size_t n, double low, double high) {
    return Bounds(Vector(n, low), Vector(n, high));
}

bool Bounds::contains(std::span<const double> x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!contains(i, x[i])) return false;
    return true;
}

std::size_t Population::best_index() const {
    std::size_t best = 0;
    for (std::size_t j = 1; j < members.size(); ++j)
        if (members[j].fitness < members[best].fitness) best = j;
    return best;
}

double PopulationStats::max_variance() const {
    return variance.empty() ? 0.0 : *std::max_element(variance.begin(), variance.end());
}

double PopulationStats::mean_variance() const {
    if (variance.empty()) return 0.0;
    return std::accumulate(variance.begin(), variance.end(), 0.0) / static_cast<double>(variance.size());
}

PopulationStats population_stats(std::span<const Vector> points) {
    if (points.empty()) throw std::invalid_argument("empty population");
    const std::size_t n = points.front().size();
    const auto count = static_cast<double>(points.size());
    PopulationStats s{Vector(n, 0.0), Vector(n, 0.0)};
    for (const auto& p : points) {
        if (p.size() != n) throw std::invalid_argument("dimension mismatch");
        for (std::size_t i = 0; i < n; ++i) s.mean[i] += p[i];
    }
    for (auto& m : s.mean) m /= count;
    // Two-pass to keep the variance non-negative and accurate.
    for (const auto& p : points)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = p[i] - s.mean[i];
            s.variance[i] += d * d;
        }
    for (auto& v : s.variance) v /= count;
    return s;
}

PopulationStats population_stats(const Population& pop) {
    std::vector<Vector> points;
    points.reserve(pop.members.size());
    for (const auto& m : pop.members) points.push_back(m.position);
    return population_stats(points);
}

ViolationProfile violation_profile(std::span<const double> y, const Bounds& bounds) {
    if (y.size() != bounds.dimension()) throw std::invalid_argument("dimension mismatch");
    ViolationProfile out;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!bounds.contains(i, y[i])) out.violated_indices.push_back(i);
    out.count = out.violated_indices.size();
    return out;
}

std::size_t count_violations(std::span<const double> y, const Bounds& bounds) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!bounds.contains(i, y[i])) ++c;
    return c;
}

}  // namespace boxde
